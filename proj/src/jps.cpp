#include "faster/global_path.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Offsets of the 3x3x3 block are numbered (dx+1) + 3(dy+1) + 9(dz+1); 13 is
// the centre.
constexpr int kCenter = 13;

Index3 offsetOf(int code) { return Index3(code % 3 - 1, (code / 3) % 3 - 1, code / 9 - 1); }
int codeOf(const Index3& d) { return (d.x() + 1) + 3 * (d.y() + 1) + 9 * (d.z() + 1); }
double stepCost(const Index3& d) { return std::sqrt(static_cast<double>(d.cwiseAbs().sum())); }

// Natural neighbour: every nonzero component of `sub` equals that of `d`.
bool isNatural(const Index3& d, const Index3& sub) {
  for (int a = 0; a < 3; ++a)
    if (sub[a] != 0 && sub[a] != d[a]) return false;
  return sub != Index3::Zero();
}

// For each travel direction d and each non-natural neighbour n, the masks of
// alternative block paths p -> n (p = -d) that avoid the centre and cost no
// more than going through it. n is forced iff it is free and every such path
// hits a blocked cell.
struct ForcedTables {
  struct Entry {
    int neighbour;
    std::vector<std::uint32_t> masks;
  };
  std::array<std::vector<Entry>, 27> entries;
  std::array<std::vector<int>, 27> natural;

  ForcedTables() {
    for (int dc = 0; dc < 27; ++dc) {
      if (dc == kCenter) continue;
      const Index3 d = offsetOf(dc);
      const int p = codeOf(-d);
      for (int nc = 0; nc < 27; ++nc) {
        if (nc == kCenter) continue;
        const Index3 n = offsetOf(nc);
        if (isNatural(d, n)) {
          natural[static_cast<std::size_t>(dc)].push_back(nc);
          continue;
        }
        if (nc == p) continue;
        Entry e{nc, {}};
        const double budget = stepCost(d) + stepCost(n) + 1e-9;
        std::vector<int> stack{p};
        enumerate(stack, 0.0, nc, budget, 0u, e.masks);
        entries[static_cast<std::size_t>(dc)].push_back(std::move(e));
      }
    }
  }

  static void enumerate(std::vector<int>& stack, double cost, int target, double budget, std::uint32_t mask,
                        std::vector<std::uint32_t>& out) {
    const int cur = stack.back();
    const Index3 c = offsetOf(cur);
    for (int nx = 0; nx < 27; ++nx) {
      if (nx == kCenter) continue;
      const Index3 s = offsetOf(nx) - c;
      if (s.cwiseAbs().maxCoeff() != 1) continue;
      const double next = cost + stepCost(s);
      if (next > budget) continue;
      bool seen = false;
      for (int v : stack) seen = seen || v == nx;
      if (seen) continue;
      const std::uint32_t m = mask | (1u << nx);
      if (nx == target) {
        out.push_back(m);
        continue;
      }
      stack.push_back(nx);
      enumerate(stack, next, target, budget, m, out);
      stack.pop_back();
    }
  }
};

const ForcedTables& tables() {
  static const ForcedTables t;
  return t;
}

constexpr std::uint32_t kFullBlock = ((1u << 27) - 1) & ~(1u << kCenter);

class Search {
 public:
  Search(const SlidingGrid& grid) : grid_(grid), dims_(grid.dims()) {
    trav_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) trav_[i] = grid.inflatedState(i) != VoxelState::OccupiedKnown;
  }

  bool traversable(const Index3& v) const { return grid_.inBounds(v) && trav_[grid_.linear(v)]; }

  std::optional<Index3> snap(const Vec3& p, double radius) const {
    const Index3 raw = grid_.rawVoxelOf(p);
    if (traversable(raw)) return raw;
    if (!(radius > 0)) return std::nullopt;
    std::optional<Index3> best;
    double best_d = kInf;
    const double res = grid_.resolution();
    const int kmax = static_cast<int>(std::min<double>(dims_.maxCoeff() + std::abs(raw.maxCoeff()) + 1,
                                                       std::ceil(radius / res) + 1));
    for (int k = 1; k <= kmax; ++k) {
      if ((k - 1) * res > best_d) break;
      for (int z = raw.z() - k; z <= raw.z() + k; ++z)
        for (int y = raw.y() - k; y <= raw.y() + k; ++y)
          for (int x = raw.x() - k; x <= raw.x() + k; ++x) {
            const Index3 v(x, y, z);
            if ((v - raw).cwiseAbs().maxCoeff() != k || !traversable(v)) continue;
            const double d = (grid_.voxelCenter(v) - p).norm();
            if (d <= radius && d < best_d) {
              best_d = d;
              best = v;
            }
          }
    }
    return best;
  }

  std::optional<std::vector<Index3>> run(const Index3& s, const Index3& g) {
    goal_ = g;
    const std::size_t n = grid_.size();
    gcost_.assign(n, kInf);
    parent_.assign(n, -1);
    closed_.assign(n, 0);
    using Item = std::tuple<double, std::uint64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    std::uint64_t counter = 0;
    const std::size_t si = grid_.linear(s), gi = grid_.linear(g);
    gcost_[si] = 0.0;
    open.emplace(heuristic(s), counter++, si);
    while (!open.empty()) {
      auto [f, tie, cur] = open.top();
      (void)f;
      (void)tie;
      open.pop();
      if (closed_[cur]) continue;
      closed_[cur] = 1;
      if (cur == gi) break;
      const Index3 x = grid_.unlinear(cur);
      for (int dc : successorsOf(cur, x)) {
        const Index3 d = offsetOf(dc);
        auto jp = jump(x, d);
        if (!jp) continue;
        const std::size_t ji = grid_.linear(*jp);
        if (closed_[ji]) continue;
        const double cand = gcost_[cur] + res() * octile(*jp - x);
        if (cand < gcost_[ji] - 1e-12) {
          gcost_[ji] = cand;
          parent_[ji] = static_cast<long long>(cur);
          open.emplace(cand + heuristic(*jp), counter++, ji);
        }
      }
    }
    if (!closed_[gi]) return std::nullopt;
    std::vector<Index3> out;
    for (long long c = static_cast<long long>(gi); c >= 0; c = parent_[static_cast<std::size_t>(c)])
      out.push_back(grid_.unlinear(static_cast<std::size_t>(c)));
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  double res() const { return grid_.resolution(); }

  static double octile(const Index3& delta) {
    std::array<int, 3> a{std::abs(delta.x()), std::abs(delta.y()), std::abs(delta.z())};
    std::sort(a.begin(), a.end());
    return std::sqrt(3.0) * a[0] + std::sqrt(2.0) * (a[1] - a[0]) + (a[2] - a[1]);
  }
  double heuristic(const Index3& v) const { return res() * octile(goal_ - v); }

  std::uint32_t blockMask(const Index3& x) const {
    std::uint32_t m = 0;
    for (int c = 0; c < 27; ++c)
      if (c != kCenter && traversable(x + offsetOf(c))) m |= 1u << c;
    return m;
  }

  bool hasForced(const Index3& x, int dc) const {
    const std::uint32_t free = blockMask(x);
    if (free == kFullBlock) return false;
    for (const auto& e : tables().entries[static_cast<std::size_t>(dc)])
      if (isForced(e, free)) return true;
    return false;
  }

  static bool isForced(const ForcedTables::Entry& e, std::uint32_t free) {
    if (!(free & (1u << e.neighbour))) return false;
    for (std::uint32_t m : e.masks)
      if ((m & free) == m) return false;
    return true;
  }

  std::vector<int> successorsOf(std::size_t cur, const Index3& x) const {
    std::vector<int> out;
    if (parent_[cur] < 0) {
      for (int c = 0; c < 27; ++c)
        if (c != kCenter) out.push_back(c);
      return out;
    }
    const Index3 delta = x - grid_.unlinear(static_cast<std::size_t>(parent_[cur]));
    const Index3 d = delta.cwiseSign();
    const int dc = codeOf(d);
    out = tables().natural[static_cast<std::size_t>(dc)];
    const std::uint32_t free = blockMask(x);
    if (free != kFullBlock)
      for (const auto& e : tables().entries[static_cast<std::size_t>(dc)])
        if (isForced(e, free)) out.push_back(e.neighbour);
    return out;
  }

  std::optional<Index3> jump(Index3 x, const Index3& d) const {
    const int dc = codeOf(d);
    const int order = d.cwiseAbs().sum();
    while (true) {
      const Index3 y = x + d;
      if (!traversable(y)) return std::nullopt;
      if (y == goal_) return y;
      if (hasForced(y, dc)) return y;
      if (order > 1)
        for (int sc : tables().natural[static_cast<std::size_t>(dc)]) {
          if (sc == dc) continue;
          if (jump(y, offsetOf(sc))) return y;
        }
      x = y;
    }
  }

  const SlidingGrid& grid_;
  Index3 dims_;
  Index3 goal_;
  std::vector<std::uint8_t> trav_;
  std::vector<double> gcost_;
  std::vector<long long> parent_;
  std::vector<std::uint8_t> closed_;
};

}  // namespace

std::optional<GridPath> jps_search(const SlidingGrid& grid, const Vec3& start, const Vec3& goal,
                                   const JpsOptions& options) {
  if (!grid.distancesFresh()) throw std::logic_error("jps_search: distance fields are stale");
  Search search(grid);
  auto s = search.snap(start, options.start_snap);
  auto g = search.snap(goal, options.goal_snap);
  if (!s || !g) return std::nullopt;
  auto cells = search.run(*s, *g);
  if (!cells) return std::nullopt;
  GridPath path;
  if (options.attach_endpoints) path.vertices.push_back(start);
  for (const Index3& c : *cells) path.vertices.push_back(grid.voxelCenter(c));
  if (options.attach_endpoints) path.vertices.push_back(goal);
  path = simplify(path);
  if (path.size() == 1) path.vertices.push_back(path.vertices.front());
  return path;
}

}  // namespace faster
