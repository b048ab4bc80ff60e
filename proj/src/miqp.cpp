#include "faster/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Fixed = std::vector<signed char>;  // -1 free, 0, 1

struct Node {
  double parent_bound;
  long long order;
  Fixed fixed;
};

struct NodeLess {
  bool operator()(const Node& a, const Node& b) const {
    if (a.parent_bound != b.parent_bound) return a.parent_bound > b.parent_bound;
    return a.order > b.order;
  }
};

struct Relaxation {
  bool feasible = false;
  double bound = kInf;
  VectorXd x;
  std::vector<int> free_ids;
  VectorXd b;  // values of the free binaries
};

// Fixing any binary of a cover to 1 makes its siblings redundant.
void propagate(const MiqpProblem& p, Fixed& fixed) {
  for (const auto& cover : p.covers) {
    int one = -1;
    for (int id : cover)
      if (fixed[static_cast<std::size_t>(id)] == 1) {
        one = id;
        break;
      }
    if (one < 0) continue;
    for (int id : cover)
      if (id != one && fixed[static_cast<std::size_t>(id)] == -1) fixed[static_cast<std::size_t>(id)] = 0;
  }
}

bool coversPossible(const MiqpProblem& p, const Fixed& fixed) {
  for (const auto& cover : p.covers) {
    bool ok = false;
    for (int id : cover) ok = ok || fixed[static_cast<std::size_t>(id)] != 0;
    if (!ok) return false;
  }
  return true;
}

Relaxation relax(const MiqpProblem& p, const Fixed& fixed, const MiqpOptions& opt) {
  Relaxation out;
  const int n = p.base.n();
  for (int id = 0; id < p.binaries(); ++id)
    if (fixed[static_cast<std::size_t>(id)] == -1) out.free_ids.push_back(id);
  const int k = static_cast<int>(out.free_ids.size());
  std::vector<int> col(static_cast<std::size_t>(p.binaries()), -1);
  for (int i = 0; i < k; ++i) col[static_cast<std::size_t>(out.free_ids[static_cast<std::size_t>(i)])] = n + i;

  int rows = static_cast<int>(p.base.Ain.rows()) + 2 * k;
  for (int id = 0; id < p.binaries(); ++id)
    if (fixed[static_cast<std::size_t>(id)] != 0) rows += static_cast<int>(p.indicators[static_cast<std::size_t>(id)].A.rows());
  std::vector<int> open_covers;
  for (std::size_t c = 0; c < p.covers.size(); ++c) {
    bool has_one = false;
    for (int id : p.covers[c]) has_one = has_one || fixed[static_cast<std::size_t>(id)] == 1;
    if (!has_one) open_covers.push_back(static_cast<int>(c));
  }
  rows += static_cast<int>(open_covers.size());

  QpProblem q;
  q.H = MatrixXd::Zero(n + k, n + k);
  q.H.topLeftCorner(n, n) = p.base.H;
  for (int i = 0; i < k; ++i) q.H(n + i, n + i) = opt.binary_reg;
  q.g = VectorXd::Zero(n + k);
  q.g.head(n) = p.base.g;
  q.Aeq = MatrixXd::Zero(p.base.Aeq.rows(), n + k);
  if (p.base.Aeq.rows() > 0) q.Aeq.leftCols(n) = p.base.Aeq;
  q.beq = p.base.beq;
  q.Ain = MatrixXd::Zero(rows, n + k);
  q.bin = VectorXd::Zero(rows);
  int r = 0;
  if (p.base.Ain.rows() > 0) {
    q.Ain.topLeftCorner(p.base.Ain.rows(), n) = p.base.Ain;
    q.bin.head(p.base.Ain.rows()) = p.base.bin;
    r = static_cast<int>(p.base.Ain.rows());
  }
  for (int id = 0; id < p.binaries(); ++id) {
    const auto f = fixed[static_cast<std::size_t>(id)];
    if (f == 0) continue;
    const Indicator& ind = p.indicators[static_cast<std::size_t>(id)];
    const int m = static_cast<int>(ind.A.rows());
    q.Ain.block(r, 0, m, n) = ind.A;
    if (f == 1) {
      q.bin.segment(r, m) = ind.c;
    } else {
      q.Ain.block(r, col[static_cast<std::size_t>(id)], m, 1) = ind.big_m;
      q.bin.segment(r, m) = ind.c + ind.big_m;
    }
    r += m;
  }
  for (int i = 0; i < k; ++i) {
    q.Ain(r, n + i) = -1.0;
    q.bin(r++) = 0.0;
    q.Ain(r, n + i) = 1.0;
    q.bin(r++) = 1.0;
  }
  for (int c : open_covers) {
    for (int id : p.covers[static_cast<std::size_t>(c)])
      if (fixed[static_cast<std::size_t>(id)] == -1) q.Ain(r, col[static_cast<std::size_t>(id)]) = -1.0;
    q.bin(r++) = -1.0;
  }
  const QpResult res = solve_qp(q, opt.tol);
  if (!res.ok()) return out;
  out.feasible = true;
  out.x = res.x.head(n);
  out.b = res.x.tail(k);
  out.bound = res.objective - 0.5 * opt.binary_reg * k;
  return out;
}

std::vector<std::uint8_t> valuesFromAssignment(const MiqpProblem& p, const std::vector<int>& assignment) {
  if (assignment.size() != p.covers.size()) throw std::invalid_argument("miqp: warm assignment size mismatch");
  std::vector<std::uint8_t> v(static_cast<std::size_t>(p.binaries()), 0);
  for (std::size_t c = 0; c < p.covers.size(); ++c) {
    const int pos = assignment[c];
    if (pos < 0 || pos >= static_cast<int>(p.covers[c].size()))
      throw std::invalid_argument("miqp: warm assignment out of range");
    v[static_cast<std::size_t>(p.covers[c][static_cast<std::size_t>(pos)])] = 1;
  }
  return v;
}

std::vector<int> assignmentFromValues(const MiqpProblem& p, const std::vector<std::uint8_t>& v) {
  std::vector<int> a;
  for (const auto& cover : p.covers) {
    int pos = -1;
    for (std::size_t i = 0; i < cover.size() && pos < 0; ++i)
      if (v[static_cast<std::size_t>(cover[i])]) pos = static_cast<int>(i);
    a.push_back(pos);
  }
  return a;
}

}  // namespace

void MiqpProblem::validate() const {
  base.validate();
  std::vector<int> seen(static_cast<std::size_t>(binaries()), 0);
  for (const auto& cover : covers)
    for (int id : cover) {
      if (id < 0 || id >= binaries()) throw std::invalid_argument("miqp: cover references unknown binary");
      ++seen[static_cast<std::size_t>(id)];
    }
  for (int s : seen)
    if (s != 1) throw std::invalid_argument("miqp: every binary must appear in exactly one cover");
  for (const auto& ind : indicators) {
    if (ind.A.cols() != base.n() || ind.A.rows() != ind.c.size() || ind.big_m.size() != ind.c.size())
      throw std::invalid_argument("miqp: indicator shape mismatch");
  }
}

QpResult solve_fixed(const MiqpProblem& p, const std::vector<std::uint8_t>& values, double tol) {
  QpProblem q = p.base;
  int extra = 0;
  for (int id = 0; id < p.binaries(); ++id)
    if (values[static_cast<std::size_t>(id)]) extra += static_cast<int>(p.indicators[static_cast<std::size_t>(id)].A.rows());
  const int base_rows = static_cast<int>(p.base.Ain.rows());
  q.Ain = MatrixXd::Zero(base_rows + extra, p.base.n());
  q.bin = VectorXd::Zero(base_rows + extra);
  if (base_rows > 0) {
    q.Ain.topRows(base_rows) = p.base.Ain;
    q.bin.head(base_rows) = p.base.bin;
  }
  int r = base_rows;
  for (int id = 0; id < p.binaries(); ++id) {
    if (!values[static_cast<std::size_t>(id)]) continue;
    const Indicator& ind = p.indicators[static_cast<std::size_t>(id)];
    q.Ain.middleRows(r, ind.A.rows()) = ind.A;
    q.bin.segment(r, ind.A.rows()) = ind.c;
    r += static_cast<int>(ind.A.rows());
  }
  return solve_qp(q, tol);
}

MiqpSolution solve_miqp_observed(const MiqpProblem& p, const MiqpOptions& opt,
                                 const std::optional<std::vector<int>>& warm, NodeObserver observer, void* ctx) {
  p.validate();
  MiqpSolution best;
  double incumbent = kInf;
  auto offer = [&](const std::vector<std::uint8_t>& values) {
    const QpResult r = solve_fixed(p, values, opt.tol);
    if (!r.ok() || !(r.objective < incumbent)) return;
    incumbent = r.objective;
    best.x = r.x;
    best.values = values;
    best.objective = r.objective;
    best.has_incumbent = true;
  };
  if (warm) offer(valuesFromAssignment(p, *warm));

  auto prunable = [&](double bound) {
    return bound >= incumbent - std::max(opt.abs_gap, opt.rel_gap * std::abs(incumbent));
  };

  // Depth-first plunging until the first incumbent, best-first afterwards.
  std::priority_queue<Node, std::vector<Node>, NodeLess> open;
  std::vector<Node> dive;
  auto pushNode = [&](Node n) {
    if (best.has_incumbent)
      open.push(std::move(n));
    else
      dive.push_back(std::move(n));
  };
  auto popNode = [&]() {
    if (best.has_incumbent && !dive.empty()) {
      for (Node& n : dive) open.push(std::move(n));
      dive.clear();
    }
    if (!dive.empty()) {
      Node n = std::move(dive.back());
      dive.pop_back();
      return n;
    }
    Node n = open.top();
    open.pop();
    return n;
  };
  long long order = 0;
  Fixed root(static_cast<std::size_t>(p.binaries()), -1);
  for (const auto& cover : p.covers)
    if (cover.size() == 1) root[static_cast<std::size_t>(cover[0])] = 1;
  propagate(p, root);
  pushNode(Node{-kInf, order++, root});
  bool exhausted = true;
  bool rounded = false;

  while (!open.empty() || !dive.empty()) {
    if (best.nodes_explored >= opt.budget) {
      exhausted = false;
      break;
    }
    Node node = popNode();
    if (prunable(node.parent_bound)) continue;
    ++best.nodes_explored;
    const Relaxation rel = relax(p, node.fixed, opt);
    if (observer) observer(ctx, rel.feasible ? rel.bound : kInf, node.fixed);
    if (!rel.feasible || prunable(rel.bound)) continue;

    int branch = -1;
    double score = kInf;
    for (std::size_t i = 0; i < rel.free_ids.size(); ++i) {
      const double v = rel.b(static_cast<Eigen::Index>(i));
      if (v > 1e-6 && v < 1.0 - 1e-6) {
        const double s = std::abs(v - 0.5);
        if (s < score - 1e-12) {
          score = s;
          branch = rel.free_ids[i];
        }
      }
    }
    if (branch < 0) {
      std::vector<std::uint8_t> values(static_cast<std::size_t>(p.binaries()), 0);
      for (int id = 0; id < p.binaries(); ++id) values[static_cast<std::size_t>(id)] = node.fixed[static_cast<std::size_t>(id)] == 1;
      for (std::size_t i = 0; i < rel.free_ids.size(); ++i)
        if (rel.b(static_cast<Eigen::Index>(i)) >= 0.5) values[static_cast<std::size_t>(rel.free_ids[i])] = 1;
      offer(values);
      // The fixed problem may be tighter than the relaxation when several
      // binaries of a cover are integral at 1; branching on them is
      // unnecessary because dropping extra rows can only help.
      continue;
    }
    if (!rounded) {
      // One rounding attempt for an early incumbent: per cover, the largest value.
      rounded = true;
      std::vector<std::uint8_t> values(static_cast<std::size_t>(p.binaries()), 0);
      for (const auto& cover : p.covers) {
        int pick = -1;
        double bestv = -1.0;
        for (int id : cover) {
          double v = node.fixed[static_cast<std::size_t>(id)] == 1 ? 2.0 : 0.0;
          for (std::size_t i = 0; i < rel.free_ids.size(); ++i)
            if (rel.free_ids[i] == id) v = rel.b(static_cast<Eigen::Index>(i));
          if (node.fixed[static_cast<std::size_t>(id)] != 0 && v > bestv + 1e-12) {
            bestv = v;
            pick = id;
          }
        }
        if (pick >= 0) values[static_cast<std::size_t>(pick)] = 1;
      }
      offer(values);
    }
    // While diving, the child closer to the relaxed value is explored first
    // (pushed last).
    double branch_value = 0.5;
    for (std::size_t i = 0; i < rel.free_ids.size(); ++i)
      if (rel.free_ids[i] == branch) branch_value = rel.b(static_cast<Eigen::Index>(i));
    const int first = branch_value >= 0.5 ? 1 : 0;
    for (int val : {1 - first, first}) {
      Fixed child = node.fixed;
      child[static_cast<std::size_t>(branch)] = static_cast<signed char>(val);
      propagate(p, child);
      if (!coversPossible(p, child)) continue;
      pushNode(Node{rel.bound, order++, std::move(child)});
    }
  }

  if (best.has_incumbent) {
    best.assignment = assignmentFromValues(p, best.values);
    best.status = exhausted ? MiqpStatus::Optimal : MiqpStatus::Timeout;
  } else {
    best.status = exhausted ? MiqpStatus::Infeasible : MiqpStatus::Timeout;
  }
  return best;
}

MiqpSolution solve_miqp(const MiqpProblem& p, const MiqpOptions& options, const std::optional<std::vector<int>>& warm) {
  return solve_miqp_observed(p, options, warm, nullptr, nullptr);
}

}  // namespace faster
