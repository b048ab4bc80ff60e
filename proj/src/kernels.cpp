#include "faster/kernels.hpp"

#include <limits>

namespace faster::kernels {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on one line.
// `f` holds the input squared distances, `d` receives the result.
void edt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;  // z[0] = -inf stops this at k = 0
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[q] = (double(q) - p) * (double(q) - p) + f[p];
  }
}

// One pass along `axis` over every line of the grid. Lines are independent.
void pass(std::vector<double>& data, const Index3& dims, int axis, bool parallel) {
  const int n = dims[axis];
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  const long long lines = static_cast<long long>(dims[a1]) * dims[a2];
  const long long stride[3] = {1, dims[0], static_cast<long long>(dims[0]) * dims[1]};

  auto run_line = [&](long long line, std::vector<double>& in, std::vector<double>& out,
                      std::vector<int>& v, std::vector<double>& z) {
    long long i1 = line % dims[a1];
    long long i2 = line / dims[a1];
    long long base = i1 * stride[a1] + i2 * stride[a2];
    for (int q = 0; q < n; ++q) in[static_cast<std::size_t>(q)] = data[static_cast<std::size_t>(base + q * stride[axis])];
    edt1d(in.data(), out.data(), n, v, z);
    for (int q = 0; q < n; ++q) data[static_cast<std::size_t>(base + q * stride[axis])] = out[static_cast<std::size_t>(q)];
  };

  if (!parallel) {
    std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n)), z;
    std::vector<int> v;
    for (long long line = 0; line < lines; ++line) run_line(line, in, out, v, z);
    return;
  }
#pragma omp parallel
  {
    std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n)), z;
    std::vector<int> v;
#pragma omp for schedule(static)
    for (long long line = 0; line < lines; ++line) run_line(line, in, out, v, z);
  }
}

void transform(const std::vector<std::uint8_t>& seed, const Index3& dims, std::vector<double>& out,
               bool parallel) {
  out.resize(seed.size());
  for (std::size_t i = 0; i < seed.size(); ++i) out[i] = seed[i] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) pass(out, dims, axis, parallel);
}

}  // namespace

void squaredDistanceTransformSerial(const std::vector<std::uint8_t>& seed, const Index3& dims,
                                    std::vector<double>& out) {
  transform(seed, dims, out, false);
}

void squaredDistanceTransformParallel(const std::vector<std::uint8_t>& seed, const Index3& dims,
                                      std::vector<double>& out) {
  transform(seed, dims, out, true);
}

}  // namespace faster::kernels
