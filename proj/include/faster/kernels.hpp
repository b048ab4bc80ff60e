#pragma once

// Data-parallel kernels. Each has a serial reference used by the tests and
// an OpenMP version used at runtime; both must produce identical output.

#include "faster/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace faster::kernels {

enum class Exec { Serial, Parallel };

/// Exact squared Euclidean distance transform on a dense grid, in voxel
/// units. `seed[i] != 0` marks a source voxel. Non-seed voxels with no seed
/// anywhere get +inf.
void squaredDistanceTransformSerial(const std::vector<std::uint8_t>& seed, const Index3& dims,
                                    std::vector<double>& out);
void squaredDistanceTransformParallel(const std::vector<std::uint8_t>& seed, const Index3& dims,
                                      std::vector<double>& out);

inline void squaredDistanceTransform(const std::vector<std::uint8_t>& seed, const Index3& dims,
                                     std::vector<double>& out, Exec exec = Exec::Parallel) {
  if (exec == Exec::Serial)
    squaredDistanceTransformSerial(seed, dims, out);
  else
    squaredDistanceTransformParallel(seed, dims, out);
}

// Counter-based generator so sample i is the same whatever thread draws it.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double unitSample(std::uint64_t seed, std::uint64_t i, int axis) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(i * 3 + static_cast<std::uint64_t>(axis)));
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline Vec3 boxSample(const Vec3& lo, const Vec3& hi, std::uint64_t seed, std::uint64_t i) {
  return Vec3(lo.x() + (hi.x() - lo.x()) * unitSample(seed, i, 0),
              lo.y() + (hi.y() - lo.y()) * unitSample(seed, i, 1),
              lo.z() + (hi.z() - lo.z()) * unitSample(seed, i, 2));
}

/// Monte-Carlo hit count of `pred` over `n` uniform samples in [lo, hi].
template <class Pred>
std::size_t countSamples(const Vec3& lo, const Vec3& hi, std::size_t n, std::uint64_t seed,
                         const Pred& pred, Exec exec = Exec::Parallel) {
  long long hits = 0;
  const long long count = static_cast<long long>(n);
  if (exec == Exec::Serial) {
    for (long long i = 0; i < count; ++i)
      if (pred(boxSample(lo, hi, seed, static_cast<std::uint64_t>(i)))) ++hits;
  } else {
#pragma omp parallel for reduction(+ : hits) schedule(static)
    for (long long i = 0; i < count; ++i)
      if (pred(boxSample(lo, hi, seed, static_cast<std::uint64_t>(i)))) ++hits;
  }
  return static_cast<std::size_t>(hits);
}

}  // namespace faster::kernels
