#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace faster {

using Vec3 = Eigen::Vector3d;
using Index3 = Eigen::Vector3i;

// Every voxel, and every point in space, is in exactly one of these.
enum class VoxelState : std::uint8_t { FreeKnown = 0, OccupiedKnown = 1, Unknown = 2 };

/// Bit set over VoxelState, used by the nearest-cell and intersection queries.
class StateSet {
 public:
  constexpr StateSet() = default;
  constexpr StateSet(std::initializer_list<VoxelState> states) {
    for (auto s : states) bits_ |= bit(s);
  }
  constexpr bool contains(VoxelState s) const { return (bits_ & bit(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }

 private:
  static constexpr std::uint8_t bit(VoxelState s) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(s));
  }
  std::uint8_t bits_ = 0;
};

inline char stateChar(VoxelState s) {
  switch (s) {
    case VoxelState::FreeKnown: return 'F';
    case VoxelState::OccupiedKnown: return 'O';
    case VoxelState::Unknown: return 'U';
  }
  return '?';
}

inline VoxelState stateFromChar(char c) {
  switch (c) {
    case 'F': return VoxelState::FreeKnown;
    case 'O': return VoxelState::OccupiedKnown;
    case 'U': return VoxelState::Unknown;
    default: throw std::invalid_argument(std::string("bad voxel state '") + c + "'");
  }
}

/// Per-axis dynamic limits (infinity norm bounds).
struct Limits {
  double v_max = 5.0;
  double a_max = 5.0;
  double j_max = 8.0;

  void validate() const {
    if (!(v_max > 0 && a_max > 0 && j_max > 0))
      throw std::invalid_argument("limits must be strictly positive");
  }
};

/// Position, velocity and acceleration of a triple integrator.
struct State {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();

  static State at(const Vec3& p) { return State{p, Vec3::Zero(), Vec3::Zero()}; }
  bool finite() const { return x.allFinite() && v.allFinite() && a.allFinite(); }
};

}  // namespace faster
