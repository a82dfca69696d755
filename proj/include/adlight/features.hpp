#pragma once

#include <array>
#include <cstddef>

#include "adlight/microsim.hpp"

namespace adlight {

inline constexpr int kFeaturesPerMovement = 8;
inline constexpr double kLaneScale = 1.0 / 5.0;
inline constexpr double kDurationScale = 1.0 / 70.0;

// One row of the state: (flow, occ_mean, occ_max, is_straight, lanes,
// duration, is_min_green, is_green), all scaled to roughly unit magnitude.
using MovementFeature = std::array<double, kFeaturesPerMovement>;

struct StateMatrix {
  std::array<MovementFeature, kNumMovements> rows{};

  bool operator==(const StateMatrix&) const = default;
};

using Permutation = std::array<int, kNumMovements>;

inline constexpr Permutation identity_permutation() {
  return {0, 1, 2, 3, 4, 5, 6, 7};
}

StateMatrix assemble_state(const SimWorld& world, int window_s);

// Raw reward: negative total stopped-queue length over the 8 movement slots.
double raw_reward(const SimWorld& world);

// Running-statistics reward normalizer. Normalizes against the statistics of
// previously seen raw rewards, then folds the new one in.
class RewardNormalizer {
 public:
  double normalize(double raw);

  // Statistics over what has been observed so far.
  std::int64_t count() const { return count_; }
  double mean() const { return count_ > 0 ? mean_ : 0.0; }
  double stddev() const;

  static constexpr double kEpsilon = 1e-8;
  static constexpr double kClip = 10.0;

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Row permutation of the state: output row i = input row permutation[i].
// Throws if the mapping is not a bijection of 0..7.
StateMatrix movement_shuffle(const StateMatrix& state, const Permutation& permutation);

}  // namespace adlight
