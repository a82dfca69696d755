#include "adlight/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adlight {

StateMatrix assemble_state(const SimWorld& world, int window_s) {
  StateMatrix state;
  const IntersectionSpec& spec = world.spec();
  const SignalState& signal = world.signal();
  for (int m = 0; m < kNumMovements; ++m) {
    const MovementSlot& slot = spec.movements[m];
    if (!slot.present) continue;  // zero-padded row
    RawObservation obs = world.read_observation(m, window_s);
    bool green = signal.color[m] == SignalColor::Green;
    int elapsed = signal.color_elapsed_s[m];
    MovementFeature& row = state.rows[m];
    row[0] = obs.flow;
    row[1] = obs.occ_mean;
    row[2] = obs.occ_max;
    row[3] = slot.is_straight ? 1.0 : 0.0;
    row[4] = slot.lane_count * kLaneScale;
    row[5] = elapsed * kDurationScale;
    row[6] = green && elapsed >= spec.min_green_s ? 1.0 : 0.0;
    row[7] = green ? 1.0 : 0.0;
  }
  return state;
}

double raw_reward(const SimWorld& world) {
  double total = 0.0;
  for (int m = 0; m < kNumMovements; ++m) total += world.queue_length(m);
  return -total;
}

double RewardNormalizer::stddev() const {
  return count_ > 0 ? std::sqrt(m2_ / count_) : 0.0;
}

double RewardNormalizer::normalize(double raw) {
  double normalized = (raw - mean()) / (stddev() + kEpsilon);
  normalized = std::clamp(normalized, -kClip, kClip);
  // Welford update over the raw-reward history.
  ++count_;
  double delta = raw - mean_;
  mean_ += delta / count_;
  m2_ += delta * (raw - mean_);
  return normalized;
}

StateMatrix movement_shuffle(const StateMatrix& state, const Permutation& permutation) {
  std::array<bool, kNumMovements> seen{};
  for (int i : permutation) {
    if (i < 0 || i >= kNumMovements || seen[i])
      throw std::invalid_argument("movement_shuffle: mapping is not a bijection of 0..7");
    seen[i] = true;
  }
  StateMatrix out;
  for (int i = 0; i < kNumMovements; ++i) out.rows[i] = state.rows[permutation[i]];
  return out;
}

}  // namespace adlight
