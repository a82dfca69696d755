#pragma once

#include <array>
#include <string>
#include <vector>

#include "adlight/microsim.hpp"
#include "adlight/net.hpp"

namespace adlight {

struct WebsterPlan {
  double cycle_s = 0.0;
  std::vector<double> green_splits_s;  // per phase
  double lost_time_s = 0.0;            // total per cycle
  bool saturated = false;              // Y at or beyond the workable limit
};

inline constexpr double kWebsterLostPerPhaseS = 3.0;
inline constexpr double kWebsterMaxCycleS = 180.0;
inline constexpr double kWebsterSaturationY = 0.95;

// Classic cycle/split computation from per-movement hourly volumes.
WebsterPlan webster_plan(const std::array<double, kNumMovements>& volumes_vph,
                         const IntersectionSpec& spec);

// Drives a SimWorld with cyclic phases re-planned each cycle from measured
// stop-line counts (exponentially smoothed).
class WebsterController {
 public:
  explicit WebsterController(const IntersectionSpec& spec);

  // Advances the world by one episode step; issues phase commands at phase
  // boundaries and re-plans at cycle boundaries.
  void step(SimWorld& world);

  const WebsterPlan& plan() const { return plan_; }
  int cycles_completed() const { return cycles_completed_; }

 private:
  void replan(SimWorld& world);
  int green_for_phase(int phase) const;

  IntersectionSpec spec_;
  WebsterPlan plan_;
  std::array<double, kNumMovements> ema_volumes_vph_{};
  bool have_measurement_ = false;
  int phases_served_this_cycle_ = 0;
  int cycle_start_clock_ = 0;
  std::array<std::int64_t, kNumMovements> departed_at_cycle_start_{};
  std::array<std::int64_t, kNumMovements> crossings_{};
  int cycles_completed_ = 0;
};

// Fixed-time control: every phase gets the same green.
class FixedTimeController {
 public:
  explicit FixedTimeController(int green_s) : green_s_(green_s) {}
  void step(SimWorld& world);

 private:
  int green_s_;
};

}  // namespace adlight
