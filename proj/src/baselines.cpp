#include "adlight/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace adlight {

WebsterPlan webster_plan(const std::array<double, kNumMovements>& volumes_vph,
                         const IntersectionSpec& spec) {
  for (double v : volumes_vph)
    if (v < 0.0) throw std::invalid_argument("webster_plan: negative volume");

  const int n_phases = static_cast<int>(spec.phases.size());
  WebsterPlan plan;
  plan.lost_time_s = kWebsterLostPerPhaseS * n_phases;
  const double min_green = spec.min_green_s;
  const double min_cycle = min_green * n_phases + plan.lost_time_s;

  std::vector<double> phase_y(n_phases, 0.0);
  double total_y = 0.0;
  for (int p = 0; p < n_phases; ++p) {
    for (int m : spec.phases[p].movement_indices) {
      double capacity = kSaturationFlowVphpl * spec.movements[m].lane_count;
      phase_y[p] = std::max(phase_y[p], volumes_vph[m] / capacity);
    }
    total_y += phase_y[p];
  }

  double cycle;
  if (total_y >= kWebsterSaturationY) {
    plan.saturated = true;
    cycle = kWebsterMaxCycleS;
  } else if (total_y <= 0.0) {
    cycle = min_cycle;
  } else {
    cycle = (1.5 * plan.lost_time_s + 5.0) / (1.0 - total_y);
    cycle = std::clamp(cycle, min_cycle, kWebsterMaxCycleS);
  }

  // split greens proportionally to y with a min-green floor, redistributing
  // among the unfloored phases until the cycle identity holds
  plan.green_splits_s.assign(n_phases, min_green);
  std::vector<bool> floored(n_phases, false);
  while (true) {
    double free_y = 0.0;
    double budget = cycle - plan.lost_time_s;
    for (int p = 0; p < n_phases; ++p) {
      if (floored[p]) budget -= min_green;
      else free_y += phase_y[p];
    }
    if (free_y <= 0.0) {
      bool any_free = std::any_of(floored.begin(), floored.end(),
                                  [](bool f) { return !f; });
      if (any_free) {
        // no demand: equal split of whatever budget remains
        int free_count = static_cast<int>(std::count(floored.begin(), floored.end(), false));
        for (int p = 0; p < n_phases; ++p)
          if (!floored[p]) plan.green_splits_s[p] = std::max(min_green, budget / free_count);
      }
      break;
    }
    bool changed = false;
    for (int p = 0; p < n_phases; ++p) {
      if (floored[p]) continue;
      double g = budget * phase_y[p] / free_y;
      if (g < min_green) {
        floored[p] = true;
        plan.green_splits_s[p] = min_green;
        changed = true;
      } else {
        plan.green_splits_s[p] = g;
      }
    }
    if (!changed) break;
  }
  double total = std::accumulate(plan.green_splits_s.begin(), plan.green_splits_s.end(),
                                 plan.lost_time_s);
  plan.cycle_s = total;  // equals the clamped cycle unless floors pushed it up
  return plan;
}

WebsterController::WebsterController(const IntersectionSpec& spec) : spec_(spec) {
  plan_ = webster_plan({}, spec_);  // default plan until a cycle is measured
}

int WebsterController::green_for_phase(int phase) const {
  int g = static_cast<int>(std::lround(plan_.green_splits_s[phase]));
  return std::max(g, spec_.min_green_s);
}

void WebsterController::replan(SimWorld& world) {
  int cycle_secs = world.clock_s() - cycle_start_clock_;
  if (cycle_secs > 0) {
    for (int m = 0; m < kNumMovements; ++m) {
      double vol = static_cast<double>(world.total_crossings(m) -
                                       departed_at_cycle_start_[m]) /
                   cycle_secs * 3600.0;
      // expanding mean over completed cycles: smooths the Poisson noise of a
      // single cycle's counts so successive plans settle down
      double n = static_cast<double>(cycles_completed_ + 1);
      ema_volumes_vph_[m] =
          have_measurement_ ? ema_volumes_vph_[m] + (vol - ema_volumes_vph_[m]) / n : vol;
    }
    have_measurement_ = true;
    plan_ = webster_plan(ema_volumes_vph_, spec_);
    ++cycles_completed_;
  }
  cycle_start_clock_ = world.clock_s();
  for (int m = 0; m < kNumMovements; ++m)
    departed_at_cycle_start_[m] = world.total_crossings(m);
}

void WebsterController::step(SimWorld& world) {
  if (world.phase_complete()) {
    int n_phases = static_cast<int>(spec_.phases.size());
    ++phases_served_this_cycle_;
    if (phases_served_this_cycle_ >= n_phases) {
      phases_served_this_cycle_ = 0;
      replan(world);
    }
    int next = (world.signal().phase_index + 1) % n_phases;
    world.begin_phase(green_for_phase(next));
  }
  world.step();
}

void FixedTimeController::step(SimWorld& world) {
  if (world.phase_complete()) world.begin_phase(green_s_);
  world.step();
}

}  // namespace adlight
