#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "adlight/features.hpp"
#include "adlight/microsim.hpp"
#include "adlight/net.hpp"

namespace adlight {

// Green durations selectable by the set-current-phase-duration agent,
// matching the 12-way policy head.
inline constexpr std::array<int, kNumActions> kDurationActions = {
    5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};

enum class ActionDesign { SetDuration, ChooseNextPhase, NextOrNot };

int action_count(ActionDesign design, const IntersectionSpec& spec);

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Decision-process wrapper around SimWorld for one action design. Between
// decisions the simulation advances on its own; observation windows cover
// the time since the previous decision (floor 5 s).
class AgentEnv {
 public:
  AgentEnv(const ScenarioSpec& scenario, ActionDesign design, std::uint64_t base_seed);

  int n_actions() const { return n_actions_; }
  ActionDesign design() const { return design_; }

  // State at the current decision point.
  const StateMatrix& observation() const { return observation_; }

  struct Outcome {
    double reward = 0.0;      // normalized
    double raw_reward = 0.0;  // -sum of queues
    bool done = false;
    int sim_seconds = 0;
  };

  // Applies the action and advances to the next decision point (or to the
  // end of the episode). Call reset() after a done outcome.
  Outcome apply(int action);

  void reset();

  const SimWorld& world() const { return *world_; }
  double episode_return() const { return episode_return_; }
  double episode_raw_return() const { return episode_raw_return_; }
  int episode_index() const { return episode_index_; }

 private:
  void advance_to_decision();
  int observation_window() const;

  ScenarioSpec scenario_;
  ActionDesign design_;
  std::uint64_t base_seed_;
  int n_actions_;
  int episode_index_ = -1;
  std::unique_ptr<SimWorld> world_;
  RewardNormalizer normalizer_;
  StateMatrix observation_;
  int last_decision_clock_ = 0;
  double episode_return_ = 0.0;
  double episode_raw_return_ = 0.0;
};

}  // namespace adlight
