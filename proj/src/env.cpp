#include "adlight/env.hpp"

#include <memory>
#include <stdexcept>

namespace adlight {

int action_count(ActionDesign design, const IntersectionSpec& spec) {
  switch (design) {
    case ActionDesign::SetDuration:
      return kNumActions;
    case ActionDesign::ChooseNextPhase:
      return static_cast<int>(spec.phases.size());
    case ActionDesign::NextOrNot:
      return 2;
  }
  throw std::logic_error("unknown action design");
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

AgentEnv::AgentEnv(const ScenarioSpec& scenario, ActionDesign design,
                   std::uint64_t base_seed)
    : scenario_(scenario),
      design_(design),
      base_seed_(base_seed),
      n_actions_(action_count(design, scenario.intersection)) {
  reset();
}

void AgentEnv::reset() {
  ++episode_index_;
  world_ = std::make_unique<SimWorld>(
      scenario_, mix_seed(base_seed_, static_cast<std::uint64_t>(episode_index_)));
  if (design_ == ActionDesign::SetDuration) {
    std::vector<int> allowed(kDurationActions.begin(), kDurationActions.end());
    allowed.push_back(scenario_.intersection.min_green_s);  // initial phase
    world_->set_allowed_durations(std::move(allowed));
  }
  episode_return_ = 0.0;
  episode_raw_return_ = 0.0;
  last_decision_clock_ = 0;
  advance_to_decision();
}

int AgentEnv::observation_window() const {
  return std::max(5, world_->clock_s() - last_decision_clock_);
}

void AgentEnv::advance_to_decision() {
  while (!world_->finished() && !world_->phase_complete()) world_->step();
  observation_ = assemble_state(*world_, observation_window());
}

AgentEnv::Outcome AgentEnv::apply(int action) {
  if (action < 0 || action >= n_actions_)
    throw std::invalid_argument("action index out of range");
  if (world_->finished()) throw std::logic_error("apply on finished episode");

  int start_clock = world_->clock_s();
  switch (design_) {
    case ActionDesign::SetDuration:
      world_->begin_phase(kDurationActions[static_cast<std::size_t>(action)]);
      break;
    case ActionDesign::ChooseNextPhase:
      if (action == world_->signal().phase_index)
        world_->extend_phase(5);
      else
        world_->begin_phase_at(action, 5);
      break;
    case ActionDesign::NextOrNot:
      if (action == 0)
        world_->extend_phase(5);
      else
        world_->begin_phase(scenario_.intersection.min_green_s);
      break;
  }
  last_decision_clock_ = start_clock;
  advance_to_decision();

  Outcome out;
  out.raw_reward = raw_reward(*world_);
  out.reward = normalizer_.normalize(out.raw_reward);
  out.done = world_->finished();
  out.sim_seconds = world_->clock_s() - start_clock;
  episode_return_ += out.reward;
  episode_raw_return_ += out.raw_reward;
  return out;
}

}  // namespace adlight
