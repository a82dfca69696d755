#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "adlight/env.hpp"
#include "adlight/net.hpp"

namespace adlight {

struct Transition {
  StateMatrix state;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;       // normalized
  double value = 0.0;        // V(s_t)
  double next_value = 0.0;   // V(s_{t+1}); ignored when done
  bool done = false;
};

struct RolloutBuffer {
  std::vector<Transition> transitions;
  std::vector<double> advantages;
  std::vector<double> value_targets;
  std::vector<double> episode_returns;      // normalized, completed this rollout
  std::vector<double> episode_raw_returns;  // unnormalized
  long env_steps = 0;                       // simulated seconds covered
};

struct PPOConfig {
  double gamma = 0.99;
  double clip = 0.2;
  double learning_rate = 3e-4;
  int epochs = 4;
  int minibatch = 64;
  int rollout_len = 128;  // decisions per env per iteration
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;
  double max_grad_norm = 0.5;
  long total_env_steps = 200000;
  bool augment = false;
  bool use_gae = false;
  double gae_lambda = 0.95;
  std::uint64_t seed = 0;
};

struct UpdateMetrics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

struct IterationLog {
  int iteration = 0;
  long env_steps = 0;
  double mean_episode_reward = 0.0;      // normalized return
  double mean_episode_raw_reward = 0.0;  // raw (-queue) return
  UpdateMetrics update;
};

RolloutBuffer collect(std::vector<AgentEnv>& envs, const NetworkParams& params,
                      int rollout_len, std::mt19937_64& rng);

void compute_advantage(RolloutBuffer& buffer, const PPOConfig& config);

UpdateMetrics update(NetworkParams& params, OptimizerState& opt,
                     const RolloutBuffer& buffer, const PPOConfig& config,
                     std::mt19937_64& rng);

struct TrainResult {
  NetworkParams params;
  OptimizerState opt;
  std::vector<IterationLog> curve;

  TrainResult() : params(kNumActions), opt(kNumActions) {}
};

// Trains from scratch (or from warm-start parameters) on one env per
// scenario. All randomness derives from config.seed.
TrainResult train(const PPOConfig& config, const std::vector<ScenarioSpec>& scenarios,
                  ActionDesign design = ActionDesign::SetDuration,
                  const NetworkParams* warm_start = nullptr,
                  const OptimizerState* warm_opt = nullptr);

TrainResult retrain(const NetworkParams& checkpoint, const OptimizerState& opt,
                    const ScenarioSpec& scenario, const PPOConfig& config);

void write_curve_csv(const std::vector<IterationLog>& curve, const std::string& path);

}  // namespace adlight
