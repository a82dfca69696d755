#include "adlight/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace adlight {

namespace {

double log_prob_of(const std::vector<double>& probs, int action) {
  return std::log(std::max(probs[static_cast<std::size_t>(action)], 1e-300));
}

}  // namespace

RolloutBuffer collect(std::vector<AgentEnv>& envs, const NetworkParams& params,
                      int rollout_len, std::mt19937_64& rng) {
  RolloutBuffer buffer;
  buffer.transitions.reserve(envs.size() * static_cast<std::size_t>(rollout_len));
  for (std::size_t e = 0; e < envs.size(); ++e) {
    AgentEnv& env = envs[e];
    if (env.n_actions() != params.n_actions())
      throw std::invalid_argument("collect: env action space does not match policy head");
    auto cache = forward(params, env.observation());
    std::vector<double> probs = softmax(cache.logits);
    double value = cache.value;
    for (int t = 0; t < rollout_len; ++t) {
      Transition tr;
      tr.state = env.observation();
      tr.action = sample_categorical(probs, rng);
      tr.log_prob = log_prob_of(probs, tr.action);
      tr.value = value;
      AgentEnv::Outcome out;
      try {
        out = env.apply(tr.action);
      } catch (const std::exception& err) {
        throw std::runtime_error("env " + std::to_string(e) + ": " + err.what());
      }
      tr.reward = out.reward;
      tr.done = out.done;
      buffer.env_steps += out.sim_seconds;
      if (out.done) {
        tr.next_value = 0.0;
        buffer.episode_returns.push_back(env.episode_return());
        buffer.episode_raw_returns.push_back(env.episode_raw_return());
        env.reset();
      }
      cache = forward(params, env.observation());
      probs = softmax(cache.logits);
      value = cache.value;
      if (!out.done) tr.next_value = value;
      buffer.transitions.push_back(std::move(tr));
    }
  }
  return buffer;
}

void compute_advantage(RolloutBuffer& buffer, const PPOConfig& config) {
  std::size_t n = buffer.transitions.size();
  buffer.advantages.assign(n, 0.0);
  buffer.value_targets.assign(n, 0.0);
  if (config.use_gae) {
    // per-env segments are contiguous; recursion restarts at dones
    double running = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      const Transition& tr = buffer.transitions[k];
      double not_done = tr.done ? 0.0 : 1.0;
      double delta = tr.reward + config.gamma * tr.next_value * not_done - tr.value;
      running = delta + config.gamma * config.gae_lambda * not_done * running;
      buffer.advantages[k] = running;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const Transition& tr = buffer.transitions[k];
      double not_done = tr.done ? 0.0 : 1.0;
      buffer.advantages[k] =
          tr.reward + config.gamma * tr.next_value * not_done - tr.value;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    buffer.value_targets[k] = buffer.advantages[k] + buffer.transitions[k].value;

  // standardize advantages over the batch
  double mean = std::accumulate(buffer.advantages.begin(), buffer.advantages.end(), 0.0) /
                static_cast<double>(n);
  double var = 0.0;
  for (double a : buffer.advantages) var += (a - mean) * (a - mean);
  double stddev = std::sqrt(var / static_cast<double>(n));
  for (double& a : buffer.advantages) a = (a - mean) / (stddev + 1e-8);
}

UpdateMetrics update(NetworkParams& params, OptimizerState& opt,
                     const RolloutBuffer& buffer, const PPOConfig& config,
                     std::mt19937_64& rng) {
  if (buffer.advantages.size() != buffer.transitions.size())
    throw std::logic_error("update: advantages not computed");
  const std::size_t n = buffer.transitions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateMetrics metrics;
  std::size_t minibatch_count = 0;
  Permutation identity = identity_permutation();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      std::size_t end = std::min(n, start + static_cast<std::size_t>(config.minibatch));
      double inv_batch = 1.0 / static_cast<double>(end - start);
      Gradients grads(params.n_actions());
      double policy_loss = 0.0, value_loss = 0.0, entropy_sum = 0.0;
      int clipped = 0;

      for (std::size_t k = start; k < end; ++k) {
        const Transition& tr = buffer.transitions[order[k]];
        double advantage = buffer.advantages[order[k]];
        double target = buffer.value_targets[order[k]];

        StateMatrix state = tr.state;
        if (config.augment) {
          Permutation perm = identity;
          std::shuffle(perm.begin(), perm.end(), rng);
          state = movement_shuffle(state, perm);
        }

        auto cache = forward(params, state);
        std::vector<double> probs = softmax(cache.logits);
        double log_prob = log_prob_of(probs, tr.action);
        double ratio = std::exp(log_prob - tr.log_prob);
        double clipped_ratio = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
        policy_loss -= std::min(ratio * advantage, clipped_ratio * advantage);
        if (std::abs(ratio - 1.0) > config.clip) ++clipped;

        double entropy = 0.0;
        for (double p : probs)
          if (p > 0.0) entropy -= p * std::log(p);
        entropy_sum += entropy;

        double value_err = cache.value - target;
        value_loss += value_err * value_err;

        // gradient w.r.t. log pi(a|s); zero where the clip is binding
        bool clip_binds = (advantage >= 0.0 && ratio > 1.0 + config.clip) ||
                          (advantage < 0.0 && ratio < 1.0 - config.clip);
        double dlogp = clip_binds ? 0.0 : -ratio * advantage;

        std::vector<float> dlogits(probs.size());
        for (std::size_t j = 0; j < probs.size(); ++j) {
          double indicator = static_cast<int>(j) == tr.action ? 1.0 : 0.0;
          double g = dlogp * (indicator - probs[j]);
          g += config.entropy_coeff * probs[j] * (std::log(std::max(probs[j], 1e-300)) + entropy);
          dlogits[j] = static_cast<float>(g * inv_batch);
        }
        float dvalue =
            static_cast<float>(2.0 * config.value_coeff * value_err * inv_batch);
        backward(params, cache, dlogits, dvalue, grads);
      }

      double batch_loss = policy_loss * inv_batch +
                          config.value_coeff * value_loss * inv_batch -
                          config.entropy_coeff * entropy_sum * inv_batch;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("update: non-finite loss, aborting training");

      // global gradient-norm clip
      double norm_sq = 0.0;
      grads.for_each_tensor([&](const char*, const std::vector<float>& g) {
        for (float x : g) norm_sq += static_cast<double>(x) * x;
      });
      double norm = std::sqrt(norm_sq);
      if (norm > config.max_grad_norm) {
        float scale = static_cast<float>(config.max_grad_norm / norm);
        grads.for_each_tensor([&](const char*, std::vector<float>& g) {
          for (float& x : g) x *= scale;
        });
      }
      opt.config.learning_rate = config.learning_rate;
      adam_step(params, grads, opt);

      metrics.policy_loss += policy_loss * inv_batch;
      metrics.value_loss += value_loss * inv_batch;
      metrics.entropy += entropy_sum * inv_batch;
      metrics.clip_fraction += static_cast<double>(clipped) / static_cast<double>(end - start);
      ++minibatch_count;
    }
  }
  if (minibatch_count > 0) {
    metrics.policy_loss /= static_cast<double>(minibatch_count);
    metrics.value_loss /= static_cast<double>(minibatch_count);
    metrics.entropy /= static_cast<double>(minibatch_count);
    metrics.clip_fraction /= static_cast<double>(minibatch_count);
  }
  return metrics;
}

TrainResult train(const PPOConfig& config, const std::vector<ScenarioSpec>& scenarios,
                  ActionDesign design, const NetworkParams* warm_start,
                  const OptimizerState* warm_opt) {
  if (scenarios.empty()) throw std::invalid_argument("train: no scenarios");
  int n_actions = action_count(design, scenarios.front().intersection);
  for (const auto& sc : scenarios)
    if (action_count(design, sc.intersection) != n_actions)
      throw std::invalid_argument("train: scenarios disagree on action space size");

  TrainResult result;
  result.params = NetworkParams(n_actions);
  result.opt = OptimizerState(n_actions);
  if (warm_start) {
    if (warm_start->n_actions() != n_actions)
      throw std::invalid_argument("train: checkpoint action head incompatible");
    result.params = *warm_start;
    if (warm_opt) result.opt = *warm_opt;
  } else {
    init_params(result.params, mix_seed(config.seed, 0xad11));
  }
  result.opt.config.learning_rate = config.learning_rate;

  std::vector<AgentEnv> envs;
  envs.reserve(scenarios.size());
  for (std::size_t e = 0; e < scenarios.size(); ++e)
    envs.emplace_back(scenarios[e], design, mix_seed(config.seed, e));

  std::mt19937_64 rng(mix_seed(config.seed, 0x5a3c));
  long env_steps = 0;
  int iteration = 0;
  double last_mean = 0.0, last_raw_mean = 0.0;
  while (env_steps < config.total_env_steps) {
    RolloutBuffer buffer = collect(envs, result.params, config.rollout_len, rng);
    env_steps += buffer.env_steps;
    compute_advantage(buffer, config);
    UpdateMetrics um = update(result.params, result.opt, buffer, config, rng);

    IterationLog log;
    log.iteration = iteration++;
    log.env_steps = env_steps;
    if (!buffer.episode_returns.empty()) {
      last_mean = std::accumulate(buffer.episode_returns.begin(),
                                  buffer.episode_returns.end(), 0.0) /
                  static_cast<double>(buffer.episode_returns.size());
      last_raw_mean = std::accumulate(buffer.episode_raw_returns.begin(),
                                      buffer.episode_raw_returns.end(), 0.0) /
                      static_cast<double>(buffer.episode_raw_returns.size());
    }
    log.mean_episode_reward = last_mean;
    log.mean_episode_raw_reward = last_raw_mean;
    log.update = um;
    result.curve.push_back(log);
  }
  return result;
}

TrainResult retrain(const NetworkParams& checkpoint, const OptimizerState& opt,
                    const ScenarioSpec& scenario, const PPOConfig& config) {
  return train(config, {scenario}, ActionDesign::SetDuration, &checkpoint, &opt);
}

void write_curve_csv(const std::vector<IterationLog>& curve, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "iteration,env_steps,mean_episode_reward,mean_episode_raw_reward,"
        "policy_loss,value_loss,entropy,clip_fraction\n";
  for (const auto& log : curve) {
    os << log.iteration << ',' << log.env_steps << ',' << log.mean_episode_reward << ','
       << log.mean_episode_raw_reward << ',' << log.update.policy_loss << ','
       << log.update.value_loss << ',' << log.update.entropy << ','
       << log.update.clip_fraction << '\n';
  }
}

}  // namespace adlight
