#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "adlight/baselines.hpp"
#include "adlight/env.hpp"
#include "adlight/ppo.hpp"

namespace adlight {

struct EvalEpisode {
  std::uint64_t seed = 0;
  int episode = 0;
  double avg_waiting_s = 0.0;
  std::int64_t vehicles = 0;
  std::int64_t throughput = 0;
};

struct EvalReport {
  std::string controller_id;
  std::string scenario_id;
  std::vector<EvalEpisode> episodes;

  double mean_waiting() const;
};

// A controller that can run one deterministic evaluation episode.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::string id() const = 0;
  virtual EpisodeMetrics run_episode(const ScenarioSpec& scenario,
                                     std::uint64_t seed) = 0;
};

class FixedTimeEvaluator : public Evaluator {
 public:
  explicit FixedTimeEvaluator(int green_s) : green_s_(green_s) {}
  std::string id() const override { return "fixed:" + std::to_string(green_s_); }
  EpisodeMetrics run_episode(const ScenarioSpec& scenario, std::uint64_t seed) override;

 private:
  int green_s_;
};

class WebsterEvaluator : public Evaluator {
 public:
  std::string id() const override { return "webster"; }
  EpisodeMetrics run_episode(const ScenarioSpec& scenario, std::uint64_t seed) override;
};

// Greedy (argmax) policy rollout; model parameters are never mutated.
class PolicyEvaluator : public Evaluator {
 public:
  PolicyEvaluator(NetworkParams params, ActionDesign design, std::string label);
  std::string id() const override { return label_; }
  EpisodeMetrics run_episode(const ScenarioSpec& scenario, std::uint64_t seed) override;

 private:
  NetworkParams params_;
  ActionDesign design_;
  std::string label_;
};

EvalReport evaluate(Evaluator& controller, const ScenarioSpec& scenario, int episodes,
                    const std::vector<std::uint64_t>& seeds);

struct DegradationEntry {
  std::string scenario;
  double pct = 0.0;
  bool applicable = true;  // false when the reference is zero
};

struct DegradationReport {
  std::vector<DegradationEntry> entries;  // sorted by scenario id
  double mean_pct = 0.0;
};

DegradationReport degradation(const std::map<std::string, double>& report,
                              const std::map<std::string, double>& reference);

void write_eval_csv(const std::vector<EvalReport>& reports, const std::string& path);
std::vector<EvalReport> parse_eval_csv(const std::string& path);
void write_degradation_csv(const DegradationReport& report,
                           const std::map<std::string, double>& values,
                           const std::map<std::string, double>& reference,
                           const std::string& path);

struct SuiteConfig {
  std::uint64_t seed = 1;
  long universal_steps = 200000;
  long single_steps = 120000;
  long retrain_steps = 30000;
  int eval_episodes = 2;
  std::vector<std::uint64_t> eval_seeds = {101, 202, 303};
  int episode_duration_s = 0;  // 0 = keep catalog default
  bool run_curves = true;
};

SuiteConfig parse_suite_config(const std::string& json_text);

// Runs the full comparison: baselines and universal models on the training
// split, degradation on the test split, and from-scratch/retrain/no-retrain
// learning curves. Failed cells are recorded and the suite continues.
void run_experiment_suite(const SuiteConfig& config, const std::string& out_dir);

}  // namespace adlight
