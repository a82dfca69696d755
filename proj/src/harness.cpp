#include "adlight/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace adlight {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

double EvalReport::mean_waiting() const {
  if (episodes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : episodes) total += e.avg_waiting_s;
  return total / static_cast<double>(episodes.size());
}

EpisodeMetrics FixedTimeEvaluator::run_episode(const ScenarioSpec& scenario,
                                               std::uint64_t seed) {
  SimWorld world(scenario, seed);
  FixedTimeController controller(green_s_);
  while (!world.finished()) controller.step(world);
  return world.metrics();
}

EpisodeMetrics WebsterEvaluator::run_episode(const ScenarioSpec& scenario,
                                             std::uint64_t seed) {
  SimWorld world(scenario, seed);
  WebsterController controller(scenario.intersection);
  while (!world.finished()) controller.step(world);
  return world.metrics();
}

PolicyEvaluator::PolicyEvaluator(NetworkParams params, ActionDesign design,
                                 std::string label)
    : params_(std::move(params)), design_(design), label_(std::move(label)) {}

EpisodeMetrics PolicyEvaluator::run_episode(const ScenarioSpec& scenario,
                                            std::uint64_t seed) {
  if (action_count(design_, scenario.intersection) != params_.n_actions())
    throw std::invalid_argument("policy head size " +
                                std::to_string(params_.n_actions()) +
                                " does not match scenario " + scenario.intersection.id);
  AgentEnv env(scenario, design_, seed);
  while (true) {
    auto cache = forward(params_, env.observation());
    int action = argmax(softmax(cache.logits));
    if (env.apply(action).done) break;
  }
  return env.world().metrics();
}

EvalReport evaluate(Evaluator& controller, const ScenarioSpec& scenario, int episodes,
                    const std::vector<std::uint64_t>& seeds) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  EvalReport report;
  report.controller_id = controller.id();
  report.scenario_id = scenario.intersection.id;
  for (std::uint64_t seed : seeds) {
    for (int e = 0; e < episodes; ++e) {
      EpisodeMetrics m = controller.run_episode(scenario, mix_seed(seed, e));
      EvalEpisode row;
      row.seed = seed;
      row.episode = e;
      row.avg_waiting_s = m.avg_waiting_s;
      row.vehicles = m.vehicles;
      row.throughput = m.throughput;
      report.episodes.push_back(row);
    }
  }
  return report;
}

DegradationReport degradation(const std::map<std::string, double>& report,
                              const std::map<std::string, double>& reference) {
  if (report.size() != reference.size())
    throw std::invalid_argument("degradation: scenario sets differ");
  DegradationReport out;
  double total = 0.0;
  int applicable = 0;
  for (const auto& [scenario, value] : report) {
    auto it = reference.find(scenario);
    if (it == reference.end())
      throw std::invalid_argument("degradation: scenario " + scenario +
                                  " missing from reference");
    DegradationEntry entry;
    entry.scenario = scenario;
    if (it->second == 0.0) {
      entry.applicable = false;
    } else {
      entry.pct = 100.0 * (value - it->second) / it->second;
      total += entry.pct;
      ++applicable;
    }
    out.entries.push_back(entry);
  }
  out.mean_pct = applicable > 0 ? total / applicable : 0.0;
  return out;
}

void write_eval_csv(const std::vector<EvalReport>& reports, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "scenario,controller,seed,episode,avg_waiting_s,vehicles,throughput\n";
  for (const auto& r : reports)
    for (const auto& e : r.episodes)
      os << r.scenario_id << ',' << r.controller_id << ',' << e.seed << ','
         << e.episode << ',' << format_double(e.avg_waiting_s) << ',' << e.vehicles
         << ',' << e.throughput << '\n';
}

std::vector<EvalReport> parse_eval_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty eval csv");
  std::vector<EvalReport> reports;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string scenario, controller, field;
    std::getline(ss, scenario, ',');
    std::getline(ss, controller, ',');
    EvalEpisode e;
    std::getline(ss, field, ',');
    e.seed = std::stoull(field);
    std::getline(ss, field, ',');
    e.episode = std::stoi(field);
    std::getline(ss, field, ',');
    e.avg_waiting_s = std::stod(field);
    std::getline(ss, field, ',');
    e.vehicles = std::stoll(field);
    std::getline(ss, field, ',');
    e.throughput = std::stoll(field);
    auto it = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) {
      return r.scenario_id == scenario && r.controller_id == controller;
    });
    if (it == reports.end()) {
      reports.push_back({controller, scenario, {}});
      it = std::prev(reports.end());
    }
    it->episodes.push_back(e);
  }
  return reports;
}

void write_degradation_csv(const DegradationReport& report,
                           const std::map<std::string, double>& values,
                           const std::map<std::string, double>& reference,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "scenario,avg_waiting_s,reference_waiting_s,degradation_pct\n";
  for (const auto& entry : report.entries) {
    os << entry.scenario << ',' << format_double(values.at(entry.scenario)) << ','
       << format_double(reference.at(entry.scenario)) << ','
       << (entry.applicable ? format_double(entry.pct) : std::string("n/a")) << '\n';
  }
  os << "MEAN,,," << format_double(report.mean_pct) << '\n';
}

SuiteConfig parse_suite_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("suite config syntax error: ") + e.what());
  }
  SuiteConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.universal_steps = j.value("universal_steps", cfg.universal_steps);
  cfg.single_steps = j.value("single_steps", cfg.single_steps);
  cfg.retrain_steps = j.value("retrain_steps", cfg.retrain_steps);
  cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
  if (j.contains("eval_seeds"))
    cfg.eval_seeds = j["eval_seeds"].get<std::vector<std::uint64_t>>();
  cfg.episode_duration_s = j.value("episode_duration_s", cfg.episode_duration_s);
  cfg.run_curves = j.value("run_curves", cfg.run_curves);
  return cfg;
}

namespace {

PPOConfig make_ppo_config(const SuiteConfig& suite, long steps, bool augment,
                          std::uint64_t stream) {
  PPOConfig cfg;
  cfg.total_env_steps = steps;
  cfg.augment = augment;
  cfg.seed = mix_seed(suite.seed, stream);
  return cfg;
}

}  // namespace

void run_experiment_suite(const SuiteConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream errors(out_dir + "/errors.log");

  std::vector<ScenarioSpec> training, test;
  for (auto& sc : builtin_catalog()) {
    ScenarioSpec s = sc;
    if (config.episode_duration_s > 0) s.duration_s = config.episode_duration_s;
    (s.is_training ? training : test).push_back(s);
  }

  auto guarded = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors << what << ": " << e.what() << '\n';
      errors.flush();
    }
  };

  // universal models
  TrainResult adlight, multi_env;
  guarded("train adlight", [&] {
    adlight = train(make_ppo_config(config, config.universal_steps, true, 1), training);
    write_curve_csv(adlight.curve, out_dir + "/curve_adlight_universal.csv");
  });
  guarded("train multi-env", [&] {
    multi_env = train(make_ppo_config(config, config.universal_steps, false, 2), training);
    write_curve_csv(multi_env.curve, out_dir + "/curve_multi_env.csv");
  });

  // training-split table
  std::vector<EvalReport> train_reports;
  for (const auto& sc : training) {
    guarded("eval webster " + sc.intersection.id, [&] {
      WebsterEvaluator webster;
      train_reports.push_back(
          evaluate(webster, sc, config.eval_episodes, config.eval_seeds));
    });
    guarded("eval multi-env " + sc.intersection.id, [&] {
      PolicyEvaluator policy(multi_env.params, ActionDesign::SetDuration, "multi-env");
      train_reports.push_back(
          evaluate(policy, sc, config.eval_episodes, config.eval_seeds));
    });
    guarded("eval adlight " + sc.intersection.id, [&] {
      PolicyEvaluator policy(adlight.params, ActionDesign::SetDuration, "adlight");
      train_reports.push_back(
          evaluate(policy, sc, config.eval_episodes, config.eval_seeds));
    });
  }
  write_eval_csv(train_reports, out_dir + "/eval_training.csv");

  // test split: single-env references, then degradation of the universal models
  std::map<std::string, double> reference, adlight_waiting, multi_waiting;
  std::map<std::string, TrainResult> single_models;
  std::vector<EvalReport> test_reports;
  for (const auto& sc : test) {
    const std::string& id = sc.intersection.id;
    guarded("train single-env " + id, [&] {
      auto result = train(make_ppo_config(config, config.single_steps, false,
                                          10 + std::hash<std::string>{}(id) % 97),
                          {sc});
      PolicyEvaluator policy(result.params, ActionDesign::SetDuration, "single-env");
      EvalReport report = evaluate(policy, sc, config.eval_episodes, config.eval_seeds);
      reference[id] = report.mean_waiting();
      test_reports.push_back(report);
      single_models.emplace(id, std::move(result));
    });
    guarded("eval adlight " + id, [&] {
      PolicyEvaluator policy(adlight.params, ActionDesign::SetDuration, "adlight");
      EvalReport report = evaluate(policy, sc, config.eval_episodes, config.eval_seeds);
      adlight_waiting[id] = report.mean_waiting();
      test_reports.push_back(report);
    });
    guarded("eval multi-env " + id, [&] {
      PolicyEvaluator policy(multi_env.params, ActionDesign::SetDuration, "multi-env");
      EvalReport report = evaluate(policy, sc, config.eval_episodes, config.eval_seeds);
      multi_waiting[id] = report.mean_waiting();
      test_reports.push_back(report);
    });
  }
  write_eval_csv(test_reports, out_dir + "/eval_test.csv");
  guarded("degradation adlight", [&] {
    auto report = degradation(adlight_waiting, reference);
    write_degradation_csv(report, adlight_waiting, reference,
                          out_dir + "/degradation_adlight.csv");
  });
  guarded("degradation multi-env", [&] {
    auto report = degradation(multi_waiting, reference);
    write_degradation_csv(report, multi_waiting, reference,
                          out_dir + "/degradation_multi_env.csv");
  });

  if (!config.run_curves) return;

  // retraining comparison per test intersection
  for (const auto& sc : test) {
    const std::string& id = sc.intersection.id;
    guarded("curves " + id, [&] {
      auto scratch = single_models.count(id)
                         ? std::move(single_models.at(id))
                         : train(make_ppo_config(config, config.single_steps, false, 20),
                                 {sc});
      write_curve_csv(scratch.curve, out_dir + "/curve_" + id + "_scratch.csv");
      auto retrained = retrain(adlight.params, adlight.opt, sc,
                               make_ppo_config(config, config.retrain_steps, false, 21));
      write_curve_csv(retrained.curve, out_dir + "/curve_" + id + "_retrain.csv");
      // no-retrain flat line: the universal model evaluated as-is
      PolicyEvaluator policy(adlight.params, ActionDesign::SetDuration, "adlight");
      EvalReport report = evaluate(policy, sc, config.eval_episodes, config.eval_seeds);
      std::ofstream os(out_dir + "/curve_" + id + "_noretrain.csv");
      os << "iteration,env_steps,avg_waiting_s\n";
      os << "0,0," << format_double(report.mean_waiting()) << '\n';
      os << "1," << config.single_steps << ',' << format_double(report.mean_waiting())
         << '\n';
    });
  }
}

}  // namespace adlight
