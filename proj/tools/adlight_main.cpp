#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "adlight/checkpoint.hpp"
#include "adlight/harness.hpp"

namespace {

using namespace adlight;

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ScenarioSpec load_scenario(const std::string& path, std::uint64_t seed_override,
                           int duration_override) {
  ScenarioSpec sc = parse_scenario(read_file(path));
  if (seed_override != 0) sc.seed = seed_override;
  if (duration_override > 0) sc.duration_s = duration_override;
  return sc;
}

const char* color_letter(SignalColor c) {
  switch (c) {
    case SignalColor::Green: return "G";
    case SignalColor::Yellow: return "y";
    case SignalColor::Red: return "r";
  }
  return "?";
}

ActionDesign parse_design(const std::string& name) {
  if (name == "set-duration") return ActionDesign::SetDuration;
  if (name == "choose-next") return ActionDesign::ChooseNextPhase;
  if (name == "next-or-not") return ActionDesign::NextOrNot;
  throw std::runtime_error("unknown action design: " + name);
}

int run(int argc, char** argv) {
  CLI::App app{"adlight: universal traffic-signal control laboratory"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 1;
  app.add_option("--seed", seed, "override scenario/training seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (reserved)");

  // catalog
  auto* catalog_cmd = app.add_subcommand("catalog", "print the built-in intersections");
  std::string dump_dir;
  catalog_cmd->add_option("--dump", dump_dir, "write each scenario as JSON into DIR");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run one scenario with a fixed plan");
  std::string sim_scenario, sim_plan = "fixed:30", trace_path;
  int sim_duration = 0;
  sim_cmd->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim_cmd->add_option("--plan", sim_plan, "fixed:<green> or webster");
  sim_cmd->add_option("--duration", sim_duration, "override episode length (s)");
  sim_cmd->add_option("--trace", trace_path, "per-step CSV trace output");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model with PPO");
  std::vector<std::string> train_scenarios;
  long train_steps = 200000;
  bool augment = false;
  std::string train_out = "model.adl", curve_out, design_name = "set-duration";
  train_cmd->add_option("--scenarios", train_scenarios, "scenario JSON files")
      ->required()
      ->expected(-1);
  train_cmd->add_option("--steps", train_steps, "total env steps (simulated seconds)");
  train_cmd->add_flag("--augment", augment, "movement-shuffle augmentation");
  train_cmd->add_option("--out", train_out, "checkpoint output path");
  train_cmd->add_option("--curve", curve_out, "learning-curve CSV output");
  train_cmd->add_option("--design", design_name,
                        "set-duration | choose-next | next-or-not");

  // retrain
  auto* retrain_cmd = app.add_subcommand("retrain", "continue training from a checkpoint");
  std::string retrain_ckpt, retrain_scenario, retrain_out = "model.adl", retrain_curve;
  long retrain_steps = 50000;
  retrain_cmd->add_option("--checkpoint", retrain_ckpt, "input checkpoint")->required();
  retrain_cmd->add_option("--scenario", retrain_scenario, "scenario JSON")->required();
  retrain_cmd->add_option("--steps", retrain_steps, "additional env steps");
  retrain_cmd->add_option("--out", retrain_out, "checkpoint output path");
  retrain_cmd->add_option("--curve", retrain_curve, "learning-curve CSV output");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string eval_ckpt, eval_out = "eval.csv", eval_design = "set-duration";
  std::vector<std::string> eval_scenarios;
  std::vector<std::uint64_t> eval_seeds = {101, 202, 303};
  int eval_episodes = 2, eval_duration = 0;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--scenarios", eval_scenarios, "scenario JSON files")
      ->required()
      ->expected(-1);
  eval_cmd->add_option("--episodes", eval_episodes, "episodes per seed");
  eval_cmd->add_option("--eval-seeds", eval_seeds, "evaluation seeds");
  eval_cmd->add_option("--duration", eval_duration, "override episode length (s)");
  eval_cmd->add_option("--design", eval_design, "action design of the checkpoint");
  eval_cmd->add_option("--out", eval_out, "eval CSV output");

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "evaluate a classical controller");
  std::string base_method = "webster", base_scenario, base_out = "eval.csv";
  int base_green = 30, base_episodes = 2, base_duration = 0;
  std::vector<std::uint64_t> base_seeds = {101, 202, 303};
  base_cmd->add_option("--method", base_method, "webster | fixed");
  base_cmd->add_option("--scenario", base_scenario, "scenario JSON")->required();
  base_cmd->add_option("--green", base_green, "fixed-time green (s)");
  base_cmd->add_option("--episodes", base_episodes, "episodes per seed");
  base_cmd->add_option("--eval-seeds", base_seeds, "evaluation seeds");
  base_cmd->add_option("--duration", base_duration, "override episode length (s)");
  base_cmd->add_option("--out", base_out, "eval CSV output");

  // report
  auto* report_cmd = app.add_subcommand("report", "degradation of one eval vs a reference");
  std::string report_eval, report_reference, report_out = "degradation.csv";
  report_cmd->add_option("--eval", report_eval, "eval CSV")->required();
  report_cmd->add_option("--reference", report_reference, "reference eval CSV")->required();
  report_cmd->add_option("--out", report_out, "degradation CSV output");

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "run the full experiment suite");
  std::string suite_config;
  suite_cmd->add_option("--config", suite_config, "suite config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (catalog_cmd->parsed()) {
    auto catalog = builtin_catalog();
    std::cout << "id,roads,lanes_per_road,phases,movements,split\n";
    for (const auto& sc : catalog) {
      const auto& s = sc.intersection;
      std::cout << s.id << ',' << s.roads << ",(" << s.lanes_per_road[0] << ' '
                << s.lanes_per_road[1] << ' ' << s.lanes_per_road[2] << ' '
                << s.lanes_per_road[3] << ")," << s.phases.size() << ','
                << s.present_movement_count() << ','
                << (sc.is_training ? "training" : "test") << '\n';
    }
    if (!dump_dir.empty()) {
      std::filesystem::create_directories(dump_dir);
      for (const auto& sc : catalog) {
        std::ofstream os(dump_dir + "/" + sc.intersection.id + ".json");
        os << serialize_scenario(sc);
      }
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    ScenarioSpec sc = load_scenario(sim_scenario, seed, sim_duration);
    SimWorld world(sc);
    std::ofstream trace;
    if (!trace_path.empty()) {
      trace.open(trace_path);
      trace << "clock_s,phase_index,colors,q_N,q_NL,q_E,q_EL,q_W,q_WL,q_S,q_SL\n";
    }
    std::unique_ptr<WebsterController> webster;
    std::unique_ptr<FixedTimeController> fixed;
    if (sim_plan == "webster") {
      webster = std::make_unique<WebsterController>(sc.intersection);
    } else if (sim_plan.rfind("fixed:", 0) == 0) {
      fixed = std::make_unique<FixedTimeController>(std::stoi(sim_plan.substr(6)));
    } else {
      throw std::runtime_error("unknown plan: " + sim_plan);
    }
    while (!world.finished()) {
      if (webster) webster->step(world);
      else fixed->step(world);
      if (trace.is_open()) {
        trace << world.clock_s() << ',' << world.signal().phase_index << ',';
        for (int m = 0; m < kNumMovements; ++m)
          trace << color_letter(world.signal().color[m]);
        for (int m = 0; m < kNumMovements; ++m) trace << ',' << world.queue_length(m);
        trace << '\n';
      }
    }
    EpisodeMetrics m = world.metrics();
    std::cout << "avg_waiting_s=" << m.avg_waiting_s << " vehicles=" << m.vehicles
              << " throughput=" << m.throughput << '\n';
    return 0;
  }

  if (train_cmd->parsed()) {
    std::vector<ScenarioSpec> scenarios;
    for (const auto& path : train_scenarios)
      scenarios.push_back(load_scenario(path, 0, 0));
    PPOConfig cfg;
    cfg.total_env_steps = train_steps;
    cfg.augment = augment;
    cfg.seed = seed;
    TrainResult result = train(cfg, scenarios, parse_design(design_name));
    save_checkpoint(result.params, result.opt, train_out);
    if (!curve_out.empty()) write_curve_csv(result.curve, curve_out);
    std::cout << "trained " << result.curve.size() << " iterations, checkpoint "
              << train_out << '\n';
    return 0;
  }

  if (retrain_cmd->parsed()) {
    auto [params, opt] = load_checkpoint(retrain_ckpt);
    ScenarioSpec sc = load_scenario(retrain_scenario, 0, 0);
    PPOConfig cfg;
    cfg.total_env_steps = retrain_steps;
    cfg.seed = seed;
    TrainResult result = retrain(params, opt, sc, cfg);
    save_checkpoint(result.params, result.opt, retrain_out);
    if (!retrain_curve.empty()) write_curve_csv(result.curve, retrain_curve);
    std::cout << "retrained, checkpoint " << retrain_out << '\n';
    return 0;
  }

  if (eval_cmd->parsed()) {
    auto [params, opt] = load_checkpoint(eval_ckpt);
    PolicyEvaluator policy(params, parse_design(eval_design), "policy");
    std::vector<EvalReport> reports;
    for (const auto& path : eval_scenarios) {
      ScenarioSpec sc = load_scenario(path, 0, eval_duration);
      reports.push_back(evaluate(policy, sc, eval_episodes, eval_seeds));
      std::cout << sc.intersection.id << " avg_waiting_s="
                << reports.back().mean_waiting() << '\n';
    }
    write_eval_csv(reports, eval_out);
    return 0;
  }

  if (base_cmd->parsed()) {
    ScenarioSpec sc = load_scenario(base_scenario, 0, base_duration);
    std::unique_ptr<Evaluator> evaluator;
    if (base_method == "webster") evaluator = std::make_unique<WebsterEvaluator>();
    else if (base_method == "fixed")
      evaluator = std::make_unique<FixedTimeEvaluator>(base_green);
    else throw std::runtime_error("unknown baseline method: " + base_method);
    EvalReport report = evaluate(*evaluator, sc, base_episodes, base_seeds);
    write_eval_csv({report}, base_out);
    std::cout << sc.intersection.id << " " << evaluator->id()
              << " avg_waiting_s=" << report.mean_waiting() << '\n';
    return 0;
  }

  if (report_cmd->parsed()) {
    auto to_map = [](const std::vector<EvalReport>& reports) {
      std::map<std::string, double> m;
      for (const auto& r : reports) m[r.scenario_id] = r.mean_waiting();
      return m;
    };
    auto values = to_map(parse_eval_csv(report_eval));
    auto reference = to_map(parse_eval_csv(report_reference));
    DegradationReport deg = degradation(values, reference);
    write_degradation_csv(deg, values, reference, report_out);
    std::cout << "mean_degradation_pct=" << deg.mean_pct << '\n';
    return 0;
  }

  if (suite_cmd->parsed()) {
    SuiteConfig cfg = parse_suite_config(read_file(suite_config));
    if (seed != 0) cfg.seed = seed;
    run_experiment_suite(cfg, out_dir);
    std::cout << "suite artifacts written to " << out_dir << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
