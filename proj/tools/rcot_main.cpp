// Command-line front end: training runs, checkpoint evaluation, the discrete
// oracle verification harness, and the ablation studies.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config error,
// 3 training divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "rcot/config.hpp"
#include "rcot/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

int cmd_train(const std::string& config_path) {
  nlohmann::json raw;
  {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot open config file " << config_path << "\n";
      return kExitUsage;
    }
    try {
      f >> raw;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config parse error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  const rcot::RunConfig cfg = rcot::parse_run_config(raw);
  const rcot::TrainRunResult result = rcot::execute_training(cfg, raw);
  std::cout << "run directory: " << result.run_dir.string() << "\n";
  for (const auto& [k, v] : result.report) std::printf("%s = %.6g\n", k.c_str(), v);
  if (result.fit.diverged) {
    std::cerr << "training diverged: " << result.fit.message
              << " (partial artifacts retained)\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path) {
  const rcot::RunConfig cfg = rcot::load_run_config(config_path);
  const rcot::EvalRunResult result = rcot::execute_eval(checkpoint_path, cfg);
  std::cout << "metrics: " << result.metrics_csv.string() << "\n";
  if (rcot::is_image_task(cfg.task))
    std::cout << "grid: " << result.grid_png.string() << "\n";
  for (const auto& [k, v] : result.report) std::printf("%s = %.6g\n", k.c_str(), v);
  return kExitOk;
}

int cmd_oracle_verify(std::size_t size, int trials, std::uint64_t seed,
                      bool inject_fault) {
  const bool ok = rcot::oracle_verify(size, trials, seed, inject_fault, std::cout);
  return ok ? kExitOk : kExitVerifyFail;
}

int cmd_ablate(const std::string& study_name, const std::string& config_path) {
  const rcot::AblationStudy study = rcot::parse_study(study_name);
  const rcot::RunConfig cfg = rcot::load_run_config(config_path);
  const rcot::AblationResult result = rcot::run_ablation(study, cfg);

  const std::filesystem::path dir =
      std::filesystem::path(cfg.out_dir) / (cfg.run_name + "_ablate_" + study_name);
  std::filesystem::create_directories(dir);
  rcot::io::write_table_csv((dir / "comparison.csv").string(), result.header,
                            result.rows);
  if (!result.curve.empty())
    rcot::io::write_curve_png((dir / "sensitivity.png").string(), result.curve);
  else
    rcot::io::write_bar_chart_png((dir / "comparison.png").string(), result.bars);

  std::cout << "ablation table: " << (dir / "comparison.csv").string() << "\n";
  for (const auto& row : result.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      std::cout << row[i] << (i + 1 < row.size() ? "  " : "\n");
  }
  if (result.diverged) {
    std::cerr << "at least one ablation variant diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-conditioned optimal transport at desk scale"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, study;
  std::size_t size = 6;
  int trials = 100;
  std::uint64_t seed = 1;
  bool inject_fault = false;

  auto* train = app.add_subcommand("train", "train a transport map from a config");
  train->add_option("--config", config_path, "run config JSON")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset config");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--config", config_path, "dataset config JSON")->required();

  auto* verify = app.add_subcommand(
      "oracle-verify", "cross-check the exact OT solvers on random instances");
  verify->add_option("--size", size, "instance size (<= 8)");
  verify->add_option("--trials", trials, "number of random instances");
  verify->add_option("--seed", seed, "rng seed");
  verify->add_flag("--inject-fault", inject_fault,
                   "corrupt one solution to prove the harness detects it");

  auto* ablate = app.add_subcommand("ablate", "run a paired ablation study");
  ablate->add_option("--study", study, "trc | loss | regularizer | gamma")->required();
  ablate->add_option("--config", config_path, "run config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (eval->parsed()) return cmd_eval(checkpoint_path, config_path);
    if (verify->parsed()) return cmd_oracle_verify(size, trials, seed, inject_fault);
    if (ablate->parsed()) return cmd_ablate(study, config_path);
  } catch (const rcot::usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rcot::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const rcot::divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitVerifyFail;
  }
  return kExitUsage;
}
