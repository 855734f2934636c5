// LSA-Probe pipeline CLI: corpus generation, denoiser training, threshold
// calibration, the attack itself, compute-matched baselines, evaluation,
// ablation sweeps and reports.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsap/config.hpp"
#include "lsap/errors.hpp"
#include "lsap/pipeline.hpp"

namespace {

lsap::ExperimentConfig resolve_config(const std::string& config_path,
                                      const std::vector<std::string>& sets,
                                      const std::string& run_dir,
                                      long long seed, int threads) {
  lsap::ExperimentConfig cfg =
      config_path.empty()
          ? lsap::ExperimentConfig::from_text(lsap::default_config_text(), sets)
          : lsap::ExperimentConfig::from_file(config_path, sets);
  if (!run_dir.empty()) cfg.out_dir = run_dir;
  if (const char* env = std::getenv("LSAP_RUN_DIR"); env && run_dir.empty())
    cfg.out_dir = env;
  if (seed >= 0) {
    cfg.master_seed = static_cast<std::uint64_t>(seed);
    cfg.corpus.master_seed = cfg.master_seed;
  }
  if (threads >= 0) cfg.threads = threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSA-Probe: membership inference for toy diffusion models"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path, run_dir, baseline_kind = "all";
  std::vector<std::string> sets;
  long long seed = -1;
  int threads = -1;
  bool print_config = false;

  app.add_option("--config", config_path,
                 "Experiment config file (defaults are built in; see "
                 "--print-config)");
  app.add_option("--set", sets, "Override a config key: section.key=value")
      ->take_all();
  app.add_option("--run-dir", run_dir,
                 "Run directory (or env LSAP_RUN_DIR; default from config)");
  app.add_option("--seed", seed, "Override run.master_seed");
  app.add_option("--threads", threads, "Override run.threads");
  app.add_flag("--print-config", print_config,
               "Print the default config with documentation and exit");

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  auto* train = app.add_subcommand("train", "Train the toy denoiser");
  auto* calib = app.add_subcommand("calibrate",
                                   "Calibrate tau on dev non-members");
  auto* attack = app.add_subcommand("attack", "Score members + eval clips");
  auto* baseline = app.add_subcommand("baseline", "Run baselines at parity");
  baseline->add_option("--kind", baseline_kind,
                       "loss-at-t | endpoint-reconstruction | trajectory | "
                       "all");
  auto* evaluate = app.add_subcommand("evaluate", "ROC/AUC/CI evaluation");
  auto* sweep = app.add_subcommand("sweep", "Timestep/budget/metric sweeps");
  auto* report = app.add_subcommand("report", "Render the run report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config) {
      std::fputs(lsap::default_config_text().c_str(), stdout);
      return 0;
    }
    lsap::ExperimentConfig cfg =
        resolve_config(config_path, sets, run_dir, seed, threads);
    if (gen->parsed()) lsap::pipeline::gen_data(cfg);
    if (train->parsed()) lsap::pipeline::train_stage(cfg);
    if (calib->parsed()) lsap::pipeline::calibrate_stage(cfg);
    if (attack->parsed()) lsap::pipeline::attack_stage(cfg);
    if (baseline->parsed()) {
      if (baseline_kind == "all")
        lsap::pipeline::baselines_stage(cfg);
      else
        lsap::pipeline::baseline_stage(
            cfg, lsap::baseline_kind_from_string(baseline_kind));
    }
    if (evaluate->parsed()) lsap::pipeline::evaluate_stage(cfg);
    if (sweep->parsed()) lsap::pipeline::sweep_stage(cfg);
    if (report->parsed()) lsap::pipeline::report_stage(cfg);
  } catch (const lsap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const lsap::ArtifactError& e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return 3;
  } catch (const lsap::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
