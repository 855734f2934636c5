#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lsap/pipeline.hpp"
#include "lsap/rng.hpp"
#include "lsap/stats.hpp"

using namespace lsap;
namespace fs = std::filesystem;

namespace {

std::string tiny_config_text(const std::string& out_dir,
                             std::uint64_t seed = 777) {
  return "[run]\nmaster_seed = " + std::to_string(seed) +
         "\nout_dir = " + out_dir + R"(
threads = 0
[corpus]
clips_per_split = 6
clip_len = 256
sample_rate = 8000
[schedule]
T = 20
[denoiser]
hidden = 24
temb_dim = 8
[train]
steps = 60
batch = 4
lr = 1e-3
[attack]
pgd_steps = 3
restarts = 1
bisection_steps = 5
seed_reps = 1
metric = waveform-mse
t_ratio = 0.6
[calibration]
directions = 2
[evaluation]
bootstrap_resamples = 100
[sweep]
t_ratios = 0.4,0.8
eta_maxes = 0.2
metrics = waveform-mse
)";
}

ExperimentConfig tiny_config(const std::string& out_dir,
                             std::uint64_t seed = 777) {
  return ExperimentConfig::from_text(tiny_config_text(out_dir, seed), {});
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("score records round trip the JSON-lines file losslessly") {
  TempDir dir("lsap_scores_rt");
  Rng rng(1);
  std::vector<ScoreRecord> records(10000);
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.sample_id = "s" + std::to_string(i);
    r.split = i % 2 ? "member" : "eval-nonmember";
    r.attack = "lsa-probe";
    r.score = rng.gaussian() * std::pow(10.0, rng.uniform(-8, 8));
    r.seed_reps = 1 + static_cast<int>(rng.next_below(3));
    r.timestep = static_cast<int>(1 + rng.next_below(100));
    r.bracket_lo = rng.next_double();
    r.bracket_hi = r.bracket_lo + rng.next_double();
    r.saturated_low = rng.next_below(2) == 0;
    r.counters.reverse_passes = 140;
    r.counters.net_calls = static_cast<std::int64_t>(rng.next_below(10000));
    r.secondary["mr-stft"] = rng.gaussian();
  }
  const std::string path = (dir.path / "scores.jsonl").string();
  pipeline::persist_scores(records, path);
  std::vector<ScoreRecord> loaded = pipeline::load_scores(path);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].score == records[i].score);  // bitwise
    CHECK(loaded[i].sample_id == records[i].sample_id);
    CHECK(loaded[i].bracket_hi == records[i].bracket_hi);
    CHECK(loaded[i].secondary.at("mr-stft") == records[i].secondary.at("mr-stft"));
  }
}

TEST_CASE("malformed score lines are reported with their line number") {
  TempDir dir("lsap_scores_bad");
  const std::string path = (dir.path / "scores.jsonl").string();
  {
    std::vector<ScoreRecord> records(3);
    for (auto& r : records) {
      r.sample_id = "x";
      r.split = "member";
      r.attack = "a";
    }
    pipeline::persist_scores(records, path);
    std::ofstream f(path, std::ios::app);
    f << "{not json}\n";
  }
  try {
    pipeline::load_scores(path);
    FAIL("expected ArtifactError");
  } catch (const ArtifactError& e) {
    CHECK(std::string(e.what()).find(":4") != std::string::npos);
  }
}

TEST_CASE("config parsing: defaults, overrides, unknown keys") {
  ExperimentConfig defaults =
      ExperimentConfig::from_text(default_config_text(), {});
  CHECK(defaults.corpus.clips_per_split == 64);
  CHECK(defaults.attack.pgd_steps == 12);
  CHECK(defaults.attack.eta_max == 0.8);
  CHECK(defaults.attack.timestep.t_ratio == 0.6);
  CHECK(defaults.schedule_T == 100);

  ExperimentConfig overridden = ExperimentConfig::from_text(
      default_config_text(), {"attack.pgd_steps=5", "run.master_seed=42"});
  CHECK(overridden.attack.pgd_steps == 5);
  CHECK(overridden.master_seed == 42);

  CHECK_THROWS_AS(
      ExperimentConfig::from_text("[attack]\nnot_a_key = 1\n", {}),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[attack]\npgd_steps = abc\n", {}),
                  ConfigError);
  // alpha = beta * eta / K at the paper's example values.
  ExperimentConfig ex = ExperimentConfig::from_text(
      default_config_text(),
      {"attack.step_scale=0.25", "attack.eta_max=0.8", "attack.pgd_steps=12"});
  CHECK(ex.attack.step_scale * ex.attack.eta_max / ex.attack.pgd_steps ==
        doctest::Approx(0.0166666666667).epsilon(1e-9));
}

TEST_CASE("full tiny pipeline; reruns and worker counts are byte-identical") {
  TempDir dir("lsap_e2e");
  const std::string run1 = (dir.path / "run1").string();
  ExperimentConfig cfg = tiny_config(run1);

  pipeline::gen_data(cfg);
  pipeline::train_stage(cfg);
  pipeline::calibrate_stage(cfg);
  pipeline::attack_stage(cfg);
  pipeline::baselines_stage(cfg);
  pipeline::evaluate_stage(cfg);
  pipeline::report_stage(cfg);

  pipeline::Paths paths{run1};
  CHECK(fs::exists(paths.attack_scores()));
  CHECK(fs::exists(paths.baseline_scores("loss-at-t")));
  CHECK(fs::exists(paths.baseline_scores("trajectory")));
  CHECK(fs::exists(paths.evaluation()));
  CHECK(fs::exists(paths.report()));

  const std::string attack_bytes = slurp(paths.attack_scores());

  // Re-running the attack stage overwrites with identical bytes.
  pipeline::attack_stage(cfg);
  CHECK(slurp(paths.attack_scores()) == attack_bytes);

  // A fresh run with the same seed and different worker count matches too.
  const std::string run2 = (dir.path / "run2").string();
  ExperimentConfig cfg2 = tiny_config(run2);
  cfg2.threads = 3;
  pipeline::gen_data(cfg2);
  pipeline::train_stage(cfg2);
  pipeline::calibrate_stage(cfg2);
  pipeline::attack_stage(cfg2);
  pipeline::baselines_stage(cfg2);
  pipeline::Paths paths2{run2};
  CHECK(slurp(paths2.attack_scores()) == attack_bytes);
  CHECK(slurp(paths2.baseline_scores("loss-at-t")) ==
        slurp(paths.baseline_scores("loss-at-t")));

  // A different master seed changes the scores.
  const std::string run3 = (dir.path / "run3").string();
  ExperimentConfig cfg3 = tiny_config(run3, 778);
  pipeline::gen_data(cfg3);
  pipeline::train_stage(cfg3);
  pipeline::calibrate_stage(cfg3);
  pipeline::attack_stage(cfg3);
  CHECK(slurp(pipeline::Paths{run3}.attack_scores()) != attack_bytes);
}

TEST_CASE("evaluation artifacts trace back to the score files") {
  TempDir dir("lsap_eval_trace");
  const std::string run = (dir.path / "run").string();
  ExperimentConfig cfg = tiny_config(run);
  pipeline::gen_data(cfg);
  pipeline::train_stage(cfg);
  pipeline::calibrate_stage(cfg);
  pipeline::attack_stage(cfg);
  pipeline::evaluate_stage(cfg);

  pipeline::Paths paths{run};
  auto records = pipeline::load_scores(paths.attack_scores());
  nlohmann::json eval = nlohmann::json::parse(slurp(paths.evaluation()));
  const auto& entry = eval.at("attacks").at("lsa-probe");
  // AUC recomputed from the persisted records matches the report.
  CHECK(entry.at("auc").at("point").get<double>() ==
        doctest::Approx(auc(split_scores(records))).epsilon(1e-12));
  CHECK(entry.at("n_members").get<int>() == 6);
  CHECK(entry.at("n_nonmembers").get<int>() == 6);
}

TEST_CASE("missing artifacts and fingerprint mismatches are refused") {
  TempDir dir("lsap_guards");
  const std::string run = (dir.path / "run").string();
  ExperimentConfig cfg = tiny_config(run);
  // Attack before anything exists.
  CHECK_THROWS_AS(pipeline::attack_stage(cfg), ArtifactError);

  pipeline::gen_data(cfg);
  pipeline::train_stage(cfg);
  pipeline::calibrate_stage(cfg);

  // Calibration was done with waveform-mse; switching the attack metric
  // must be refused.
  ExperimentConfig altered = cfg;
  altered.attack.metric = MetricKind::kLogMelMse;
  CHECK_THROWS_AS(pipeline::attack_stage(altered), ArtifactError);

  // Empty score file: evaluate refuses.
  pipeline::attack_stage(cfg);
  pipeline::Paths paths{run};
  std::ofstream(paths.attack_scores(), std::ios::trunc).close();
  CHECK_THROWS_AS(pipeline::evaluate_stage(cfg), ArtifactError);
}

TEST_CASE("sweep harness emits valid brackets and Holm flags") {
  TempDir dir("lsap_sweep");
  const std::string run = (dir.path / "run").string();
  ExperimentConfig cfg = tiny_config(run);
  pipeline::gen_data(cfg);
  pipeline::train_stage(cfg);
  pipeline::sweep_stage(cfg);

  pipeline::Paths paths{run};
  nlohmann::json summary = nlohmann::json::parse(slurp(paths.sweep_summary()));
  // 2 t_ratios + 1 eta + 0 extra metrics (waveform-mse is the main metric).
  CHECK(summary.at("family_size_m").get<int>() == 3);
  for (const auto& [name, cell] : summary.at("cells").items()) {
    CHECK(cell.at("brackets_ok").get<bool>());
    CHECK(cell.contains("holm_reject_auc_half"));
    CHECK(cell.at("auc").get<double>() >= 0.0);
    const std::string scores = run + "/sweep/" + name + "/scores.jsonl";
    CHECK(fs::exists(scores));
  }
}

TEST_CASE("delta vs best baseline follows the subtraction convention") {
  CHECK(pipeline::delta_vs_best(0.20, {0.12, 0.08}) ==
        doctest::Approx(0.08).epsilon(1e-12));
  CHECK(pipeline::delta_vs_best(0.61, {0.58}) ==
        doctest::Approx(0.03).epsilon(1e-12));
}

#ifdef LSAP_CLI_PATH
TEST_CASE("CLI smoke: gen-data, exit codes") {
  TempDir dir("lsap_cli_smoke");
  const std::string run = (dir.path / "run").string();
  const std::string cli = LSAP_CLI_PATH;
  auto shell = [&](const std::string& args) {
    return std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  };
  CHECK(WEXITSTATUS(shell("gen-data --run-dir " + run +
                          " --set corpus.clips_per_split=2"
                          " --set corpus.clip_len=64")) == 0);
  CHECK(fs::exists(run + "/corpus/manifest.json"));
  // Config error exit code 2.
  CHECK(WEXITSTATUS(shell("gen-data --set corpus.clips_per_split=0")) == 2);
  // Artifact error exit code 3 (attack without upstream artifacts).
  CHECK(WEXITSTATUS(shell("attack --run-dir " + (dir.path / "nope").string())) ==
        3);
}
#endif
