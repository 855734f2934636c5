#include "lsap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"
#include "lsap/parallel.hpp"
#include "lsap/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lsap::pipeline {

namespace {

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ArtifactError("cannot open for write: " + path);
  f << text;
  if (!f) throw ArtifactError("write failed: " + path);
}

json read_json(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f)
    throw ArtifactError(std::string(what) + " missing: " + path +
                        " (run the upstream stage first)");
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded())
    throw ArtifactError(std::string(what) + " malformed: " + path);
  return j;
}

std::uint64_t stage_seed(const ExperimentConfig& cfg, const char* stage) {
  return SeedPolicy{cfg.master_seed}.derive(stage, 0, "stage");
}

std::vector<Clip> load_scored_clips(const ExperimentConfig& cfg,
                                    const Paths& paths) {
  Manifest manifest = load_manifest(paths.manifest());
  verify_splits(manifest);
  std::vector<Clip> clips =
      load_split(manifest, paths.corpus_dir(), Split::kMember);
  std::vector<Clip> evals =
      load_split(manifest, paths.corpus_dir(), Split::kEvalNonmember);
  clips.insert(clips.end(), std::make_move_iterator(evals.begin()),
               std::make_move_iterator(evals.end()));
  (void)cfg;
  return clips;
}

json ledger_json(const ComputeLedger& l) {
  return {{"reverse_passes", l.reverse_passes},
          {"reverse_passes_executed", l.reverse_passes_executed},
          {"precheck_reverse_passes", l.precheck_reverse_passes},
          {"net_calls", l.net_calls},
          {"net_calls_backward", l.net_calls_backward},
          {"decoder_calls", l.decoder_calls},
          {"metric_evals", l.metric_evals}};
}

ComputeLedger ledger_from_json(const json& j) {
  ComputeLedger l;
  l.reverse_passes = j.at("reverse_passes").get<double>();
  l.reverse_passes_executed = j.at("reverse_passes_executed").get<double>();
  l.precheck_reverse_passes = j.at("precheck_reverse_passes").get<double>();
  l.net_calls = j.at("net_calls").get<std::int64_t>();
  l.net_calls_backward = j.at("net_calls_backward").get<std::int64_t>();
  l.decoder_calls = j.at("decoder_calls").get<std::int64_t>();
  l.metric_evals = j.at("metric_evals").get<std::int64_t>();
  return l;
}

void append_timing(const Paths& paths, const std::string& stage,
                   double wall_seconds, double per_sample_mean) {
  json j = json::object();
  if (fs::exists(paths.timings()))
    j = read_json(paths.timings(), "timings");
  j[stage] = {{"wall_seconds", wall_seconds},
              {"per_sample_mean_seconds", per_sample_mean}};
  write_text(paths.timings(), j.dump(2) + "\n");
}

}  // namespace

ProbeSetup make_probe_setup(const ExperimentConfig& cfg,
                            const TimestepSpec& timestep, MetricKind metric) {
  Paths paths{cfg.out_dir};
  ProbeSetup setup;
  setup.schedule = cfg.make_schedule();
  DenoiserParams params = load_checkpoint(paths.checkpoint());
  setup.denoiser =
      std::make_unique<MlpDenoiser>(std::move(params), setup.schedule.T);
  if (cfg.mode == ProbeMode::kLatent) {
    setup.codec =
        std::make_unique<LatentCodec>(cfg.corpus.clip_len, cfg.latent_dim());
    if (setup.denoiser->dim() != setup.codec->m())
      throw ArtifactError(
          "checkpoint dimension does not match the latent codec");
  } else if (setup.denoiser->dim() != cfg.corpus.clip_len) {
    throw ArtifactError("checkpoint dimension does not match clip length");
  }
  setup.metric =
      make_metric(metric, cfg.corpus.clip_len, cfg.corpus.sample_rate);
  for (MetricKind k : {MetricKind::kWaveformMse, MetricKind::kLogMelMse,
                       MetricKind::kMrStft}) {
    setup.report_metrics.push_back(
        make_metric(k, cfg.corpus.clip_len, cfg.corpus.sample_rate));
  }

  const int t = timestep.resolve(setup.schedule);
  setup.ctx.schedule = &setup.schedule;
  setup.ctx.denoiser = setup.denoiser.get();
  setup.ctx.metric = setup.metric.get();
  for (const auto& m : setup.report_metrics)
    setup.ctx.report_metrics.push_back(m.get());
  setup.ctx.reverse.stride = cfg.resolve_stride(t);
  setup.ctx.reverse.checkpointing = cfg.checkpointing;
  setup.ctx.mode = cfg.mode;
  setup.ctx.codec = setup.codec.get();
  setup.ctx.seeds = SeedPolicy{cfg.master_seed};
  return setup;
}

// ---------------------------------------------------------------------------
// Score persistence

void persist_scores(const std::vector<ScoreRecord>& records,
                    const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ArtifactError("cannot open for write: " + path);
  for (const auto& r : records) {
    json j{{"schema_version", 1},
           {"sample_id", r.sample_id},
           {"split", r.split},
           {"attack", r.attack},
           {"score", r.score},
           {"seed_reps", r.seed_reps},
           {"timestep", r.timestep},
           {"bracket", {r.bracket_lo, r.bracket_hi}},
           {"saturated_low", r.saturated_low},
           {"counters", ledger_json(r.counters)},
           {"secondary", r.secondary}};
    f << j.dump() << "\n";
  }
  if (!f) throw ArtifactError("write failed: " + path);
}

std::vector<ScoreRecord> load_scores(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArtifactError("score file missing: " + path);
  std::vector<ScoreRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ArtifactError("malformed score record at " + path + ":" +
                          std::to_string(lineno));
    try {
      if (j.at("schema_version").get<int>() != 1)
        throw ArtifactError("unsupported score schema version at " + path +
                            ":" + std::to_string(lineno));
      ScoreRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.split = j.at("split").get<std::string>();
      r.attack = j.at("attack").get<std::string>();
      r.score = j.at("score").get<double>();
      r.seed_reps = j.at("seed_reps").get<int>();
      r.timestep = j.at("timestep").get<int>();
      r.bracket_lo = j.at("bracket").at(0).get<double>();
      r.bracket_hi = j.at("bracket").at(1).get<double>();
      r.saturated_low = j.at("saturated_low").get<bool>();
      r.counters = ledger_from_json(j.at("counters"));
      for (const auto& [k, v] : j.at("secondary").items())
        r.secondary[k] = v.get<double>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ArtifactError("bad score record at " + path + ":" +
                          std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

void gen_data(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  CorpusConfig corpus = cfg.corpus;
  corpus.master_seed = cfg.master_seed;
  generate_corpus(corpus, paths.corpus_dir());
  write_text(paths.run_dir + "/config.json", cfg.to_json_string() + "\n");
}

void train_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  Manifest manifest = load_manifest(paths.manifest());
  std::vector<Clip> members =
      load_split(manifest, paths.corpus_dir(), Split::kMember);
  NoiseSchedule schedule = cfg.make_schedule();

  std::vector<Clip> train_clips = members;
  std::size_t model_dim = cfg.corpus.clip_len;
  std::unique_ptr<LatentCodec> codec;
  if (cfg.mode == ProbeMode::kLatent) {
    codec = std::make_unique<LatentCodec>(cfg.corpus.clip_len, cfg.latent_dim());
    model_dim = codec->m();
    for (auto& c : train_clips) c.samples = codec->encode(c.samples);
  }

  MlpArch arch;
  arch.input_dim = model_dim;
  arch.hidden = cfg.hidden;
  arch.temb_dim = cfg.temb_dim;
  MlpDenoiser model(DenoiserParams::init(arch, stage_seed(cfg, "init")),
                    schedule.T);

  TrainConfig tc;
  tc.steps = cfg.train_steps;
  tc.batch = cfg.train_batch;
  tc.lr = cfg.train_lr;
  tc.momentum = cfg.train_momentum;
  tc.seed = stage_seed(cfg, "train");
  TrainResult result = train_denoiser(model, train_clips, schedule, tc);

  fs::create_directories(paths.checkpoints_dir());
  save_checkpoint(model.params(), paths.checkpoint());
  json log{{"loss_trace", result.loss_trace},
           {"config", json::parse(cfg.to_json_string())}};
  write_text(paths.train_log(), log.dump(2) + "\n");
}

void calibrate_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  Manifest manifest = load_manifest(paths.manifest());
  std::vector<Clip> dev =
      load_split(manifest, paths.corpus_dir(), Split::kDevNonmember);
  ProbeSetup setup =
      make_probe_setup(cfg, cfg.calibration.timestep, cfg.calibration.metric);
  CalibrationResult result = calibrate_tau(dev, setup.ctx, cfg.calibration);

  json j{{"tau", result.tau},
         {"valid", result.valid},
         {"sample_count", result.sample_count},
         {"direction_count", result.direction_count},
         {"percentile", result.percentile},
         {"percentile_method", "nearest-rank"},
         {"eta_ref", result.eta_ref},
         {"values", result.values},
         {"fingerprint", result.fingerprint},
         {"calibration_config", json::parse(result.config_echo)},
         {"config", json::parse(cfg.to_json_string())}};
  write_text(paths.calibration(), j.dump(2) + "\n");
}

namespace {

double load_calibrated_tau(const Paths& paths, const ProbeContext& ctx,
                           const TimestepSpec& timestep) {
  json j = read_json(paths.calibration(), "calibration");
  if (!j.at("valid").get<bool>())
    throw ArtifactError("calibration is flagged invalid (tau = " +
                        std::to_string(j.at("tau").get<double>()) + ")");
  const std::string expected = probe_fingerprint(ctx, timestep);
  const std::string actual = j.at("fingerprint").get<std::string>();
  if (expected != actual)
    throw ArtifactError(
        "calibration fingerprint mismatch (calibration " + actual +
        " vs attack " + expected +
        "): metric, timestep, schedule or probe mode changed; recalibrate");
  return j.at("tau").get<double>();
}

}  // namespace

void attack_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Clip> clips = load_scored_clips(cfg, paths);
  ProbeSetup setup =
      make_probe_setup(cfg, cfg.attack.timestep, cfg.attack.metric);
  AttackConfig attack = cfg.attack;
  attack.tau = load_calibrated_tau(paths, setup.ctx, attack.timestep);

  std::vector<ScoreRecord> records(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    records[i] = score_sample(setup.ctx, clips[i], attack);
  });
  persist_scores(records, paths.attack_scores());

  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  double mean_sample = 0.0;
  for (const auto& r : records) mean_sample += r.counters.wall_seconds;
  append_timing(paths, "attack", wall,
                records.empty() ? 0.0 : mean_sample / records.size());
}

void baseline_stage(const ExperimentConfig& cfg, BaselineKind kind) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Clip> clips = load_scored_clips(cfg, paths);
  // Parity targets come from the attack's own per-sample ledgers.
  std::vector<ScoreRecord> attack_records = load_scores(paths.attack_scores());
  std::map<std::string, double> target_units;
  for (const auto& r : attack_records)
    target_units[r.sample_id] = r.counters.call_units();

  ProbeSetup setup =
      make_probe_setup(cfg, cfg.attack.timestep, cfg.attack.metric);
  BaselineConfig bcfg;
  bcfg.kind = kind;
  bcfg.timestep = cfg.attack.timestep;
  bcfg.traj_offset = cfg.traj_offset;
  bcfg.traj_norm = cfg.traj_norm;
  const double unit = baseline_unit_cost(setup.ctx, bcfg);

  std::vector<ScoreRecord> records(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    auto it = target_units.find(clips[i].id);
    if (it == target_units.end())
      throw ArtifactError("no attack record for sample " + clips[i].id +
                          "; rerun the attack stage");
    BaselineConfig local = bcfg;
    local.repetitions = match_compute(it->second, unit);
    records[i] = baseline_score_sample(setup.ctx, clips[i], local);
    records[i].secondary["parity-target-call-units"] = it->second;
    records[i].secondary["parity-achieved-call-units"] =
        local.repetitions * unit;
  });
  persist_scores(records, paths.baseline_scores(to_string(kind)));

  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  double mean_sample = 0.0;
  for (const auto& r : records) mean_sample += r.counters.wall_seconds;
  append_timing(paths, "baseline-" + to_string(kind), wall,
                records.empty() ? 0.0 : mean_sample / records.size());
}

void baselines_stage(const ExperimentConfig& cfg) {
  for (BaselineKind kind : cfg.baseline_kinds) baseline_stage(cfg, kind);
}

namespace {

json evaluate_records(const ExperimentConfig& cfg,
                      const std::vector<ScoreRecord>& records) {
  if (records.empty()) throw ArtifactError("no records to evaluate");
  BinaryScores scores = split_scores(records);
  json out;
  out["n_members"] = scores.members.size();
  out["n_nonmembers"] = scores.nonmembers.size();

  IntervalEstimate auc_ci = delong_ci(scores, cfg.ci_level);
  out["auc"] = {{"point", auc_ci.point},
                {"lower", auc_ci.lower},
                {"upper", auc_ci.upper},
                {"method", auc_ci.method},
                {"level", auc_ci.level},
                {"degenerate", auc_ci.degenerate}};
  out["delong_p_greater_half"] = delong_p_greater_half(scores);

  json tprs = json::object();
  for (std::size_t i = 0; i < cfg.fpr_targets.size(); ++i) {
    const double target = cfg.fpr_targets[i];
    auto stat = [target](const BinaryScores& s) {
      return tpr_at_fpr(s, target);
    };
    IntervalEstimate ci = bootstrap_ci(
        scores, stat, cfg.bootstrap_resamples,
        SeedPolicy{cfg.master_seed}.derive("bootstrap", i, "evaluate"),
        cfg.ci_level);
    char key[32];
    std::snprintf(key, sizeof(key), "%g", target);
    tprs[key] = {{"point", ci.point},
                 {"lower", ci.lower},
                 {"upper", ci.upper},
                 {"method", ci.method},
                 {"resamples", cfg.bootstrap_resamples},
                 {"level", ci.level}};
  }
  out["tpr_at_fpr"] = tprs;

  RocCurve curve = roc_curve(scores);
  out["roc"] = {{"fpr", curve.fpr}, {"tpr", curve.tpr}};

  int saturated = 0;
  ComputeLedger total;
  for (const auto& r : records) {
    saturated += r.saturated_low ? 1 : 0;
    total.merge(r.counters);
  }
  out["saturation_rate"] = static_cast<double>(saturated) / records.size();
  out["mean_counters_per_sample"] = {
      {"reverse_passes", total.reverse_passes / records.size()},
      {"reverse_passes_executed",
       total.reverse_passes_executed / records.size()},
      {"precheck_reverse_passes",
       total.precheck_reverse_passes / records.size()},
      {"net_calls", static_cast<double>(total.net_calls) / records.size()},
      {"net_calls_backward",
       static_cast<double>(total.net_calls_backward) / records.size()},
      {"decoder_calls",
       static_cast<double>(total.decoder_calls) / records.size()},
      {"metric_evals",
       static_cast<double>(total.metric_evals) / records.size()}};
  return out;
}

}  // namespace

void evaluate_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);
  json out;
  out["config"] = json::parse(cfg.to_json_string());
  json per_attack = json::object();

  if (!fs::exists(paths.scores_dir()))
    throw ArtifactError("no scores directory under " + cfg.out_dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(paths.scores_dir()))
    if (entry.path().extension() == ".jsonl")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ArtifactError("no score files to evaluate");

  for (const std::string& file : files) {
    std::vector<ScoreRecord> records = load_scores(file);
    if (records.empty())
      throw ArtifactError("no records in score file: " + file);
    per_attack[records.front().attack] = evaluate_records(cfg, records);
  }
  out["attacks"] = per_attack;
  write_text(paths.evaluation(), out.dump(2) + "\n");
}

double delta_vs_best(double ours, const std::vector<double>& baselines) {
  if (baselines.empty()) return ours;
  return ours - *std::max_element(baselines.begin(), baselines.end());
}

void report_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  json eval = read_json(paths.evaluation(), "evaluation");
  const json& attacks = eval.at("attacks");

  std::string ours_name =
      cfg.mode == ProbeMode::kLatent ? "lsa-probe-latent" : "lsa-probe";
  if (!attacks.contains(ours_name))
    throw ArtifactError("evaluation has no '" + ours_name + "' entry");

  json report;
  report["config_fingerprint"] = eval.at("config");
  json table = json::array();
  std::vector<double> baseline_aucs, baseline_tpr1;
  for (const auto& [name, entry] : attacks.items()) {
    json row{{"attack", name},
             {"auc", entry.at("auc").at("point").get<double>()},
             {"auc_ci",
              {entry.at("auc").at("lower").get<double>(),
               entry.at("auc").at("upper").get<double>()}},
             {"saturation_rate", entry.at("saturation_rate").get<double>()}};
    if (entry.at("tpr_at_fpr").contains("0.01")) {
      row["tpr_at_1pct"] =
          entry.at("tpr_at_fpr").at("0.01").at("point").get<double>();
    }
    if (entry.at("tpr_at_fpr").contains("0.001")) {
      row["tpr_at_0.1pct"] =
          entry.at("tpr_at_fpr").at("0.001").at("point").get<double>();
    }
    table.push_back(row);
    if (name != ours_name) {
      baseline_aucs.push_back(entry.at("auc").at("point").get<double>());
      if (entry.at("tpr_at_fpr").contains("0.01"))
        baseline_tpr1.push_back(
            entry.at("tpr_at_fpr").at("0.01").at("point").get<double>());
    }
  }
  report["table"] = table;
  const json& ours = attacks.at(ours_name);
  report["delta_auc_vs_best_baseline"] =
      delta_vs_best(ours.at("auc").at("point").get<double>(), baseline_aucs);
  if (ours.at("tpr_at_fpr").contains("0.01"))
    report["delta_tpr1_vs_best_baseline"] = delta_vs_best(
        ours.at("tpr_at_fpr").at("0.01").at("point").get<double>(),
        baseline_tpr1);
  report["generated_at"] = static_cast<std::int64_t>(std::time(nullptr));

  write_text(paths.report(), report.dump(2) + "\n");

  // Human-readable table.
  std::printf("%-28s %8s %8s %8s %6s\n", "attack", "AUC", "TPR@1%", "TPR@.1%",
              "sat");
  for (const auto& row : table) {
    std::printf("%-28s %8.4f %8.4f %8.4f %6.3f\n",
                row.at("attack").get<std::string>().c_str(),
                row.at("auc").get<double>(),
                row.value("tpr_at_1pct", 0.0),
                row.value("tpr_at_0.1pct", 0.0),
                row.at("saturation_rate").get<double>());
  }
  std::printf("delta AUC vs best baseline: %+.4f\n",
              report.at("delta_auc_vs_best_baseline").get<double>());
  if (report.contains("delta_tpr1_vs_best_baseline"))
    std::printf("delta TPR@1%% vs best baseline: %+.4f\n",
                report.at("delta_tpr1_vs_best_baseline").get<double>());
}

void sweep_stage(const ExperimentConfig& cfg) {
  Paths paths{cfg.out_dir};
  set_threads(cfg.threads);

  struct Cell {
    std::string name;
    ExperimentConfig cfg;
  };
  std::vector<Cell> cells;
  auto cell_name = [](const std::string& kind, const std::string& v) {
    return kind + "-" + v;
  };
  for (double tr : cfg.sweep_t_ratios) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", tr);
    ExperimentConfig c = cfg;
    c.attack.timestep = TimestepSpec{0, tr};
    c.calibration.timestep = c.attack.timestep;
    cells.push_back({cell_name("t_ratio", buf), std::move(c)});
  }
  for (double em : cfg.sweep_eta_maxes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", em);
    ExperimentConfig c = cfg;
    c.attack.eta_max = em;
    cells.push_back({cell_name("eta_max", buf), std::move(c)});
  }
  for (MetricKind mk : cfg.sweep_metrics) {
    if (mk == cfg.attack.metric) continue;  // covered by the main run
    ExperimentConfig c = cfg;
    c.attack.metric = mk;
    c.calibration.metric = mk;
    cells.push_back({cell_name("metric", to_string(mk)), std::move(c)});
  }

  json summary;
  summary["config"] = json::parse(cfg.to_json_string());
  json cell_results = json::object();
  std::vector<double> p_values;
  std::vector<std::string> cell_names;

  Manifest manifest = load_manifest(paths.manifest());
  std::vector<Clip> dev =
      load_split(manifest, paths.corpus_dir(), Split::kDevNonmember);
  std::vector<Clip> clips = load_scored_clips(cfg, paths);

  for (const Cell& cell : cells) {
    ProbeSetup setup = make_probe_setup(cell.cfg, cell.cfg.attack.timestep,
                                        cell.cfg.attack.metric);
    CalibrationResult calib =
        calibrate_tau(dev, setup.ctx, cell.cfg.calibration);
    if (!calib.valid)
      throw ArtifactError("sweep cell " + cell.name +
                          ": invalid calibration (tau = 0)");
    AttackConfig attack = cell.cfg.attack;
    attack.tau = calib.tau;

    std::vector<ScoreRecord> records(clips.size());
    parallel_for(clips.size(), [&](std::size_t i) {
      records[i] = score_sample(setup.ctx, clips[i], attack);
    });

    const std::string cell_dir = paths.sweep_dir() + "/" + cell.name;
    persist_scores(records, cell_dir + "/scores.jsonl");

    // Bracket sanity: every sample carries a valid final bisection bracket.
    const double width_bound =
        attack.eta_max * std::pow(2.0, -attack.bisection_steps) + 1e-12;
    bool brackets_ok = true;
    for (const auto& r : records) {
      const bool ok =
          r.bracket_lo <= r.bracket_hi + 1e-15 &&
          (r.saturated_low || r.bracket_hi - r.bracket_lo <= width_bound);
      brackets_ok = brackets_ok && ok;
    }

    BinaryScores scores = split_scores(records);
    IntervalEstimate ci = delong_ci(scores, cell.cfg.ci_level);
    double p = delong_p_greater_half(scores);
    int saturated = 0;
    for (const auto& r : records) saturated += r.saturated_low ? 1 : 0;

    cell_results[cell.name] = {
        {"auc", ci.point},
        {"auc_ci", {ci.lower, ci.upper}},
        {"tau", calib.tau},
        {"eta_max", attack.eta_max},
        {"metric", to_string(attack.metric)},
        {"timestep", records.front().timestep},
        {"p_greater_half", p},
        {"saturation_rate",
         static_cast<double>(saturated) / records.size()},
        {"brackets_ok", brackets_ok}};
    p_values.push_back(p);
    cell_names.push_back(cell.name);
  }

  // Family-wise control across all sweep cells (m = cell count, recorded).
  std::vector<bool> rejected = holm_bonferroni(p_values, cfg.alpha);
  for (std::size_t i = 0; i < cell_names.size(); ++i)
    cell_results[cell_names[i]]["holm_reject_auc_half"] =
        static_cast<bool>(rejected[i]);
  summary["family_size_m"] = cell_names.size();
  summary["alpha"] = cfg.alpha;
  summary["cells"] = cell_results;
  write_text(paths.sweep_summary(), summary.dump(2) + "\n");
}

}  // namespace lsap::pipeline
