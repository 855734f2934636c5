#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsap/config.hpp"
#include "lsap/records.hpp"

namespace lsap::pipeline {

/// Fixed run-directory layout.
struct Paths {
  std::string run_dir;
  std::string corpus_dir() const { return run_dir + "/corpus"; }
  std::string manifest() const { return corpus_dir() + "/manifest.json"; }
  std::string checkpoints_dir() const { return run_dir + "/checkpoints"; }
  std::string checkpoint() const {
    return checkpoints_dir() + "/denoiser.lsap";
  }
  std::string train_log() const { return checkpoints_dir() + "/train_log.json"; }
  std::string calibration_dir() const { return run_dir + "/calibration"; }
  std::string calibration() const {
    return calibration_dir() + "/calibration.json";
  }
  std::string scores_dir() const { return run_dir + "/scores"; }
  std::string attack_scores() const {
    return scores_dir() + "/lsa-probe.jsonl";
  }
  std::string baseline_scores(const std::string& kind) const {
    return scores_dir() + "/baseline-" + kind + ".jsonl";
  }
  std::string reports_dir() const { return run_dir + "/reports"; }
  std::string evaluation() const { return reports_dir() + "/evaluation.json"; }
  std::string report() const { return reports_dir() + "/report.json"; }
  std::string timings() const { return reports_dir() + "/timings.json"; }
  std::string sweep_dir() const { return run_dir + "/sweep"; }
  std::string sweep_summary() const {
    return sweep_dir() + "/sweep_summary.json";
  }
};

/// Owns everything a ProbeContext points at.
struct ProbeSetup {
  NoiseSchedule schedule;
  std::unique_ptr<MlpDenoiser> denoiser;
  std::unique_ptr<LatentCodec> codec;
  std::unique_ptr<Metric> metric;
  std::vector<std::unique_ptr<Metric>> report_metrics;
  ProbeContext ctx;
};

/// Builds the probe context for the given attack timestep/metric, loading
/// the trained checkpoint.
ProbeSetup make_probe_setup(const ExperimentConfig& cfg,
                            const TimestepSpec& timestep, MetricKind metric);

// Score-file persistence: JSON lines, one record per line, schema version 1.
// Round-trips doubles losslessly (shortest round-trip encoding). Wall-clock
// times are deliberately not part of the schema so reruns are byte-identical;
// they are reported via the timings sidecar.
void persist_scores(const std::vector<ScoreRecord>& records,
                    const std::string& path);
std::vector<ScoreRecord> load_scores(const std::string& path);

// Stages. Each writes versioned artifacts under the run directory and
// refuses to run when upstream artifacts are missing or carry a mismatched
// fingerprint.
void gen_data(const ExperimentConfig& cfg);
void train_stage(const ExperimentConfig& cfg);
void calibrate_stage(const ExperimentConfig& cfg);
void attack_stage(const ExperimentConfig& cfg);
void baseline_stage(const ExperimentConfig& cfg, BaselineKind kind);
void baselines_stage(const ExperimentConfig& cfg);
void evaluate_stage(const ExperimentConfig& cfg);
void report_stage(const ExperimentConfig& cfg);
void sweep_stage(const ExperimentConfig& cfg);

/// Table-1 style difference: ours minus the best baseline.
double delta_vs_best(double ours, const std::vector<double>& baselines);

}  // namespace lsap::pipeline
