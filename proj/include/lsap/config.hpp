#pragma once

#include <string>
#include <vector>

#include "lsap/attack.hpp"
#include "lsap/baseline.hpp"
#include "lsap/calibrate.hpp"
#include "lsap/corpus.hpp"
#include "lsap/denoiser.hpp"

namespace lsap {

/// Fully-resolved experiment configuration. Parsed from a flat
/// section/key=value text document with CLI overrides; every field has a
/// default (see default_config_text()). The resolved form is embedded in
/// every artifact for provenance.
struct ExperimentConfig {
  // [run]
  std::uint64_t master_seed = 1234;
  std::string out_dir = "runs/default";
  int threads = 0;

  // [corpus]
  CorpusConfig corpus;

  // [schedule]
  ScheduleKind schedule_kind = ScheduleKind::kLinear;
  int schedule_T = 100;
  double beta_min = 1e-4;
  double beta_max = 0.02;

  // [denoiser]
  std::size_t hidden = 128;
  std::size_t temb_dim = 16;

  // [train]
  int train_steps = 3000;
  int train_batch = 16;
  double train_lr = 1e-3;
  double train_momentum = 0.9;

  // [probe]
  ProbeMode mode = ProbeMode::kWaveform;
  int stride = 0;  // 0 = auto: largest stride keeping <= 25 calls per pass
  bool checkpointing = false;
  std::size_t codec_latent_dim = 0;  // 0 = clip_len / 4 in latent mode

  // [attack]
  AttackConfig attack;

  // [calibration]
  CalibrationConfig calibration;

  // [baseline]
  std::vector<BaselineKind> baseline_kinds = {
      BaselineKind::kLossAtT, BaselineKind::kEndpointReconstruction,
      BaselineKind::kTrajectory};
  int traj_offset = 0;
  NormKind traj_norm = NormKind::kL2;

  // [evaluation]
  std::vector<double> fpr_targets = {0.01, 0.001};
  int bootstrap_resamples = 10000;
  double ci_level = 0.95;
  double alpha = 0.05;

  // [sweep]
  std::vector<double> sweep_t_ratios = {0.2, 0.4, 0.6, 0.8};
  std::vector<double> sweep_eta_maxes = {0.05, 0.1, 0.2, 0.4, 0.8};
  std::vector<MetricKind> sweep_metrics = {MetricKind::kWaveformMse,
                                           MetricKind::kLogMelMse,
                                           MetricKind::kMrStft};

  static ExperimentConfig defaults();
  /// Parse the INI-style text over the defaults; overrides are
  /// "section.key=value" strings applied last. Unknown keys are errors.
  static ExperimentConfig from_text(const std::string& text,
                                    const std::vector<std::string>& overrides);
  static ExperimentConfig from_file(const std::string& path,
                                    const std::vector<std::string>& overrides);

  NoiseSchedule make_schedule() const;
  int resolve_stride(int t) const;
  std::size_t latent_dim() const;
  void validate() const;

  /// Full resolved config as JSON (embedded in artifacts).
  std::string to_json_string() const;
};

/// The documented default configuration (also what `--help` points at).
std::string default_config_text();

}  // namespace lsap
