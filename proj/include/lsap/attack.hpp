#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lsap/distance.hpp"
#include "lsap/records.hpp"
#include "lsap/reverse.hpp"
#include "lsap/rng.hpp"

namespace lsap {

enum class NormKind { kL2, kLinf };

NormKind norm_from_string(const std::string& s);
std::string to_string(NormKind n);

struct AttackConfig {
  NormKind norm = NormKind::kL2;
  double eta_max = 0.8;
  int pgd_steps = 12;        // K
  int restarts = 2;          // r
  double step_scale = 0.25;  // beta: alpha = beta * eta / K
  double momentum = 0.9;
  int bisection_steps = 10;  // B
  bool early_stop = true;
  double early_stop_rel = 0.01;
  int early_stop_patience = 3;
  double grad_norm_floor = 1e-6;
  int seed_reps = 1;  // S forward-noise repetitions averaged per sample
  double tau = 0.0;   // degradation threshold from calibration
  bool precheck_at_eta_max = true;
  TimestepSpec timestep{0, 0.6};
  MetricKind metric = MetricKind::kMrStft;

  void validate() const;
};

enum class ProbeMode { kWaveform, kLatent };

ProbeMode probe_mode_from_string(const std::string& s);
std::string to_string(ProbeMode m);

/// Everything an attack worker needs, shared read-only across samples.
struct ProbeContext {
  const NoiseSchedule* schedule = nullptr;
  const Denoiser* denoiser = nullptr;  // waveform-dim or latent-dim
  const Metric* metric = nullptr;      // primary distance on waveforms
  std::vector<const Metric*> report_metrics;  // secondary distances logged
  ReverseConfig reverse;
  ProbeMode mode = ProbeMode::kWaveform;
  const LatentCodec* codec = nullptr;  // latent mode only
  SeedPolicy seeds;

  std::size_t delta_dim() const;
  void validate() const;
};

/// x_t + sigma_t * delta (Eq. of the time-normalized injection).
Array inject(const Array& x_t, const Array& delta, const NoiseSchedule& s,
             int t);

/// Projection onto the l_p ball of radius eta: rescale for p=2, elementwise
/// clip for p=inf. Idempotent.
Array project(const Array& z, NormKind p, double eta);

enum class PgdTermination { kMaxSteps, kEarlyStopImprovement, kGradientFloor };

const char* to_string(PgdTermination t);

struct PGDResult {
  double best_degradation = 0.0;
  Array best_delta;
  Array best_perturbed_output;  // waveform at the best delta
  std::vector<double> trace;    // degradation at delta^(0..K)
  PgdTermination termination = PgdTermination::kMaxSteps;
  int steps_run = 0;
  int aborted_restarts = 0;
  ComputeLedger ledger;  // perturbed passes + metric evals only
};

/// One (x0, t, repetition) attack instance: fixed forward eps, cached clean
/// reverse output. The clean pass is executed exactly once here.
struct ProbeInstance {
  std::string id;
  int t = 0;
  Array x0;
  Array eps;        // delta_dim
  Array x_t;        // waveform mode only
  Array clean_out;  // R_t output on waveforms
  ComputeLedger clean_ledger;
};

ProbeInstance make_probe_instance(const ProbeContext& ctx, const Clip& clip,
                                  int t, int rep);

/// Fixed-budget maximal degradation (objective O1): r restarts of K-step
/// projected gradient ascent with momentum, Gaussian init projected to the
/// ball, step alpha = beta*eta/K, normalized-gradient (l2) or sign (linf)
/// steps, early stop on relative improvement < early_stop_rel for
/// early_stop_patience consecutive steps or gradient norm under
/// grad_norm_floor. Returns the best restart. A non-finite gradient aborts
/// only the restart that produced it.
PGDResult pgd_max_degradation(const ProbeContext& ctx,
                              const ProbeInstance& inst, double eta,
                              const AttackConfig& cfg,
                              std::uint64_t salt_rep = 0,
                              std::uint64_t salt_level = 0);

struct LevelSummary {
  double eta = 0.0;
  double best_degradation = 0.0;
  int steps_run = 0;
  PgdTermination termination = PgdTermination::kMaxSteps;
  bool crossed = false;
};

struct AdvCostResult {
  double c_adv = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool saturated_low = false;
  std::vector<LevelSummary> levels;
  ComputeLedger ledger;
  Array clean_out;
  Array final_perturbed_out;  // output at the returned budget
};

/// Bisection core shared by the real attack and the oracle tests: probe(eta,
/// level) reports the achieved degradation; the bracket halves B times.
struct BisectionOutcome {
  double c_adv = 0.0, lo = 0.0, hi = 0.0;
  bool crossed = false;
  std::vector<std::pair<double, double>> levels;  // (eta, degradation)
};
BisectionOutcome bisect_budget(
    const std::function<double(double eta, int level)>& probe, double eta_max,
    double tau, int bisection_steps);

/// Adversarial cost (objective O2): outer bisection on [0, eta_max] with
/// inner PGD; returns C_adv ~ u with the final bracket. reverse_passes is
/// charged (K_effective+1)+1 per level; the executed-pass and pre-check
/// counters are kept alongside.
AdvCostResult adversarial_cost(const ProbeContext& ctx, const Clip& clip,
                               const AttackConfig& cfg, int rep = 0);

/// Averages C_adv over cfg.seed_reps repetitions and emits the ScoreRecord
/// with counters and all secondary-metric degradations at the returned
/// budget. Higher score = more likely member.
ScoreRecord score_sample(const ProbeContext& ctx, const Clip& clip,
                         const AttackConfig& cfg);

}  // namespace lsap
