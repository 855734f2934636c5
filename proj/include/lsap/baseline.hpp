#pragma once

#include <string>

#include "lsap/attack.hpp"

namespace lsap {

enum class BaselineKind { kLossAtT, kEndpointReconstruction, kTrajectory };

BaselineKind baseline_kind_from_string(const std::string& s);
std::string to_string(BaselineKind k);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kLossAtT;
  TimestepSpec timestep{0, 0.6};
  int traj_offset = 0;  // t'; 0 = default floor(t/2)
  NormKind traj_norm = NormKind::kL2;
  int repetitions = 1;  // set by compute parity

  void validate() const;
};

/// -mean over repetitions of the per-coordinate denoising MSE at t (higher
/// score = more likely member, matching C_adv's orientation).
double loss_score(const ProbeContext& ctx, const Clip& clip, int t, int reps,
                  ComputeLedger* ledger);

/// -D(x0, R_t(x_t)) with the context's metric, averaged over repetitions.
double endpoint_score(const ProbeContext& ctx, const Clip& clip, int t,
                      int reps, ComputeLedger* ledger);

/// Trajectory baseline: ground truth x_{t-t'} from the fixed forward eps vs
/// DDIM prediction from x_t down to t-t'; score = -||gt - pred||_p.
double trajectory_score(const ProbeContext& ctx, const Clip& clip, int t,
                        int t_prime, NormKind p, int reps,
                        ComputeLedger* ledger);

/// Repetition count bringing reps*unit_cost within +-5% of the target;
/// errors when no count can reach the band.
int match_compute(double target_units, double unit_cost);

/// Deterministic per-repetition cost of one baseline evaluation, in the same
/// forward-call units as ComputeLedger::call_units().
double baseline_unit_cost(const ProbeContext& ctx, const BaselineConfig& cfg);

ScoreRecord baseline_score_sample(const ProbeContext& ctx, const Clip& clip,
                                  const BaselineConfig& cfg);

}  // namespace lsap
