#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace lsap {

/// Per-sample compute accounting.
///
/// reverse_passes follows the (K+2)B charging convention: each bisection
/// level is charged its perturbed passes plus one clean reference pass, even
/// though the implementation computes the clean reverse output once per
/// (x0, t) and reuses it. reverse_passes_executed counts passes actually run
/// (clean pass once, plus every perturbed pass including any saturation
/// pre-check); pre-check charges are reported separately so either
/// convention can be read off.
struct ComputeLedger {
  double reverse_passes = 0.0;
  double reverse_passes_executed = 0.0;
  double precheck_reverse_passes = 0.0;
  std::int64_t net_calls = 0;           // forward denoiser invocations
  std::int64_t net_calls_backward = 0;  // denoiser subgraphs swept in backward
  std::int64_t decoder_calls = 0;
  std::int64_t metric_evals = 0;
  double wall_seconds = 0.0;

  void merge(const ComputeLedger& o) {
    reverse_passes += o.reverse_passes;
    reverse_passes_executed += o.reverse_passes_executed;
    precheck_reverse_passes += o.precheck_reverse_passes;
    net_calls += o.net_calls;
    net_calls_backward += o.net_calls_backward;
    decoder_calls += o.decoder_calls;
    metric_evals += o.metric_evals;
    wall_seconds += o.wall_seconds;
  }

  /// Total executed model work in forward-call units; the deterministic
  /// currency used for compute parity.
  double call_units() const {
    return static_cast<double>(net_calls + net_calls_backward + decoder_calls);
  }
};

/// One attack (or baseline) score for one sample: the unit the evaluation
/// protocol consumes.
struct ScoreRecord {
  std::string sample_id;
  std::string split;   // "member" | "eval-nonmember"
  std::string attack;  // e.g. "lsa-probe", "baseline-loss-t"
  double score = 0.0;
  int seed_reps = 1;
  ComputeLedger counters;
  std::map<std::string, double> secondary;  // per-metric degradations
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool saturated_low = false;
  int timestep = 0;
};

}  // namespace lsap
