#pragma once

#include <string>
#include <vector>

#include "lsap/attack.hpp"

namespace lsap {

struct CalibrationConfig {
  double eta_ref = 0.05;
  int directions = 8;        // L random unit Gaussian directions per sample
  double percentile = 95.0;  // nearest-rank
  TimestepSpec timestep{0, 0.6};
  MetricKind metric = MetricKind::kMrStft;

  void validate() const;
};

struct CalibrationResult {
  double tau = 0.0;
  bool valid = false;  // false when every degradation is zero (eta_ref = 0)
  int sample_count = 0;
  int direction_count = 0;
  double percentile = 0.0;
  double eta_ref = 0.0;
  std::vector<double> values;  // all degradations, sorted ascending
  std::string fingerprint;     // probe fingerprint the attack must match
  std::string config_echo;     // JSON echo of the calibration config
};

/// Nearest-rank percentile of a sorted sequence: value at index
/// ceil(p/100 * N) - 1.
double nearest_rank_percentile(const std::vector<double>& sorted_values,
                               double percentile);

/// Hash of everything that must agree between calibration and attack:
/// schedule parameters, metric configuration, timestep spec, probe mode,
/// codec dimension and reverse stride.
std::string probe_fingerprint(const ProbeContext& ctx,
                              const TimestepSpec& timestep);

/// Pre-registered threshold: for each dev non-member clip and each of L unit
/// Gaussian directions u, the degradation D(clean, R_t(x_t + sigma_t
/// eta_ref u)) with the forward eps fixed per (x0, t); tau is the nearest-rank
/// percentile over all samples and directions. Deterministic for a fixed
/// seed, any iteration order and any worker count.
CalibrationResult calibrate_tau(const std::vector<Clip>& dev_set,
                                const ProbeContext& ctx,
                                const CalibrationConfig& cfg);

}  // namespace lsap
