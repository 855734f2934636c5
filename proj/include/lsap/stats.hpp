#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lsap/records.hpp"

namespace lsap {

/// Scores split into the two classes the ROC machinery consumes.
struct BinaryScores {
  std::vector<double> members;
  std::vector<double> nonmembers;
};

/// Partition records by split label. Rejects splits other than member /
/// eval-nonmember and non-finite scores.
BinaryScores split_scores(const std::vector<ScoreRecord>& records);

/// Mann-Whitney AUC: probability a random member outscores a random
/// nonmember, ties counted 1/2. Exact rank computation.
double auc(const BinaryScores& scores);
double auc(const std::vector<ScoreRecord>& records);

struct RocCurve {
  std::vector<double> thresholds;  // descending; rule is "score > threshold"
  std::vector<double> fpr;
  std::vector<double> tpr;
};

/// Curve from (0,0) to (1,1); all samples tied at a threshold flip together.
RocCurve roc_curve(const BinaryScores& scores);

/// Max TPR over thresholds with empirical FPR <= target.
double tpr_at_fpr(const BinaryScores& scores, double fpr_target);
double tpr_at_fpr(const std::vector<ScoreRecord>& records, double fpr_target);

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  double level = 0.95;
  bool degenerate = false;  // zero variance (e.g. perfect separation)
};

/// DeLong structural-components variance with a normal-approximation CI
/// clipped to [0, 1]. Degenerate variance yields a zero-width flagged CI.
IntervalEstimate delong_ci(const BinaryScores& scores, double level = 0.95);

/// The V10/V01 variance estimate itself (exposed for the hand-computed
/// oracle test).
double delong_variance(const BinaryScores& scores);

/// One-sided p-value for AUC > 0.5 under the DeLong normal approximation.
double delong_p_greater_half(const BinaryScores& scores);

/// Percentile bootstrap resampling members and nonmembers independently
/// (class balance preserved); deterministic under the seed for any worker
/// count.
IntervalEstimate bootstrap_ci(
    const BinaryScores& scores,
    const std::function<double(const BinaryScores&)>& statistic,
    int resamples, std::uint64_t seed, double level = 0.95);

/// Holm-Bonferroni step-down rejections at family-wise level alpha, returned
/// in the input order.
std::vector<bool> holm_bonferroni(const std::vector<double>& p_values,
                                  double alpha);

// Shared distribution helpers.
double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace lsap
