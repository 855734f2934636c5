#include "lsap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lsap/errors.hpp"
#include "lsap/parallel.hpp"
#include "lsap/rng.hpp"

namespace lsap {

BinaryScores split_scores(const std::vector<ScoreRecord>& records) {
  BinaryScores out;
  for (const auto& r : records) {
    if (!std::isfinite(r.score))
      throw NumericError("non-finite score for sample " + r.sample_id);
    if (r.split == "member")
      out.members.push_back(r.score);
    else if (r.split == "eval-nonmember")
      out.nonmembers.push_back(r.score);
    else
      throw ConfigError("scored record with split '" + r.split +
                        "' (dev clips are never scored)");
  }
  return out;
}

namespace {

void require_both_classes(const BinaryScores& s) {
  if (s.members.empty() || s.nonmembers.empty())
    throw ConfigError("need at least one member and one nonmember score");
}

}  // namespace

double auc(const BinaryScores& scores) {
  require_both_classes(scores);
  const std::size_t m = scores.members.size(), n = scores.nonmembers.size();
  struct Tagged {
    double v;
    bool member;
  };
  std::vector<Tagged> all;
  all.reserve(m + n);
  for (double v : scores.members) all.push_back({v, true});
  for (double v : scores.nonmembers) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Tagged& a, const Tagged& b) { return a.v < b.v; });
  // Average ranks over ties; U = sum of member ranks - m(m+1)/2.
  double member_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (all[k].member) member_rank_sum += avg_rank;
    i = j;
  }
  const double u = member_rank_sum -
                   0.5 * static_cast<double>(m) * static_cast<double>(m + 1);
  return u / (static_cast<double>(m) * static_cast<double>(n));
}

double auc(const std::vector<ScoreRecord>& records) {
  return auc(split_scores(records));
}

RocCurve roc_curve(const BinaryScores& scores) {
  require_both_classes(scores);
  std::vector<double> thresholds;
  thresholds.reserve(scores.members.size() + scores.nonmembers.size());
  thresholds.insert(thresholds.end(), scores.members.begin(),
                    scores.members.end());
  thresholds.insert(thresholds.end(), scores.nonmembers.begin(),
                    scores.nonmembers.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  RocCurve curve;
  const double m = static_cast<double>(scores.members.size());
  const double n = static_cast<double>(scores.nonmembers.size());
  auto count_above = [](const std::vector<double>& v, double thr) {
    std::size_t c = 0;
    for (double x : v) c += x > thr ? 1 : 0;
    return static_cast<double>(c);
  };
  // theta = +inf start: (0, 0).
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  for (double thr : thresholds) {
    // Every sample tied at thr flips together: count with "score >= thr",
    // i.e. "score > nextafter(thr, -inf)".
    double below = std::nextafter(thr, -std::numeric_limits<double>::infinity());
    curve.thresholds.push_back(thr);
    curve.fpr.push_back(count_above(scores.nonmembers, below) / n);
    curve.tpr.push_back(count_above(scores.members, below) / m);
  }
  if (curve.fpr.back() != 1.0 || curve.tpr.back() != 1.0) {
    curve.thresholds.push_back(-std::numeric_limits<double>::infinity());
    curve.fpr.push_back(1.0);
    curve.tpr.push_back(1.0);
  }
  return curve;
}

double tpr_at_fpr(const BinaryScores& scores, double fpr_target) {
  require_both_classes(scores);
  if (!(fpr_target >= 0.0 && fpr_target < 1.0))
    throw ConfigError("tpr_at_fpr: target must be in [0, 1)");
  const std::size_t n = scores.nonmembers.size();
  const std::size_t m = scores.members.size();
  const std::size_t max_fp =
      static_cast<std::size_t>(std::floor(fpr_target * static_cast<double>(n)));

  // Smallest feasible threshold: the (max_fp+1)-th largest nonmember score
  // (ties flip together, so any lower threshold admits too many FPs).
  std::vector<double> non_sorted = scores.nonmembers;
  std::sort(non_sorted.begin(), non_sorted.end(), std::greater<>());
  double theta;
  if (max_fp >= n)
    theta = -std::numeric_limits<double>::infinity();
  else
    theta = non_sorted[max_fp];
  std::size_t tp = 0;
  for (double v : scores.members) tp += v > theta ? 1 : 0;
  return static_cast<double>(tp) / static_cast<double>(m);
}

double tpr_at_fpr(const std::vector<ScoreRecord>& records, double fpr_target) {
  return tpr_at_fpr(split_scores(records), fpr_target);
}

double delong_variance(const BinaryScores& scores) {
  require_both_classes(scores);
  const auto& xs = scores.members;
  const auto& ys = scores.nonmembers;
  const std::size_t m = xs.size(), n = ys.size();
  if (m < 2 || n < 2)
    throw ConfigError("delong: need >= 2 scores per class");
  auto kernel = [](double x, double y) {
    if (y < x) return 1.0;
    if (y == x) return 0.5;
    return 0.0;
  };
  const double a = auc(scores);
  std::vector<double> v10(m, 0.0), v01(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += kernel(xs[i], ys[j]);
    v10[i] = s / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += kernel(xs[i], ys[j]);
    v01[j] = s / static_cast<double>(m);
  }
  double s10 = 0.0, s01 = 0.0;
  for (double v : v10) s10 += (v - a) * (v - a);
  s10 /= static_cast<double>(m - 1);
  for (double v : v01) s01 += (v - a) * (v - a);
  s01 /= static_cast<double>(n - 1);
  return s10 / static_cast<double>(m) + s01 / static_cast<double>(n);
}

IntervalEstimate delong_ci(const BinaryScores& scores, double level) {
  IntervalEstimate est;
  est.method = "delong";
  est.level = level;
  est.point = auc(scores);
  const double var = delong_variance(scores);
  if (var <= 0.0) {
    est.lower = est.upper = est.point;
    est.degenerate = true;
    return est;
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(var);
  est.lower = std::max(0.0, est.point - half);
  est.upper = std::min(1.0, est.point + half);
  return est;
}

double delong_p_greater_half(const BinaryScores& scores) {
  const double a = auc(scores);
  const double var = delong_variance(scores);
  if (var <= 0.0) return a > 0.5 ? 0.0 : 1.0;
  return 1.0 - normal_cdf((a - 0.5) / std::sqrt(var));
}

IntervalEstimate bootstrap_ci(
    const BinaryScores& scores,
    const std::function<double(const BinaryScores&)>& statistic,
    int resamples, std::uint64_t seed, double level) {
  require_both_classes(scores);
  if (resamples < 1) throw ConfigError("bootstrap: resamples must be >= 1");
  IntervalEstimate est;
  est.method = "bootstrap-percentile";
  est.level = level;
  est.point = statistic(scores);

  std::vector<double> stats(static_cast<std::size_t>(resamples), 0.0);
  parallel_for(stats.size(), [&](std::size_t r) {
    std::uint64_t s = seed;
    s = splitmix64(s);
    Rng rng(s ^ (0x9e3779b97f4a7c15ULL * (r + 1)));
    BinaryScores draw;
    draw.members.resize(scores.members.size());
    draw.nonmembers.resize(scores.nonmembers.size());
    for (auto& v : draw.members)
      v = scores.members[rng.next_below(scores.members.size())];
    for (auto& v : draw.nonmembers)
      v = scores.nonmembers[rng.next_below(scores.nonmembers.size())];
    stats[r] = statistic(draw);
  });
  std::sort(stats.begin(), stats.end());
  auto pct = [&](double p) {
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(stats.size())));
    rank = std::max<std::size_t>(1, std::min(stats.size(), rank));
    return stats[rank - 1];
  };
  est.lower = pct((1.0 - level) / 2.0 * 100.0);
  est.upper = pct((1.0 + level) / 2.0 * 100.0);
  est.degenerate = est.lower == est.upper;
  return est;
}

std::vector<bool> holm_bonferroni(const std::vector<double>& p_values,
                                  double alpha) {
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("holm: p-values must lie in [0, 1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double bound = alpha / static_cast<double>(m - i);
    if (p_values[order[i]] <= bound)
      reject[order[i]] = true;
    else
      break;  // step-down stops at the first failure
  }
  return reject;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ConfigError("normal_quantile: p must be in (0, 1)");
  // Acklam's rational approximation, refined with one Halley step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace lsap
