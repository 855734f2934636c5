#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lsap/parallel.hpp"
#include "lsap/rng.hpp"
#include "lsap/stats.hpp"

using namespace lsap;

namespace {

// Brute-force pair-counting Mann-Whitney oracle.
double auc_oracle(const BinaryScores& s) {
  double total = 0.0;
  for (double x : s.members)
    for (double y : s.nonmembers)
      total += y < x ? 1.0 : (y == x ? 0.5 : 0.0);
  return total / (static_cast<double>(s.members.size()) *
                  static_cast<double>(s.nonmembers.size()));
}

// Exhaustive threshold-scan oracle for TPR at an FPR cap.
double tpr_oracle(const BinaryScores& s, double target) {
  std::vector<double> candidates = s.members;
  candidates.insert(candidates.end(), s.nonmembers.begin(),
                    s.nonmembers.end());
  candidates.push_back(std::numeric_limits<double>::infinity());
  candidates.push_back(-std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double theta : candidates) {
    std::size_t fp = 0, tp = 0;
    for (double y : s.nonmembers) fp += y > theta ? 1 : 0;
    for (double x : s.members) tp += x > theta ? 1 : 0;
    double fpr = static_cast<double>(fp) / s.nonmembers.size();
    double tpr = static_cast<double>(tp) / s.members.size();
    if (fpr <= target) best = std::max(best, tpr);
  }
  return best;
}

// Stepwise Holm oracle straight from the definition.
std::vector<bool> holm_oracle(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p[order[i]] <= alpha / static_cast<double>(m - i))
      reject[order[i]] = true;
    else
      break;
  }
  return reject;
}

BinaryScores random_scores(Rng& rng, bool with_ties) {
  BinaryScores s;
  std::size_t m = 2 + rng.next_below(49), n = 2 + rng.next_below(49);
  for (std::size_t i = 0; i < m; ++i)
    s.members.push_back(with_ties ? std::floor(rng.uniform(0.0, 12.0)) / 4.0
                                  : rng.gaussian() + 0.4);
  for (std::size_t i = 0; i < n; ++i)
    s.nonmembers.push_back(with_ties ? std::floor(rng.uniform(0.0, 12.0)) / 4.0
                                     : rng.gaussian());
  return s;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(BinaryScores{{0.9, 0.8}, {0.1, 0.2}}) == 1.0);
  CHECK(auc(BinaryScores{{0.9, 0.2}, {0.8, 0.1}}) == 0.75);
  CHECK(auc(BinaryScores{{0.5, 0.5}, {0.5, 0.5, 0.5}}) == 0.5);
}

TEST_CASE("auc equals the pair-counting oracle exactly on 100 random sets") {
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    BinaryScores s = random_scores(rng, rep % 2 == 0);
    CHECK(auc(s) == auc_oracle(s));
  }
}

TEST_CASE("auc invariances") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    BinaryScores s = random_scores(rng, true);
    // Shuffled copy.
    BinaryScores shuffled = s;
    std::reverse(shuffled.members.begin(), shuffled.members.end());
    std::reverse(shuffled.nonmembers.begin(), shuffled.nonmembers.end());
    CHECK(auc(s) == auc(shuffled));
    // Label swap complements.
    BinaryScores swapped{s.nonmembers, s.members};
    CHECK(auc(s) + auc(swapped) == doctest::Approx(1.0).epsilon(1e-12));
    // Strictly increasing transform of all scores.
    BinaryScores mono = s;
    auto transform = [](double v) { return std::exp(0.5 * v) + 2.0 * v; };
    for (auto& v : mono.members) v = transform(v);
    for (auto& v : mono.nonmembers) v = transform(v);
    CHECK(auc(s) == auc(mono));
  }
}

TEST_CASE("tpr_at_fpr examples") {
  // One false positive allowed: theta = 0.3 keeps FPR at 1/4 while every
  // member clears it (exhaustive-scan oracle value).
  BinaryScores s{{0.9, 0.7, 0.4}, {0.8, 0.3, 0.2, 0.1}};
  CHECK(tpr_at_fpr(s, 0.25) == tpr_oracle(s, 0.25));
  CHECK(tpr_at_fpr(s, 0.25) == 1.0);
  // No false positive allowed: theta sits at the top nonmember, 0.8.
  CHECK(tpr_at_fpr(s, 0.1) == tpr_oracle(s, 0.1));
  CHECK(tpr_at_fpr(s, 0.1) == doctest::Approx(1.0 / 3.0));
  BinaryScores perfect{{0.9, 0.8}, {0.1, 0.2}};
  CHECK(tpr_at_fpr(perfect, 0.01) == 1.0);
  // Target below 1/n forces zero false positives: the fraction of members
  // above the max nonmember.
  BinaryScores tiny{{0.9, 0.5, 0.3}, {0.6, 0.2}};
  CHECK(tpr_at_fpr(tiny, 0.2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("tpr_at_fpr equals the exhaustive scan and is monotone in target") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    BinaryScores s = random_scores(rng, rep % 2 == 1);
    for (double target : {0.001, 0.01, 0.1, 0.25, 0.5}) {
      CHECK(tpr_at_fpr(s, target) == tpr_oracle(s, target));
    }
    CHECK(tpr_at_fpr(s, 0.01) <= tpr_at_fpr(s, 0.1));
    CHECK(tpr_at_fpr(s, 0.001) <= tpr_at_fpr(s, 0.01));
  }
}

TEST_CASE("roc curve runs from (0,0) to (1,1) and is monotone") {
  Rng rng(4);
  BinaryScores s = random_scores(rng, true);
  RocCurve c = roc_curve(s);
  CHECK(c.fpr.front() == 0.0);
  CHECK(c.tpr.front() == 0.0);
  CHECK(c.fpr.back() == 1.0);
  CHECK(c.tpr.back() == 1.0);
  for (std::size_t i = 1; i < c.fpr.size(); ++i) {
    CHECK(c.fpr[i] >= c.fpr[i - 1]);
    CHECK(c.tpr[i] >= c.tpr[i - 1]);
  }
}

TEST_CASE("DeLong: hand-computed structural components") {
  BinaryScores s{{0.9, 0.2}, {0.8, 0.1}};
  // V10 = (1, 0.5), V01 = (0.5, 1), AUC = 0.75:
  // S10 = S01 = 0.125 -> var = 0.125/2 + 0.125/2 = 0.125.
  CHECK(delong_variance(s) == doctest::Approx(0.125).epsilon(1e-12));
  IntervalEstimate ci = delong_ci(s, 0.95);
  CHECK(ci.point == 0.75);
  CHECK(ci.lower == doctest::Approx(std::max(0.0, 0.75 - 1.959963984540054 *
                                                        std::sqrt(0.125)))
                        .epsilon(1e-6));
  CHECK(ci.upper == 1.0);  // clipped
  CHECK_FALSE(ci.degenerate);
}

TEST_CASE("DeLong: perfect separation is degenerate") {
  BinaryScores s{{0.9, 0.8, 0.7}, {0.3, 0.2, 0.1}};
  IntervalEstimate ci = delong_ci(s, 0.95);
  CHECK(ci.degenerate);
  CHECK(ci.lower == ci.point);
  CHECK(ci.upper == ci.point);
}

TEST_CASE("DeLong CI coverage over binormal simulations") {
  // True AUC 0.75: members N(mu, 1) vs nonmembers N(0, 1) with
  // mu = sqrt(2) Phi^-1(0.75).
  const double mu = std::sqrt(2.0) * normal_quantile(0.75);
  Rng rng(5);
  int covered = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    BinaryScores s;
    s.members.resize(200);
    s.nonmembers.resize(200);
    for (auto& v : s.members) v = mu + rng.gaussian();
    for (auto& v : s.nonmembers) v = rng.gaussian();
    IntervalEstimate ci = delong_ci(s, 0.95);
    covered += (ci.lower <= 0.75 && 0.75 <= ci.upper) ? 1 : 0;
  }
  double rate = static_cast<double>(covered) / trials;
  CHECK(rate >= 0.93);
  CHECK(rate <= 0.97);
}

TEST_CASE("bootstrap: determinism, zero width, bracketing") {
  BinaryScores flat{{0.5, 0.5, 0.5}, {0.5, 0.5}};
  auto stat = [](const BinaryScores& s) { return auc(s); };
  IntervalEstimate z = bootstrap_ci(flat, stat, 500, 11);
  CHECK(z.lower == z.upper);
  CHECK(z.lower == 0.5);

  Rng rng(6);
  BinaryScores s = random_scores(rng, false);
  IntervalEstimate a = bootstrap_ci(s, stat, 1000, 42);
  IntervalEstimate b = bootstrap_ci(s, stat, 1000, 42);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);

  set_threads(4);
  IntervalEstimate c = bootstrap_ci(s, stat, 1000, 42);
  set_threads(0);
  CHECK(a.lower == c.lower);
  CHECK(a.upper == c.upper);

  for (int rep = 0; rep < 50; ++rep) {
    BinaryScores t = random_scores(rng, false);
    IntervalEstimate ci = bootstrap_ci(t, stat, 400, 100 + rep);
    CHECK(ci.lower <= ci.point);
    CHECK(ci.point <= ci.upper);
  }
}

TEST_CASE("holm-bonferroni examples") {
  auto flags = holm_bonferroni({0.01, 0.04, 0.03}, 0.05);
  CHECK(flags == std::vector<bool>{true, false, false});
  CHECK(holm_bonferroni({1.0, 1.0}, 0.05) == std::vector<bool>{false, false});
  CHECK(holm_bonferroni({0.04}, 0.05) == std::vector<bool>{true});
  CHECK_THROWS_AS(holm_bonferroni({1.5}, 0.05), ConfigError);
}

TEST_CASE("holm matches the stepwise oracle and dominates Bonferroni") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t m = 1 + rng.next_below(12);
    std::vector<double> p(m);
    for (auto& v : p) v = std::pow(rng.next_double(), 2.0);
    const double alpha = 0.05;
    auto got = holm_bonferroni(p, alpha);
    CHECK(got == holm_oracle(p, alpha));
    // Plain Bonferroni rejections are a subset.
    for (std::size_t i = 0; i < m; ++i)
      if (p[i] <= alpha / static_cast<double>(m)) CHECK(got[i]);
  }
}

TEST_CASE("shuffled input leaves every statistic unchanged") {
  Rng rng(8);
  BinaryScores s = random_scores(rng, true);
  BinaryScores shuffled = s;
  std::rotate(shuffled.members.begin(), shuffled.members.begin() + 1,
              shuffled.members.end());
  std::rotate(shuffled.nonmembers.begin(), shuffled.nonmembers.begin() + 1,
              shuffled.nonmembers.end());
  CHECK(auc(s) == auc(shuffled));
  CHECK(tpr_at_fpr(s, 0.1) == tpr_at_fpr(shuffled, 0.1));
  CHECK(delong_variance(s) == doctest::Approx(delong_variance(shuffled)).epsilon(1e-12));
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(auc(BinaryScores{{}, {1.0}}), ConfigError);
  CHECK_THROWS_AS(auc(BinaryScores{{1.0}, {}}), ConfigError);
  std::vector<ScoreRecord> recs(1);
  recs[0].split = "dev-nonmember";
  CHECK_THROWS_AS(split_scores(recs), ConfigError);
}

TEST_CASE("normal quantile round-trips through the cdf") {
  for (double p : {0.001, 0.025, 0.5, 0.8, 0.975, 0.999})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}
