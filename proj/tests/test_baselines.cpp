#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lsap/baseline.hpp"

using namespace lsap;

namespace {

struct BaseFixture {
  NoiseSchedule schedule;
  std::unique_ptr<Denoiser> denoiser;
  WaveformMse metric;
  ProbeContext ctx;
  Clip clip;

  BaseFixture(std::size_t n, int T, std::unique_ptr<Denoiser> den)
      : schedule(build_schedule(ScheduleKind::kLinear, T, 1e-3, 0.05)),
        denoiser(std::move(den)),
        metric(n) {
    ctx.schedule = &schedule;
    ctx.denoiser = denoiser.get();
    ctx.metric = &metric;
    ctx.seeds = SeedPolicy{31};
    Rng rng(6);
    clip = {"clip-b", rng.gaussian_array({n}), 8000, Split::kMember};
  }
};

}  // namespace

TEST_CASE("exact-noise oracle achieves the maximal score on every baseline") {
  const std::size_t n = 32;
  // The oracle returns the exact forward eps for this clip at every t.
  NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 12, 1e-3, 0.05);
  Rng rng(7);
  Clip clip{"clip-x", rng.gaussian_array({n}), 8000, Split::kMember};
  SeedPolicy seeds{31};
  const int t = 9;
  Rng eps_rng = seeds.rng(clip.id, t, "forward-eps", 0);
  Array eps = eps_rng.gaussian_array({n});
  ExactNoiseDenoiser oracle(eps);
  WaveformMse metric(n);
  ProbeContext ctx;
  ctx.schedule = &s;
  ctx.denoiser = &oracle;
  ctx.metric = &metric;
  ctx.seeds = seeds;

  CHECK(loss_score(ctx, clip, t, 1, nullptr) == 0.0);
  CHECK(std::abs(endpoint_score(ctx, clip, t, 1, nullptr)) < 1e-18);
  CHECK(std::abs(trajectory_score(ctx, clip, t, 4, NormKind::kL2, 1, nullptr)) <
        1e-9);

  // Any imperfect denoiser scores strictly below the oracle's maximum.
  BaseFixture fx(n, 12, std::make_unique<ZeroDenoiser>(n));
  CHECK(loss_score(fx.ctx, fx.clip, t, 1, nullptr) < 0.0);
  CHECK(endpoint_score(fx.ctx, fx.clip, t, 1, nullptr) < 0.0);
  CHECK(trajectory_score(fx.ctx, fx.clip, t, 4, NormKind::kL2, 1, nullptr) <
        0.0);
}

TEST_CASE("zero denoiser loss is the chi-square mean, about -1") {
  const std::size_t n = 512;
  BaseFixture fx(n, 12, std::make_unique<ZeroDenoiser>(n));
  double score = loss_score(fx.ctx, fx.clip, 8, 8, nullptr);
  // E||eps||^2 / n = 1; SE of the mean over 8*512 draws ~ 0.02.
  CHECK(score == doctest::Approx(-1.0).epsilon(0.08));
}

TEST_CASE("repetitions average the single-seed scores") {
  const std::size_t n = 32;
  BaseFixture fx(n, 12, std::make_unique<ZeroDenoiser>(n));
  const int t = 6;
  // Test-side oracle for each single repetition, using the seed policy
  // directly.
  auto single = [&](int rep) {
    Rng rng = fx.ctx.seeds.rng(fx.clip.id, t, "forward-eps", rep);
    Array eps = rng.gaussian_array({n});
    Array x_t = forward_noise(fx.clip.samples, fx.schedule, t, eps);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += eps.data[i] * eps.data[i];
    return -loss / static_cast<double>(n);
  };
  double expect = 0.5 * (single(0) + single(1));
  CHECK(loss_score(fx.ctx, fx.clip, t, 2, nullptr) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("trajectory prediction matches a scalar recursion oracle") {
  NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 25, 1e-3, 0.05);
  AnalyticPriorDenoiser den(Array::zeros({1}), 0.9);
  WaveformMse metric(1);
  ProbeContext ctx;
  ctx.schedule = &s;
  ctx.denoiser = &den;
  ctx.metric = &metric;
  ctx.seeds = SeedPolicy{77};
  Clip clip{"c1", Array::vec({0.4}), 8000, Split::kMember};
  const int t = 12, t_prime = 5;

  // Oracle: scalar DDIM recursion from x_t down to t - t'.
  Rng rng = ctx.seeds.rng(clip.id, t, "forward-eps", 0);
  double eps = rng.gaussian();
  double x = std::sqrt(s.abar(t)) * 0.4 + std::sqrt(1 - s.abar(t)) * eps;
  double truth =
      std::sqrt(s.abar(t - t_prime)) * 0.4 +
      std::sqrt(1 - s.abar(t - t_prime)) * eps;
  double xs = x;
  for (int u = t; u > t - t_prime; --u) {
    double abar = s.abar(u), sa = std::sqrt(abar), sig = std::sqrt(1 - abar);
    double c = sa * 0.9 / (abar * 0.9 + (1 - abar));
    double ehat = (xs - sa * (c * xs)) / sig;
    double x0h = (xs - sig * ehat) / sa;
    double ab2 = s.abar(u - 1 == 0 ? 1 : u - 1);
    if (u - 1 >= t - t_prime) {
      xs = std::sqrt(ab2) * x0h + std::sqrt(1 - ab2) * ehat;
    }
  }
  double expect = -std::abs(truth - xs);
  double got = trajectory_score(ctx, clip, t, t_prime, NormKind::kL2, 1, nullptr);
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("trajectory guards reject degenerate offsets") {
  const std::size_t n = 16;
  BaseFixture fx(n, 12, std::make_unique<ZeroDenoiser>(n));
  CHECK_THROWS_AS(
      trajectory_score(fx.ctx, fx.clip, 8, 0, NormKind::kL2, 1, nullptr),
      ConfigError);
  CHECK_THROWS_AS(
      trajectory_score(fx.ctx, fx.clip, 8, 8, NormKind::kL2, 1, nullptr),
      ConfigError);
}

TEST_CASE("match_compute examples and tolerance property") {
  CHECK(match_compute(140.0, 2.0) == 70);
  CHECK(match_compute(140.0, 3.0) == 47);  // 141 passes, within 5%
  CHECK_THROWS_AS(match_compute(140.0, 200.0), ArtifactError);

  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    double target = rng.uniform(50.0, 5000.0);
    double unit = rng.uniform(0.5, target / 25.0);
    int reps = match_compute(target, unit);
    CHECK(std::abs(reps * unit - target) <= 0.05 * target + 1e-9);
  }
}

TEST_CASE("baseline records carry orientation and counters") {
  const std::size_t n = 32;
  BaseFixture fx(n, 12, std::make_unique<ZeroDenoiser>(n));
  BaselineConfig cfg;
  cfg.kind = BaselineKind::kLossAtT;
  cfg.timestep = TimestepSpec{0, 0.6};
  cfg.repetitions = 3;
  ScoreRecord r = baseline_score_sample(fx.ctx, fx.clip, cfg);
  CHECK(r.attack == "baseline-loss-at-t");
  CHECK(r.score < 0.0);
  CHECK(r.counters.net_calls == 3);
  CHECK(r.seed_reps == 3);

  cfg.kind = BaselineKind::kTrajectory;
  ScoreRecord r2 = baseline_score_sample(fx.ctx, fx.clip, cfg);
  CHECK(r2.attack == "baseline-trajectory");
  CHECK(r2.counters.reverse_passes_executed == 3.0);
  // Unit cost matches the ledger per repetition.
  double unit = baseline_unit_cost(fx.ctx, cfg);
  CHECK(r2.counters.call_units() == doctest::Approx(3.0 * unit));
}
