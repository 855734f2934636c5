#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lsap/attack.hpp"
#include "lsap/parallel.hpp"

using namespace lsap;

namespace {

struct Fixture {
  NoiseSchedule schedule;
  std::unique_ptr<Denoiser> denoiser;
  std::unique_ptr<Metric> metric;
  ProbeContext ctx;
  Clip clip;

  Fixture(std::size_t n, int T, std::unique_ptr<Denoiser> den,
          std::unique_ptr<Metric> m, std::uint64_t seed = 7)
      : schedule(build_schedule(ScheduleKind::kLinear, T, 1e-3, 0.05)),
        denoiser(std::move(den)),
        metric(std::move(m)) {
    ctx.schedule = &schedule;
    ctx.denoiser = denoiser.get();
    ctx.metric = metric.get();
    ctx.seeds = SeedPolicy{seed};
    Rng rng(seed + 1);
    clip = {"clip-0", rng.gaussian_array({n}), 8000, Split::kMember};
  }
};

}  // namespace

TEST_CASE("inject: zero delta, sigma arithmetic, time-normalization") {
  NoiseSchedule s;
  s.T = 2;
  s.alpha_bar = {0.5, 0.36};
  Array x_t = Array::vec({1.0, -2.0});
  CHECK(inject(x_t, Array::zeros({2}), s, 2).data == x_t.data);
  Array shifted = inject(x_t, Array::vec({1.0, 0.0}), s, 2);
  CHECK(shifted.data[0] == doctest::Approx(1.8).epsilon(1e-12));  // +0.8
  CHECK(shifted.data[1] == doctest::Approx(-2.0));

  // ||delta_t||_2 / sigma_t == ||delta||_2 at every t.
  NoiseSchedule full = build_schedule(ScheduleKind::kLinear, 100, 1e-4, 0.02);
  Rng rng(3);
  Array x = rng.gaussian_array({64});
  Array delta = rng.gaussian_array({64});
  const double dn = l2_norm(delta);
  for (int t = 1; t <= full.T; ++t) {
    Array out = inject(x, delta, full, t);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] -= x.data[i];
    CHECK(std::abs(l2_norm(out) / sigma_t(full, t) - dn) < 1e-12 * dn + 1e-12);
  }
}

TEST_CASE("project: examples and idempotence") {
  Array z = project(Array::vec({3.0, 4.0}), NormKind::kL2, 1.0);
  CHECK(z.data[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(z.data[1] == doctest::Approx(0.8).epsilon(1e-12));

  Array interior = project(Array::vec({0.3, 0.4}), NormKind::kL2, 1.0);
  CHECK(interior.data == std::vector<double>{0.3, 0.4});

  Array clipped = project(Array::vec({1.5, -0.2}), NormKind::kLinf, 0.5);
  CHECK(clipped.data == std::vector<double>{0.5, -0.2});

  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    Array v = rng.gaussian_array({8});
    double eta = rng.uniform(0.1, 2.0);
    for (NormKind p : {NormKind::kL2, NormKind::kLinf}) {
      Array once = project(v, p, eta);
      Array twice = project(once, p, eta);
      CHECK(once.data == twice.data);
      double norm = p == NormKind::kL2 ? l2_norm(once) : linf_norm(once);
      CHECK(norm <= eta * (1.0 + 1e-12));
      double before = p == NormKind::kL2 ? l2_norm(v) : linf_norm(v);
      CHECK(norm <= before * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("pgd reaches the boundary of a quadratic objective") {
  // Zero denoiser at t=1 turns the degradation into c * ||delta||^2 with
  // c = sigma^2 / (abar * n); its max over the l2 ball is c * eta^2.
  const std::size_t n = 16;
  Fixture fx(n, 4, std::make_unique<ZeroDenoiser>(n),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.eta_max = 1.0;
  cfg.pgd_steps = 8;
  cfg.restarts = 1;
  cfg.early_stop = false;
  cfg.timestep = TimestepSpec{1, 0.0};
  ProbeInstance inst = make_probe_instance(fx.ctx, fx.clip, 1, 0);

  const double abar = fx.schedule.abar(1);
  const double c = (1.0 - abar) / (abar * static_cast<double>(n));
  for (double eta : {0.25, 0.5, 1.0}) {
    PGDResult r = pgd_max_degradation(fx.ctx, inst, eta, cfg);
    CHECK(r.best_degradation ==
          doctest::Approx(c * eta * eta).epsilon(1e-9));
    CHECK(l2_norm(r.best_delta) <= eta + 1e-9);
    // Best-so-far over the trace is nondecreasing.
    double best = -1.0;
    for (double d : r.trace) {
      best = std::max(best, d);
      CHECK(r.best_degradation >= d);
    }
    CHECK(r.best_degradation == best);
  }
}

TEST_CASE("pgd degradation vanishes as the budget vanishes") {
  const std::size_t n = 16;
  Fixture fx(n, 6, std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 1.0),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.eta_max = 1.0;
  cfg.pgd_steps = 4;
  cfg.restarts = 1;
  ProbeInstance inst = make_probe_instance(fx.ctx, fx.clip, 4, 0);
  PGDResult r = pgd_max_degradation(fx.ctx, inst, 1e-7, cfg);
  CHECK(r.best_degradation < 1e-10);
}

TEST_CASE("bisection matches the analytic crossing on a monotone oracle") {
  // D*(eta) = eta, tau = 0.3: the crossing is at 0.3 exactly.
  auto probe = [](double eta, int) { return eta; };
  BisectionOutcome out = bisect_budget(probe, 0.8, 0.3, 10);
  const double width = 0.8 * std::pow(2.0, -10);
  CHECK(out.crossed);
  CHECK(out.hi - out.lo == doctest::Approx(width).epsilon(1e-9));
  CHECK(out.c_adv >= 0.3);
  CHECK(out.c_adv <= 0.3 + width + 1e-12);
  // Bracket invariant: the crossing stays inside [lo, hi] at every level.
  double lo = 0.0, hi = 0.8;
  for (const auto& [eta, d] : out.levels) {
    CHECK(eta == doctest::Approx(0.5 * (lo + hi)));
    if (d >= 0.3)
      hi = eta;
    else
      lo = eta;
    CHECK(lo <= 0.3);
    CHECK(0.3 <= hi + 1e-12);
  }
}

TEST_CASE("tau guards") {
  auto probe = [](double eta, int) { return eta; };
  CHECK_THROWS_AS(bisect_budget(probe, 0.8, 0.0, 10), ConfigError);
  CHECK_THROWS_AS(bisect_budget(probe, 0.8, -0.1, 10), ConfigError);

  const std::size_t n = 8;
  Fixture fx(n, 4, std::make_unique<ZeroDenoiser>(n),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(adversarial_cost(fx.ctx, fx.clip, cfg), ConfigError);
}

TEST_CASE("compute accounting: exactly (K+2)B passes and (K+1)B evals") {
  const std::size_t n = 24;
  Fixture fx(n, 8,
             std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 1.0),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.pgd_steps = 12;
  cfg.bisection_steps = 10;
  cfg.restarts = 1;
  cfg.early_stop = false;
  cfg.precheck_at_eta_max = false;
  cfg.eta_max = 0.8;
  cfg.tau = 1e-4;
  cfg.timestep = TimestepSpec{5, 0.0};
  AdvCostResult r = adversarial_cost(fx.ctx, fx.clip, cfg);
  CHECK(r.ledger.reverse_passes == 140.0);
  CHECK(r.ledger.metric_evals == 130);
  // Executed: one clean pass plus (K+1) perturbed per level.
  CHECK(r.ledger.reverse_passes_executed == 1.0 + 130.0);
  // Bracket width invariant.
  CHECK(r.bracket_hi - r.bracket_lo <=
        cfg.eta_max * std::pow(2.0, -cfg.bisection_steps) + 1e-12);

  // Early stopping can only reduce the counters.
  AttackConfig es = cfg;
  es.early_stop = true;
  AdvCostResult r2 = adversarial_cost(fx.ctx, fx.clip, es);
  CHECK(r2.ledger.reverse_passes <= r.ledger.reverse_passes);
  CHECK(r2.ledger.metric_evals <= r.ledger.metric_evals);
}

TEST_CASE("restarts multiply the per-level cost") {
  const std::size_t n = 16;
  Fixture fx(n, 6,
             std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 1.0),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.pgd_steps = 3;
  cfg.bisection_steps = 2;
  cfg.restarts = 2;
  cfg.early_stop = false;
  cfg.precheck_at_eta_max = false;
  cfg.tau = 1e-6;
  cfg.timestep = TimestepSpec{4, 0.0};
  AdvCostResult r = adversarial_cost(fx.ctx, fx.clip, cfg);
  // Per level: r*(K+1) executed perturbed passes, charged +1 clean each.
  CHECK(r.ledger.reverse_passes == doctest::Approx(2 * (2 * 4 + 1)));
  CHECK(r.ledger.metric_evals == 2 * 2 * 4);
}

TEST_CASE("saturated-low: threshold unreachable at eta_max") {
  const std::size_t n = 16;
  Fixture fx(n, 6,
             std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 1.0),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.pgd_steps = 3;
  cfg.bisection_steps = 4;
  cfg.restarts = 1;
  cfg.tau = 1e9;  // unreachable
  cfg.timestep = TimestepSpec{4, 0.0};

  SUBCASE("with pre-check: bisection skipped") {
    cfg.precheck_at_eta_max = true;
    AdvCostResult r = adversarial_cost(fx.ctx, fx.clip, cfg);
    CHECK(r.saturated_low);
    CHECK(r.c_adv == cfg.eta_max);
    CHECK(r.ledger.reverse_passes == 0.0);  // no bisection levels ran
    CHECK(r.ledger.precheck_reverse_passes > 0.0);
  }
  SUBCASE("without pre-check: full bisection, still flagged") {
    cfg.precheck_at_eta_max = false;
    AdvCostResult r = adversarial_cost(fx.ctx, fx.clip, cfg);
    CHECK(r.saturated_low);
    CHECK(r.c_adv == cfg.eta_max);
  }
}

TEST_CASE("budget monotonicity holds statistically") {
  const std::size_t n = 24;
  Fixture fx(n, 10,
             std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 0.8),
             std::make_unique<WaveformMse>(n));
  AttackConfig cfg;
  cfg.pgd_steps = 6;
  cfg.restarts = 1;
  cfg.eta_max = 1.0;
  Rng rng(11);
  int ok = 0, total = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int t = 2 + static_cast<int>(rng.next_below(8));
    ProbeInstance inst = make_probe_instance(fx.ctx, fx.clip, t, rep);
    double e1 = rng.uniform(0.05, 0.5);
    double e2 = e1 + rng.uniform(0.05, 0.5);
    double d1 = pgd_max_degradation(fx.ctx, inst, e1, cfg).best_degradation;
    double d2 = pgd_max_degradation(fx.ctx, inst, e2, cfg).best_degradation;
    ok += d2 >= d1 - 1e-6 ? 1 : 0;
    ++total;
  }
  CHECK(ok >= static_cast<int>(0.95 * total));
}

TEST_CASE("score_sample is deterministic across repeats and worker counts") {
  const std::size_t n = 24;
  Fixture fx(n, 8,
             std::make_unique<AnalyticPriorDenoiser>(Array::zeros({n}), 1.0),
             std::make_unique<MrStft>(n, std::vector<STFTConfig>{
                                             {8, 2, 8, STFTConfig::Window::kHann}}));
  AttackConfig cfg;
  cfg.pgd_steps = 3;
  cfg.bisection_steps = 4;
  cfg.restarts = 2;
  cfg.seed_reps = 2;
  cfg.tau = 1e-3;
  cfg.timestep = TimestepSpec{0, 0.6};

  set_threads(1);
  ScoreRecord a = score_sample(fx.ctx, fx.clip, cfg);
  set_threads(4);
  ScoreRecord b = score_sample(fx.ctx, fx.clip, cfg);
  set_threads(0);
  CHECK(a.score == b.score);
  CHECK(a.bracket_lo == b.bracket_lo);
  CHECK(a.bracket_hi == b.bracket_hi);
  CHECK(a.counters.reverse_passes == b.counters.reverse_passes);
  CHECK(a.seed_reps == 2);
  // S=1 equals a single adversarial_cost.
  AttackConfig single = cfg;
  single.seed_reps = 1;
  ScoreRecord c = score_sample(fx.ctx, fx.clip, single);
  AdvCostResult direct = adversarial_cost(fx.ctx, fx.clip, single, 0);
  CHECK(c.score == direct.c_adv);
}
