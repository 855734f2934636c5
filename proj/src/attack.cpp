#include "lsap/attack.hpp"

#include <chrono>
#include <cmath>

#include "lsap/errors.hpp"

namespace lsap {

NormKind norm_from_string(const std::string& s) {
  if (s == "2" || s == "l2") return NormKind::kL2;
  if (s == "inf" || s == "linf") return NormKind::kLinf;
  throw ConfigError("unknown norm: " + s);
}

std::string to_string(NormKind n) {
  return n == NormKind::kL2 ? "l2" : "linf";
}

ProbeMode probe_mode_from_string(const std::string& s) {
  if (s == "waveform") return ProbeMode::kWaveform;
  if (s == "latent") return ProbeMode::kLatent;
  throw ConfigError("unknown probe mode: " + s);
}

std::string to_string(ProbeMode m) {
  return m == ProbeMode::kWaveform ? "waveform" : "latent";
}

const char* to_string(PgdTermination t) {
  switch (t) {
    case PgdTermination::kMaxSteps: return "max-steps";
    case PgdTermination::kEarlyStopImprovement: return "early-stop-improvement";
    case PgdTermination::kGradientFloor: return "gradient-floor";
  }
  return "?";
}

void AttackConfig::validate() const {
  if (!(eta_max > 0.0)) throw ConfigError("attack: eta_max must be > 0");
  if (pgd_steps < 1) throw ConfigError("attack: K must be >= 1");
  if (restarts < 1) throw ConfigError("attack: restarts must be >= 1");
  if (bisection_steps < 1) throw ConfigError("attack: B must be >= 1");
  if (!(step_scale > 0.0 && step_scale <= 1.0))
    throw ConfigError("attack: step_scale must be in (0, 1]");
  if (seed_reps < 1) throw ConfigError("attack: seed_reps must be >= 1");
}

std::size_t ProbeContext::delta_dim() const {
  return mode == ProbeMode::kLatent ? codec->m() : denoiser->dim();
}

void ProbeContext::validate() const {
  if (!schedule || !denoiser || !metric)
    throw ConfigError("probe context: schedule, denoiser and metric required");
  if (mode == ProbeMode::kLatent) {
    if (!codec) throw ConfigError("probe context: latent mode needs a codec");
    if (denoiser->dim() != codec->m())
      throw ConfigError("probe context: denoiser dim != codec latent dim");
  }
}

Array inject(const Array& x_t, const Array& delta, const NoiseSchedule& s,
             int t) {
  if (!x_t.same_shape(delta)) throw NumericError("inject: shape mismatch");
  const double sig = sigma_t(s, t);
  Array out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] += sig * delta.data[i];
  return out;
}

Array project(const Array& z, NormKind p, double eta) {
  if (!(eta > 0.0)) throw ConfigError("project: eta must be > 0");
  Array out = z;
  if (p == NormKind::kL2) {
    double norm = l2_norm(z);
    // The one-ulp slack keeps the projection bitwise idempotent: rescaling
    // can land a hair above eta, which must not trigger a second rescale.
    if (norm > eta * (1.0 + 4e-16)) {
      const double scale = eta / norm;
      for (double& v : out.data) v *= scale;
    }
  } else {
    for (double& v : out.data) v = std::clamp(v, -eta, eta);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kForwardEpsTag = "forward-eps";
constexpr const char* kPgdInitTag = "pgd-init";

std::uint64_t pgd_salt(std::uint64_t rep, std::uint64_t level,
                       std::uint64_t restart) {
  return (rep << 40) | (level << 20) | restart;
}

/// Builds the perturbed reverse output for the instance; delta may be
/// kNoNode for the clean pass.
NodeId perturbed_output_node(const ProbeContext& ctx, const ProbeInstance& inst,
                             Tape& tape, NodeId delta, ComputeLedger* ledger) {
  if (ctx.mode == ProbeMode::kLatent) {
    return reverse_latent_node(tape, inst.x0, inst.eps, inst.t, *ctx.denoiser,
                               *ctx.codec, delta, *ctx.schedule, ctx.reverse,
                               ledger);
  }
  NodeId x = tape.constant(inst.x_t);
  if (delta != kNoNode)
    x = tape.add(x, tape.scalar_mul(sigma_t(*ctx.schedule, inst.t), delta));
  return reverse_from_node(tape, x, inst.t, *ctx.denoiser, *ctx.schedule,
                           ctx.reverse, ledger);
}

}  // namespace

ProbeInstance make_probe_instance(const ProbeContext& ctx, const Clip& clip,
                                  int t, int rep) {
  ctx.validate();
  ProbeInstance inst;
  inst.id = clip.id;
  inst.t = t;
  inst.x0 = clip.samples;
  Rng rng = ctx.seeds.rng(clip.id, static_cast<std::uint64_t>(t),
                          kForwardEpsTag, static_cast<std::uint64_t>(rep));
  inst.eps = rng.gaussian_array({ctx.delta_dim()});
  Tape tape;
  if (ctx.mode == ProbeMode::kWaveform) {
    if (clip.samples.numel() != ctx.denoiser->dim())
      throw ConfigError("attack: clip length does not match denoiser dim");
    inst.x_t = forward_noise(inst.x0, *ctx.schedule, t, inst.eps);
  }
  NodeId out =
      perturbed_output_node(ctx, inst, tape, kNoNode, &inst.clean_ledger);
  inst.clean_out = tape.val(out);
  return inst;
}

PGDResult pgd_max_degradation(const ProbeContext& ctx,
                              const ProbeInstance& inst, double eta,
                              const AttackConfig& cfg, std::uint64_t salt_rep,
                              std::uint64_t salt_level) {
  if (!(eta > 0.0 && eta <= cfg.eta_max))
    throw ConfigError("pgd: eta must be in (0, eta_max]");
  const std::size_t dim = ctx.delta_dim();
  const double alpha = cfg.step_scale * eta / cfg.pgd_steps;

  PGDResult best;
  best.best_degradation = -1.0;
  ComputeLedger total_ledger;
  int aborted_restarts = 0;

  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Rng rng = ctx.seeds.rng(
        inst.id, static_cast<std::uint64_t>(inst.t), kPgdInitTag,
        pgd_salt(salt_rep, salt_level, static_cast<std::uint64_t>(restart)));
    Array delta = project(rng.gaussian_array({dim}), cfg.norm, eta);
    Array momentum_buf = Array::zeros({dim});

    PGDResult run;
    run.best_degradation = -1.0;
    run.termination = PgdTermination::kMaxSteps;
    int low_improvement_streak = 0;
    double prev_d = 0.0;
    bool aborted = false;

    auto evaluate_at = [&](const Array& d, bool with_grad,
                           Array* grad_out) -> double {
      Tape tape;
      NodeId dleaf = tape.leaf(d);
      ComputeLedger pass;
      NodeId pert = perturbed_output_node(ctx, inst, tape, dleaf, &pass);
      NodeId root = ctx.metric->build(tape, tape.constant(inst.clean_out), pert);
      double value = tape.val(root).scalar_value();
      run.ledger.merge(pass);
      run.ledger.metric_evals += 1;
      if (with_grad) {
        GradientMap gm = tape.backward(root, {dleaf});
        run.ledger.net_calls_backward += pass.net_calls;
        *grad_out = std::move(gm.at(dleaf));
      }
      if (value > run.best_degradation) {
        run.best_degradation = value;
        run.best_delta = d;
        run.best_perturbed_output = tape.val(pert);
      }
      run.trace.push_back(value);
      return value;
    };

    try {
      for (int k = 0; k < cfg.pgd_steps; ++k) {
        Array grad;
        double d_val = evaluate_at(delta, true, &grad);
        run.steps_run = k + 1;

        double gnorm = l2_norm(grad);
        if (gnorm < cfg.grad_norm_floor) {
          run.termination = PgdTermination::kGradientFloor;
          break;
        }
        if (cfg.early_stop && k > 0) {
          double rel = (d_val - prev_d) / std::max(std::abs(prev_d), 1e-300);
          if (rel < cfg.early_stop_rel)
            ++low_improvement_streak;
          else
            low_improvement_streak = 0;
          if (low_improvement_streak >= cfg.early_stop_patience) {
            run.termination = PgdTermination::kEarlyStopImprovement;
            break;
          }
        }
        prev_d = d_val;

        Array dir = grad;
        if (cfg.norm == NormKind::kL2) {
          const double scale = 1.0 / std::max(gnorm, 1e-12);
          for (double& v : dir.data) v *= scale;
        } else {
          for (double& v : dir.data)
            v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
        for (std::size_t i = 0; i < dim; ++i)
          momentum_buf.data[i] =
              cfg.momentum * momentum_buf.data[i] + dir.data[i];
        for (std::size_t i = 0; i < dim; ++i)
          delta.data[i] += alpha * momentum_buf.data[i];
        delta = project(delta, cfg.norm, eta);
      }
      if (run.termination == PgdTermination::kMaxSteps ||
          run.termination == PgdTermination::kEarlyStopImprovement) {
        // Final evaluation at the last iterate (Algorithm line: D* uses
        // delta^(K)); gradient-floor exits already evaluated their iterate.
        if (run.termination == PgdTermination::kMaxSteps)
          evaluate_at(delta, false, nullptr);
      }
    } catch (const NumericError&) {
      aborted = true;  // restart aborted, not fatal
    }

    total_ledger.merge(run.ledger);
    if (aborted) {
      ++aborted_restarts;
      continue;
    }
    if (run.best_degradation > best.best_degradation) best = std::move(run);
  }

  if (best.best_degradation < 0.0)
    throw NumericError("pgd: every restart aborted with non-finite values");
  best.ledger = total_ledger;
  best.aborted_restarts = aborted_restarts;
  return best;
}

BisectionOutcome bisect_budget(
    const std::function<double(double eta, int level)>& probe, double eta_max,
    double tau, int bisection_steps) {
  if (!(tau > 0.0)) throw ConfigError("bisection: tau must be > 0");
  if (!(eta_max > 0.0)) throw ConfigError("bisection: eta_max must be > 0");
  BisectionOutcome out;
  double lo = 0.0, hi = eta_max;
  for (int b = 0; b < bisection_steps; ++b) {
    const double eta = 0.5 * (lo + hi);
    const double d = probe(eta, b);
    out.levels.emplace_back(eta, d);
    if (d >= tau) {
      hi = eta;
      out.crossed = true;
    } else {
      lo = eta;
    }
  }
  out.lo = lo;
  out.hi = hi;
  out.c_adv = hi;
  return out;
}

AdvCostResult adversarial_cost(const ProbeContext& ctx, const Clip& clip,
                               const AttackConfig& cfg, int rep) {
  ctx.validate();
  cfg.validate();
  if (!(cfg.tau > 0.0))
    throw ConfigError("adversarial_cost: tau must be calibrated (> 0)");

  const int t = cfg.timestep.resolve(*ctx.schedule);
  ProbeInstance inst = make_probe_instance(ctx, clip, t, rep);

  AdvCostResult result;
  result.clean_out = inst.clean_out;
  result.ledger.merge(inst.clean_ledger);  // the one executed clean pass

  // Saturation pre-check: one PGD run at eta_max. Charged separately so the
  // bisection counters stay at the (K+2)B / (K+1)B convention.
  if (cfg.precheck_at_eta_max) {
    PGDResult pre = pgd_max_degradation(ctx, inst, cfg.eta_max, cfg, rep,
                                        /*salt_level=*/1 << 18);
    result.ledger.reverse_passes_executed +=
        pre.ledger.reverse_passes_executed;
    result.ledger.precheck_reverse_passes =
        pre.ledger.reverse_passes_executed + 1.0;
    result.ledger.net_calls += pre.ledger.net_calls;
    result.ledger.net_calls_backward += pre.ledger.net_calls_backward;
    result.ledger.decoder_calls += pre.ledger.decoder_calls;
    if (pre.best_degradation < cfg.tau) {
      result.c_adv = cfg.eta_max;
      result.bracket_lo = cfg.eta_max;
      result.bracket_hi = cfg.eta_max;
      result.saturated_low = true;
      result.final_perturbed_out = pre.best_perturbed_output;
      return result;
    }
  }

  Array crossing_out, last_out;
  auto probe = [&](double eta, int level) -> double {
    PGDResult r = pgd_max_degradation(ctx, inst, eta, cfg, rep,
                                      static_cast<std::uint64_t>(level));
    LevelSummary summary;
    summary.eta = eta;
    summary.best_degradation = r.best_degradation;
    summary.steps_run = r.steps_run;
    summary.termination = r.termination;
    summary.crossed = r.best_degradation >= cfg.tau;
    result.levels.push_back(summary);
    // The last crossing level is the one whose budget the returned u tracks.
    if (summary.crossed) crossing_out = r.best_perturbed_output;
    last_out = std::move(r.best_perturbed_output);

    // Charge: executed perturbed passes of this level plus one clean
    // reference pass (cached in practice).
    result.ledger.reverse_passes += r.ledger.reverse_passes_executed + 1.0;
    result.ledger.reverse_passes_executed += r.ledger.reverse_passes_executed;
    result.ledger.metric_evals += r.ledger.metric_evals;
    result.ledger.net_calls += r.ledger.net_calls;
    result.ledger.net_calls_backward += r.ledger.net_calls_backward;
    result.ledger.decoder_calls += r.ledger.decoder_calls;
    return r.best_degradation;
  };

  BisectionOutcome out =
      bisect_budget(probe, cfg.eta_max, cfg.tau, cfg.bisection_steps);
  result.c_adv = out.c_adv;
  result.bracket_lo = out.lo;
  result.bracket_hi = out.hi;
  result.saturated_low = !out.crossed;
  result.final_perturbed_out =
      out.crossed ? std::move(crossing_out) : std::move(last_out);
  return result;
}

ScoreRecord score_sample(const ProbeContext& ctx, const Clip& clip,
                         const AttackConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ScoreRecord record;
  record.sample_id = clip.id;
  record.split = to_string(clip.split);
  record.attack = ctx.mode == ProbeMode::kLatent ? "lsa-probe-latent"
                                                 : "lsa-probe";
  record.seed_reps = cfg.seed_reps;
  record.timestep = cfg.timestep.resolve(*ctx.schedule);

  double score_sum = 0.0;
  bool any_saturated = false;
  for (int rep = 0; rep < cfg.seed_reps; ++rep) {
    AdvCostResult r = adversarial_cost(ctx, clip, cfg, rep);
    score_sum += r.c_adv;
    any_saturated = any_saturated || r.saturated_low;
    record.counters.merge(r.ledger);
    record.bracket_lo = r.bracket_lo;
    record.bracket_hi = r.bracket_hi;
    // Secondary degradations at the returned budget, averaged over reps;
    // computed from cached outputs, no extra reverse passes.
    if (!r.final_perturbed_out.data.empty()) {
      for (const Metric* m : ctx.report_metrics) {
        record.secondary[m->name()] +=
            m->value(r.clean_out, r.final_perturbed_out) / cfg.seed_reps;
      }
    }
  }
  record.score = score_sum / cfg.seed_reps;
  record.saturated_low = any_saturated;
  record.counters.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

}  // namespace lsap
