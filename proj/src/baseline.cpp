#include "lsap/baseline.hpp"

#include <chrono>
#include <cmath>

#include "lsap/errors.hpp"

namespace lsap {

BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "loss-at-t") return BaselineKind::kLossAtT;
  if (s == "endpoint-reconstruction")
    return BaselineKind::kEndpointReconstruction;
  if (s == "trajectory") return BaselineKind::kTrajectory;
  throw ConfigError("unknown baseline kind: " + s);
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kLossAtT: return "loss-at-t";
    case BaselineKind::kEndpointReconstruction:
      return "endpoint-reconstruction";
    case BaselineKind::kTrajectory: return "trajectory";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (repetitions < 1) throw ConfigError("baseline: repetitions must be >= 1");
  if (traj_offset < 0) throw ConfigError("baseline: t' must be >= 0");
}

namespace {

constexpr const char* kForwardEpsTag = "forward-eps";

/// Model-space x0 (identity for waveform mode, encoded for latent mode).
Array model_x0(const ProbeContext& ctx, const Clip& clip) {
  if (ctx.mode == ProbeMode::kLatent) return ctx.codec->encode(clip.samples);
  return clip.samples;
}

}  // namespace

double loss_score(const ProbeContext& ctx, const Clip& clip, int t, int reps,
                  ComputeLedger* ledger) {
  ctx.validate();
  const Array x0 = model_x0(ctx, clip);
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = ctx.seeds.rng(clip.id, static_cast<std::uint64_t>(t),
                            kForwardEpsTag, static_cast<std::uint64_t>(rep));
    Array eps = rng.gaussian_array(x0.shape);
    Array x_t = forward_noise(x0, *ctx.schedule, t, eps);
    Tape tape;
    NodeId eps_hat =
        ctx.denoiser->predict_eps(tape, tape.constant(x_t), t, *ctx.schedule);
    NodeId loss =
        tape.mean(tape.square(tape.sub(tape.constant(eps), eps_hat)));
    total += tape.val(loss).scalar_value();
    if (ledger) ledger->net_calls += 1;
  }
  return -total / reps;
}

double endpoint_score(const ProbeContext& ctx, const Clip& clip, int t,
                      int reps, ComputeLedger* ledger) {
  ctx.validate();
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    ProbeInstance inst = make_probe_instance(ctx, clip, t, rep);
    total += ctx.metric->value(clip.samples, inst.clean_out);
    if (ledger) {
      ledger->merge(inst.clean_ledger);
      ledger->metric_evals += 1;
    }
  }
  return -total / reps;
}

double trajectory_score(const ProbeContext& ctx, const Clip& clip, int t,
                        int t_prime, NormKind p, int reps,
                        ComputeLedger* ledger) {
  ctx.validate();
  if (t_prime < 1)
    throw ConfigError("trajectory: t' must be >= 1 (t' = 0 is degenerate)");
  const int target = t - t_prime;
  if (target < 1 || t_prime >= t)
    throw ConfigError("trajectory: need 1 <= t - t' < t");
  const Array x0 = model_x0(ctx, clip);
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = ctx.seeds.rng(clip.id, static_cast<std::uint64_t>(t),
                            kForwardEpsTag, static_cast<std::uint64_t>(rep));
    Array eps = rng.gaussian_array(x0.shape);
    Array x_t = forward_noise(x0, *ctx.schedule, t, eps);
    Array truth = forward_noise(x0, *ctx.schedule, target, eps);

    // DDIM prediction from t down to t - t', honoring the configured stride.
    Tape tape;
    NodeId x = tape.constant(x_t);
    int u = t;
    std::int64_t calls = 0;
    while (u > target) {
      int next = std::max(u - ctx.reverse.stride, target);
      x = ddim_step_node(tape, x, u, next, *ctx.denoiser, *ctx.schedule);
      ++calls;
      u = next;
    }
    const Array& pred = tape.val(x);
    double dist = 0.0;
    if (p == NormKind::kL2) {
      for (std::size_t i = 0; i < pred.data.size(); ++i) {
        double d = truth.data[i] - pred.data[i];
        dist += d * d;
      }
      dist = std::sqrt(dist);
    } else {
      for (std::size_t i = 0; i < pred.data.size(); ++i)
        dist = std::max(dist, std::abs(truth.data[i] - pred.data[i]));
    }
    total += dist;
    if (ledger) {
      ledger->reverse_passes_executed += 1;
      ledger->net_calls += calls;
    }
  }
  return -total / reps;
}

int match_compute(double target_units, double unit_cost) {
  if (!(target_units > 0.0) || !(unit_cost > 0.0))
    throw ConfigError("match_compute: target and unit cost must be > 0");
  const long long k0 =
      std::max(1LL, static_cast<long long>(std::floor(target_units / unit_cost)));
  long long best = k0;
  double best_err = std::abs(static_cast<double>(k0) * unit_cost - target_units);
  for (long long k : {k0 + 1}) {
    double err = std::abs(static_cast<double>(k) * unit_cost - target_units);
    if (err < best_err) {
      best = k;
      best_err = err;
    }
  }
  if (best_err > 0.05 * target_units)
    throw ArtifactError(
        "compute parity unattainable: best repetition count misses the "
        "target by " +
        std::to_string(best_err / target_units * 100.0) + "%");
  return static_cast<int>(best);
}

double baseline_unit_cost(const ProbeContext& ctx, const BaselineConfig& cfg) {
  const int t = cfg.timestep.resolve(*ctx.schedule);
  switch (cfg.kind) {
    case BaselineKind::kLossAtT:
      return 1.0;
    case BaselineKind::kEndpointReconstruction: {
      double calls = static_cast<double>(
          timestep_path(t, ctx.reverse.stride).size());
      return calls + (ctx.mode == ProbeMode::kLatent ? 1.0 : 0.0);
    }
    case BaselineKind::kTrajectory: {
      int t_prime = cfg.traj_offset > 0 ? cfg.traj_offset : t / 2;
      const int target = t - t_prime;
      double calls = 0.0;
      int u = t;
      while (u > target) {
        u = std::max(u - ctx.reverse.stride, target);
        calls += 1.0;
      }
      return std::max(1.0, calls);
    }
  }
  throw ConfigError("baseline_unit_cost: bad kind");
}

ScoreRecord baseline_score_sample(const ProbeContext& ctx, const Clip& clip,
                                  const BaselineConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int t = cfg.timestep.resolve(*ctx.schedule);
  ScoreRecord record;
  record.sample_id = clip.id;
  record.split = to_string(clip.split);
  record.attack = "baseline-" + to_string(cfg.kind);
  record.seed_reps = cfg.repetitions;
  record.timestep = t;
  switch (cfg.kind) {
    case BaselineKind::kLossAtT:
      record.score =
          loss_score(ctx, clip, t, cfg.repetitions, &record.counters);
      break;
    case BaselineKind::kEndpointReconstruction:
      record.score =
          endpoint_score(ctx, clip, t, cfg.repetitions, &record.counters);
      break;
    case BaselineKind::kTrajectory: {
      int t_prime = cfg.traj_offset > 0 ? cfg.traj_offset : t / 2;
      record.score = trajectory_score(ctx, clip, t, t_prime, cfg.traj_norm,
                                      cfg.repetitions, &record.counters);
      break;
    }
  }
  record.counters.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return record;
}

}  // namespace lsap
