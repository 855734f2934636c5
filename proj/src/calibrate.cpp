#include "lsap/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"
#include "lsap/parallel.hpp"

namespace lsap {

void CalibrationConfig::validate() const {
  if (eta_ref < 0.0) throw ConfigError("calibration: eta_ref must be >= 0");
  if (directions < 1) throw ConfigError("calibration: directions must be >= 1");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw ConfigError("calibration: percentile must be in (0, 100)");
}

double nearest_rank_percentile(const std::vector<double>& sorted_values,
                               double percentile) {
  if (sorted_values.empty())
    throw ConfigError("percentile of an empty sequence");
  const double n = static_cast<double>(sorted_values.size());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(percentile / 100.0 * n));
  rank = std::max<std::size_t>(1, std::min(sorted_values.size(), rank));
  return sorted_values[rank - 1];
}

std::string probe_fingerprint(const ProbeContext& ctx,
                              const TimestepSpec& timestep) {
  nlohmann::json j;
  j["schedule"] = {{"kind", to_string(ctx.schedule->kind)},
                   {"T", ctx.schedule->T},
                   {"beta_min", ctx.schedule->beta_min},
                   {"beta_max", ctx.schedule->beta_max}};
  j["metric"] = nlohmann::json::parse(ctx.metric->config_fingerprint());
  j["timestep"] = {{"t", timestep.t}, {"t_ratio", timestep.t_ratio}};
  j["mode"] = to_string(ctx.mode);
  j["codec_m"] = ctx.mode == ProbeMode::kLatent ? ctx.codec->m() : 0;
  j["stride"] = ctx.reverse.stride;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

CalibrationResult calibrate_tau(const std::vector<Clip>& dev_set,
                                const ProbeContext& ctx,
                                const CalibrationConfig& cfg) {
  ctx.validate();
  cfg.validate();
  if (dev_set.empty()) throw ConfigError("calibrate: empty dev set");
  for (const Clip& c : dev_set)
    if (c.split != Split::kDevNonmember)
      throw ConfigError("calibrate: clip " + c.id +
                        " is not in the dev-nonmember split");

  const int t = cfg.timestep.resolve(*ctx.schedule);
  const std::size_t L = static_cast<std::size_t>(cfg.directions);
  const std::size_t dim = ctx.delta_dim();

  std::vector<double> values(dev_set.size() * L, 0.0);
  parallel_for(dev_set.size(), [&](std::size_t ci) {
    const Clip& clip = dev_set[ci];
    ProbeInstance inst = make_probe_instance(ctx, clip, t, /*rep=*/0);
    for (std::size_t l = 0; l < L; ++l) {
      Rng rng = ctx.seeds.rng(clip.id, static_cast<std::uint64_t>(t),
                              "calib-dir", l);
      Array u = rng.gaussian_array({dim});
      const double norm = l2_norm(u);
      for (double& v : u.data) v *= cfg.eta_ref / std::max(norm, 1e-300);
      Tape tape;
      // One perturbed reverse pass per direction; no gradients needed.
      NodeId pert_in = tape.constant(std::move(u));
      ComputeLedger pass;
      NodeId pert;
      if (ctx.mode == ProbeMode::kLatent) {
        pert = reverse_latent_node(tape, inst.x0, inst.eps, t, *ctx.denoiser,
                                   *ctx.codec, pert_in, *ctx.schedule,
                                   ctx.reverse, &pass);
      } else {
        NodeId x = tape.constant(inst.x_t);
        x = tape.add(x, tape.scalar_mul(sigma_t(*ctx.schedule, t), pert_in));
        pert = reverse_from_node(tape, x, t, *ctx.denoiser, *ctx.schedule,
                                 ctx.reverse, &pass);
      }
      NodeId root =
          ctx.metric->build(tape, tape.constant(inst.clean_out), pert);
      values[ci * L + l] = tape.val(root).scalar_value();
    }
  });

  std::sort(values.begin(), values.end());
  CalibrationResult result;
  result.tau = nearest_rank_percentile(values, cfg.percentile);
  result.valid = result.tau > 0.0;
  result.sample_count = static_cast<int>(dev_set.size());
  result.direction_count = cfg.directions;
  result.percentile = cfg.percentile;
  result.eta_ref = cfg.eta_ref;
  result.values = std::move(values);
  result.fingerprint = probe_fingerprint(ctx, cfg.timestep);
  nlohmann::json echo{{"eta_ref", cfg.eta_ref},
                      {"directions", cfg.directions},
                      {"percentile", cfg.percentile},
                      {"percentile_method", "nearest-rank"},
                      {"metric", to_string(cfg.metric)},
                      {"timestep",
                       {{"t", cfg.timestep.t}, {"t_ratio", cfg.timestep.t_ratio}}}};
  result.config_echo = echo.dump();
  return result;
}

}  // namespace lsap
