#include "lsap/denoiser.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"
#include "lsap/parallel.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint and clip formats assume a little-endian host");

namespace lsap {

// ---------------------------------------------------------------------------
// Analytic Gaussian-posterior oracle

AnalyticPriorDenoiser::AnalyticPriorDenoiser(Array mean, double tau2)
    : mean_(std::make_shared<Array>(std::move(mean))), tau2_(tau2) {
  if (!(tau2_ > 0.0)) throw ConfigError("AnalyticPrior: tau2 must be > 0");
}

NodeId AnalyticPriorDenoiser::predict_eps(Tape& tape, NodeId x_t, int t,
                                          const NoiseSchedule& s) const {
  const double abar = s.abar(t);
  const double sa = std::sqrt(abar);
  const double sig = sigma_t(s, t);
  const double c = sa * tau2_ / (abar * tau2_ + sig * sig);
  NodeId mu = tape.constant(mean_);
  // x0_post = mu + c (x_t - sa mu); eps = (x_t - sa x0_post) / sig
  NodeId centered = tape.sub(x_t, tape.scalar_mul(sa, mu));
  NodeId x0_post = tape.add(mu, tape.scalar_mul(c, centered));
  return tape.scalar_mul(1.0 / sig, tape.sub(x_t, tape.scalar_mul(sa, x0_post)));
}

Array AnalyticPriorDenoiser::posterior_x0(const Array& x_t, int t,
                                          const NoiseSchedule& s) const {
  const double abar = s.abar(t);
  const double sa = std::sqrt(abar);
  const double c = sa * tau2_ / (abar * tau2_ + (1.0 - abar));
  Array out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = mean_->data[i] + c * (x_t.data[i] - sa * mean_->data[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Trainable MLP

std::string MlpArch::descriptor() const {
  nlohmann::json j;
  j["type"] = "mlp-x0";
  j["activation"] = "silu";
  j["input_dim"] = input_dim;
  j["hidden"] = hidden;
  j["temb_dim"] = temb_dim;
  return j.dump();
}

MlpArch MlpArch::from_descriptor(const std::string& json) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded() || j.value("type", "") != "mlp-x0")
    throw ArtifactError("checkpoint: unrecognized architecture descriptor");
  MlpArch a;
  a.input_dim = j.at("input_dim").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::size_t>();
  a.temb_dim = j.at("temb_dim").get<std::size_t>();
  return a;
}

std::vector<std::vector<std::size_t>> MlpArch::weight_shapes() const {
  const std::size_t in = input_dim + temb_dim;
  return {{hidden, in}, {hidden},    {hidden, hidden},
          {hidden},     {input_dim, hidden}, {input_dim}};
}

std::size_t MlpArch::weight_count() const {
  std::size_t n = 0;
  for (const auto& s : weight_shapes()) n += Array::numel_of(s);
  return n;
}

DenoiserParams DenoiserParams::init(const MlpArch& arch, std::uint64_t seed) {
  DenoiserParams p;
  p.arch = arch;
  p.flat.reserve(arch.weight_count());
  Rng rng(seed);
  for (const auto& shape : arch.weight_shapes()) {
    if (shape.size() == 2) {
      double lim = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      for (std::size_t i = 0; i < shape[0] * shape[1]; ++i)
        p.flat.push_back(rng.uniform(-lim, lim));
    } else {
      for (std::size_t i = 0; i < shape[0]; ++i) p.flat.push_back(0.0);
    }
  }
  return p;
}

std::vector<double> sinusoidal_temb(int t, std::size_t dim) {
  std::vector<double> emb(dim, 0.0);
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double denom = half > 1 ? static_cast<double>(half - 1) : 1.0;
    double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / denom);
    emb[i] = std::sin(t * freq);
    emb[half + i] = std::cos(t * freq);
  }
  return emb;
}

MlpDenoiser::MlpDenoiser(DenoiserParams params, int schedule_T)
    : params_(std::move(params)) {
  if (params_.flat.size() != params_.arch.weight_count())
    throw ArtifactError("MlpDenoiser: flat weight count mismatch");
  refresh_matrices();
  pads_.reserve(static_cast<std::size_t>(schedule_T));
  for (int t = 1; t <= schedule_T; ++t)
    pads_.push_back(std::make_unique<PadMap>(
        params_.arch.input_dim, sinusoidal_temb(t, params_.arch.temb_dim)));
}

void MlpDenoiser::refresh_matrices() {
  mats_.clear();
  std::size_t off = 0;
  for (const auto& shape : params_.arch.weight_shapes()) {
    std::size_t n = Array::numel_of(shape);
    mats_.push_back(std::make_shared<Array>(
        shape, std::vector<double>(params_.flat.begin() + off,
                                   params_.flat.begin() + off + n)));
    off += n;
  }
}

void MlpDenoiser::set_flat(std::vector<double> flat) {
  if (flat.size() != params_.arch.weight_count())
    throw ArtifactError("set_flat: weight count mismatch");
  params_.flat = std::move(flat);
  refresh_matrices();
}

NodeId MlpDenoiser::build_graph(Tape& tape, NodeId x_t, int t,
                                const NoiseSchedule& s,
                                WeightNodes* weights) const {
  if (t < 1 || t > static_cast<int>(pads_.size()))
    throw ConfigError("MlpDenoiser: t outside schedule");
  std::vector<NodeId> w;
  w.reserve(mats_.size());
  for (const auto& m : mats_) w.push_back(tape.leaf(m));
  if (weights) weights->ids = w;

  NodeId in = tape.affine(pads_[static_cast<std::size_t>(t - 1)].get(), x_t);
  NodeId h1 = tape.silu(tape.add(tape.matmul(w[0], in), w[1]));
  NodeId h2 = tape.silu(tape.add(tape.matmul(w[2], h1), w[3]));
  NodeId x0_pred = tape.add(tape.matmul(w[4], h2), w[5]);
  const double sa = s.sqrt_abar(t);
  const double sig = sigma_t(s, t);
  return tape.scalar_mul(1.0 / sig,
                         tape.sub(x_t, tape.scalar_mul(sa, x0_pred)));
}

NodeId MlpDenoiser::predict_eps(Tape& tape, NodeId x_t, int t,
                                const NoiseSchedule& s) const {
  return build_graph(tape, x_t, t, s, nullptr);
}

// ---------------------------------------------------------------------------
// Training

TrainResult train_denoiser(MlpDenoiser& model, const std::vector<Clip>& members,
                           const NoiseSchedule& s, const TrainConfig& cfg) {
  if (members.empty()) throw ConfigError("train: empty corpus");
  if (cfg.steps < 0 || cfg.batch < 1 || !(cfg.lr > 0.0))
    throw ConfigError("train: invalid config");
  const std::size_t n = model.dim();
  const std::size_t wcount = model.params().arch.weight_count();
  const SeedPolicy seeds{cfg.seed};

  std::vector<double> velocity(wcount, 0.0);
  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));

  const auto shapes = model.params().arch.weight_shapes();
  std::vector<std::size_t> offsets(shapes.size());
  {
    std::size_t off = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      offsets[i] = off;
      off += Array::numel_of(shapes[i]);
    }
  }

  for (int step = 0; step < cfg.steps; ++step) {
    // Draw the whole batch serially so the stream is independent of the
    // worker count, then evaluate items in parallel.
    Rng rng = seeds.rng("train", static_cast<std::uint64_t>(step), "batch");
    struct Item {
      Array x_t;
      Array eps;
      int t;
    };
    std::vector<Item> items(static_cast<std::size_t>(cfg.batch));
    for (auto& it : items) {
      std::size_t idx = rng.next_below(members.size());
      if (members[idx].samples.data.size() != n)
        throw ConfigError("train: clip length mismatch");
      it.t = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(s.T)));
      it.eps = rng.gaussian_array({n});
      it.x_t = forward_noise(members[idx].samples, s, it.t, it.eps);
    }

    std::vector<std::vector<double>> grads(items.size());
    std::vector<double> losses(items.size(), 0.0);
    parallel_for(items.size(), [&](std::size_t i) {
      Tape tape;
      NodeId x_t = tape.constant(items[i].x_t);
      NodeId eps = tape.constant(items[i].eps);
      MlpDenoiser::WeightNodes w;
      NodeId eps_hat = model.build_graph(tape, x_t, items[i].t, s, &w);
      NodeId loss = tape.mean(tape.square(tape.sub(eps, eps_hat)));
      losses[i] = tape.val(loss).data[0];
      GradientMap gm = tape.backward(loss, w.ids);
      grads[i].resize(wcount);
      for (std::size_t k = 0; k < w.ids.size(); ++k) {
        const Array& g = gm.at(w.ids[k]);
        std::copy(g.data.begin(), g.data.end(),
                  grads[i].begin() + static_cast<std::ptrdiff_t>(offsets[k]));
      }
    });

    double batch_loss = 0.0;
    for (double l : losses) batch_loss += l;
    batch_loss /= static_cast<double>(items.size());
    if (!std::isfinite(batch_loss))
      throw NumericError("training diverged (non-finite loss) at step " +
                         std::to_string(step));
    result.loss_trace.push_back(batch_loss);

    std::vector<double> flat = model.params().flat;
    const double inv_batch = 1.0 / static_cast<double>(items.size());
    for (std::size_t k = 0; k < wcount; ++k) {
      double g = 0.0;
      for (const auto& gi : grads) g += gi[k];
      g *= inv_batch;
      velocity[k] = cfg.momentum * velocity[k] + g;
      flat[k] -= cfg.lr * velocity[k];
    }
    model.set_flat(std::move(flat));
  }
  return result;
}

double mean_denoise_loss(const Denoiser& model, const Clip& clip,
                         const NoiseSchedule& s, int reps, std::uint64_t seed) {
  const SeedPolicy seeds{seed};
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = seeds.rng(clip.id, static_cast<std::uint64_t>(r), "denoise-loss");
    int t = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(s.T)));
    Array eps = rng.gaussian_array(clip.samples.shape);
    Array x_t = forward_noise(clip.samples, s, t, eps);
    Tape tape;
    NodeId xt = tape.constant(x_t);
    NodeId eps_hat = model.predict_eps(tape, xt, t, s);
    NodeId loss = tape.mean(tape.square(tape.sub(tape.constant(eps), eps_hat)));
    total += tape.val(loss).data[0];
  }
  return total / reps;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {
constexpr char kMagic[4] = {'L', 'S', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const DenoiserParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArtifactError("save_checkpoint: cannot open " + path);
  const std::string desc = params.arch.descriptor();
  const std::uint32_t dlen = static_cast<std::uint32_t>(desc.size());
  const std::uint64_t wcount = params.flat.size();
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  f.write(reinterpret_cast<const char*>(&dlen), sizeof(dlen));
  f.write(desc.data(), dlen);
  f.write(reinterpret_cast<const char*>(&wcount), sizeof(wcount));
  f.write(reinterpret_cast<const char*>(params.flat.data()),
          static_cast<std::streamsize>(wcount * sizeof(double)));
  if (!f) throw ArtifactError("save_checkpoint: write failed for " + path);
}

DenoiserParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArtifactError("load_checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw ArtifactError("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0, dlen = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!f || version != kVersion)
    throw ArtifactError("load_checkpoint: unsupported version");
  f.read(reinterpret_cast<char*>(&dlen), sizeof(dlen));
  if (!f) throw ArtifactError("load_checkpoint: truncated header");
  std::string desc(dlen, '\0');
  f.read(desc.data(), dlen);
  std::uint64_t wcount = 0;
  f.read(reinterpret_cast<char*>(&wcount), sizeof(wcount));
  if (!f) throw ArtifactError("load_checkpoint: truncated header");
  DenoiserParams p;
  p.arch = MlpArch::from_descriptor(desc);
  if (wcount != p.arch.weight_count())
    throw ArtifactError("load_checkpoint: weight count does not match "
                        "architecture descriptor");
  p.flat.resize(wcount);
  f.read(reinterpret_cast<char*>(p.flat.data()),
         static_cast<std::streamsize>(wcount * sizeof(double)));
  if (!f) throw ArtifactError("load_checkpoint: truncated weights");
  return p;
}

}  // namespace lsap
