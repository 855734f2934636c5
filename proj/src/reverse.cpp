#include "lsap/reverse.hpp"

#include <cmath>

#include "lsap/errors.hpp"

namespace lsap {

std::vector<int> timestep_path(int t, int stride) {
  if (t < 1) throw ConfigError("timestep_path: t < 1");
  if (stride < 1) throw ConfigError("timestep_path: stride < 1");
  std::vector<int> path;
  for (int u = t; u > 1; u -= stride) path.push_back(u);
  path.push_back(1);
  return path;
}

namespace {

double guarded_sqrt_abar(const NoiseSchedule& s, int t) {
  double sa = s.sqrt_abar(t);
  if (sa < 1e-6)
    throw NumericError("reverse: sqrt(alpha_bar) below 1e-6 at t=" +
                       std::to_string(t));
  return sa;
}

}  // namespace

NodeId x0_hat_node(Tape& tape, NodeId x_t, int t, const Denoiser& den,
                   const NoiseSchedule& s) {
  const double sa = guarded_sqrt_abar(s, t);
  const double sig = sigma_t(s, t);
  NodeId eps = den.predict_eps(tape, x_t, t, s);
  return tape.scalar_mul(1.0 / sa, tape.sub(x_t, tape.scalar_mul(sig, eps)));
}

NodeId ddim_step_node(Tape& tape, NodeId x_t, int t_from, int t_to,
                      const Denoiser& den, const NoiseSchedule& s) {
  if (t_from == 1) return x0_hat_node(tape, x_t, 1, den, s);
  if (!(t_to >= 1 && t_to < t_from))
    throw ConfigError("ddim_step: need 1 <= t_to < t_from");
  const double sa_from = guarded_sqrt_abar(s, t_from);
  const double sig_from = sigma_t(s, t_from);
  const double sa_to = s.sqrt_abar(t_to);
  const double sig_to = sigma_t(s, t_to);
  NodeId eps = den.predict_eps(tape, x_t, t_from, s);
  // x0_hat and the step reuse the same eps prediction (one denoiser call).
  NodeId x0h = tape.scalar_mul(1.0 / sa_from,
                               tape.sub(x_t, tape.scalar_mul(sig_from, eps)));
  return tape.add(tape.scalar_mul(sa_to, x0h), tape.scalar_mul(sig_to, eps));
}

NodeId reverse_from_node(Tape& tape, NodeId x_t, int t, const Denoiser& den,
                         const NoiseSchedule& s, const ReverseConfig& cfg,
                         ComputeLedger* ledger) {
  const std::vector<int> path = timestep_path(t, cfg.stride);
  if (cfg.checkpointing) {
    tape.set_checkpointing(true);
    tape.checkpoint();  // everything built so far stays available
  }
  NodeId x = x_t;
  for (std::size_t i = 0; i < path.size(); ++i) {
    int from = path[i];
    int to = i + 1 < path.size() ? path[i + 1] : 1;
    x = ddim_step_node(tape, x, from, to, den, s);
    if (cfg.checkpointing) tape.checkpoint();
  }
  if (ledger) {
    ledger->reverse_passes_executed += 1;
    ledger->net_calls += static_cast<std::int64_t>(path.size());
  }
  return x;
}

Array reverse_from(const Array& x_t, int t, const Denoiser& den,
                   const NoiseSchedule& s, const ReverseConfig& cfg,
                   ComputeLedger* ledger) {
  Tape tape;
  NodeId in = tape.constant(x_t);
  NodeId out = reverse_from_node(tape, in, t, den, s, cfg, ledger);
  return tape.val(out);
}

// ---------------------------------------------------------------------------
// Latent codec

LatentCodec::LatentCodec(std::size_t n, std::size_t m) : n_(n), m_(m) {
  if (m_ == 0 || m_ > n_) throw ConfigError("LatentCodec: need 0 < m <= n");
  enc_rows_.resize(m_ * n_);
  for (std::size_t k = 0; k < m_; ++k) {
    const double scale =
        k == 0 ? std::sqrt(1.0 / static_cast<double>(n_))
               : std::sqrt(2.0 / static_cast<double>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      enc_rows_[k * n_ + i] =
          scale * std::cos(M_PI * (static_cast<double>(i) + 0.5) *
                           static_cast<double>(k) / static_cast<double>(n_));
  }
  std::vector<double> dec(n_ * m_);
  for (std::size_t k = 0; k < m_; ++k)
    for (std::size_t i = 0; i < n_; ++i) dec[i * m_ + k] = enc_rows_[k * n_ + i];
  enc_map_ = std::make_unique<DenseMap>(m_, n_, enc_rows_);
  dec_map_ = std::make_unique<DenseMap>(n_, m_, std::move(dec));
}

LatentCodec::LatentCodec(std::size_t n, std::size_t m,
                         std::vector<double> enc_rows)
    : n_(n), m_(m), enc_rows_(std::move(enc_rows)) {
  if (m_ == 0 || m_ > n_) throw ConfigError("LatentCodec: need 0 < m <= n");
  if (enc_rows_.size() != m_ * n_)
    throw ConfigError("LatentCodec: basis size mismatch");
  std::vector<double> dec(n_ * m_);
  for (std::size_t k = 0; k < m_; ++k)
    for (std::size_t i = 0; i < n_; ++i) dec[i * m_ + k] = enc_rows_[k * n_ + i];
  enc_map_ = std::make_unique<DenseMap>(m_, n_, enc_rows_);
  dec_map_ = std::make_unique<DenseMap>(n_, m_, std::move(dec));
}

NodeId LatentCodec::encode_node(Tape& tape, NodeId x) const {
  return tape.affine(enc_map_.get(), x);
}

NodeId LatentCodec::decode_node(Tape& tape, NodeId z) const {
  return tape.affine(dec_map_.get(), z);
}

Array LatentCodec::encode(const Array& x) const {
  Array out = Array::zeros(enc_map_->out_shape(x.shape));
  enc_map_->apply(x, out);
  return out;
}

Array LatentCodec::decode(const Array& z) const {
  Array out = Array::zeros(dec_map_->out_shape(z.shape));
  dec_map_->apply(z, out);
  return out;
}

double LatentCodec::gramian_error() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < m_; ++a)
    for (std::size_t b = 0; b < m_; ++b) {
      double dotv = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        dotv += enc_rows_[a * n_ + i] * enc_rows_[b * n_ + i];
      worst = std::max(worst, std::abs(dotv - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

NodeId reverse_latent_node(Tape& tape, const Array& x0, const Array& eps_z,
                           int t, const Denoiser& latent_den,
                           const LatentCodec& codec, NodeId delta_or_none,
                           const NoiseSchedule& s, const ReverseConfig& cfg,
                           ComputeLedger* ledger) {
  if (x0.numel() != codec.n())
    throw ConfigError("reverse_latent: waveform dimension mismatch");
  if (latent_den.dim() != codec.m())
    throw ConfigError("reverse_latent: denoiser/codec dimension mismatch");
  if (eps_z.numel() != codec.m())
    throw ConfigError("reverse_latent: eps dimension mismatch");
  Array z0 = codec.encode(x0);
  Array z_t = forward_noise(z0, s, t, eps_z);
  NodeId z = tape.constant(std::move(z_t));
  if (delta_or_none != kNoNode) {
    if (tape.val(delta_or_none).numel() != codec.m())
      throw ConfigError("reverse_latent: delta dimension mismatch");
    z = tape.add(z, tape.scalar_mul(sigma_t(s, t), delta_or_none));
  }
  NodeId zr = reverse_from_node(tape, z, t, latent_den, s, cfg, ledger);
  NodeId xw = codec.decode_node(tape, zr);
  if (cfg.checkpointing) tape.checkpoint();
  if (ledger) ledger->decoder_calls += 1;
  return xw;
}

}  // namespace lsap
