#pragma once

#include <memory>
#include <vector>

#include "lsap/denoiser.hpp"
#include "lsap/records.hpp"
#include "lsap/schedule.hpp"
#include "lsap/tape.hpp"

namespace lsap {

struct ReverseConfig {
  int stride = 1;
  bool checkpointing = false;
};

/// Descending timestep sequence from t to 1: t, t-stride, ..., always ending
/// at 1. One denoiser call is spent per entry.
std::vector<int> timestep_path(int t, int stride);

/// Stepwise denoised estimate (x_t - sigma_t eps_theta) / sqrt(abar_t) as a
/// graph node. Errors when sqrt(abar_t) falls below 1e-6.
NodeId x0_hat_node(Tape& tape, NodeId x_t, int t, const Denoiser& den,
                   const NoiseSchedule& s);

/// One deterministic reverse step from index t_from to t_to < t_from:
/// sqrt(abar_to) x0_hat + sqrt(1-abar_to) eps_theta(x_t, t_from).
NodeId ddim_step_node(Tape& tape, NodeId x_t, int t_from, int t_to,
                      const Denoiser& den, const NoiseSchedule& s);

/// The reverse operator: composes steps down the timestep path and finishes
/// with x0_hat at index 1. Counts one executed reverse pass on the ledger.
/// With cfg.checkpointing the tape drops per-step interiors and backward
/// recomputes them segment by segment.
NodeId reverse_from_node(Tape& tape, NodeId x_t, int t, const Denoiser& den,
                         const NoiseSchedule& s, const ReverseConfig& cfg,
                         ComputeLedger* ledger = nullptr);

/// Value-level wrapper around reverse_from_node.
Array reverse_from(const Array& x_t, int t, const Denoiser& den,
                   const NoiseSchedule& s, const ReverseConfig& cfg,
                   ComputeLedger* ledger = nullptr);

/// Orthonormal analysis/synthesis pair standing in for a frozen VAE:
/// encode projects onto m cosine-basis rows, decode is the transpose.
class LatentCodec {
 public:
  /// Truncated orthonormal DCT-II basis with m rows over n samples.
  LatentCodec(std::size_t n, std::size_t m);
  /// Custom orthonormal rows (m x n row-major), e.g. a square rotation.
  LatentCodec(std::size_t n, std::size_t m, std::vector<double> enc_rows);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  NodeId encode_node(Tape& tape, NodeId x) const;
  NodeId decode_node(Tape& tape, NodeId z) const;
  Array encode(const Array& x) const;
  Array decode(const Array& z) const;

  /// max |Enc Enc^T - I|; the codec invariant requires < 1e-10.
  double gramian_error() const;

 private:
  std::size_t n_, m_;
  std::vector<double> enc_rows_;
  std::unique_ptr<DenseMap> enc_map_;
  std::unique_ptr<DenseMap> dec_map_;
};

/// Latent-mode probe pipeline: encode x0, forward-noise in latent space with
/// eps_z, optionally add sigma_t * delta (a tape node), run the latent
/// reverse operator and decode with the frozen codec. Returns the decoded
/// waveform node; counts one reverse pass and one decoder call.
NodeId reverse_latent_node(Tape& tape, const Array& x0, const Array& eps_z,
                           int t, const Denoiser& latent_den,
                           const LatentCodec& codec, NodeId delta_or_none,
                           const NoiseSchedule& s, const ReverseConfig& cfg,
                           ComputeLedger* ledger = nullptr);

}  // namespace lsap
