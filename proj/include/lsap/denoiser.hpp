#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsap/rng.hpp"
#include "lsap/schedule.hpp"
#include "lsap/tape.hpp"

namespace lsap {

/// Noise predictor eps_theta(x_t, t) exposed as a graph builder so gradients
/// w.r.t. x_t (and, for the trainable model, the weights) flow through it.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual std::size_t dim() const = 0;
  virtual NodeId predict_eps(Tape& tape, NodeId x_t, int t,
                             const NoiseSchedule& s) const = 0;
};

/// Closed-form posterior denoiser for an isotropic Gaussian prior
/// N(mean, tau2 I): the exact E[eps | x_t], used as a verification oracle.
class AnalyticPriorDenoiser : public Denoiser {
 public:
  AnalyticPriorDenoiser(Array mean, double tau2);
  std::size_t dim() const override { return mean_->numel(); }
  NodeId predict_eps(Tape& tape, NodeId x_t, int t,
                     const NoiseSchedule& s) const override;

  /// Posterior x0 estimate as plain arithmetic (for scalar-recursion tests).
  Array posterior_x0(const Array& x_t, int t, const NoiseSchedule& s) const;

 private:
  std::shared_ptr<const Array> mean_;
  double tau2_;
};

/// Test oracle that always returns a fixed eps: with the eps used by
/// forward_noise, every reverse formula inverts exactly.
class ExactNoiseDenoiser : public Denoiser {
 public:
  explicit ExactNoiseDenoiser(Array eps)
      : eps_(std::make_shared<Array>(std::move(eps))) {}
  std::size_t dim() const override { return eps_->numel(); }
  NodeId predict_eps(Tape& tape, NodeId /*x_t*/, int /*t*/,
                     const NoiseSchedule& /*s*/) const override {
    return tape.constant(eps_);
  }

 private:
  std::shared_ptr<const Array> eps_;
};

/// eps_theta == 0.
class ZeroDenoiser : public Denoiser {
 public:
  explicit ZeroDenoiser(std::size_t n) : n_(n) {}
  std::size_t dim() const override { return n_; }
  NodeId predict_eps(Tape& tape, NodeId /*x_t*/, int /*t*/,
                     const NoiseSchedule& /*s*/) const override {
    return tape.constant(Array::zeros({n_}));
  }

 private:
  std::size_t n_;
};

/// Architecture of the trainable toy model: two SiLU hidden layers on
/// [x_t ; sinusoidal temb], predicting x0 internally and converting to eps
/// through the forward identity (keeps the bottleneck model expressive
/// enough to memorize clips while honoring the eps contract).
struct MlpArch {
  std::size_t input_dim = 0;
  std::size_t hidden = 128;
  std::size_t temb_dim = 16;

  std::string descriptor() const;
  static MlpArch from_descriptor(const std::string& json);
  std::vector<std::vector<std::size_t>> weight_shapes() const;
  std::size_t weight_count() const;
};

struct DenoiserParams {
  MlpArch arch;
  std::vector<double> flat;

  static DenoiserParams init(const MlpArch& arch, std::uint64_t seed);
};

std::vector<double> sinusoidal_temb(int t, std::size_t dim);

class MlpDenoiser : public Denoiser {
 public:
  MlpDenoiser(DenoiserParams params, int schedule_T);

  std::size_t dim() const override { return params_.arch.input_dim; }
  NodeId predict_eps(Tape& tape, NodeId x_t, int t,
                     const NoiseSchedule& s) const override;

  struct WeightNodes {
    std::vector<NodeId> ids;  // W1 b1 W2 b2 W3 b3
  };
  /// Same graph with the weight leaf ids exposed for training.
  NodeId build_graph(Tape& tape, NodeId x_t, int t, const NoiseSchedule& s,
                     WeightNodes* weights) const;

  const DenoiserParams& params() const { return params_; }
  void set_flat(std::vector<double> flat);

 private:
  void refresh_matrices();

  DenoiserParams params_;
  std::vector<std::shared_ptr<const Array>> mats_;  // W1 b1 W2 b2 W3 b3
  std::vector<std::unique_ptr<PadMap>> pads_;       // one per timestep
};

struct TrainConfig {
  int steps = 3000;
  int batch = 16;
  double lr = 2e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> loss_trace;  // one mean batch loss per step
};

/// Plain SGD with momentum on E||eps - eps_theta(x_t, t)||^2 over uniform t
/// and Gaussian eps. Deterministic for a fixed seed and any worker count.
TrainResult train_denoiser(MlpDenoiser& model, const std::vector<Clip>& members,
                           const NoiseSchedule& s, const TrainConfig& cfg);

/// Mean denoising loss of one clip averaged over `reps` fixed-seed draws of
/// (t, eps); used for the overfitting check.
double mean_denoise_loss(const Denoiser& model, const Clip& clip,
                         const NoiseSchedule& s, int reps, std::uint64_t seed);

// Checkpoint file: magic "LSAP", u32 version, u32 descriptor length,
// descriptor JSON (UTF-8), u64 weight count, raw little-endian doubles.
void save_checkpoint(const DenoiserParams& params, const std::string& path);
DenoiserParams load_checkpoint(const std::string& path);

}  // namespace lsap
