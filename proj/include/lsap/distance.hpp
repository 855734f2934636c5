#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsap/tape.hpp"

namespace lsap {

struct STFTConfig {
  std::size_t frame_len = 256;
  std::size_t hop = 64;
  std::size_t fft_size = 256;
  enum class Window { kHann, kRect };
  Window window = Window::kHann;
};

struct MelConfig {
  std::size_t bands = 16;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 = Nyquist
  int sample_rate = 8000;
  STFTConfig stft;
  double log_floor = 1e-8;
};

enum class MetricKind { kWaveformMse, kLogMelMse, kMrStft };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind k);

/// Windowed framing + DFT realized as fixed-matrix multiplies, with
/// magnitude sqrt(re^2 + im^2 + 1e-12) for differentiability at zero.
class SpectrogramPlan {
 public:
  SpectrogramPlan(std::size_t signal_len, const STFTConfig& cfg);

  std::size_t nframes() const { return nframes_; }
  std::size_t bins() const { return bins_; }
  const STFTConfig& config() const { return cfg_; }

  NodeId magnitude_node(Tape& tape, NodeId x) const;
  NodeId power_node(Tape& tape, NodeId x) const;

  static constexpr double kMagEps = 1e-12;

 private:
  STFTConfig cfg_;
  std::size_t nframes_, bins_;
  std::unique_ptr<FramedMap> re_, im_;
  std::shared_ptr<const Array> mag_eps_;
};

/// Magnitude spectrogram (frames x bins) of a 1-D signal.
Array spectrogram(const Array& x, const STFTConfig& cfg);

/// Differentiable degradation metric D(a, b) built on a tape. Instances are
/// bound to a fixed clip length; the DFT/filterbank matrices are built once
/// and shared read-only.
class Metric {
 public:
  virtual ~Metric() = default;
  virtual NodeId build(Tape& tape, NodeId a, NodeId b) const = 0;
  virtual std::string name() const = 0;
  virtual std::string config_fingerprint() const = 0;

  double value(const Array& a, const Array& b) const;
};

class WaveformMse : public Metric {
 public:
  explicit WaveformMse(std::size_t n) : n_(n) {}
  NodeId build(Tape& tape, NodeId a, NodeId b) const override;
  std::string name() const override { return "waveform-mse"; }
  std::string config_fingerprint() const override;

 private:
  std::size_t n_;
};

class LogMelMse : public Metric {
 public:
  LogMelMse(std::size_t n, const MelConfig& cfg);
  NodeId build(Tape& tape, NodeId a, NodeId b) const override;
  std::string name() const override { return "log-mel-mse"; }
  std::string config_fingerprint() const override;

  /// bands x bins triangular filterbank; every band has nonzero weight.
  static std::vector<double> mel_filterbank(std::size_t bands,
                                            std::size_t bins, double fmin,
                                            double fmax, int sample_rate,
                                            std::size_t fft_size);

 private:
  MelConfig cfg_;
  SpectrogramPlan plan_;
  std::shared_ptr<const Array> mel_t_;  // bins x bands (transposed filterbank)
  std::shared_ptr<const Array> floor_;
};

/// Sum over resolutions of spectral convergence plus log-magnitude L1.
class MrStft : public Metric {
 public:
  MrStft(std::size_t n, std::vector<STFTConfig> resolutions);
  NodeId build(Tape& tape, NodeId a, NodeId b) const override;
  std::string name() const override { return "mr-stft"; }
  std::string config_fingerprint() const override;

 private:
  std::vector<STFTConfig> cfgs_;
  std::vector<std::unique_ptr<SpectrogramPlan>> plans_;
};

/// Desk-scale defaults: MR-STFT with FFT {64,128,256}, hop = FFT/4, Hann;
/// log-mel with 16 bands over 0..Nyquist on the 256-point resolution.
std::unique_ptr<Metric> make_metric(MetricKind kind, std::size_t n,
                                    int sample_rate);

}  // namespace lsap
