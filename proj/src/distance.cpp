#include "lsap/distance.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"

namespace lsap {

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "waveform-mse") return MetricKind::kWaveformMse;
  if (s == "log-mel-mse") return MetricKind::kLogMelMse;
  if (s == "mr-stft") return MetricKind::kMrStft;
  throw ConfigError("unknown metric kind: " + s);
}

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::kWaveformMse: return "waveform-mse";
    case MetricKind::kLogMelMse: return "log-mel-mse";
    case MetricKind::kMrStft: return "mr-stft";
  }
  return "?";
}

namespace {

std::vector<double> window_values(const STFTConfig& cfg) {
  std::vector<double> w(cfg.frame_len, 1.0);
  if (cfg.window == STFTConfig::Window::kHann) {
    for (std::size_t i = 0; i < cfg.frame_len; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                  static_cast<double>(cfg.frame_len));
  }
  return w;
}

nlohmann::json stft_json(const STFTConfig& c) {
  return {{"frame_len", c.frame_len},
          {"hop", c.hop},
          {"fft_size", c.fft_size},
          {"window", c.window == STFTConfig::Window::kHann ? "hann" : "rect"}};
}

}  // namespace

SpectrogramPlan::SpectrogramPlan(std::size_t signal_len, const STFTConfig& cfg)
    : cfg_(cfg) {
  if (!(cfg.hop >= 1 && cfg.hop <= cfg.frame_len &&
        cfg.frame_len <= cfg.fft_size))
    throw ConfigError("stft: need hop <= frame_len <= fft_size");
  if (cfg.frame_len > signal_len)
    throw ConfigError("stft: no full frame fits the clip");
  bins_ = cfg.fft_size / 2 + 1;
  const std::vector<double> w = window_values(cfg);
  std::vector<double> re(bins_ * cfg.frame_len), im(bins_ * cfg.frame_len);
  for (std::size_t k = 0; k < bins_; ++k)
    for (std::size_t i = 0; i < cfg.frame_len; ++i) {
      double ang = 2.0 * M_PI * static_cast<double>(k) *
                   static_cast<double>(i) / static_cast<double>(cfg.fft_size);
      re[k * cfg.frame_len + i] = w[i] * std::cos(ang);
      im[k * cfg.frame_len + i] = -w[i] * std::sin(ang);
    }
  re_ = std::make_unique<FramedMap>(signal_len, cfg.frame_len, cfg.hop, bins_,
                                    std::move(re));
  im_ = std::make_unique<FramedMap>(signal_len, cfg.frame_len, cfg.hop, bins_,
                                    std::move(im));
  nframes_ = re_->nframes();
  mag_eps_ = std::make_shared<Array>(Array::full({nframes_, bins_}, kMagEps));
}

NodeId SpectrogramPlan::power_node(Tape& tape, NodeId x) const {
  NodeId re = tape.affine(re_.get(), x);
  NodeId im = tape.affine(im_.get(), x);
  return tape.add(tape.square(re), tape.square(im));
}

NodeId SpectrogramPlan::magnitude_node(Tape& tape, NodeId x) const {
  NodeId p = power_node(tape, x);
  return tape.sqrt(tape.add(p, tape.constant(mag_eps_)));
}

Array spectrogram(const Array& x, const STFTConfig& cfg) {
  SpectrogramPlan plan(x.numel(), cfg);
  Tape tape;
  NodeId in = tape.constant(x);
  return tape.val(plan.magnitude_node(tape, in));
}

double Metric::value(const Array& a, const Array& b) const {
  Tape tape;
  NodeId na = tape.constant(a);
  NodeId nb = tape.constant(b);
  return tape.val(build(tape, na, nb)).scalar_value();
}

// ---------------------------------------------------------------------------
// Waveform MSE

NodeId WaveformMse::build(Tape& tape, NodeId a, NodeId b) const {
  return tape.mean(tape.square(tape.sub(a, b)));
}

std::string WaveformMse::config_fingerprint() const {
  return nlohmann::json{{"metric", "waveform-mse"}}.dump();
}

// ---------------------------------------------------------------------------
// Log-mel MSE

std::vector<double> LogMelMse::mel_filterbank(std::size_t bands,
                                              std::size_t bins, double fmin,
                                              double fmax, int sample_rate,
                                              std::size_t fft_size) {
  if (bands < 1) throw ConfigError("mel: bands must be >= 1");
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> centers(bands + 2);
  for (std::size_t i = 0; i < bands + 2; ++i)
    centers[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) /
                                     static_cast<double>(bands + 1));
  std::vector<double> fb(bands * bins, 0.0);
  const double hz_per_bin =
      static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  for (std::size_t b = 0; b < bands; ++b) {
    const double left = centers[b], mid = centers[b + 1], right = centers[b + 2];
    double row_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = hz_per_bin * static_cast<double>(k);
      double w = 0.0;
      if (f > left && f < mid)
        w = (f - left) / (mid - left);
      else if (f >= mid && f < right)
        w = (right - f) / (right - mid);
      fb[b * bins + k] = w;
      row_sum += w;
    }
    if (row_sum <= 0.0)
      throw ConfigError("mel: band " + std::to_string(b) +
                        " has no spectrogram support (too many bands for this "
                        "FFT size)");
  }
  return fb;
}

LogMelMse::LogMelMse(std::size_t n, const MelConfig& cfg)
    : cfg_(cfg), plan_(n, cfg.stft) {
  const std::size_t bins = plan_.bins();
  std::vector<double> fb = mel_filterbank(cfg.bands, bins, cfg.fmin, cfg.fmax,
                                          cfg.sample_rate, cfg.stft.fft_size);
  std::vector<double> fbt(bins * cfg.bands);
  for (std::size_t b = 0; b < cfg.bands; ++b)
    for (std::size_t k = 0; k < bins; ++k) fbt[k * cfg.bands + b] = fb[b * bins + k];
  mel_t_ = std::make_shared<Array>(
      Array({bins, cfg.bands}, std::move(fbt)));
  floor_ = std::make_shared<Array>(
      Array::full({plan_.nframes(), cfg.bands}, cfg.log_floor));
}

NodeId LogMelMse::build(Tape& tape, NodeId a, NodeId b) const {
  auto logmel = [&](NodeId x) {
    NodeId p = plan_.power_node(tape, x);
    NodeId mel = tape.matmul(p, tape.constant(mel_t_));
    return tape.log(tape.add(mel, tape.constant(floor_)));
  };
  return tape.mean(tape.square(tape.sub(logmel(a), logmel(b))));
}

std::string LogMelMse::config_fingerprint() const {
  nlohmann::json j{{"metric", "log-mel-mse"},
                   {"bands", cfg_.bands},
                   {"fmin", cfg_.fmin},
                   {"fmax", cfg_.fmax},
                   {"sample_rate", cfg_.sample_rate},
                   {"log_floor", cfg_.log_floor},
                   {"stft", stft_json(cfg_.stft)}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Multi-resolution STFT

MrStft::MrStft(std::size_t n, std::vector<STFTConfig> resolutions)
    : cfgs_(std::move(resolutions)) {
  if (cfgs_.empty()) throw ConfigError("mr-stft: need >= 1 resolution");
  for (const auto& c : cfgs_)
    plans_.push_back(std::make_unique<SpectrogramPlan>(n, c));
}

NodeId MrStft::build(Tape& tape, NodeId a, NodeId b) const {
  NodeId total = kNoNode;
  for (const auto& plan : plans_) {
    NodeId ma = plan->magnitude_node(tape, a);
    NodeId mb = plan->magnitude_node(tape, b);
    NodeId diff = tape.sub(ma, mb);
    NodeId num = tape.sqrt(tape.sum(tape.square(diff)));
    NodeId den = tape.add(tape.sqrt(tape.sum(tape.square(ma))),
                          tape.constant(Array::scalar(1e-12)));
    NodeId sc = tape.div(num, den);
    NodeId l1 = tape.mean(tape.abs(tape.sub(tape.log(ma), tape.log(mb))));
    NodeId term = tape.add(sc, l1);
    total = total == kNoNode ? term : tape.add(total, term);
  }
  return total;
}

std::string MrStft::config_fingerprint() const {
  nlohmann::json res = nlohmann::json::array();
  for (const auto& c : cfgs_) res.push_back(stft_json(c));
  return nlohmann::json{{"metric", "mr-stft"}, {"resolutions", res}}.dump();
}

// ---------------------------------------------------------------------------

std::unique_ptr<Metric> make_metric(MetricKind kind, std::size_t n,
                                    int sample_rate) {
  switch (kind) {
    case MetricKind::kWaveformMse:
      return std::make_unique<WaveformMse>(n);
    case MetricKind::kLogMelMse: {
      MelConfig cfg;
      cfg.sample_rate = sample_rate;
      cfg.stft = {256, 64, 256, STFTConfig::Window::kHann};
      return std::make_unique<LogMelMse>(n, cfg);
    }
    case MetricKind::kMrStft: {
      std::vector<STFTConfig> res = {
          {64, 16, 64, STFTConfig::Window::kHann},
          {128, 32, 128, STFTConfig::Window::kHann},
          {256, 64, 256, STFTConfig::Window::kHann},
      };
      return std::make_unique<MrStft>(n, std::move(res));
    }
  }
  throw ConfigError("make_metric: bad kind");
}

}  // namespace lsap
