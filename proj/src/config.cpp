#include "lsap/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"

namespace lsap {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

using KvMap = std::map<std::string, std::string>;  // "section.key" -> value

KvMap parse_ini(const std::string& text) {
  KvMap out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty() || key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside a section");
    out[section + "." + key] = value;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::from_text(
    const std::string& text, const std::vector<std::string>& overrides) {
  KvMap kv = parse_ini(text);
  for (const std::string& ov : overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos || ov.find('.') == std::string::npos ||
        ov.find('.') > eq)
      throw ConfigError("override must look like section.key=value: " + ov);
    kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
  }

  ExperimentConfig cfg = defaults();
  for (const auto& [key, value] : kv) {
    if (key == "run.master_seed")
      cfg.master_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "run.out_dir")
      cfg.out_dir = value;
    else if (key == "run.threads")
      cfg.threads = static_cast<int>(parse_int(key, value));
    else if (key == "corpus.clips_per_split")
      cfg.corpus.clips_per_split = static_cast<int>(parse_int(key, value));
    else if (key == "corpus.clip_len")
      cfg.corpus.clip_len = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "corpus.sample_rate")
      cfg.corpus.sample_rate = static_cast<int>(parse_int(key, value));
    else if (key == "corpus.components_min")
      cfg.corpus.components_min = static_cast<int>(parse_int(key, value));
    else if (key == "corpus.components_max")
      cfg.corpus.components_max = static_cast<int>(parse_int(key, value));
    else if (key == "corpus.freq_min")
      cfg.corpus.freq_min = parse_double(key, value);
    else if (key == "corpus.freq_max")
      cfg.corpus.freq_max = parse_double(key, value);
    else if (key == "corpus.decay_min")
      cfg.corpus.decay_min = parse_double(key, value);
    else if (key == "corpus.decay_max")
      cfg.corpus.decay_max = parse_double(key, value);
    else if (key == "corpus.amp_min")
      cfg.corpus.amp_min = parse_double(key, value);
    else if (key == "corpus.amp_max")
      cfg.corpus.amp_max = parse_double(key, value);
    else if (key == "corpus.noise_floor")
      cfg.corpus.noise_floor = parse_double(key, value);
    else if (key == "corpus.eval_freq_shift")
      cfg.corpus.eval_freq_shift = parse_double(key, value);
    else if (key == "schedule.kind")
      cfg.schedule_kind = schedule_kind_from_string(value);
    else if (key == "schedule.T")
      cfg.schedule_T = static_cast<int>(parse_int(key, value));
    else if (key == "schedule.beta_min")
      cfg.beta_min = parse_double(key, value);
    else if (key == "schedule.beta_max")
      cfg.beta_max = parse_double(key, value);
    else if (key == "denoiser.hidden")
      cfg.hidden = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "denoiser.temb_dim")
      cfg.temb_dim = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "train.steps")
      cfg.train_steps = static_cast<int>(parse_int(key, value));
    else if (key == "train.batch")
      cfg.train_batch = static_cast<int>(parse_int(key, value));
    else if (key == "train.lr")
      cfg.train_lr = parse_double(key, value);
    else if (key == "train.momentum")
      cfg.train_momentum = parse_double(key, value);
    else if (key == "probe.mode")
      cfg.mode = probe_mode_from_string(value);
    else if (key == "probe.stride")
      cfg.stride = static_cast<int>(parse_int(key, value));
    else if (key == "probe.checkpointing")
      cfg.checkpointing = parse_bool(key, value);
    else if (key == "probe.codec_latent_dim")
      cfg.codec_latent_dim = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "attack.norm")
      cfg.attack.norm = norm_from_string(value);
    else if (key == "attack.eta_max")
      cfg.attack.eta_max = parse_double(key, value);
    else if (key == "attack.pgd_steps")
      cfg.attack.pgd_steps = static_cast<int>(parse_int(key, value));
    else if (key == "attack.restarts")
      cfg.attack.restarts = static_cast<int>(parse_int(key, value));
    else if (key == "attack.step_scale")
      cfg.attack.step_scale = parse_double(key, value);
    else if (key == "attack.momentum")
      cfg.attack.momentum = parse_double(key, value);
    else if (key == "attack.bisection_steps")
      cfg.attack.bisection_steps = static_cast<int>(parse_int(key, value));
    else if (key == "attack.early_stop")
      cfg.attack.early_stop = parse_bool(key, value);
    else if (key == "attack.early_stop_rel")
      cfg.attack.early_stop_rel = parse_double(key, value);
    else if (key == "attack.early_stop_patience")
      cfg.attack.early_stop_patience = static_cast<int>(parse_int(key, value));
    else if (key == "attack.grad_norm_floor")
      cfg.attack.grad_norm_floor = parse_double(key, value);
    else if (key == "attack.seed_reps")
      cfg.attack.seed_reps = static_cast<int>(parse_int(key, value));
    else if (key == "attack.t")
      cfg.attack.timestep = TimestepSpec{static_cast<int>(parse_int(key, value)), 0.0};
    else if (key == "attack.t_ratio")
      cfg.attack.timestep = TimestepSpec{0, parse_double(key, value)};
    else if (key == "attack.metric")
      cfg.attack.metric = metric_kind_from_string(value);
    else if (key == "attack.precheck")
      cfg.attack.precheck_at_eta_max = parse_bool(key, value);
    else if (key == "calibration.eta_ref")
      cfg.calibration.eta_ref = parse_double(key, value);
    else if (key == "calibration.directions")
      cfg.calibration.directions = static_cast<int>(parse_int(key, value));
    else if (key == "calibration.percentile")
      cfg.calibration.percentile = parse_double(key, value);
    else if (key == "baseline.kinds") {
      cfg.baseline_kinds.clear();
      for (const auto& k : split_list(value))
        cfg.baseline_kinds.push_back(baseline_kind_from_string(k));
    } else if (key == "baseline.traj_offset")
      cfg.traj_offset = static_cast<int>(parse_int(key, value));
    else if (key == "baseline.traj_norm")
      cfg.traj_norm = norm_from_string(value);
    else if (key == "evaluation.fpr_targets") {
      cfg.fpr_targets.clear();
      for (const auto& v : split_list(value))
        cfg.fpr_targets.push_back(parse_double(key, v));
    } else if (key == "evaluation.bootstrap_resamples")
      cfg.bootstrap_resamples = static_cast<int>(parse_int(key, value));
    else if (key == "evaluation.ci_level")
      cfg.ci_level = parse_double(key, value);
    else if (key == "evaluation.alpha")
      cfg.alpha = parse_double(key, value);
    else if (key == "sweep.t_ratios") {
      cfg.sweep_t_ratios.clear();
      for (const auto& v : split_list(value))
        cfg.sweep_t_ratios.push_back(parse_double(key, v));
    } else if (key == "sweep.eta_maxes") {
      cfg.sweep_eta_maxes.clear();
      for (const auto& v : split_list(value))
        cfg.sweep_eta_maxes.push_back(parse_double(key, v));
    } else if (key == "sweep.metrics") {
      cfg.sweep_metrics.clear();
      for (const auto& v : split_list(value))
        cfg.sweep_metrics.push_back(metric_kind_from_string(v));
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  // Calibration shares the attack's timestep and metric unless overridden.
  cfg.calibration.timestep = cfg.attack.timestep;
  cfg.calibration.metric = cfg.attack.metric;
  cfg.corpus.master_seed = cfg.master_seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str(), overrides);
}

NoiseSchedule ExperimentConfig::make_schedule() const {
  return build_schedule(schedule_kind, schedule_T, beta_min, beta_max);
}

int ExperimentConfig::resolve_stride(int t) const {
  if (stride > 0) return stride;
  // Largest stride keeping the composed pass at or under 25 denoiser calls.
  int s = 1;
  while (static_cast<int>(timestep_path(t, s).size()) > 25) ++s;
  return s;
}

std::size_t ExperimentConfig::latent_dim() const {
  if (codec_latent_dim > 0) return codec_latent_dim;
  return corpus.clip_len / 4;
}

void ExperimentConfig::validate() const {
  corpus.validate();
  attack.validate();
  calibration.validate();
  if (schedule_T < 2) throw ConfigError("config: schedule.T must be >= 2");
  if (train_steps < 0 || train_batch < 1 || !(train_lr > 0.0))
    throw ConfigError("config: bad [train] values");
  if (stride < 0) throw ConfigError("config: probe.stride must be >= 0");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw ConfigError("config: evaluation.ci_level in (0, 1)");
  if (bootstrap_resamples < 1)
    throw ConfigError("config: evaluation.bootstrap_resamples >= 1");
  for (double t : fpr_targets)
    if (!(t >= 0.0 && t < 1.0))
      throw ConfigError("config: fpr targets must be in [0, 1)");
  if (mode == ProbeMode::kLatent && latent_dim() > corpus.clip_len)
    throw ConfigError("config: latent dim exceeds clip length");
}

std::string ExperimentConfig::to_json_string() const {
  nlohmann::json j;
  j["run"] = {{"master_seed", master_seed},
              {"out_dir", out_dir},
              {"threads", threads}};
  j["corpus"] = {{"clips_per_split", corpus.clips_per_split},
                 {"clip_len", corpus.clip_len},
                 {"sample_rate", corpus.sample_rate},
                 {"components_min", corpus.components_min},
                 {"components_max", corpus.components_max},
                 {"freq_min", corpus.freq_min},
                 {"freq_max", corpus.freq_max},
                 {"decay_min", corpus.decay_min},
                 {"decay_max", corpus.decay_max},
                 {"amp_min", corpus.amp_min},
                 {"amp_max", corpus.amp_max},
                 {"noise_floor", corpus.noise_floor},
                 {"eval_freq_shift", corpus.eval_freq_shift}};
  j["schedule"] = {{"kind", to_string(schedule_kind)},
                   {"T", schedule_T},
                   {"beta_min", beta_min},
                   {"beta_max", beta_max}};
  j["denoiser"] = {{"hidden", hidden}, {"temb_dim", temb_dim}};
  j["train"] = {{"steps", train_steps},
                {"batch", train_batch},
                {"lr", train_lr},
                {"momentum", train_momentum}};
  j["probe"] = {{"mode", to_string(mode)},
                {"stride", stride},
                {"checkpointing", checkpointing},
                {"codec_latent_dim", codec_latent_dim}};
  j["attack"] = {{"norm", to_string(attack.norm)},
                 {"eta_max", attack.eta_max},
                 {"pgd_steps", attack.pgd_steps},
                 {"restarts", attack.restarts},
                 {"step_scale", attack.step_scale},
                 {"momentum", attack.momentum},
                 {"bisection_steps", attack.bisection_steps},
                 {"early_stop", attack.early_stop},
                 {"early_stop_rel", attack.early_stop_rel},
                 {"early_stop_patience", attack.early_stop_patience},
                 {"grad_norm_floor", attack.grad_norm_floor},
                 {"seed_reps", attack.seed_reps},
                 {"t", attack.timestep.t},
                 {"t_ratio", attack.timestep.t_ratio},
                 {"metric", to_string(attack.metric)},
                 {"precheck", attack.precheck_at_eta_max}};
  j["calibration"] = {{"eta_ref", calibration.eta_ref},
                      {"directions", calibration.directions},
                      {"percentile", calibration.percentile}};
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : baseline_kinds) kinds.push_back(to_string(k));
  j["baseline"] = {{"kinds", kinds},
                   {"traj_offset", traj_offset},
                   {"traj_norm", to_string(traj_norm)}};
  j["evaluation"] = {{"fpr_targets", fpr_targets},
                     {"bootstrap_resamples", bootstrap_resamples},
                     {"ci_level", ci_level},
                     {"alpha", alpha}};
  nlohmann::json mk = nlohmann::json::array();
  for (auto k : sweep_metrics) mk.push_back(to_string(k));
  j["sweep"] = {{"t_ratios", sweep_t_ratios},
                {"eta_maxes", sweep_eta_maxes},
                {"metrics", mk}};
  return j.dump(2);
}

std::string default_config_text() {
  return R"(# LSA-Probe experiment configuration.
# Flat key = value entries grouped in sections; '#' starts a comment.
# Any key may be overridden on the command line with --set section.key=value.

[run]
master_seed = 1234
out_dir = runs/default
threads = 0                  # 0 = use the OpenMP default

[corpus]
clips_per_split = 64         # members / dev non-members / eval non-members
clip_len = 2048
sample_rate = 8000
components_min = 2           # damped-sinusoid mixture size
components_max = 5
freq_min = 100
freq_max = 3500
decay_min = 0.5
decay_max = 4
amp_min = 0.3
amp_max = 1
noise_floor = 0.001
eval_freq_shift = 0          # Hz offset for a near-domain eval control

[schedule]
kind = linear                # linear | cosine
T = 100                      # desk-scale default; 1000 for full DDPM
beta_min = 1e-4
beta_max = 0.02

[denoiser]
hidden = 128
temb_dim = 16

[train]
steps = 3000
batch = 16
lr = 1e-3
momentum = 0.9

[probe]
mode = waveform              # waveform | latent
stride = 0                   # 0 = auto (keeps a reverse pass at <= 25 calls)
checkpointing = off
codec_latent_dim = 0         # 0 = clip_len / 4 (latent mode)

[attack]
norm = l2                    # l2 | linf
eta_max = 0.8
pgd_steps = 12               # K
restarts = 2                 # r
step_scale = 0.25            # alpha = step_scale * eta / K
momentum = 0.9
bisection_steps = 10         # B
early_stop = on              # stop on <1% improvement for 3 steps
early_stop_rel = 0.01
early_stop_patience = 3
grad_norm_floor = 1e-6
seed_reps = 1                # S forward-noise repetitions per sample
t_ratio = 0.6                # or: t = <integer timestep>
metric = mr-stft             # waveform-mse | log-mel-mse | mr-stft
precheck = on                # saturation pre-check at eta_max

[calibration]
eta_ref = 0.05
directions = 8               # L
percentile = 95              # nearest-rank

[baseline]
kinds = loss-at-t,endpoint-reconstruction,trajectory
traj_offset = 0              # t' for the trajectory baseline; 0 = t/2
traj_norm = l2

[evaluation]
fpr_targets = 0.01,0.001
bootstrap_resamples = 10000
ci_level = 0.95
alpha = 0.05

[sweep]
t_ratios = 0.2,0.4,0.6,0.8
eta_maxes = 0.05,0.1,0.2,0.4,0.8
metrics = waveform-mse,log-mel-mse,mr-stft
)";
}

}  // namespace lsap
