#include "lsap/corpus.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "lsap/errors.hpp"
#include "lsap/parallel.hpp"

namespace fs = std::filesystem;

namespace lsap {

void CorpusConfig::validate() const {
  if (clips_per_split < 1) throw ConfigError("corpus: clips_per_split >= 1");
  if (clip_len < 16) throw ConfigError("corpus: clip_len too small");
  if (sample_rate < 1) throw ConfigError("corpus: sample_rate >= 1");
  if (components_min < 0 || components_max < components_min)
    throw ConfigError("corpus: bad component count range");
  if (!(freq_min > 0.0 && freq_max > freq_min))
    throw ConfigError("corpus: bad frequency range");
  if (freq_max + eval_freq_shift >= sample_rate / 2.0)
    throw ConfigError("corpus: frequency range exceeds Nyquist");
  if (decay_min < 0.0 || decay_max < decay_min)
    throw ConfigError("corpus: bad decay range");
  if (!(amp_min > 0.0 && amp_max >= amp_min))
    throw ConfigError("corpus: bad amplitude range");
  if (noise_floor < 0.0) throw ConfigError("corpus: noise_floor >= 0");
}

std::string clip_id(Split split, int index) {
  const char* prefix = split == Split::kMember
                           ? "mem"
                           : (split == Split::kDevNonmember ? "dev" : "evl");
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s-%04d", prefix, index);
  return buf;
}

std::uint64_t content_hash(const Array& samples) {
  const char* bytes = reinterpret_cast<const char*>(samples.data.data());
  return fnv1a64(
      std::string_view(bytes, samples.data.size() * sizeof(double)));
}

Array synth_clip(const CorpusConfig& cfg, Split split, int index,
                 std::string* params_json) {
  const std::string id = clip_id(split, index);
  SeedPolicy seeds{cfg.master_seed};
  Rng rng = seeds.rng(id, 0, "corpus");

  const int k =
      cfg.components_min +
      static_cast<int>(rng.next_below(
          static_cast<std::uint64_t>(cfg.components_max - cfg.components_min + 1)));
  const double fshift =
      split == Split::kEvalNonmember ? cfg.eval_freq_shift : 0.0;

  nlohmann::json comps = nlohmann::json::array();
  Array x = Array::zeros({cfg.clip_len});
  const double dt = 1.0 / cfg.sample_rate;
  for (int c = 0; c < k; ++c) {
    const double amp = rng.uniform(cfg.amp_min, cfg.amp_max);
    const double freq = rng.uniform(cfg.freq_min, cfg.freq_max) + fshift;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    const double decay = rng.uniform(cfg.decay_min, cfg.decay_max);
    comps.push_back({{"amp", amp},
                     {"freq", freq},
                     {"phase", phase},
                     {"decay", decay}});
    for (std::size_t i = 0; i < cfg.clip_len; ++i) {
      const double ti = static_cast<double>(i) * dt;
      x.data[i] +=
          amp * std::sin(2.0 * M_PI * freq * ti + phase) * std::exp(-decay * ti);
    }
  }
  for (std::size_t i = 0; i < cfg.clip_len; ++i)
    x.data[i] += cfg.noise_floor * rng.gaussian();

  double peak = linf_norm(x);
  if (peak > 0.0)
    for (double& v : x.data) v /= peak;

  if (params_json) {
    nlohmann::json j{{"components", comps}, {"noise_floor", cfg.noise_floor}};
    *params_json = j.dump();
  }
  return x;
}

void save_clip(const Array& samples, int sample_rate,
               const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArtifactError("save_clip: cannot open " + path);
  const std::uint32_t version = 1;
  const std::uint64_t n = samples.data.size();
  const std::uint32_t sr = static_cast<std::uint32_t>(sample_rate);
  f.write("LSAC", 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(&sr), 4);
  f.write(reinterpret_cast<const char*>(samples.data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw ArtifactError("save_clip: write failed for " + path);
}

Array load_clip_samples(const std::string& path, int* sample_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArtifactError("load_clip: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "LSAC", 4) != 0)
    throw ArtifactError("load_clip: bad magic in " + path);
  std::uint32_t version = 0, sr = 0;
  std::uint64_t n = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&n), 8);
  f.read(reinterpret_cast<char*>(&sr), 4);
  if (!f || version != 1)
    throw ArtifactError("load_clip: bad header in " + path);
  Array out = Array::zeros({static_cast<std::size_t>(n)});
  f.read(reinterpret_cast<char*>(out.data.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw ArtifactError("load_clip: truncated samples in " + path);
  if (sample_rate) *sample_rate = static_cast<int>(sr);
  return out;
}

namespace {

nlohmann::json corpus_config_json(const CorpusConfig& c) {
  return {{"clips_per_split", c.clips_per_split},
          {"clip_len", c.clip_len},
          {"sample_rate", c.sample_rate},
          {"components_min", c.components_min},
          {"components_max", c.components_max},
          {"freq_min", c.freq_min},
          {"freq_max", c.freq_max},
          {"decay_min", c.decay_min},
          {"decay_max", c.decay_max},
          {"amp_min", c.amp_min},
          {"amp_max", c.amp_max},
          {"noise_floor", c.noise_floor},
          {"eval_freq_shift", c.eval_freq_shift},
          {"master_seed", c.master_seed}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  CorpusConfig c;
  c.clips_per_split = j.at("clips_per_split").get<int>();
  c.clip_len = j.at("clip_len").get<std::size_t>();
  c.sample_rate = j.at("sample_rate").get<int>();
  c.components_min = j.at("components_min").get<int>();
  c.components_max = j.at("components_max").get<int>();
  c.freq_min = j.at("freq_min").get<double>();
  c.freq_max = j.at("freq_max").get<double>();
  c.decay_min = j.at("decay_min").get<double>();
  c.decay_max = j.at("decay_max").get<double>();
  c.amp_min = j.at("amp_min").get<double>();
  c.amp_max = j.at("amp_max").get<double>();
  c.noise_floor = j.at("noise_floor").get<double>();
  c.eval_freq_shift = j.at("eval_freq_shift").get<double>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

Manifest generate_corpus(const CorpusConfig& cfg, const std::string& dir) {
  cfg.validate();
  fs::create_directories(dir);
  Manifest manifest;
  manifest.config = cfg;

  const Split splits[] = {Split::kMember, Split::kDevNonmember,
                          Split::kEvalNonmember};
  const std::size_t total =
      3 * static_cast<std::size_t>(cfg.clips_per_split);
  manifest.entries.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const Split split = splits[i / cfg.clips_per_split];
    const int index = static_cast<int>(i % cfg.clips_per_split);
    ManifestEntry e;
    e.id = clip_id(split, index);
    e.split = split;
    e.file = e.id + ".lsac";
    Array samples = synth_clip(cfg, split, index, &e.params_json);
    e.content_hash = content_hash(samples);
    save_clip(samples, cfg.sample_rate, (fs::path(dir) / e.file).string());
    manifest.entries[i] = std::move(e);
  });
  verify_splits(manifest);
  save_manifest(manifest, (fs::path(dir) / "manifest.json").string());
  return manifest;
}

void verify_splits(const Manifest& manifest) {
  std::set<std::string> ids;
  std::map<std::uint64_t, const ManifestEntry*> hashes;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.id).second)
      throw ArtifactError("split violation: duplicate id " + e.id);
    auto [it, fresh] = hashes.emplace(e.content_hash, &e);
    if (!fresh && it->second->split != e.split)
      throw ArtifactError("split violation: identical content in " +
                          it->second->id + " and " + e.id);
  }
}

void save_manifest(const Manifest& m, const std::string& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(e.content_hash));
    entries.push_back({{"id", e.id},
                       {"split", to_string(e.split)},
                       {"file", e.file},
                       {"content_hash", hash_hex},
                       {"params", nlohmann::json::parse(e.params_json)}});
  }
  nlohmann::json j{{"format_version", m.format_version},
                   {"config", corpus_config_json(m.config)},
                   {"entries", entries}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ArtifactError("save_manifest: cannot open " + path);
  f << j.dump(2) << "\n";
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArtifactError("load_manifest: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded())
    throw ArtifactError("load_manifest: malformed JSON in " + path);
  Manifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != 1)
    throw ArtifactError("load_manifest: unsupported format version");
  m.config = corpus_config_from_json(j.at("config"));
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::string>();
    e.split = split_from_string(je.at("split").get<std::string>());
    e.file = je.at("file").get<std::string>();
    e.content_hash = std::stoull(je.at("content_hash").get<std::string>(),
                                 nullptr, 16);
    e.params_json = je.at("params").dump();
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::vector<Clip> load_split(const Manifest& m, const std::string& dir,
                             Split split) {
  std::vector<Clip> clips;
  for (const auto& e : m.entries) {
    if (e.split != split) continue;
    Clip c;
    c.id = e.id;
    c.split = split;
    c.samples = load_clip_samples((fs::path(dir) / e.file).string(),
                                  &c.sample_rate);
    if (content_hash(c.samples) != e.content_hash)
      throw ArtifactError("corpus: content hash mismatch for " + e.id);
    clips.push_back(std::move(c));
  }
  return clips;
}

}  // namespace lsap
