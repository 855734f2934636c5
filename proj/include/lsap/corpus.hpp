#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsap/rng.hpp"
#include "lsap/schedule.hpp"

namespace lsap {

/// Synthetic corpus generator: damped-sinusoid mixtures with a small Gaussian
/// noise floor, peak-normalized. All three splits draw from the same
/// parameter distribution so a member/nonmember score gap cannot come from
/// data shift.
struct CorpusConfig {
  int clips_per_split = 64;
  std::size_t clip_len = 2048;
  int sample_rate = 8000;
  int components_min = 2;
  int components_max = 5;
  double freq_min = 100.0;   // Hz
  double freq_max = 3500.0;  // Hz
  double decay_min = 0.5;    // 1/s
  double decay_max = 4.0;    // 1/s
  double amp_min = 0.3;
  double amp_max = 1.0;
  double noise_floor = 1e-3;
  double eval_freq_shift = 0.0;  // optional near-domain control (Hz offset)
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct ManifestEntry {
  std::string id;
  Split split = Split::kMember;
  std::string file;  // relative path within the corpus directory
  std::uint64_t content_hash = 0;
  std::string params_json;  // generator parameters
};

struct Manifest {
  int format_version = 1;
  CorpusConfig config;
  std::vector<ManifestEntry> entries;
};

/// FNV-1a over the raw little-endian bytes of the samples.
std::uint64_t content_hash(const Array& samples);

/// Pure deterministic synthesis of one clip (independent of the others).
Array synth_clip(const CorpusConfig& cfg, Split split, int index,
                 std::string* params_json = nullptr);

/// Generates all clips, writes the clip files and manifest.json under dir.
Manifest generate_corpus(const CorpusConfig& cfg, const std::string& dir);

/// Pairwise split disjointness by id and by content hash; throws
/// ArtifactError naming the offending ids.
void verify_splits(const Manifest& manifest);

// Clip file: magic "LSAC", u32 version, u64 length, u32 sample rate, raw
// little-endian doubles.
void save_clip(const Array& samples, int sample_rate, const std::string& path);
Array load_clip_samples(const std::string& path, int* sample_rate = nullptr);

void save_manifest(const Manifest& m, const std::string& path);
Manifest load_manifest(const std::string& path);

/// Loads every clip of one split, in manifest order, verifying hashes.
std::vector<Clip> load_split(const Manifest& m, const std::string& dir,
                             Split split);

std::string clip_id(Split split, int index);

}  // namespace lsap
