#pragma once

#include <string>
#include <vector>

#include "lsap/array.hpp"

namespace lsap {

enum class ScheduleKind { kLinear, kCosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Discrete noise schedule: alpha_bar[t-1] holds the cumulative product for
/// timestep t in [1, T]. Strictly decreasing, values in (0, 1).
struct NoiseSchedule {
  int T = 0;
  ScheduleKind kind = ScheduleKind::kLinear;
  double beta_min = 0.0, beta_max = 0.0;
  std::vector<double> alpha_bar;

  double abar(int t) const;
  double sqrt_abar(int t) const;
};

/// beta linearly spaced over T steps (linear kind) or the standard cosine
/// alpha_bar profile. beta_min == beta_max gives a constant-beta schedule.
NoiseSchedule build_schedule(ScheduleKind kind, int T, double beta_min,
                             double beta_max);

/// sigma_t = sqrt(1 - alpha_bar_t).
double sigma_t(const NoiseSchedule& s, int t);

/// t = floor(t_ratio * (T - 1)) + 1 for t_ratio in (0, 1].
int ratio_to_timestep(const NoiseSchedule& s, double t_ratio);

enum class Split { kMember, kDevNonmember, kEvalNonmember };

Split split_from_string(const std::string& s);
std::string to_string(Split s);

/// Fixed-length 1-D signal with identity and split label.
struct Clip {
  std::string id;
  Array samples;
  int sample_rate = 0;
  Split split = Split::kMember;
};

/// Timestep given either directly or as a ratio; resolve() maps a ratio via
/// ratio_to_timestep.
struct TimestepSpec {
  int t = 0;            // used when > 0
  double t_ratio = 0.0; // used when t == 0

  int resolve(const NoiseSchedule& s) const;
};

/// x_t = sqrt(abar_t) x0 + sigma_t eps.
Array forward_noise(const Array& x0, const NoiseSchedule& s, int t,
                    const Array& eps);

}  // namespace lsap
