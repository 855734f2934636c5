#include "lsap/schedule.hpp"

#include <cmath>

#include "lsap/errors.hpp"

namespace lsap {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  throw ConfigError("unknown schedule kind: " + s);
}

std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::kLinear ? "linear" : "cosine";
}

double NoiseSchedule::abar(int t) const {
  if (t < 1 || t > T)
    throw ConfigError("timestep " + std::to_string(t) + " outside [1, " +
                      std::to_string(T) + "]");
  return alpha_bar[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::sqrt_abar(int t) const { return std::sqrt(abar(t)); }

NoiseSchedule build_schedule(ScheduleKind kind, int T, double beta_min,
                             double beta_max) {
  if (T < 2) throw ConfigError("schedule: T must be >= 2");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw ConfigError("schedule: need 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.T = T;
  s.kind = kind;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.alpha_bar.resize(static_cast<std::size_t>(T));
  if (kind == ScheduleKind::kLinear) {
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
      double beta =
          beta_min + (beta_max - beta_min) * static_cast<double>(t - 1) /
                         static_cast<double>(T - 1);
      prod *= 1.0 - beta;
      s.alpha_bar[static_cast<std::size_t>(t - 1)] = prod;
    }
  } else {
    // Cosine profile: abar(t) = f(t)/f(0), f(u) = cos^2(((u/T + c)/(1 + c)) pi/2)
    // with offset c = 0.008.
    const double c = 0.008;
    auto f = [&](double u) {
      double v = std::cos(((u / T + c) / (1.0 + c)) * M_PI / 2.0);
      return v * v;
    };
    const double f0 = f(0.0);
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
      double a = f(static_cast<double>(t)) / f0;
      // Guard the profile into (0, prev) so the sequence stays strictly
      // decreasing even at the tail where cos^2 approaches 0.
      a = std::min(a, prev * (1.0 - 1e-12));
      a = std::max(a, 1e-12);
      s.alpha_bar[static_cast<std::size_t>(t - 1)] = a;
      prev = a;
    }
  }
  for (int t = 1; t <= T; ++t) {
    double a = s.alpha_bar[static_cast<std::size_t>(t - 1)];
    if (!(a > 0.0 && a < 1.0))
      throw ConfigError("schedule: alpha_bar out of (0,1) at t=" +
                        std::to_string(t));
    if (t > 1 && !(a < s.alpha_bar[static_cast<std::size_t>(t - 2)]))
      throw ConfigError("schedule: alpha_bar not strictly decreasing at t=" +
                        std::to_string(t));
  }
  return s;
}

double sigma_t(const NoiseSchedule& s, int t) {
  return std::sqrt(1.0 - s.abar(t));
}

int ratio_to_timestep(const NoiseSchedule& s, double t_ratio) {
  if (!(t_ratio > 0.0 && t_ratio <= 1.0))
    throw ConfigError("t_ratio must be in (0, 1]");
  return static_cast<int>(std::floor(t_ratio * (s.T - 1))) + 1;
}

Split split_from_string(const std::string& s) {
  if (s == "member") return Split::kMember;
  if (s == "dev-nonmember") return Split::kDevNonmember;
  if (s == "eval-nonmember") return Split::kEvalNonmember;
  throw ConfigError("unknown split: " + s);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kMember: return "member";
    case Split::kDevNonmember: return "dev-nonmember";
    case Split::kEvalNonmember: return "eval-nonmember";
  }
  return "?";
}

int TimestepSpec::resolve(const NoiseSchedule& s) const {
  if (t > 0) {
    if (t > s.T) throw ConfigError("timestep beyond schedule T");
    return t;
  }
  return ratio_to_timestep(s, t_ratio);
}

Array forward_noise(const Array& x0, const NoiseSchedule& s, int t,
                    const Array& eps) {
  if (!x0.same_shape(eps))
    throw NumericError("forward_noise: eps shape mismatch");
  const double sa = s.sqrt_abar(t);
  const double sig = sigma_t(s, t);
  Array out = x0;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = sa * out.data[i] + sig * eps.data[i];
  return out;
}

}  // namespace lsap
