#include "maskbench/synth.hpp"

#include <algorithm>
#include <cmath>

#include "maskbench/error.hpp"
#include "maskbench/rng.hpp"

namespace maskbench {

namespace {

// Per-mechanism tags folded into the epoch slot of mix_seed.
constexpr std::uint64_t kTrajectoryTag = 1;
constexpr std::uint64_t kProtocolTag = 2;
constexpr std::uint64_t kClusterTag = 3;
constexpr std::uint64_t kFollowupTag = 4;

void require_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError(std::string(what) + " must lie in [0,1]");
}

}  // namespace

std::string to_string(Trajectory t) {
  switch (t) {
    case Trajectory::stationary_gaussian: return "stationary_gaussian";
    case Trajectory::ar1: return "ar1";
    case Trajectory::deterioration: return "deterioration";
  }
  return "?";
}

Trajectory parse_trajectory(const std::string& s) {
  if (s == "stationary_gaussian") return Trajectory::stationary_gaussian;
  if (s == "ar1") return Trajectory::ar1;
  if (s == "deterioration") return Trajectory::deterioration;
  throw ArgumentError("unknown trajectory '" + s + "'");
}

void CohortConfig::validate() const {
  if (n_samples < 1 || n_steps < 1 || n_features < 1)
    throw ArgumentError("cohort counts must all be >= 1");
  require_prob(prevalence, "prevalence");
  require_prob(mechanisms.cluster_intensity, "cluster_intensity");
  require_prob(mechanisms.followup_prob, "followup_prob");
  if (mechanisms.protocol_period_hours < 1) throw ArgumentError("protocol_period_hours must be >= 1");
  if (!(std::abs(ar_coefficient) < 1.0)) throw ArgumentError("ar_coefficient must lie in (-1,1)");
  if (mechanisms.transport_block_len > n_steps)
    throw ArgumentError("transport_block_len exceeds n_steps");
}

Cohort generate_cohort(const CohortConfig& cfg) {
  cfg.validate();
  const Shape shape{cfg.n_samples, cfg.n_steps, cfg.n_features};
  Cohort c{TimeSeriesTensor(shape), LabelVector(cfg.n_samples, 0)};

  Rng label_rng(mix_seed(cfg.seed, stream::labels));
  for (auto& l : c.labels) l = label_rng.uniform() < cfg.prevalence ? 1 : 0;

  const double phi = cfg.trajectory == Trajectory::stationary_gaussian ? 0.0 : cfg.ar_coefficient;
  const double innovation = std::sqrt(1.0 - phi * phi);
  const std::size_t drift_steps = std::min(cfg.drift_steps, cfg.n_steps);
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    Rng rng(mix_seed(cfg.seed, s, kTrajectoryTag));
    const bool drifting = cfg.trajectory == Trajectory::deterioration && c.labels[s] && drift_steps > 0;
    for (std::size_t f = 0; f < cfg.n_features; ++f) {
      double x = rng.normal();
      for (std::size_t t = 0; t < cfg.n_steps; ++t) {
        if (t > 0) x = phi * x + innovation * rng.normal();
        double v = x;
        if (drifting && t + drift_steps >= cfg.n_steps) {
          // Linear ramp reaching `drift` at the last step.
          double k = static_cast<double>(t + drift_steps + 1 - cfg.n_steps);
          v += cfg.drift * k / static_cast<double>(drift_steps);
        }
        c.tensor.value(s, t, f) = v;
      }
    }
  }
  return c;
}

TimeSeriesTensor apply_protocol_missingness(const TimeSeriesTensor& in, std::size_t period,
                                            std::uint64_t seed) {
  if (period < 1) throw ArgumentError("protocol period must be >= 1");
  TimeSeriesTensor out = in;
  if (period == 1) return out;
  const auto& sh = in.shape;
  for (std::size_t s = 0; s < sh.samples; ++s) {
    Rng rng(mix_seed(seed, s, kProtocolTag));
    for (std::size_t f = 0; f < sh.features; ++f) {
      const std::size_t phase = period >= sh.steps ? 0 : static_cast<std::size_t>(rng.below(period));
      for (std::size_t t = 0; t < sh.steps; ++t)
        if (t < phase || (t - phase) % period != 0) out.observed.at(s, t, f) = 0;
    }
  }
  return out;
}

TimeSeriesTensor apply_condition_clusters(const TimeSeriesTensor& in, const LabelVector& labels,
                                          double intensity, StepWindow window, std::uint64_t seed) {
  require_prob(intensity, "cluster intensity");
  if (labels.size() != in.shape.samples) throw ArgumentError("labels length differs from n_samples");
  if (window.begin > window.end || window.end > in.shape.steps)
    throw ArgumentError("cluster window outside the step grid");
  TimeSeriesTensor out = in;
  if (intensity == 0.0) return out;
  for (std::size_t s = 0; s < in.shape.samples; ++s) {
    if (!labels[s]) continue;
    Rng rng(mix_seed(seed, s, kClusterTag));
    for (std::size_t t = window.begin; t < window.end; ++t)
      for (std::size_t f = 0; f < in.shape.features; ++f)
        if (rng.uniform() < intensity) out.observed.at(s, t, f) = 1;
  }
  return out;
}

TimeSeriesTensor apply_condition_clusters(const TimeSeriesTensor& in, const LabelVector& labels,
                                          double intensity, std::size_t window_len,
                                          std::uint64_t seed) {
  require_prob(intensity, "cluster intensity");
  if (labels.size() != in.shape.samples) throw ArgumentError("labels length differs from n_samples");
  const std::size_t len = std::min(window_len, in.shape.steps);
  TimeSeriesTensor out = in;
  if (intensity == 0.0 || len == 0) return out;
  for (std::size_t s = 0; s < in.shape.samples; ++s) {
    if (!labels[s]) continue;
    Rng rng(mix_seed(seed, s, kClusterTag));
    const std::size_t begin = static_cast<std::size_t>(rng.below(in.shape.steps - len + 1));
    for (std::size_t t = begin; t < begin + len; ++t)
      for (std::size_t f = 0; f < in.shape.features; ++f)
        if (rng.uniform() < intensity) out.observed.at(s, t, f) = 1;
  }
  return out;
}

TimeSeriesTensor apply_transport_block_at(const TimeSeriesTensor& in, std::size_t sample,
                                          std::size_t start, std::size_t len) {
  if (sample >= in.shape.samples) throw ArgumentError("sample out of range");
  if (start + len > in.shape.steps) throw ArgumentError("transport block runs past the last step");
  TimeSeriesTensor out = in;
  for (std::size_t t = start; t < start + len; ++t)
    for (std::size_t f = 0; f < in.shape.features; ++f) out.observed.at(sample, t, f) = 0;
  return out;
}

TimeSeriesTensor apply_transport_blocks(const TimeSeriesTensor& in, std::size_t block_len,
                                        std::size_t n_blocks, std::uint64_t seed) {
  const auto& sh = in.shape;
  if (block_len > sh.steps) throw ArgumentError("transport block_len exceeds n_steps");
  if (block_len == 0 || n_blocks == 0) return in;
  const std::size_t per_sample = sh.steps / block_len;
  const std::size_t capacity = per_sample * sh.samples;
  if (n_blocks > capacity)
    throw ArgumentError(std::to_string(n_blocks) + " transport blocks of length " +
                        std::to_string(block_len) + " do not fit (capacity " +
                        std::to_string(capacity) + ")");

  // Distribute blocks: a uniform subset of the (sample, slot) capacity grid.
  Rng rng(mix_seed(seed, stream::transport));
  std::vector<std::size_t> blocks_in(sh.samples, 0);
  for (auto slot : rng.choose(static_cast<std::uint32_t>(capacity), static_cast<std::uint32_t>(n_blocks)))
    ++blocks_in[slot / per_sample];

  TimeSeriesTensor out = in;
  for (std::size_t s = 0; s < sh.samples; ++s) {
    const std::size_t m = blocks_in[s];
    if (m == 0) continue;
    // m non-overlapping intervals: starts u_i + i*(len-1) with u sorted
    // distinct in [0, steps - m*len + m).
    const std::size_t range = sh.steps - m * block_len + m;
    auto u = rng.choose(static_cast<std::uint32_t>(range), static_cast<std::uint32_t>(m));
    std::sort(u.begin(), u.end());
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t start = u[i] + i * (block_len - 1);
      for (std::size_t t = start; t < start + block_len; ++t)
        for (std::size_t f = 0; f < sh.features; ++f) out.observed.at(s, t, f) = 0;
    }
  }
  return out;
}

TimeSeriesTensor apply_value_dependent(const TimeSeriesTensor& in, double threshold,
                                       double followup_prob, std::uint64_t seed) {
  require_prob(followup_prob, "followup_prob");
  TimeSeriesTensor out = in;
  if (followup_prob == 0.0 || std::isinf(threshold)) return out;
  const auto& sh = in.shape;
  for (std::size_t s = 0; s < sh.samples; ++s) {
    Rng rng(mix_seed(seed, s, kFollowupTag));
    for (std::size_t f = 0; f < sh.features; ++f)
      for (std::size_t t = 0; t + 1 < sh.steps; ++t) {
        if (!out.observed.at(s, t, f) || !(std::abs(in.value(s, t, f)) > threshold)) continue;
        if (rng.uniform() < followup_prob) out.observed.at(s, t + 1, f) = 1;
      }
  }
  return out;
}

TimeSeriesTensor apply_clinical_mechanisms(const TimeSeriesTensor& t, const LabelVector& labels,
                                           const MechanismParams& p, std::uint64_t seed) {
  auto out = apply_protocol_missingness(t, p.protocol_period_hours, mix_seed(seed, 0, 0, 1));
  out = apply_condition_clusters(out, labels, p.cluster_intensity, p.cluster_window_len,
                                 mix_seed(seed, 0, 0, 2));
  out = apply_transport_blocks(out, p.transport_block_len, p.transport_blocks, mix_seed(seed, 0, 0, 3));
  return apply_value_dependent(out, p.abnormal_threshold_z, p.followup_prob, mix_seed(seed, 0, 0, 4));
}

}  // namespace maskbench
