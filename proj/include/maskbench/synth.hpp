#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "maskbench/tensor.hpp"

namespace maskbench {

enum class Trajectory { stationary_gaussian, ar1, deterioration };

std::string to_string(Trajectory t);
Trajectory parse_trajectory(const std::string& s);

/// Parameters of the four clinical missingness mechanisms. The defaults are
/// identity settings: a cohort generated with them stays fully observed.
struct MechanismParams {
  std::size_t protocol_period_hours = 1;
  double cluster_intensity = 0.0;
  std::size_t cluster_window_len = 12;
  std::size_t transport_block_len = 0;
  std::size_t transport_blocks = 0;
  double abnormal_threshold_z = std::numeric_limits<double>::infinity();
  double followup_prob = 0.0;
};

struct CohortConfig {
  std::size_t n_samples = 1000;
  std::size_t n_steps = 48;
  std::size_t n_features = 5;
  Trajectory trajectory = Trajectory::ar1;
  double prevalence = 0.15;
  double ar_coefficient = 0.9;
  /// Mean shift reached at the last step for positive samples (deterioration).
  double drift = 2.0;
  std::size_t drift_steps = 12;
  MechanismParams mechanisms;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Cohort {
  TimeSeriesTensor tensor;
  LabelVector labels;
};

/// Labels first (Bernoulli(prevalence) per sample), then trajectories
/// conditioned on the label. Fully observed, unit stationary variance.
Cohort generate_cohort(const CohortConfig& config);

// The mechanisms below only flip observation flags; values are never touched,
// so the input's ground truth stays available at every cell.

/// Keeps steps t with t % period == phase, phase drawn per (sample, feature)
/// from [0, period). When period >= n_steps only step 0 is kept.
TimeSeriesTensor apply_protocol_missingness(const TimeSeriesTensor& t, std::size_t period_hours,
                                            std::uint64_t seed);

struct StepWindow {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

/// For positive samples, every cell inside the window becomes observed with
/// probability `intensity`. Negative samples are untouched.
TimeSeriesTensor apply_condition_clusters(const TimeSeriesTensor& t, const LabelVector& labels,
                                          double intensity, StepWindow window, std::uint64_t seed);
/// Same, with a window of `window_len` steps placed uniformly per positive sample.
TimeSeriesTensor apply_condition_clusters(const TimeSeriesTensor& t, const LabelVector& labels,
                                          double intensity, std::size_t window_len,
                                          std::uint64_t seed);

/// Hides steps [start, start+len) across all features of one sample.
TimeSeriesTensor apply_transport_block_at(const TimeSeriesTensor& t, std::size_t sample,
                                          std::size_t start, std::size_t len);
/// Places `n_blocks` non-overlapping blocks uniformly over the cohort.
/// Throws ArgumentError if they cannot fit (each sample holds at most
/// n_steps / block_len blocks).
TimeSeriesTensor apply_transport_blocks(const TimeSeriesTensor& t, std::size_t block_len,
                                        std::size_t n_blocks, std::uint64_t seed);

/// Forward sweep over steps: an observed cell with |value| > threshold makes
/// the next step of the same feature observed with probability followup_prob.
/// Cells observed this way can trigger further follow-ups.
TimeSeriesTensor apply_value_dependent(const TimeSeriesTensor& t, double abnormal_threshold_z,
                                       double followup_prob, std::uint64_t seed);

/// protocol -> clusters -> transport -> value-dependent.
TimeSeriesTensor apply_clinical_mechanisms(const TimeSeriesTensor& t, const LabelVector& labels,
                                           const MechanismParams& params, std::uint64_t seed);

}  // namespace maskbench
