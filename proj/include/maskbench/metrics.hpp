#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include "maskbench/tensor.hpp"

namespace maskbench {

enum class MetricSpace { normalized, raw };

std::string to_string(MetricSpace s);
MetricSpace parse_metric_space(const std::string& s);

struct ImputationScore {
  double mae = 0.0;
  double mse = 0.0;
  std::size_t n_eval_cells = 0;
  MetricSpace space = MetricSpace::normalized;
};

/// Mean absolute error over cells with eval_mask == 1 (cell-global average).
/// Throws ArgumentError on shape mismatch or an empty mask.
double masked_mae(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                  const BinaryTensor& eval_mask);
double masked_mse(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                  const BinaryTensor& eval_mask);
ImputationScore score_imputation(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                                 const BinaryTensor& eval_mask, MetricSpace space);

/// Monotone-clock timer for the fit+impute phase of a run.
class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  void restart() { start_ = std::chrono::steady_clock::now(); }
  std::chrono::duration<double> elapsed() const { return std::chrono::steady_clock::now() - start_; }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace maskbench
