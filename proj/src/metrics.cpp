#include "maskbench/metrics.hpp"

#include <cmath>

#include "maskbench/error.hpp"

namespace maskbench {

std::string to_string(MetricSpace s) { return s == MetricSpace::normalized ? "normalized" : "raw"; }

MetricSpace parse_metric_space(const std::string& s) {
  if (s == "normalized") return MetricSpace::normalized;
  if (s == "raw") return MetricSpace::raw;
  throw ArgumentError("unknown metric space '" + s + "'");
}

namespace {

// Neumaier-compensated sum, accumulated in cell order.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename Loss>
double masked_mean(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                   const BinaryTensor& mask, Loss loss, std::size_t* n_out = nullptr) {
  if (truth.shape != imputed.shape || mask.shape != truth.shape)
    throw ArgumentError("metric inputs have different shapes");
  CompensatedSum acc;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    acc.add(loss(truth.values[i] - imputed.values[i]));
    ++n;
  }
  if (n == 0) throw ArgumentError("no scoreable cells");
  if (n_out) *n_out = n;
  return acc.value() / static_cast<double>(n);
}

}  // namespace

double masked_mae(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                  const BinaryTensor& eval_mask) {
  return masked_mean(truth, imputed, eval_mask, [](double d) { return std::abs(d); });
}

double masked_mse(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                  const BinaryTensor& eval_mask) {
  return masked_mean(truth, imputed, eval_mask, [](double d) { return d * d; });
}

ImputationScore score_imputation(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed,
                                 const BinaryTensor& eval_mask, MetricSpace space) {
  ImputationScore s;
  s.space = space;
  s.mae = masked_mean(truth, imputed, eval_mask, [](double d) { return std::abs(d); }, &s.n_eval_cells);
  s.mse = masked_mse(truth, imputed, eval_mask);
  return s;
}

}  // namespace maskbench
