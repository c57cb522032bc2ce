#pragma once

// Naive reference implementations used to cross-check the library. They are
// deliberately written as plain loops with no shared code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskbench/tensor.hpp"

namespace oracle {

using maskbench::BinaryTensor;
using maskbench::TimeSeriesTensor;

inline double mae(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed, const BinaryTensor& mask) {
  long double sum = 0.0L;
  long double n = 0.0L;
  for (std::size_t s = 0; s < truth.shape.samples; ++s)
    for (std::size_t t = 0; t < truth.shape.steps; ++t)
      for (std::size_t f = 0; f < truth.shape.features; ++f)
        if (mask.at(s, t, f)) {
          sum += std::fabs(static_cast<long double>(truth.value(s, t, f)) - imputed.value(s, t, f));
          n += 1.0L;
        }
  return static_cast<double>(sum / n);
}

inline double mse(const TimeSeriesTensor& truth, const TimeSeriesTensor& imputed, const BinaryTensor& mask) {
  long double sum = 0.0L;
  long double n = 0.0L;
  for (std::size_t s = 0; s < truth.shape.samples; ++s)
    for (std::size_t t = 0; t < truth.shape.steps; ++t)
      for (std::size_t f = 0; f < truth.shape.features; ++f)
        if (mask.at(s, t, f)) {
          long double d = static_cast<long double>(truth.value(s, t, f)) - imputed.value(s, t, f);
          sum += d * d;
          n += 1.0L;
        }
  return static_cast<double>(sum / n);
}

/// Every (positive, negative) pair: a win counts 2, a tie counts 1.
inline double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  std::uint64_t twice = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg)++;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) twice += 2;
      else if (scores[i] == scores[j]) twice += 1;
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

/// Step oracle for average precision: visit each distinct score from the top,
/// recount tp/fp by a full scan, and add the recall step times the precision.
inline double average_precision(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::uint64_t total_pos = 0;
  for (auto l : labels) total_pos += l;
  double ap = 0.0;
  for (double th : thresholds) {
    std::uint64_t tp = 0, fp = 0, pos_here = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) (labels[i] ? tp : fp)++;
      if (scores[i] == th && labels[i]) ++pos_here;
    }
    if (pos_here == 0) continue;
    ap += static_cast<double>(pos_here) * static_cast<double>(tp) /
          (static_cast<double>(total_pos) * static_cast<double>(tp + fp));
  }
  return ap;
}

inline bool rel_close(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({1e-300, std::fabs(a), std::fabs(b)});
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("maskbench-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
