#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskbench/masking.hpp"
#include "maskbench/tensor.hpp"

namespace maskbench {

/// NBM: statistics fit before artificial masking (over originally observed
/// cells). NAM: fit after masking (observed and not artificially hidden).
enum class NormRegime { NBM, NAM };

std::string to_string(NormRegime r);
NormRegime parse_regime(const std::string& s);

inline constexpr double kScaleFloor = 1e-8;

struct NormStats {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, floored at kScaleFloor
  std::vector<std::size_t> counts;
  NormRegime provenance = NormRegime::NBM;

  std::size_t features() const { return mean.size(); }
  /// Features whose scale is the floor because fewer than two cells were fit.
  bool under_fitted(std::size_t f) const { return counts[f] < 2; }
};

/// `samples` restricts fitting to a subset (the training split); empty means all.
NormStats fit_stats(const TimeSeriesTensor& t, NormRegime regime, const MaskSet* masks = nullptr,
                    const std::vector<std::size_t>& samples = {});

TimeSeriesTensor transform(const TimeSeriesTensor& t, const NormStats& stats);
TimeSeriesTensor inverse_transform(const TimeSeriesTensor& t, const NormStats& stats);

/// norm_stats.json: provenance plus feature name -> {mean, scale, count}, in feature order.
void write_norm_stats(const std::filesystem::path& file, const NormStats& stats,
                      const std::vector<std::string>& feature_names);
NormStats read_norm_stats(const std::filesystem::path& file);

}  // namespace maskbench
