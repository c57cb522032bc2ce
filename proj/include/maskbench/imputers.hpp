#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maskbench/tensor.hpp"

namespace maskbench {

enum class ImputerKind { mean, median, locf, external };

std::string to_string(ImputerKind k);
ImputerKind parse_imputer_kind(const std::string& s);

struct ImputerDescriptor {
  std::string name;
  ImputerKind kind = ImputerKind::mean;
  /// Shell command with a {task_dir} placeholder; present iff kind == external.
  std::optional<std::string> external_command;
  double timeout_seconds = 3600.0;

  void validate() const;
};

ImputerDescriptor classical_imputer(ImputerKind kind);

struct FittedImputer {
  ImputerDescriptor descriptor;
  /// Per-feature fill value (mean/median); empty for LOCF and external.
  std::vector<double> central;
  /// Features with no visible training cell; their fill value is 0.0.
  std::vector<bool> fallback;
};

/// Fits on the visible cells (observed after masking) of `train`, optionally
/// restricted to `samples`. Hidden ground truth is never read.
FittedImputer fit(const ImputerDescriptor& d, const TimeSeriesTensor& train,
                  const std::vector<std::size_t>& samples = {});

/// Dense output (every cell observed and finite). Observed input cells pass
/// through bit-exactly. LOCF fills leading gaps with 0.0 (the feature mean in
/// normalized space). Throws ArgumentError for external imputers, which run
/// through the adapter.
TimeSeriesTensor impute(const FittedImputer& fitted, const TimeSeriesTensor& t);

}  // namespace maskbench
