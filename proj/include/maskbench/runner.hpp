#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskbench/config.hpp"
#include "maskbench/dataset.hpp"
#include "maskbench/downstream.hpp"
#include "maskbench/metrics.hpp"

namespace maskbench {

struct GridCell {
  std::size_t index = 0;
  /// e.g. "augmentation-pre_mask-NBM-mean"
  std::string id;
  MaskStrategy strategy = MaskStrategy::augmentation;
  MaskTiming timing = MaskTiming::pre_mask;
  NormRegime normalization = NormRegime::NBM;
  ImputerDescriptor imputer;
  /// e.g. "Augmentation Pre-Mask NBM", "Overlay Mini-Batch Mask NBM"
  std::string panel;
  MaskPattern pattern = MaskPattern::random;
  double rate = 0.2;
  std::optional<BlockShape> block_shape;
  MetricSpace metric_space = MetricSpace::normalized;
};

std::string panel_name(MaskStrategy s, MaskTiming t, NormRegime r);

/// Cartesian product in strategy, timing, normalization, imputer order (the
/// imputer varies fastest). With standard_panels the first three axes are
/// replaced by the six standard panels.
std::vector<GridCell> expand_grid(const ExperimentConfig& cfg);

struct FoldScore {
  std::size_t fold = 0;
  ImputationScore score;
};

/// One (cell, seed) repetition.
struct SeedResult {
  std::string cell_id;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  /// Fold-averaged; each fold's score is cell-global over its validation rows.
  ImputationScore score;
  std::vector<FoldScore> folds;
  /// Fit + impute time summed over folds and epochs.
  double wall_seconds = 0.0;
  std::optional<ClassifierScore> downstream;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std across seeds
};

MeanStd mean_std(const std::vector<double>& xs);

enum class RunStatus { ok, partial, failed };
std::string to_string(RunStatus s);

struct RunResult {
  GridCell cell;
  RunStatus status = RunStatus::failed;
  std::vector<SeedResult> seeds;
  MeanStd mae;
  MeanStd mse;
  MeanStd wall_seconds;
  std::size_t n_eval_cells = 0;  // first successful seed
  std::optional<MeanStd> roc_auc;
  std::optional<MeanStd> pr_auc;
  std::string classifier_name;

  std::size_t n_ok() const;
};

/// Summarizes the seeds of one cell; failed seeds only contribute their error.
RunResult aggregate(const GridCell& cell, std::vector<SeedResult> seeds);

/// The generated or loaded dataset, values raw with the sentinel applied.
Dataset resolve_dataset(const ExperimentConfig& cfg);

struct FoldOutcome {
  ImputationScore score;
  NormStats stats;
  double wall_seconds = 0.0;
  /// Dense imputation of every sample, in normalized space.
  TimeSeriesTensor imputed;
};

/// One fold of one cell. Ordering: NBM fits stats on the raw training rows,
/// normalizes, then masks; NAM masks first and fits on what stays visible.
/// Only validation rows are scored. External imputers run through the
/// adapter inside `task_dir`.
FoldOutcome run_fold(const Dataset& ds, const MaskSet& masks, const Fold& fold, NormRegime regime,
                     const ImputerDescriptor& imputer, MetricSpace space,
                     const std::filesystem::path& task_dir = {});

struct ExecuteOptions {
  /// Root for runs/, grid.json and reports. Empty disables artifact writing.
  std::filesystem::path out_dir;
  bool write_masks = true;
};

/// Runs every (cell, seed) through a pool of cfg.jobs workers with at most
/// cfg.max_subprocesses external processes at once. Per-seed failures are
/// recorded; dataset errors propagate.
std::vector<RunResult> execute(const ExperimentConfig& cfg, const ExecuteOptions& opts);
std::vector<RunResult> execute(const ExperimentConfig& cfg, const Dataset& ds, const ExecuteOptions& opts);

/// Reads grid.json and runs/<cell>/<seed>/result.json back into results.
std::vector<RunResult> load_results(const std::filesystem::path& out_dir);

}  // namespace maskbench
