#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskbench/dataset.hpp"
#include "maskbench/masking.hpp"
#include "maskbench/tensor.hpp"

namespace maskbench {

// Task directory layout
//
//   <task_dir>/input/data.csv            masked values (empty field where hidden)
//   <task_dir>/input/mask.csv            1 = visible to the external model
//   <task_dir>/input/mask-artificial.csv 1 = hidden by the harness (impute only)
//   <task_dir>/input/manifest.json
//   <task_dir>/input/labels.csv          training labels only (classify only)
//   <task_dir>/input/predict.csv         sample_id rows to score (classify only)
//   <task_dir>/output/imputed.csv        dense, same header as data.csv
//   <task_dir>/output/scores.csv         sample_id,score (classify only)
//   <task_dir>/stdout.txt, stderr.txt    captured by run_external

enum class TaskKind { impute, classify };

std::string to_string(TaskKind k);

/// Observed input cells must come back within this relative tolerance
/// (|out - in| <= tol * max(1, |in|)); external models often emit float32.
inline constexpr double kPassThroughTolerance = 1e-6;

struct ExchangeTask {
  std::filesystem::path task_dir;
  TaskKind kind = TaskKind::impute;
  /// Shell command; "{task_dir}" is replaced by the single-quoted task path.
  std::string command;
  double timeout_seconds = 3600.0;
};

/// Writes the impute inputs. Any previous contents of task_dir are removed.
/// Refuses (StructuralError) when the manifest disagrees with the tensor or
/// an artificially masked cell is still marked observed.
ExchangeTask export_task(const TimeSeriesTensor& masked, const MaskSet& masks,
                         const DatasetManifest& manifest, const std::filesystem::path& task_dir,
                         const std::string& command, double timeout_seconds,
                         const std::vector<std::int64_t>& sample_ids = {});

/// Writes the classify inputs: the dense imputed tensor, labels of `train`
/// and the ids in `predict`.
ExchangeTask export_classify_task(const TimeSeriesTensor& dense, const LabelVector& labels,
                                  const std::vector<std::size_t>& train,
                                  const std::vector<std::size_t>& predict,
                                  const std::filesystem::path& task_dir, const std::string& command,
                                  double timeout_seconds);

struct ExitReport {
  bool success = false;
  int exit_code = -1;
  bool timed_out = false;
  double wall_seconds = 0.0;
  std::string stderr_text;  // last 4 KiB
  std::string message;
};

/// Runs the command through /bin/sh. Never throws for process failures; they
/// are reported. Success also requires the kind's output file to exist.
ExitReport run_external(const ExchangeTask& task);

/// Dense tensor from output/imputed.csv, checked against input/ for shape,
/// finiteness and pass-through. Throws StructuralError / ValidationError.
TimeSeriesTensor import_result(const ExchangeTask& task, double tolerance = kPassThroughTolerance);

/// Scores from output/scores.csv in the order of input/predict.csv.
std::vector<double> import_scores(const ExchangeTask& task);

std::string substitute_task_dir(const std::string& command, const std::filesystem::path& task_dir);

}  // namespace maskbench
