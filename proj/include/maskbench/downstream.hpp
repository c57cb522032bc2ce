#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskbench/dataset.hpp"
#include "maskbench/tensor.hpp"

namespace maskbench {

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Per (sample, feature): mean, min, max, last value. Columns are grouped by
/// feature: [f0_mean, f0_min, f0_max, f0_last, f1_mean, ...].
FeatureMatrix featurize_pooled(const TimeSeriesTensor& dense);

struct LinearHyper {
  double learning_rate = 0.1;
  std::size_t epochs = 300;
  double l2 = 1e-4;
};

/// Logistic regression on standardized columns (centre/scale from the
/// training rows). Weights start at zero.
struct LinearModel {
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<double> weights;
  double bias = 0.0;
  /// Regularized mean log-loss before each epoch and after the last one.
  std::vector<double> loss_history;

  double decision(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

/// Full-batch gradient descent on the mean logistic loss + l2/2 * |w|^2.
/// `rows` selects training rows (empty = all). Throws ArgumentError when only
/// one class is present.
LinearModel train_linear(const FeatureMatrix& x, const LabelVector& labels, const LinearHyper& hyper,
                         const std::vector<std::size_t>& rows = {});

/// Mann-Whitney statistic: P(pos > neg) + 0.5 P(tie). Throws if a class is missing.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Average precision: sum over descending-score tie groups of
/// (positives in group / P) * precision at the end of the group.
double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

enum class ClassifierKind { native_linear, external };

std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier_kind(const std::string& s);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::native_linear;
  std::string name = "native_linear";
  LinearHyper hyper;
  std::optional<std::string> command;  // external only
  double timeout_seconds = 3600.0;
};

struct ClassifierScore {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::string classifier_name;
  std::size_t folds_used = 0;
  std::vector<std::string> warnings;
};

/// Trains on each fold's training rows and scores its validation rows; AUCs
/// are averaged over folds. Folds whose validation or training rows hold a
/// single class are skipped with a warning. External classifiers run one
/// adapter task per fold under `task_root`.
ClassifierScore evaluate_downstream(const TimeSeriesTensor& imputed, const LabelVector& labels,
                                    const std::vector<Fold>& folds, const ClassifierSpec& classifier,
                                    const std::filesystem::path& task_root = {});

}  // namespace maskbench
