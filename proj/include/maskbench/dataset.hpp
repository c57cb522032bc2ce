#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskbench/tensor.hpp"

namespace maskbench {

struct DatasetManifest {
  std::size_t n_samples = 0;
  std::size_t n_steps = 0;
  std::size_t n_features = 0;
  Scale scale = Scale::raw;
  std::vector<std::string> feature_names;
  std::string source;
  std::int64_t seed_provenance = 0;
  /// "NBM" or "NAM"; required when scale is normalized.
  std::optional<std::string> norm_provenance;

  void check_against(const TimeSeriesTensor& t) const;
};

DatasetManifest manifest_for(const TimeSeriesTensor& t, std::string source = {},
                             std::int64_t seed = 0);

struct Dataset {
  TimeSeriesTensor tensor;
  LabelVector labels;
  DatasetManifest manifest;
  /// Row keys from data.csv, ascending; 0..n-1 for generated data.
  std::vector<std::int64_t> sample_ids;
};

/// Reads data.csv, mask.csv, labels.csv and manifest.json from `root`.
Dataset load_dataset(const std::filesystem::path& root);

struct TensorFiles {
  TimeSeriesTensor tensor;
  DatasetManifest manifest;
  std::vector<std::int64_t> sample_ids;
};

/// data.csv + mask.csv + manifest.json only (no labels).
TensorFiles load_tensor_files(const std::filesystem::path& root);

/// Writes the four dataset files. Values at unobserved cells are written as
/// empty fields.
void export_dataset(const std::filesystem::path& root, const Dataset& ds);

// Individual file writers/readers, shared with the masking and adapter modules.
void write_data_csv(const std::filesystem::path& file, const TimeSeriesTensor& t,
                    const std::vector<std::int64_t>& sample_ids);
/// Dense variant: every cell written, no empty fields (imputed outputs).
void write_dense_csv(const std::filesystem::path& file, const TimeSeriesTensor& t,
                     const std::vector<std::int64_t>& sample_ids);
void write_mask_csv(const std::filesystem::path& file, const BinaryTensor& mask,
                    const std::vector<std::string>& feature_names,
                    const std::vector<double>& step_index,
                    const std::vector<std::int64_t>& sample_ids);
BinaryTensor read_mask_csv(const std::filesystem::path& file, const Shape& expected);
/// Reads a file in data.csv layout in which every field must be present.
std::vector<double> read_dense_csv(const std::filesystem::path& file, const Shape& expected,
                                   const std::vector<std::string>& feature_names);
void write_labels_csv(const std::filesystem::path& file, const LabelVector& labels,
                      const std::vector<std::int64_t>& sample_ids);
void write_manifest(const std::filesystem::path& file, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& file);

std::vector<std::int64_t> default_sample_ids(std::size_t n);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Stratified k-fold: each class is shuffled with `seed` and dealt
/// round-robin (positives first, negatives continuing the cycle), so fold
/// sizes and per-fold positive counts each differ by at most one.
std::vector<Fold> split_kfold(const LabelVector& labels, std::size_t k, std::uint64_t seed);

struct FeatureSummary {
  std::string name;
  std::size_t observed_count = 0;
  double observed_fraction = 0.0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> mean;
};

std::vector<FeatureSummary> summarize(const TimeSeriesTensor& t);

}  // namespace maskbench
