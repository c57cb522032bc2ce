#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskbench/downstream.hpp"
#include "maskbench/imputers.hpp"
#include "maskbench/masking.hpp"
#include "maskbench/metrics.hpp"
#include "maskbench/normalization.hpp"
#include "maskbench/synth.hpp"

namespace maskbench {

/// pre_mask: one fixed mask before fitting. mini_batch: a fresh mask per
/// batch, unioned over each epoch for scoring.
enum class MaskTiming { pre_mask, mini_batch };

std::string to_string(MaskTiming t);
MaskTiming parse_timing(const std::string& s);

struct MiniBatchOptions {
  std::size_t batch_size = 256;
  std::size_t epochs = 1;
};

struct DownstreamOptions {
  bool enabled = false;
  ClassifierSpec classifier;
};

struct DatasetSource {
  std::optional<std::filesystem::path> path;
  std::optional<CohortConfig> cohort;
};

struct ExperimentConfig {
  DatasetSource dataset;

  MaskPattern pattern = MaskPattern::random;
  double rate = 0.2;
  std::optional<BlockShape> block_shape;

  std::vector<MaskStrategy> strategies{MaskStrategy::augmentation};
  std::vector<MaskTiming> timings{MaskTiming::pre_mask};
  std::vector<NormRegime> normalizations{NormRegime::NBM};
  /// Replace the strategy x timing x normalization product with the six
  /// standard panels ({aug, overlay} x {mini-batch NBM, pre-mask NBM, pre-mask NAM}).
  bool standard_panels = false;

  std::vector<ImputerDescriptor> imputers;
  std::size_t k_folds = 5;
  std::vector<std::uint64_t> seeds{0};
  MetricSpace metric_space = MetricSpace::normalized;
  MiniBatchOptions minibatch;
  DownstreamOptions downstream;

  std::size_t jobs = 1;
  std::size_t max_subprocesses = 1;

  void validate() const;
};

/// Parsed "key = value" text with [section] headers. Keys are stored as
/// "section.key". Values: "quoted strings", bare words, numbers, true/false
/// and one-level [lists]. '#' starts a comment outside quotes.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  /// Every key in file order.
  const std::vector<std::string>& keys() const { return order_; }
  std::size_t line_of(const std::string& key) const;

 private:
  struct Entry {
    std::string raw;
    std::size_t line = 0;
  };
  const Entry& entry(const std::string& key) const;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

/// Relative dataset paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
/// Inverse of parse_experiment_config (provenance copy in run directories).
std::string format_experiment_config(const ExperimentConfig& cfg);

}  // namespace maskbench
