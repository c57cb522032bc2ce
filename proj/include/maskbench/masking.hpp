#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskbench/tensor.hpp"

namespace maskbench {

enum class MaskPattern { random, temporal, spatial, block };
/// augmentation: hide observed cells only. overlay: draw over every cell; only
/// the part that lands on observed cells is scoreable.
enum class MaskStrategy { augmentation, overlay };

std::string to_string(MaskPattern p);
std::string to_string(MaskStrategy s);
MaskPattern parse_pattern(const std::string& s);
MaskStrategy parse_strategy(const std::string& s);

struct BlockShape {
  std::size_t steps = 1;
  std::size_t features = 1;
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

struct MaskSpec {
  MaskPattern pattern = MaskPattern::random;
  MaskStrategy strategy = MaskStrategy::augmentation;
  /// Target fraction of eligible cells (observed cells for augmentation,
  /// all cells for overlay).
  double rate = 0.2;
  std::optional<BlockShape> block_shape;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BatchContext {
  std::uint64_t epoch = 0;
  std::uint64_t batch_index = 0;
  std::vector<std::size_t> samples;
};

struct MaskSet {
  BinaryTensor artificial;
  BinaryTensor evaluation;
  MaskSpec spec;
  std::optional<BatchContext> batch;
};

/// Round-half-up unit count with a floor of one unit when rate > 0 and
/// something is eligible.
std::size_t unit_count(double rate, std::size_t eligible_units);

/// Pre-mask generation over every sample (epoch 0, batch 0). Dispatches on
/// spec.pattern. Throws ArgumentError when rate > 0 and nothing is eligible,
/// or when a block does not fit / too many blocks are needed.
MaskSet generate_mask(const MaskSpec& spec, const BinaryTensor& observed);

MaskSet generate_random(const MaskSpec& spec, const BinaryTensor& observed);
MaskSet generate_temporal(const MaskSpec& spec, const BinaryTensor& observed);
MaskSet generate_spatial(const MaskSpec& spec, const BinaryTensor& observed);
/// round(rate * eligible / area) blocks (at least one), one per selected
/// sample, each placed uniformly among positions touching an eligible cell.
MaskSet generate_block(const MaskSpec& spec, const BinaryTensor& observed);

/// Mask for one mini-batch. The result has the full grid shape but only the
/// batch's samples can carry artificial cells. Per-sample draws use
/// mix_seed(spec.seed, sample, epoch, batch_index).
MaskSet minibatch_mask_stream(const MaskSpec& spec, const BinaryTensor& observed,
                              std::uint64_t epoch, std::uint64_t batch_index,
                              const std::vector<std::size_t>& batch_sample_indices);

/// Batches of one epoch: samples shuffled with
/// mix_seed(seed, stream::batch_order, epoch) and cut into chunks of batch_size.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n_samples, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch);

/// Union of every batch mask of one epoch.
MaskSet minibatch_epoch_union(const MaskSpec& spec, const BinaryTensor& observed,
                              std::uint64_t epoch, std::size_t batch_size);

/// observed := observed AND NOT artificial; newly hidden cells get the sentinel.
TimeSeriesTensor apply_mask(const TimeSeriesTensor& t, const MaskSet& masks);

/// mask-artificial.csv, mask-eval.csv and provenance.json inside `dir`.
void write_maskset(const std::filesystem::path& dir, const MaskSet& masks,
                   const std::vector<std::string>& feature_names,
                   const std::vector<double>& step_index,
                   const std::vector<std::int64_t>& sample_ids);
MaskSet read_maskset(const std::filesystem::path& dir, const Shape& shape);

}  // namespace maskbench
