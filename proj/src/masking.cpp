#include "maskbench/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "maskbench/csv.hpp"
#include "maskbench/dataset.hpp"
#include "maskbench/error.hpp"
#include "maskbench/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace maskbench {

std::string to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::random: return "random";
    case MaskPattern::temporal: return "temporal";
    case MaskPattern::spatial: return "spatial";
    case MaskPattern::block: return "block";
  }
  return "?";
}

std::string to_string(MaskStrategy s) {
  return s == MaskStrategy::augmentation ? "augmentation" : "overlay";
}

MaskPattern parse_pattern(const std::string& s) {
  if (s == "random") return MaskPattern::random;
  if (s == "temporal") return MaskPattern::temporal;
  if (s == "spatial") return MaskPattern::spatial;
  if (s == "block") return MaskPattern::block;
  throw ArgumentError("unknown mask pattern '" + s + "'");
}

MaskStrategy parse_strategy(const std::string& s) {
  if (s == "augmentation" || s == "aug" || s == "rmeo") return MaskStrategy::augmentation;
  if (s == "overlay" || s == "rmod") return MaskStrategy::overlay;
  throw ArgumentError("unknown mask strategy '" + s + "'");
}

void MaskSpec::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ArgumentError("mask rate must lie in [0,1]");
  if (pattern == MaskPattern::block) {
    if (!block_shape) throw ArgumentError("block pattern requires block_shape");
    if (block_shape->steps < 1 || block_shape->features < 1)
      throw ArgumentError("block_shape dimensions must be >= 1");
  } else if (block_shape) {
    throw ArgumentError("block_shape is only valid for the block pattern");
  }
}

std::size_t unit_count(double rate, std::size_t eligible_units) {
  if (eligible_units == 0 || rate <= 0.0) return 0;
  auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(eligible_units) + 0.5));
  return std::clamp<std::size_t>(k, 1, eligible_units);
}

namespace {

struct Context {
  std::uint64_t epoch = 0;
  std::uint64_t batch = 0;
};

bool eligible(const MaskSpec& spec, const BinaryTensor& observed, std::size_t i) {
  return spec.strategy == MaskStrategy::overlay || observed.bits[i] != 0;
}

void nothing_to_mask() { throw ArgumentError("nothing to mask: no eligible cells"); }

void finish(MaskSet& m, const BinaryTensor& observed) {
  m.evaluation = BinaryTensor(observed.shape);
  for (std::size_t i = 0; i < observed.bits.size(); ++i)
    m.evaluation.bits[i] = m.artificial.bits[i] & observed.bits[i];
}

MaskSet random_cells(const MaskSpec& spec, const BinaryTensor& observed,
                     const std::vector<std::size_t>& samples, Context ctx) {
  const auto& sh = observed.shape;
  MaskSet m{BinaryTensor(sh), {}, spec, std::nullopt};
  std::vector<std::uint32_t> cells;
  const std::size_t row = sh.steps * sh.features;
  for (auto s : samples)
    for (std::size_t i = s * row; i < (s + 1) * row; ++i)
      if (eligible(spec, observed, i)) cells.push_back(static_cast<std::uint32_t>(i));
  if (spec.rate > 0.0 && cells.empty()) nothing_to_mask();
  if (!cells.empty()) {
    const auto k = static_cast<std::uint32_t>(
        std::floor(spec.rate * static_cast<double>(cells.size()) + 0.5));
    Rng rng(mix_seed(spec.seed, stream::global_cells, ctx.epoch, ctx.batch));
    for (auto pick : rng.choose(static_cast<std::uint32_t>(cells.size()), k))
      m.artificial.bits[cells[pick]] = 1;
  }
  finish(m, observed);
  return m;
}

// Temporal (units = steps) and spatial (units = features) share this walk.
MaskSet unit_slices(const MaskSpec& spec, const BinaryTensor& observed,
                    const std::vector<std::size_t>& samples, Context ctx, bool by_step) {
  const auto& sh = observed.shape;
  MaskSet m{BinaryTensor(sh), {}, spec, std::nullopt};
  const std::size_t n_units = by_step ? sh.steps : sh.features;
  const std::size_t unit_len = by_step ? sh.features : sh.steps;
  auto cell = [&](std::size_t s, std::size_t u, std::size_t j) {
    return by_step ? sh.index(s, u, j) : sh.index(s, j, u);
  };
  bool any_eligible = false;
  std::vector<std::uint32_t> units;
  for (auto s : samples) {
    units.clear();
    for (std::size_t u = 0; u < n_units; ++u)
      for (std::size_t j = 0; j < unit_len; ++j)
        if (eligible(spec, observed, cell(s, u, j))) {
          units.push_back(static_cast<std::uint32_t>(u));
          break;
        }
    if (units.empty()) continue;
    any_eligible = true;
    Rng rng(mix_seed(spec.seed, s, ctx.epoch, ctx.batch));
    const auto k = unit_count(spec.rate, units.size());
    for (auto pick : rng.choose(static_cast<std::uint32_t>(units.size()), static_cast<std::uint32_t>(k)))
      for (std::size_t j = 0; j < unit_len; ++j) {
        auto i = cell(s, units[pick], j);
        if (eligible(spec, observed, i)) m.artificial.bits[i] = 1;
      }
  }
  if (spec.rate > 0.0 && !any_eligible) nothing_to_mask();
  finish(m, observed);
  return m;
}

MaskSet blocks(const MaskSpec& spec, const BinaryTensor& observed,
               const std::vector<std::size_t>& samples, Context ctx) {
  const auto& sh = observed.shape;
  const BlockShape b = *spec.block_shape;
  if (b.steps > sh.steps || b.features > sh.features)
    throw ArgumentError("block_shape (" + std::to_string(b.steps) + "," +
                        std::to_string(b.features) + ") is larger than the grid (" +
                        std::to_string(sh.steps) + "," + std::to_string(sh.features) + ")");
  MaskSet m{BinaryTensor(sh), {}, spec, std::nullopt};

  std::vector<std::size_t> candidates;
  std::size_t eligible_cells = 0;
  const std::size_t row = sh.steps * sh.features;
  for (auto s : samples) {
    std::size_t n = 0;
    for (std::size_t i = s * row; i < (s + 1) * row; ++i) n += eligible(spec, observed, i);
    if (n) candidates.push_back(s);
    eligible_cells += n;
  }
  if (spec.rate > 0.0 && candidates.empty()) nothing_to_mask();
  if (candidates.empty()) {
    finish(m, observed);
    return m;
  }
  const double area = static_cast<double>(b.steps * b.features);
  std::size_t n_blocks = 0;
  if (spec.rate > 0.0) {
    n_blocks = static_cast<std::size_t>(
        std::floor(spec.rate * static_cast<double>(eligible_cells) / area + 0.5));
    n_blocks = std::max<std::size_t>(n_blocks, 1);
  }
  if (n_blocks > candidates.size())
    throw ArgumentError("infeasible block placement: rate needs " + std::to_string(n_blocks) +
                        " blocks but only " + std::to_string(candidates.size()) +
                        " samples can hold one");

  Rng pick_rng(mix_seed(spec.seed, stream::block_samples, ctx.epoch, ctx.batch));
  for (auto pick : pick_rng.choose(static_cast<std::uint32_t>(candidates.size()),
                                   static_cast<std::uint32_t>(n_blocks))) {
    const std::size_t s = candidates[pick];
    // Uniform over the placements that touch at least one eligible cell.
    std::vector<std::pair<std::size_t, std::size_t>> places;
    for (std::size_t t0 = 0; t0 + b.steps <= sh.steps; ++t0)
      for (std::size_t f0 = 0; f0 + b.features <= sh.features; ++f0) {
        bool touches = false;
        for (std::size_t t = t0; t < t0 + b.steps && !touches; ++t)
          for (std::size_t f = f0; f < f0 + b.features && !touches; ++f)
            touches = eligible(spec, observed, sh.index(s, t, f));
        if (touches) places.emplace_back(t0, f0);
      }
    Rng rng(mix_seed(spec.seed, s, ctx.epoch, ctx.batch));
    const auto [t0, f0] = places[static_cast<std::size_t>(rng.below(places.size()))];
    for (std::size_t t = t0; t < t0 + b.steps; ++t)
      for (std::size_t f = f0; f < f0 + b.features; ++f) {
        auto i = sh.index(s, t, f);
        if (eligible(spec, observed, i)) m.artificial.bits[i] = 1;
      }
  }
  finish(m, observed);
  return m;
}

MaskSet dispatch(const MaskSpec& spec, const BinaryTensor& observed,
                 const std::vector<std::size_t>& samples, Context ctx) {
  spec.validate();
  switch (spec.pattern) {
    case MaskPattern::random: return random_cells(spec, observed, samples, ctx);
    case MaskPattern::temporal: return unit_slices(spec, observed, samples, ctx, true);
    case MaskPattern::spatial: return unit_slices(spec, observed, samples, ctx, false);
    case MaskPattern::block: return blocks(spec, observed, samples, ctx);
  }
  throw ArgumentError("unhandled mask pattern");
}

std::vector<std::size_t> all_samples(const BinaryTensor& observed) {
  std::vector<std::size_t> v(observed.shape.samples);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

MaskSpec with_pattern(MaskSpec spec, MaskPattern p) {
  if (spec.pattern != p)
    throw ArgumentError("spec pattern is " + to_string(spec.pattern) + ", expected " + to_string(p));
  return spec;
}

}  // namespace

MaskSet generate_mask(const MaskSpec& spec, const BinaryTensor& observed) {
  return dispatch(spec, observed, all_samples(observed), {});
}

MaskSet generate_random(const MaskSpec& spec, const BinaryTensor& observed) {
  return dispatch(with_pattern(spec, MaskPattern::random), observed, all_samples(observed), {});
}
MaskSet generate_temporal(const MaskSpec& spec, const BinaryTensor& observed) {
  return dispatch(with_pattern(spec, MaskPattern::temporal), observed, all_samples(observed), {});
}
MaskSet generate_spatial(const MaskSpec& spec, const BinaryTensor& observed) {
  return dispatch(with_pattern(spec, MaskPattern::spatial), observed, all_samples(observed), {});
}
MaskSet generate_block(const MaskSpec& spec, const BinaryTensor& observed) {
  return dispatch(with_pattern(spec, MaskPattern::block), observed, all_samples(observed), {});
}

MaskSet minibatch_mask_stream(const MaskSpec& spec, const BinaryTensor& observed,
                              std::uint64_t epoch, std::uint64_t batch_index,
                              const std::vector<std::size_t>& batch_sample_indices) {
  if (batch_sample_indices.empty()) throw ArgumentError("empty mini-batch");
  std::vector<std::uint8_t> seen(observed.shape.samples, 0);
  for (auto s : batch_sample_indices) {
    if (s >= observed.shape.samples)
      throw ArgumentError("batch sample index " + std::to_string(s) + " out of range");
    if (seen[s]++) throw ArgumentError("duplicate sample " + std::to_string(s) + " in batch");
  }
  auto m = dispatch(spec, observed, batch_sample_indices, {epoch, batch_index});
  m.batch = BatchContext{epoch, batch_index, batch_sample_indices};
  return m;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n_samples, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, stream::batch_order, epoch));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n_samples; i += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n_samples, i + batch_size)));
  return batches;
}

MaskSet minibatch_epoch_union(const MaskSpec& spec, const BinaryTensor& observed,
                              std::uint64_t epoch, std::size_t batch_size) {
  MaskSet u{BinaryTensor(observed.shape), BinaryTensor(observed.shape), spec, std::nullopt};
  auto batches = epoch_batches(observed.shape.samples, batch_size, spec.seed, epoch);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    auto m = minibatch_mask_stream(spec, observed, epoch, b, batches[b]);
    for (std::size_t i = 0; i < u.artificial.bits.size(); ++i) {
      u.artificial.bits[i] |= m.artificial.bits[i];
      u.evaluation.bits[i] |= m.evaluation.bits[i];
    }
  }
  u.batch = BatchContext{epoch, batches.size(), {}};
  return u;
}

TimeSeriesTensor apply_mask(const TimeSeriesTensor& t, const MaskSet& masks) {
  if (masks.artificial.shape != t.shape)
    throw ArgumentError("mask shape " + to_string(masks.artificial.shape) +
                        " does not match tensor shape " + to_string(t.shape));
  TimeSeriesTensor out = t;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (masks.artificial.bits[i]) {
      out.observed.bits[i] = 0;
      out.values[i] = 0.0;
    }
  return out;
}

void write_maskset(const fs::path& dir, const MaskSet& masks,
                   const std::vector<std::string>& feature_names,
                   const std::vector<double>& step_index,
                   const std::vector<std::int64_t>& sample_ids) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_mask_csv(dir / "mask-artificial.csv", masks.artificial, feature_names, step_index, sample_ids);
  write_mask_csv(dir / "mask-eval.csv", masks.evaluation, feature_names, step_index, sample_ids);

  json p;
  p["pattern"] = to_string(masks.spec.pattern);
  p["strategy"] = to_string(masks.spec.strategy);
  p["rate"] = masks.spec.rate;
  if (masks.spec.block_shape)
    p["block_shape"] = {masks.spec.block_shape->steps, masks.spec.block_shape->features};
  else
    p["block_shape"] = nullptr;
  p["seed"] = masks.spec.seed;
  p["seed_rule"] =
      "child = splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ epoch) ^ batch)";
  if (masks.batch) {
    p["epoch"] = masks.batch->epoch;
    p["batch_index"] = masks.batch->batch_index;
    p["batch_samples"] = masks.batch->samples;
  }
  p["artificial_cells"] = masks.artificial.count();
  p["evaluation_cells"] = masks.evaluation.count();
  auto out = csv::open_for_write((dir / "provenance.json").string());
  out << p.dump(2) << '\n';
}

MaskSet read_maskset(const fs::path& dir, const Shape& shape) {
  MaskSet m;
  m.artificial = read_mask_csv(dir / "mask-artificial.csv", shape);
  m.evaluation = read_mask_csv(dir / "mask-eval.csv", shape);
  const auto prov = dir / "provenance.json";
  if (!fs::is_regular_file(prov)) throw IoError("missing file " + prov.string());
  std::ifstream in(prov);
  try {
    auto p = json::parse(in);
    m.spec.pattern = parse_pattern(p.at("pattern").get<std::string>());
    m.spec.strategy = parse_strategy(p.at("strategy").get<std::string>());
    m.spec.rate = p.at("rate").get<double>();
    m.spec.seed = p.at("seed").get<std::uint64_t>();
    if (!p.at("block_shape").is_null())
      m.spec.block_shape = BlockShape{p["block_shape"][0].get<std::size_t>(),
                                      p["block_shape"][1].get<std::size_t>()};
    if (p.contains("epoch"))
      m.batch = BatchContext{p["epoch"].get<std::uint64_t>(), p["batch_index"].get<std::uint64_t>(),
                             p.value("batch_samples", std::vector<std::size_t>{})};
  } catch (const json::exception& e) {
    throw ValidationError(prov.string() + ": " + e.what());
  }
  return m;
}

}  // namespace maskbench
