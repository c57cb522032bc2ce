#include "maskbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskbench/error.hpp"

namespace maskbench {

std::string to_string(Scale s) { return s == Scale::raw ? "raw" : "normalized"; }

Scale parse_scale(const std::string& s) {
  if (s == "raw") return Scale::raw;
  if (s == "normalized") return Scale::normalized;
  throw ValidationError("unknown scale '" + s + "'");
}

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.samples) + "," + std::to_string(s.steps) + "," +
         std::to_string(s.features) + ")";
}

std::size_t BinaryTensor::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

TimeSeriesTensor::TimeSeriesTensor(Shape sh)
    : shape(sh), values(sh.cells(), 0.0), observed(sh, 1), step_index(sh.steps) {
  feature_names.reserve(sh.features);
  for (std::size_t f = 0; f < sh.features; ++f) feature_names.push_back("f" + std::to_string(f));
  std::iota(step_index.begin(), step_index.end(), 0.0);
}

void TimeSeriesTensor::validate() const {
  if (values.size() != shape.cells() || observed.bits.size() != shape.cells() ||
      observed.shape != shape)
    throw StructuralError("tensor storage does not match shape " + to_string(shape));
  if (feature_names.size() != shape.features)
    throw StructuralError("feature_names has " + std::to_string(feature_names.size()) +
                          " entries, expected " + std::to_string(shape.features));
  if (step_index.size() != shape.steps)
    throw StructuralError("step_index has " + std::to_string(step_index.size()) +
                          " entries, expected " + std::to_string(shape.steps));
  for (std::size_t s = 0; s < shape.samples; ++s)
    for (std::size_t t = 0; t < shape.steps; ++t)
      for (std::size_t f = 0; f < shape.features; ++f) {
        auto i = shape.index(s, t, f);
        if (observed.bits[i] > 1)
          throw ValidationError("observed flag not in {0,1} at (" + std::to_string(s) + "," +
                                std::to_string(t) + "," + std::to_string(f) + ")");
        if (observed.bits[i] && !std::isfinite(values[i]))
          throw ValidationError("non-finite observed value at (" + std::to_string(s) + "," +
                                std::to_string(t) + "," + std::to_string(f) + ")");
      }
}

TimeSeriesTensor TimeSeriesTensor::sentinelized() const {
  TimeSeriesTensor out = *this;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (!out.observed.bits[i]) out.values[i] = 0.0;
  return out;
}

TimeSeriesTensor TimeSeriesTensor::select_samples(const std::vector<std::size_t>& indices) const {
  TimeSeriesTensor out;
  out.shape = Shape{indices.size(), shape.steps, shape.features};
  out.values.resize(out.shape.cells());
  out.observed = BinaryTensor(out.shape);
  out.feature_names = feature_names;
  out.step_index = step_index;
  out.scale = scale;
  const std::size_t row = shape.steps * shape.features;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= shape.samples)
      throw ArgumentError("sample index " + std::to_string(indices[k]) + " out of range");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(indices[k] * row), row,
                out.values.begin() + static_cast<std::ptrdiff_t>(k * row));
    std::copy_n(observed.bits.begin() + static_cast<std::ptrdiff_t>(indices[k] * row), row,
                out.observed.bits.begin() + static_cast<std::ptrdiff_t>(k * row));
  }
  return out;
}

std::size_t count_positive(const LabelVector& labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

}  // namespace maskbench
