#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace maskbench {

enum class Scale { raw, normalized };

std::string to_string(Scale s);
Scale parse_scale(const std::string& s);

/// Grid dimensions shared by every tensor in the harness. Cells are laid out
/// sample-major, step-minor, feature-fastest.
struct Shape {
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::size_t features = 0;

  std::size_t cells() const { return samples * steps * features; }
  std::size_t index(std::size_t s, std::size_t t, std::size_t f) const {
    return (s * steps + t) * features + f;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense 0/1 tensor over a Shape.
struct BinaryTensor {
  Shape shape;
  std::vector<std::uint8_t> bits;

  BinaryTensor() = default;
  explicit BinaryTensor(Shape sh, std::uint8_t fill = 0) : shape(sh), bits(sh.cells(), fill) {}

  std::uint8_t at(std::size_t s, std::size_t t, std::size_t f) const {
    return bits[shape.index(s, t, f)];
  }
  std::uint8_t& at(std::size_t s, std::size_t t, std::size_t f) {
    return bits[shape.index(s, t, f)];
  }
  std::size_t count() const;

  friend bool operator==(const BinaryTensor&, const BinaryTensor&) = default;
};

/// Values plus observation mask. Cells with observed == 0 are never read as
/// data; code that hides a cell writes the 0.0 sentinel there.
struct TimeSeriesTensor {
  Shape shape;
  std::vector<double> values;
  BinaryTensor observed;
  std::vector<std::string> feature_names;
  std::vector<double> step_index;  // hours
  Scale scale = Scale::raw;

  TimeSeriesTensor() = default;
  /// Fully observed zero tensor with default names ("f0", ...) and an hourly grid.
  explicit TimeSeriesTensor(Shape sh);

  double value(std::size_t s, std::size_t t, std::size_t f) const {
    return values[shape.index(s, t, f)];
  }
  double& value(std::size_t s, std::size_t t, std::size_t f) {
    return values[shape.index(s, t, f)];
  }
  bool is_observed(std::size_t s, std::size_t t, std::size_t f) const {
    return observed.at(s, t, f) != 0;
  }

  /// Throws StructuralError on inconsistent dimensions and ValidationError
  /// (with coordinates) on a non-finite observed value.
  void validate() const;

  /// Copy with the sentinel written at every unobserved cell.
  TimeSeriesTensor sentinelized() const;

  /// Rows [indices...] in the given order.
  TimeSeriesTensor select_samples(const std::vector<std::size_t>& indices) const;
};

using LabelVector = std::vector<std::uint8_t>;

std::size_t count_positive(const LabelVector& labels);

}  // namespace maskbench
