#include "maskbench/imputers.hpp"

#include <algorithm>

#include "maskbench/error.hpp"

namespace maskbench {

std::string to_string(ImputerKind k) {
  switch (k) {
    case ImputerKind::mean: return "mean";
    case ImputerKind::median: return "median";
    case ImputerKind::locf: return "locf";
    case ImputerKind::external: return "external";
  }
  return "?";
}

ImputerKind parse_imputer_kind(const std::string& s) {
  if (s == "mean") return ImputerKind::mean;
  if (s == "median") return ImputerKind::median;
  if (s == "locf" || s == "LOCF") return ImputerKind::locf;
  if (s == "external") return ImputerKind::external;
  throw ArgumentError("unknown imputer kind '" + s + "'");
}

void ImputerDescriptor::validate() const {
  if (name.empty()) throw ArgumentError("imputer name is empty");
  if ((kind == ImputerKind::external) != external_command.has_value())
    throw ArgumentError("imputer '" + name + "': external_command is required for, and only for, external imputers");
  if (external_command && external_command->find("{task_dir}") == std::string::npos)
    throw ArgumentError("imputer '" + name + "': command lacks the {task_dir} placeholder");
}

ImputerDescriptor classical_imputer(ImputerKind kind) {
  if (kind == ImputerKind::external) throw ArgumentError("external imputers need a command");
  return {to_string(kind), kind, std::nullopt, 0.0};
}

FittedImputer fit(const ImputerDescriptor& d, const TimeSeriesTensor& train,
                  const std::vector<std::size_t>& samples) {
  d.validate();
  FittedImputer out{d, {}, {}};
  if (d.kind != ImputerKind::mean && d.kind != ImputerKind::median) return out;

  const auto& sh = train.shape;
  std::vector<std::size_t> rows = samples;
  if (rows.empty())
    for (std::size_t s = 0; s < sh.samples; ++s) rows.push_back(s);

  out.central.assign(sh.features, 0.0);
  out.fallback.assign(sh.features, false);
  std::vector<std::vector<double>> visible(sh.features);
  for (auto s : rows)
    for (std::size_t t = 0; t < sh.steps; ++t)
      for (std::size_t f = 0; f < sh.features; ++f)
        if (train.is_observed(s, t, f)) visible[f].push_back(train.value(s, t, f));

  for (std::size_t f = 0; f < sh.features; ++f) {
    auto& v = visible[f];
    if (v.empty()) {
      out.fallback[f] = true;
      continue;
    }
    if (d.kind == ImputerKind::mean) {
      double sum = 0.0;
      for (double x : v) sum += x;
      out.central[f] = sum / static_cast<double>(v.size());
    } else {
      auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      double hi = *mid;
      if (v.size() % 2 == 1) {
        out.central[f] = hi;
      } else {
        double lo = *std::max_element(v.begin(), mid);
        out.central[f] = lo + (hi - lo) / 2.0;
      }
    }
  }
  return out;
}

TimeSeriesTensor impute(const FittedImputer& fitted, const TimeSeriesTensor& t) {
  const auto& sh = t.shape;
  TimeSeriesTensor out = t;
  switch (fitted.descriptor.kind) {
    case ImputerKind::mean:
    case ImputerKind::median:
      if (fitted.central.size() != sh.features)
        throw ArgumentError("fitted imputer covers " + std::to_string(fitted.central.size()) +
                            " features, tensor has " + std::to_string(sh.features));
      for (std::size_t i = 0; i < out.values.size(); ++i)
        if (!t.observed.bits[i]) out.values[i] = fitted.central[i % sh.features];
      break;
    case ImputerKind::locf:
      for (std::size_t s = 0; s < sh.samples; ++s)
        for (std::size_t f = 0; f < sh.features; ++f) {
          double last = 0.0;
          for (std::size_t k = 0; k < sh.steps; ++k) {
            auto i = sh.index(s, k, f);
            if (t.observed.bits[i])
              last = t.values[i];
            else
              out.values[i] = last;
          }
        }
      break;
    case ImputerKind::external:
      throw ArgumentError("imputer '" + fitted.descriptor.name +
                          "' is external; run it through the adapter protocol");
  }
  std::fill(out.observed.bits.begin(), out.observed.bits.end(), std::uint8_t{1});
  return out;
}

}  // namespace maskbench
