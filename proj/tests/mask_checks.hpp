#pragma once

// Independent checks of MaskSet invariants, shared by the unit tests and the
// acceptance runner. Returns an empty string when everything holds.

#include <cmath>
#include <string>

#include "maskbench/masking.hpp"

namespace oracle {

inline std::string check_strategy(const maskbench::MaskSet& m, const maskbench::BinaryTensor& observed) {
  using maskbench::MaskStrategy;
  if (m.artificial.shape != observed.shape || m.evaluation.shape != observed.shape) return "shape mismatch";
  for (std::size_t i = 0; i < observed.bits.size(); ++i) {
    const bool a = m.artificial.bits[i], o = observed.bits[i], e = m.evaluation.bits[i];
    if (m.spec.strategy == MaskStrategy::augmentation && a && !o)
      return "augmentation mask touches original missingness at cell " + std::to_string(i);
    if (e != (a && o)) return "evaluation differs from artificial AND observed at cell " + std::to_string(i);
  }
  return {};
}

/// Achieved size within one masking unit of the requested rate. Units are
/// cells (random), steps or features per sample (temporal, spatial) and
/// blocks (block).
inline std::string check_rate(const maskbench::MaskSet& m, const maskbench::BinaryTensor& observed) {
  using maskbench::MaskPattern;
  using maskbench::MaskStrategy;
  const auto& sh = observed.shape;
  const auto& spec = m.spec;
  auto eligible = [&](std::size_t s, std::size_t t, std::size_t f) {
    return spec.strategy == MaskStrategy::overlay || observed.at(s, t, f);
  };

  if (spec.pattern == MaskPattern::random) {
    double e = 0;
    for (std::size_t s = 0; s < sh.samples; ++s)
      for (std::size_t t = 0; t < sh.steps; ++t)
        for (std::size_t f = 0; f < sh.features; ++f) e += eligible(s, t, f);
    const double got = static_cast<double>(m.artificial.count());
    if (std::fabs(got - spec.rate * e) > 0.5 + 1e-9)
      return "random: " + std::to_string(got) + " cells for target " + std::to_string(spec.rate * e);
    return {};
  }

  if (spec.pattern == MaskPattern::temporal || spec.pattern == MaskPattern::spatial) {
    const bool by_step = spec.pattern == MaskPattern::temporal;
    const std::size_t n_units = by_step ? sh.steps : sh.features;
    const std::size_t len = by_step ? sh.features : sh.steps;
    for (std::size_t s = 0; s < sh.samples; ++s) {
      double units = 0, hit = 0;
      for (std::size_t u = 0; u < n_units; ++u) {
        bool any_e = false, any_a = false, full = true;
        for (std::size_t j = 0; j < len; ++j) {
          std::size_t t = by_step ? u : j, f = by_step ? j : u;
          bool el = eligible(s, t, f);
          any_e = any_e || el;
          any_a = any_a || m.artificial.at(s, t, f);
          if (el && !m.artificial.at(s, t, f)) full = false;
        }
        if (any_a && !full) return "partially masked unit in sample " + std::to_string(s);
        units += any_e;
        hit += any_a;
      }
      if (units == 0) continue;
      const double target = spec.rate * units;
      const double tol = spec.rate > 0 && target < 0.5 ? 1.0 : 0.5;
      if (std::fabs(hit - target) > tol + 1e-9)
        return "sample " + std::to_string(s) + ": " + std::to_string(hit) + " units for target " +
               std::to_string(target);
    }
    return {};
  }

  // block: one block per touched sample, all cells inside one block window.
  const auto& b = *spec.block_shape;
  double e = 0, blocks = 0;
  for (std::size_t s = 0; s < sh.samples; ++s) {
    std::size_t t_lo = sh.steps, t_hi = 0, f_lo = sh.features, f_hi = 0;
    bool any = false;
    for (std::size_t t = 0; t < sh.steps; ++t)
      for (std::size_t f = 0; f < sh.features; ++f) {
        e += eligible(s, t, f);
        if (!m.artificial.at(s, t, f)) continue;
        any = true;
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
        f_lo = std::min(f_lo, f);
        f_hi = std::max(f_hi, f);
      }
    if (!any) continue;
    if (t_hi - t_lo + 1 > b.steps || f_hi - f_lo + 1 > b.features)
      return "sample " + std::to_string(s) + ": masked cells span more than one block";
    blocks += 1;
  }
  const double area = static_cast<double>(b.steps * b.features);
  if (spec.rate > 0 && std::fabs(blocks * area - spec.rate * e) > area + 1e-9)
    return "block: " + std::to_string(blocks) + " blocks for target " + std::to_string(spec.rate * e / area);
  return {};
}

}  // namespace oracle
