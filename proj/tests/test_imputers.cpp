#include <doctest.h>

#include <cmath>

#include "maskbench/error.hpp"
#include "maskbench/imputers.hpp"
#include "maskbench/masking.hpp"
#include "maskbench/rng.hpp"

using namespace maskbench;

namespace {

// One sample, one feature; NaN marks a gap.
TimeSeriesTensor series(const std::vector<double>& xs) {
  TimeSeriesTensor t(Shape{1, xs.size(), 1});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::isnan(xs[i])) {
      t.observed.bits[i] = 0;
      t.values[i] = 0.0;
    } else {
      t.values[i] = xs[i];
    }
  }
  return t;
}

const double gap = std::nan("");

TimeSeriesTensor random_gappy(Shape sh, std::uint64_t seed) {
  TimeSeriesTensor t(sh);
  Rng rng(seed);
  for (std::size_t i = 0; i < sh.cells(); ++i) {
    t.values[i] = rng.normal();
    if (rng.uniform() < 0.35) {
      t.observed.bits[i] = 0;
      t.values[i] = 0.0;
    }
  }
  return t;
}

}  // namespace

TEST_CASE("mean and median fit on visible cells") {
  auto t = series({1, 2, 3, 4});
  CHECK(fit(classical_imputer(ImputerKind::mean), t).central[0] == 2.5);
  CHECK(fit(classical_imputer(ImputerKind::median), t).central[0] == 2.5);
  auto u = series({1, 2, 100});
  CHECK(fit(classical_imputer(ImputerKind::median), u).central[0] == 2.0);
  CHECK(fit(classical_imputer(ImputerKind::mean), u).central[0] == doctest::Approx(103.0 / 3.0));
}

TEST_CASE("hidden cells never enter the fit") {
  auto t = series({1, 2, 3, gap, 4});
  t.values[3] = 1e9;  // ground truth behind a gap must be ignored
  CHECK(fit(classical_imputer(ImputerKind::mean), t).central[0] == 2.5);
}

TEST_CASE("all-masked feature falls back to zero with a flag") {
  auto t = series({gap, gap, gap});
  for (auto k : {ImputerKind::mean, ImputerKind::median}) {
    auto fitted = fit(classical_imputer(k), t);
    CHECK(fitted.central[0] == 0.0);
    CHECK(fitted.fallback[0]);
    auto out = impute(fitted, t);
    CHECK(out.values == std::vector<double>{0, 0, 0});
  }
}

TEST_CASE("locf examples") {
  auto locf = fit(classical_imputer(ImputerKind::locf), series({1}));
  CHECK(impute(locf, series({1, gap, gap, 4})).values == std::vector<double>{1, 1, 1, 4});
  CHECK(impute(locf, series({gap, 2, gap})).values == std::vector<double>{0, 2, 2});
}

TEST_CASE("mean fill with a stored 2.5") {
  auto fitted = fit(classical_imputer(ImputerKind::mean), series({1, 2, 3, 4}));
  CHECK(impute(fitted, series({gap, 7, gap})).values == std::vector<double>{2.5, 7, 2.5});
}

TEST_CASE("locf does not leak across samples or features") {
  TimeSeriesTensor t(Shape{2, 3, 2});
  t.values = {1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60};
  t.observed.at(1, 0, 0) = 0;
  t.observed.at(0, 1, 1) = 0;
  t = t.sentinelized();
  auto out = impute(fit(classical_imputer(ImputerKind::locf), t), t);
  CHECK(out.value(1, 0, 0) == 0.0);
  CHECK(out.value(0, 1, 1) == 10.0);
}

TEST_CASE("pass-through and totality over random tensors") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto t = random_gappy({6, 9, 4}, seed);
    for (auto k : {ImputerKind::mean, ImputerKind::median, ImputerKind::locf}) {
      auto out = impute(fit(classical_imputer(k), t), t);
      CHECK(out.observed.count() == out.shape.cells());
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        CHECK(std::isfinite(out.values[i]));
        if (t.observed.bits[i]) CHECK(out.values[i] == t.values[i]);
      }
    }
  }
}

TEST_CASE("locf is causal: a prefix imputes to the same prefix") {
  auto t = random_gappy({4, 12, 3}, 99);
  auto locf = fit(classical_imputer(ImputerKind::locf), t);
  auto full = impute(locf, t);
  for (std::size_t len = 1; len <= 12; ++len) {
    TimeSeriesTensor p(Shape{4, len, 3});
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t k = 0; k < len; ++k)
        for (std::size_t f = 0; f < 3; ++f) {
          p.value(s, k, f) = t.value(s, k, f);
          p.observed.at(s, k, f) = t.observed.at(s, k, f);
        }
    auto out = impute(locf, p);
    for (std::size_t s = 0; s < 4; ++s)
      for (std::size_t k = 0; k < len; ++k)
        for (std::size_t f = 0; f < 3; ++f) CHECK(out.value(s, k, f) == full.value(s, k, f));
  }
}

TEST_CASE("ground truth at masked cells cannot change classical output") {
  auto t = random_gappy({10, 8, 3}, 3);
  MaskSpec spec;
  spec.rate = 0.25;
  spec.seed = 1;
  auto m = generate_mask(spec, t.observed);
  auto masked = apply_mask(t, m);
  auto poisoned_src = t;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (m.evaluation.bits[i]) poisoned_src.values[i] = -1e12;
  auto poisoned = apply_mask(poisoned_src, m);
  for (auto k : {ImputerKind::mean, ImputerKind::median, ImputerKind::locf}) {
    auto a = impute(fit(classical_imputer(k), masked), masked);
    auto b = impute(fit(classical_imputer(k), poisoned), poisoned);
    CHECK(a.values == b.values);
  }
}

TEST_CASE("median of an even count averages the middle pair") {
  auto t = series({5, 1, 4, 2});
  CHECK(fit(classical_imputer(ImputerKind::median), t).central[0] == 3.0);
}

TEST_CASE("fit on a training subset") {
  TimeSeriesTensor t(Shape{3, 2, 1});
  t.values = {1, 3, 100, 200, 5, 7};
  CHECK(fit(classical_imputer(ImputerKind::mean), t, {0, 2}).central[0] == 4.0);
}

TEST_CASE("descriptor validation") {
  ImputerDescriptor d{"ext", ImputerKind::external, std::nullopt, 10.0};
  CHECK_THROWS_AS(d.validate(), ArgumentError);
  d.external_command = "run.sh";
  CHECK_THROWS_AS(d.validate(), ArgumentError);
  d.external_command = "run.sh {task_dir}";
  CHECK_NOTHROW(d.validate());
  ImputerDescriptor m{"mean", ImputerKind::mean, std::string("x {task_dir}"), 10.0};
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  auto fitted = fit(d, series({1, 2}));
  CHECK_THROWS_AS(impute(fitted, series({1, gap})), ArgumentError);
  CHECK_THROWS_AS(parse_imputer_kind("knn"), ArgumentError);
}
