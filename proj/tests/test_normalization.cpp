#include <doctest.h>

#include <cmath>

#include "maskbench/error.hpp"
#include "maskbench/normalization.hpp"
#include "maskbench/rng.hpp"
#include "oracle.hpp"

using namespace maskbench;

namespace {

TimeSeriesTensor series(const std::vector<double>& xs) {
  TimeSeriesTensor t(Shape{1, xs.size(), 1});
  t.values = xs;
  return t;
}

MaskSet mask_cells(const Shape& sh, const std::vector<std::size_t>& cells) {
  MaskSet m{BinaryTensor(sh), BinaryTensor(sh), {}, std::nullopt};
  for (auto i : cells) m.artificial.bits[i] = 1;
  m.evaluation = m.artificial;
  return m;
}

TimeSeriesTensor random_tensor(Shape sh, std::uint64_t seed) {
  TimeSeriesTensor t(sh);
  Rng rng(seed);
  for (std::size_t i = 0; i < sh.cells(); ++i) {
    t.values[i] = 10.0 + 4.0 * rng.normal();
    if (rng.uniform() < 0.2) {
      t.observed.bits[i] = 0;
      t.values[i] = 0.0;
    }
  }
  return t;
}

}  // namespace

TEST_CASE("NBM on [1..5]") {
  auto t = series({1, 2, 3, 4, 5});
  auto st = fit_stats(t, NormRegime::NBM);
  CHECK(st.mean[0] == 3.0);
  CHECK(st.scale[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(st.counts[0] == 5);
  CHECK(st.provenance == NormRegime::NBM);
}

TEST_CASE("NAM with the maximum masked") {
  auto t = series({1, 2, 3, 4, 5});
  auto m = mask_cells(t.shape, {4});
  auto st = fit_stats(t, NormRegime::NAM, &m);
  CHECK(st.mean[0] == 2.5);
  CHECK(st.scale[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(st.counts[0] == 4);
  CHECK(fit_stats(t, NormRegime::NBM, &m).mean[0] == 3.0);
  CHECK_THROWS_AS(fit_stats(t, NormRegime::NAM), ArgumentError);
}

TEST_CASE("constant and under-fitted features get the floor") {
  auto c = series({7, 7, 7});
  auto st = fit_stats(c, NormRegime::NBM);
  CHECK(st.mean[0] == 7.0);
  CHECK(st.scale[0] == kScaleFloor);
  auto one = series({7, 8, 9});
  one.observed.bits[1] = one.observed.bits[2] = 0;
  auto st1 = fit_stats(one.sentinelized(), NormRegime::NBM);
  CHECK(st1.scale[0] == kScaleFloor);
  CHECK(st1.under_fitted(0));
  auto none = series({7, 8});
  none.observed.bits.assign(2, 0);
  auto st0 = fit_stats(none, NormRegime::NBM);
  CHECK(st0.counts[0] == 0);
  CHECK(st0.scale[0] == kScaleFloor);
}

TEST_CASE("transform and inverse arithmetic") {
  auto t = series({5, 3});
  NormStats st{{3.0}, {std::sqrt(2.0)}, {2}, NormRegime::NBM};
  auto z = transform(t, st);
  CHECK(z.values[0] == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(z.values[1] == 0.0);
  CHECK(z.scale == Scale::normalized);
  auto u = series({0, 1});
  u.scale = Scale::normalized;
  auto x = inverse_transform(u, st);
  CHECK(x.values[0] == 3.0);
  CHECK(x.values[1] == doctest::Approx(3.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK(x.scale == Scale::raw);
}

TEST_CASE("unobserved cells carry the sentinel after transform") {
  auto t = series({5, 3, 9});
  t.observed.bits[2] = 0;
  NormStats st{{3.0}, {2.0}, {2}, NormRegime::NBM};
  auto z = transform(t, st);
  CHECK(z.values[2] == 0.0);
  CHECK(inverse_transform(z, st).values[2] == 0.0);
}

TEST_CASE("feature count mismatch") {
  auto t = series({1, 2});
  NormStats st{{0.0, 0.0}, {1.0, 1.0}, {2, 2}, NormRegime::NBM};
  CHECK_THROWS_AS(transform(t, st), ArgumentError);
  CHECK_THROWS_AS(inverse_transform(t, st), ArgumentError);
}

TEST_CASE("round trip and standardization on random tensors") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = random_tensor({10, 10, 5}, seed);
    auto st = fit_stats(t, NormRegime::NBM);
    auto z = transform(t, st);
    auto back = inverse_transform(z, st);
    for (std::size_t i = 0; i < t.values.size(); ++i)
      if (t.observed.bits[i]) CHECK(oracle::rel_close(back.values[i], t.values[i], 1e-12));

    for (std::size_t f = 0; f < 5; ++f) {
      long double sum = 0, ss = 0, n = 0;
      for (std::size_t s = 0; s < 10; ++s)
        for (std::size_t k = 0; k < 10; ++k)
          if (z.is_observed(s, k, f)) {
            sum += z.value(s, k, f);
            n += 1;
          }
      const long double mean = sum / n;
      for (std::size_t s = 0; s < 10; ++s)
        for (std::size_t k = 0; k < 10; ++k)
          if (z.is_observed(s, k, f)) ss += (z.value(s, k, f) - mean) * (z.value(s, k, f) - mean);
      CHECK(std::fabs(static_cast<double>(mean)) < 1e-12);
      CHECK(std::fabs(static_cast<double>(ss / n) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("NAM never reads masked cells") {
  auto t = random_tensor({8, 6, 3}, 5);
  MaskSpec spec;
  spec.rate = 0.3;
  spec.seed = 2;
  auto m = generate_mask(spec, t.observed);
  auto a = fit_stats(t, NormRegime::NAM, &m);
  auto poisoned = t;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (m.artificial.bits[i]) poisoned.values[i] = 1e9;
  auto b = fit_stats(poisoned, NormRegime::NAM, &m);
  CHECK(a.mean == b.mean);
  CHECK(a.scale == b.scale);
}

TEST_CASE("NBM stats ignore the mask, NAM stats follow it") {
  auto t = random_tensor({20, 6, 3}, 6);
  auto base = fit_stats(t, NormRegime::NBM);
  bool nam_differs = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MaskSpec spec;
    spec.rate = 0.3;
    spec.seed = seed;
    auto m = generate_mask(spec, t.observed);
    auto nbm = fit_stats(t, NormRegime::NBM, &m);
    CHECK(nbm.mean == base.mean);
    CHECK(nbm.scale == base.scale);
    auto nam = fit_stats(t, NormRegime::NAM, &m);
    nam_differs = nam_differs || nam.mean != base.mean;
  }
  CHECK(nam_differs);
}

TEST_CASE("training-split fitting uses only the listed samples") {
  TimeSeriesTensor t(Shape{3, 2, 1});
  t.values = {1, 3, 100, 200, 5, 7};
  auto st = fit_stats(t, NormRegime::NBM, nullptr, {0, 2});
  CHECK(st.mean[0] == 4.0);
  CHECK(st.counts[0] == 4);
}

TEST_CASE("stats file round trip") {
  auto t = random_tensor({5, 4, 3}, 8);
  auto st = fit_stats(t, NormRegime::NBM);
  auto file = oracle::scratch("normstats") / "norm_stats.json";
  write_norm_stats(file, st, t.feature_names);
  auto back = read_norm_stats(file);
  CHECK(back.mean == st.mean);
  CHECK(back.scale == st.scale);
  CHECK(back.counts == st.counts);
  CHECK(back.provenance == NormRegime::NBM);
}
