#include <doctest.h>

#include <thread>

#include "maskbench/error.hpp"
#include "maskbench/metrics.hpp"
#include "maskbench/rng.hpp"
#include "oracle.hpp"

using namespace maskbench;

namespace {

TimeSeriesTensor row(const std::vector<double>& xs) {
  TimeSeriesTensor t(Shape{1, xs.size(), 1});
  t.values = xs;
  return t;
}

BinaryTensor mask_row(const std::vector<std::uint8_t>& bits) {
  BinaryTensor m(Shape{1, bits.size(), 1});
  m.bits = bits;
  return m;
}

}  // namespace

TEST_CASE("hand-computed MAE and MSE") {
  auto truth = row({1, 2, 3});
  auto imp = row({1.5, 2, 2});
  auto m = mask_row({1, 0, 1});
  CHECK(masked_mae(truth, imp, m) == 0.75);
  CHECK(masked_mse(truth, imp, m) == 0.625);
  CHECK(masked_mae(truth, truth, m) == 0.0);
  CHECK(masked_mse(truth, truth, m) == 0.0);
}

TEST_CASE("cells outside the mask do not count") {
  auto truth = row({1, 2, 3});
  auto imp = row({1.5, 2, 2});
  auto m = mask_row({1, 0, 1});
  auto a = masked_mae(truth, imp, m);
  imp.values[1] = 1e6;
  CHECK(masked_mae(truth, imp, m) == a);
  CHECK(masked_mse(truth, imp, m) == 0.625);
}

TEST_CASE("residuals doubled quadruple MSE") {
  Rng rng(1);
  TimeSeriesTensor truth(Shape{3, 4, 2}), imp(Shape{3, 4, 2}), imp2(Shape{3, 4, 2});
  BinaryTensor m(truth.shape);
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    truth.values[i] = rng.normal();
    double r = 0.25 * static_cast<double>(rng.below(8)) - 1.0;  // exactly representable
    imp.values[i] = truth.values[i] + r;
    imp2.values[i] = truth.values[i] + 2 * r;
    m.bits[i] = rng.uniform() < 0.6;
  }
  m.bits[0] = 1;
  CHECK(masked_mse(truth, imp2, m) == doctest::Approx(4 * masked_mse(truth, imp, m)).epsilon(1e-14));
}

TEST_CASE("errors") {
  auto truth = row({1, 2});
  CHECK_THROWS_AS(masked_mae(truth, truth, mask_row({0, 0})), ArgumentError);
  try {
    masked_mse(truth, truth, mask_row({0, 0}));
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("no scoreable cells") != std::string::npos);
  }
  CHECK_THROWS_AS(masked_mae(truth, row({1, 2, 3}), mask_row({1, 1})), ArgumentError);
}

TEST_CASE("oracle agreement on random 10x10x5 instances") {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    Shape sh{10, 10, 5};
    TimeSeriesTensor truth(sh), imp(sh);
    BinaryTensor m(sh);
    const double scale = std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
    for (std::size_t i = 0; i < sh.cells(); ++i) {
      truth.values[i] = scale * rng.normal();
      imp.values[i] = scale * rng.normal();
      m.bits[i] = rng.uniform() < 0.3;
    }
    m.bits[trial] = 1;
    CHECK(oracle::rel_close(masked_mae(truth, imp, m), oracle::mae(truth, imp, m), 1e-12));
    CHECK(oracle::rel_close(masked_mse(truth, imp, m), oracle::mse(truth, imp, m), 1e-12));
  }
}

TEST_CASE("adding a zero-residual cell never increases the metrics") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Shape sh{4, 5, 3};
    TimeSeriesTensor truth(sh), imp(sh);
    BinaryTensor m(sh);
    for (std::size_t i = 0; i < sh.cells(); ++i) {
      truth.values[i] = rng.normal();
      imp.values[i] = rng.uniform() < 0.2 ? truth.values[i] : rng.normal();
      m.bits[i] = rng.uniform() < 0.5;
    }
    m.bits[0] = 1;
    for (std::size_t i = 0; i < sh.cells(); ++i) {
      if (m.bits[i] || imp.values[i] != truth.values[i]) continue;
      auto bigger = m;
      bigger.bits[i] = 1;
      CHECK(masked_mae(truth, imp, bigger) <= masked_mae(truth, imp, m));
      CHECK(masked_mse(truth, imp, bigger) <= masked_mse(truth, imp, m));
    }
  }
}

TEST_CASE("score bundles both metrics with the cell count") {
  auto s = score_imputation(row({1, 2, 3}), row({1.5, 2, 2}), mask_row({1, 0, 1}), MetricSpace::raw);
  CHECK(s.mae == 0.75);
  CHECK(s.mse == 0.625);
  CHECK(s.n_eval_cells == 2);
  CHECK(s.space == MetricSpace::raw);
  CHECK(parse_metric_space("normalized") == MetricSpace::normalized);
}

TEST_CASE("stopwatch is monotone and positive") {
  Stopwatch w;
  std::this_thread::sleep_for(std::chrono::milliseconds(2));
  auto a = w.elapsed().count();
  auto b = w.elapsed().count();
  CHECK(a > 0.0);
  CHECK(b >= a);
}
