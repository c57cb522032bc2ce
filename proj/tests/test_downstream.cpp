#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "maskbench/downstream.hpp"
#include "maskbench/error.hpp"
#include "maskbench/rng.hpp"
#include "oracle.hpp"

using namespace maskbench;

namespace {

std::vector<double> random_scores(Rng& rng, std::size_t n, bool ties) {
  std::vector<double> s(n);
  for (auto& x : s) x = ties ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform();
  return s;
}

LabelVector random_labels(Rng& rng, std::size_t n, double p) {
  LabelVector l(n);
  for (auto& x : l) x = rng.uniform() < p;
  l[0] = 1;
  l[1] = 0;
  return l;
}

FeatureMatrix column(const std::vector<double>& xs) {
  return FeatureMatrix{xs.size(), 1, xs};
}

}  // namespace

TEST_CASE("pooled features") {
  TimeSeriesTensor t(Shape{2, 3, 2});
  t.values = {1, 3, 2, 3, 3, 3, 0, 0, 0, 0, 0, 0};
  auto x = featurize_pooled(t);
  CHECK(x.rows == 2);
  CHECK(x.cols == 8);
  CHECK(std::vector<double>(x.row(0).begin(), x.row(0).begin() + 4) == std::vector<double>{2, 1, 3, 3});
  CHECK(std::vector<double>(x.row(0).begin() + 4, x.row(0).end()) == std::vector<double>{3, 3, 3, 3});
}

TEST_CASE("roc examples") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  LabelVector l{0, 0, 1, 1};
  CHECK(roc_auc(s, l) == 0.75);
  CHECK(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, l) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, l) == 0.5);
  CHECK_THROWS_AS(roc_auc(s, LabelVector{1, 1, 1, 1}), ArgumentError);
}

TEST_CASE("pr examples") {
  CHECK(pr_auc(std::vector<double>{0.9, 0.1}, LabelVector{1, 0}) == 1.0);
  CHECK(pr_auc(std::vector<double>{0.1, 0.9}, LabelVector{1, 0}) == 0.5);
  CHECK_THROWS_AS(pr_auc(std::vector<double>{0.1, 0.9}, LabelVector{0, 0}), ArgumentError);
}

TEST_CASE("AUCs match the brute-force oracles exactly") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 2 + rng.below(199);
    auto s = random_scores(rng, n, trial % 2 == 0);
    auto l = random_labels(rng, n, 0.05 + 0.9 * rng.uniform());
    CHECK(roc_auc(s, l) == oracle::roc_auc(s, l));
    CHECK(pr_auc(s, l) == oracle::average_precision(s, l));
  }
}

TEST_CASE("roc is invariant under monotone maps and flips under negation") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_scores(rng, 60, false);
    auto l = random_labels(rng, 60, 0.3);
    std::vector<double> mapped(s), neg(s);
    const double a = 0.5 + rng.uniform() * 3;
    for (std::size_t i = 0; i < s.size(); ++i) {
      mapped[i] = std::exp(a * s[i]) + std::pow(s[i], 3);
      neg[i] = -s[i];
    }
    CHECK(roc_auc(mapped, l) == roc_auc(s, l));
    CHECK(roc_auc(s, l) + roc_auc(neg, l) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("average precision of random scores approaches the prevalence") {
  Rng rng(10);
  const std::size_t n = 20000;
  auto s = random_scores(rng, n, false);
  auto l = random_labels(rng, n, 0.2);
  double p = static_cast<double>(count_positive(l)) / n;
  CHECK(std::fabs(pr_auc(s, l) - p) < 0.05);
}

TEST_CASE("separable 1-D toy reaches full training accuracy") {
  std::vector<double> xs;
  LabelVector l;
  for (int i = 1; i <= 20; ++i) {
    xs.push_back(-0.5 - 0.1 * i);
    l.push_back(0);
    xs.push_back(0.5 + 0.1 * i);
    l.push_back(1);
  }
  auto x = column(xs);
  auto m = train_linear(x, l, LinearHyper{0.1, 500, 1e-4});
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) correct += (m.probability(x.row(i)) > 0.5) == static_cast<bool>(l[i]);
  CHECK(correct == xs.size());
  for (std::size_t e = 1; e < m.loss_history.size(); ++e) CHECK(m.loss_history[e] <= m.loss_history[e - 1]);
}

TEST_CASE("zero epochs leaves the initial model") {
  Rng rng(11);
  FeatureMatrix x{200, 3, {}};
  for (int i = 0; i < 600; ++i) x.data.push_back(rng.normal());
  auto l = random_labels(rng, 200, 0.5);
  auto m = train_linear(x, l, LinearHyper{0.1, 0, 1e-4});
  CHECK(std::all_of(m.weights.begin(), m.weights.end(), [](double w) { return w == 0.0; }));
  std::vector<double> s;
  for (std::size_t i = 0; i < 200; ++i) s.push_back(m.decision(x.row(i)));
  CHECK(roc_auc(s, l) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("duplicating rows leaves the decision function unchanged") {
  Rng rng(12);
  FeatureMatrix x{50, 2, {}}, xx{100, 2, {}};
  for (int i = 0; i < 100; ++i) x.data.push_back(rng.normal());
  xx.data = x.data;
  xx.data.insert(xx.data.end(), x.data.begin(), x.data.end());
  auto l = random_labels(rng, 50, 0.4);
  LabelVector ll(l);
  ll.insert(ll.end(), l.begin(), l.end());
  auto a = train_linear(x, l, LinearHyper{});
  auto b = train_linear(xx, ll, LinearHyper{});
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::fabs(a.decision(x.row(i)) - b.decision(x.row(i))) < 1e-9);
}

TEST_CASE("loss is non-increasing with a small learning rate on noisy data") {
  Rng rng(13);
  FeatureMatrix x{300, 4, {}};
  for (int i = 0; i < 1200; ++i) x.data.push_back(rng.normal());
  LabelVector l(300);
  for (std::size_t i = 0; i < 300; ++i) l[i] = x.at(i, 0) + rng.normal() > 0;
  auto m = train_linear(x, l, LinearHyper{0.05, 200, 1e-3});
  for (std::size_t e = 1; e < m.loss_history.size(); ++e) CHECK(m.loss_history[e] <= m.loss_history[e - 1] + 1e-15);
}

TEST_CASE("single-class training is an error") {
  auto x = column({1, 2, 3});
  CHECK_THROWS_AS(train_linear(x, LabelVector{1, 1, 1}, LinearHyper{}), ArgumentError);
}

TEST_CASE("downstream on null and oracle features") {
  Rng rng(14);
  const std::size_t n = 1000;
  TimeSeriesTensor t(Shape{n, 4, 2});
  for (auto& v : t.values) v = rng.normal();
  auto labels = random_labels(rng, n, 0.3);
  auto folds = split_kfold(labels, 5, 1);
  auto null = evaluate_downstream(t, labels, folds, ClassifierSpec{});
  CHECK(null.roc_auc >= 0.4);
  CHECK(null.roc_auc <= 0.6);
  CHECK(null.folds_used == 5);
  CHECK(null.n_pos + null.n_neg == n);

  TimeSeriesTensor oracle_t(Shape{n, 4, 2});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t f = 0; f < 2; ++f) oracle_t.value(s, k, f) = labels[s];
  auto perfect = evaluate_downstream(oracle_t, labels, folds, ClassifierSpec{});
  CHECK(perfect.roc_auc == 1.0);
  CHECK(perfect.pr_auc == 1.0);

  auto again = evaluate_downstream(t, labels, folds, ClassifierSpec{});
  CHECK(again.roc_auc == null.roc_auc);
  CHECK(again.pr_auc == null.pr_auc);
}

TEST_CASE("single-class folds are skipped with a warning") {
  TimeSeriesTensor t(Shape{6, 2, 1});
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<double>(i);
  LabelVector labels{1, 0, 1, 0, 0, 0};
  std::vector<Fold> folds{{{0, 1, 2, 3}, {4, 5}}, {{2, 3, 4, 5}, {0, 1}}};
  auto score = evaluate_downstream(t, labels, folds, ClassifierSpec{});
  CHECK(score.folds_used == 1);
  REQUIRE(score.warnings.size() == 1);
  CHECK(score.warnings[0].find("fold 0") != std::string::npos);
  std::vector<Fold> bad{{{0, 1, 2, 3}, {4, 5}}};
  CHECK_THROWS_AS(evaluate_downstream(t, labels, bad, ClassifierSpec{}), Error);
}
