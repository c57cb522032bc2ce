#include "maskbench/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskbench/adapter.hpp"
#include "maskbench/error.hpp"

namespace maskbench {

FeatureMatrix featurize_pooled(const TimeSeriesTensor& t) {
  const auto& sh = t.shape;
  FeatureMatrix x{sh.samples, 4 * sh.features, std::vector<double>(sh.samples * 4 * sh.features)};
  if (sh.steps == 0) return x;
  for (std::size_t s = 0; s < sh.samples; ++s)
    for (std::size_t f = 0; f < sh.features; ++f) {
      double sum = 0.0, lo = t.value(s, 0, f), hi = lo;
      for (std::size_t k = 0; k < sh.steps; ++k) {
        double v = t.value(s, k, f);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double* out = &x.data[s * x.cols + 4 * f];
      out[0] = sum / static_cast<double>(sh.steps);
      out[1] = lo;
      out[2] = hi;
      out[3] = t.value(s, sh.steps - 1, f);
    }
  return x;
}

double LinearModel::decision(std::span<const double> x) const {
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * (x[j] - center[j]) / scale[j];
  return z;
}

double LinearModel::probability(std::span<const double> x) const {
  return 1.0 / (1.0 + std::exp(-decision(x)));
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void require_both_classes(std::span<const std::uint8_t> labels, const char* what) {
  bool pos = false, neg = false;
  for (auto l : labels) (l ? pos : neg) = true;
  if (!pos || !neg) throw ArgumentError(std::string(what) + " needs both classes present");
}

void check_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("scores and labels differ in length");
  for (double s : scores)
    if (std::isnan(s)) throw ArgumentError("NaN score");
}

}  // namespace

LinearModel train_linear(const FeatureMatrix& x, const LabelVector& labels, const LinearHyper& hyper,
                         const std::vector<std::size_t>& rows_in) {
  if (labels.size() != x.rows) throw ArgumentError("labels length differs from feature rows");
  std::vector<std::size_t> rows = rows_in;
  if (rows.empty()) {
    rows.resize(x.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  {
    LabelVector sub;
    for (auto r : rows) sub.push_back(labels[r]);
    require_both_classes(sub, "logistic regression");
  }
  const std::size_t d = x.cols;
  const double n = static_cast<double>(rows.size());
  LinearModel m;
  m.center.assign(d, 0.0);
  m.scale.assign(d, 1.0);
  m.weights.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (auto r : rows) sum += x.at(r, j);
    m.center[j] = sum / n;
    double ss = 0.0;
    for (auto r : rows) ss += (x.at(r, j) - m.center[j]) * (x.at(r, j) - m.center[j]);
    double sd = std::sqrt(ss / n);
    m.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  // Standardized copy of the training rows.
  std::vector<double> z(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (x.at(rows[i], j) - m.center[j]) / m.scale[j];

  std::vector<double> margin(rows.size());
  auto loss_and_margins = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double s = m.bias;
      for (std::size_t j = 0; j < d; ++j) s += m.weights[j] * z[i * d + j];
      margin[i] = s;
      loss += labels[rows[i]] ? softplus(-s) : softplus(s);
    }
    double reg = 0.0;
    for (double w : m.weights) reg += w * w;
    return loss / n + 0.5 * hyper.l2 * reg;
  };

  std::vector<double> grad(d);
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    m.loss_history.push_back(loss_and_margins());
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double r = sigmoid(margin[i]) - (labels[rows[i]] ? 1.0 : 0.0);
      grad_b += r;
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * z[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j)
      m.weights[j] -= hyper.learning_rate * (grad[j] / n + hyper.l2 * m.weights[j]);
    m.bias -= hyper.learning_rate * grad_b / n;
  }
  m.loss_history.push_back(loss_and_margins());
  return m;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_scores(scores, labels);
  require_both_classes(labels, "ROC-AUC");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Twice the U statistic, kept integral so ties count exactly one half.
  std::uint64_t twice_u = 0, neg_below = 0, n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos_g = 0, neg_g = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos_g : neg_g) += 1;
      ++j;
    }
    twice_u += pos_g * (2 * neg_below + neg_g);
    neg_below += neg_g;
    n_pos += pos_g;
    n_neg += neg_g;
    i = j;
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_scores(scores, labels);
  const std::uint64_t n_pos =
      static_cast<std::uint64_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  if (n_pos == 0) throw ArgumentError("PR-AUC needs at least one positive");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos_g = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]])
        ++pos_g;
      else
        ++fp;
      ++j;
    }
    tp += pos_g;
    if (pos_g)
      ap += static_cast<double>(pos_g) * static_cast<double>(tp) /
            (static_cast<double>(n_pos) * static_cast<double>(tp + fp));
    i = j;
  }
  return ap;
}

std::string to_string(ClassifierKind k) {
  return k == ClassifierKind::native_linear ? "native_linear" : "external";
}

ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "native_linear" || s == "linear") return ClassifierKind::native_linear;
  if (s == "external") return ClassifierKind::external;
  throw ArgumentError("unknown classifier '" + s + "'");
}

ClassifierScore evaluate_downstream(const TimeSeriesTensor& imputed, const LabelVector& labels,
                                    const std::vector<Fold>& folds, const ClassifierSpec& spec,
                                    const std::filesystem::path& task_root) {
  if (labels.size() != imputed.shape.samples) throw ArgumentError("labels length differs from n_samples");
  if (spec.kind == ClassifierKind::external && !spec.command)
    throw ArgumentError("external classifier needs a command");
  const auto x = featurize_pooled(imputed);
  ClassifierScore out;
  out.classifier_name = spec.name;
  double roc_sum = 0.0, pr_sum = 0.0;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const auto& fold = folds[k];
    LabelVector val_labels, train_labels;
    for (auto i : fold.validation) val_labels.push_back(labels[i]);
    for (auto i : fold.train) train_labels.push_back(labels[i]);
    const auto val_pos = count_positive(val_labels);
    const auto train_pos = count_positive(train_labels);
    if (val_pos == 0 || val_pos == val_labels.size()) {
      out.warnings.push_back("fold " + std::to_string(k) + " skipped: single-class validation set");
      continue;
    }
    if (train_pos == 0 || train_pos == train_labels.size()) {
      out.warnings.push_back("fold " + std::to_string(k) + " skipped: single-class training set");
      continue;
    }
    std::vector<double> scores;
    if (spec.kind == ClassifierKind::native_linear) {
      auto model = train_linear(x, labels, spec.hyper, fold.train);
      for (auto i : fold.validation) scores.push_back(model.decision(x.row(i)));
    } else {
      auto task = export_classify_task(imputed, labels, fold.train, fold.validation,
                                       task_root / ("fold-" + std::to_string(k)), *spec.command,
                                       spec.timeout_seconds);
      auto rep = run_external(task);
      if (!rep.success)
        throw Error("external classifier failed on fold " + std::to_string(k) + ": " + rep.message +
                    (rep.stderr_text.empty() ? "" : "\n" + rep.stderr_text));
      scores = import_scores(task);
    }
    roc_sum += roc_auc(scores, val_labels);
    pr_sum += pr_auc(scores, val_labels);
    out.n_pos += val_pos;
    out.n_neg += val_labels.size() - val_pos;
    ++out.folds_used;
  }
  if (out.folds_used == 0) throw Error("downstream evaluation: every fold was skipped");
  out.roc_auc = roc_sum / static_cast<double>(out.folds_used);
  out.pr_auc = pr_sum / static_cast<double>(out.folds_used);
  return out;
}

}  // namespace maskbench
