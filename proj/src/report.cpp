#include "maskbench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maskbench/csv.hpp"
#include "maskbench/error.hpp"

namespace fs = std::filesystem;

namespace maskbench {

std::string to_string(ReportFormat f) { return f == ReportFormat::csv ? "csv" : "markdown"; }

ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw ArgumentError("unknown report format '" + s + "'");
}

namespace {

std::string fixed3(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string num(double x) { return csv::format_double(x); }

template <class T>
std::vector<T> unique_in_order(const std::vector<RunResult>& results, T (*key)(const RunResult&)) {
  std::vector<T> out;
  for (const auto& r : results) {
    auto k = key(r);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

std::string panel_of(const RunResult& r) { return r.cell.panel; }
std::string method_of(const RunResult& r) { return r.cell.imputer.name; }

const RunResult* find_cell(const std::vector<RunResult>& results, const std::string& panel,
                           const std::string& method) {
  for (const auto& r : results)
    if (r.cell.panel == panel && r.cell.imputer.name == method) return &r;
  return nullptr;
}

}  // namespace

std::string format_mean_std(const MeanStd& m) {
  return fixed3(m.mean) + "±" + (m.std == 0.0 ? std::string("0.0") : fixed3(m.std));
}

std::string format_csv_report(const std::vector<RunResult>& results) {
  std::ostringstream o;
  o << "cell_id,panel,strategy,timing,normalization,imputer,pattern,rate,metric_space,aggregation,"
       "status,n_seeds,n_ok,n_eval_cells,mae_mean,mae_std,mse_mean,mse_std,classifier,"
       "roc_auc_mean,roc_auc_std,pr_auc_mean,pr_auc_std,error\n";
  for (const auto& r : results) {
    const auto& c = r.cell;
    const bool any = r.n_ok() > 0;
    std::string error;
    for (const auto& s : r.seeds)
      if (!s.ok) error += (error.empty() ? "" : "; ") + ("seed " + std::to_string(s.seed) + ": " + s.error);
    std::vector<std::string> f{
        c.id,
        c.panel,
        to_string(c.strategy),
        to_string(c.timing),
        to_string(c.normalization),
        c.imputer.name,
        to_string(c.pattern),
        num(c.rate),
        to_string(c.metric_space),
        "cell-global",
        to_string(r.status),
        std::to_string(r.seeds.size()),
        std::to_string(r.n_ok()),
        any ? std::to_string(r.n_eval_cells) : "",
        any ? num(r.mae.mean) : "",
        any ? num(r.mae.std) : "",
        any ? num(r.mse.mean) : "",
        any ? num(r.mse.std) : "",
        r.roc_auc ? r.classifier_name : "",
        r.roc_auc ? num(r.roc_auc->mean) : "",
        r.roc_auc ? num(r.roc_auc->std) : "",
        r.pr_auc ? num(r.pr_auc->mean) : "",
        r.pr_auc ? num(r.pr_auc->std) : "",
        error,
    };
    for (auto& x : f) x = csv::quote(x);
    o << csv::join(f) << "\n";
  }
  return o.str();
}

std::string format_markdown_report(const std::vector<RunResult>& results) {
  const auto panels = unique_in_order<std::string>(results, panel_of);
  const auto methods = unique_in_order<std::string>(results, method_of);
  std::size_t n_seeds = results.empty() ? 0 : results.front().seeds.size();
  std::string space = results.empty() ? "normalized" : to_string(results.front().cell.metric_space);

  std::ostringstream o;
  o << "# Imputation results\n\n";
  o << "Masked MAE and MSE are cell-global within each validation fold, averaged over folds, "
    << "in " << space << " space. Values are mean±std over " << n_seeds << " seed(s).\n\n";

  o << "| Method |";
  for (const auto& p : panels) o << " " << p << " MAE ↓ | " << p << " MSE ↓ | " << p << " Time (h) |";
  o << "\n|---|";
  for (std::size_t i = 0; i < panels.size(); ++i) o << "---|---|---|";
  o << "\n";
  for (const auto& m : methods) {
    o << "| " << m << " |";
    for (const auto& p : panels) {
      const auto* r = find_cell(results, p, m);
      if (!r) {
        o << " n/a | n/a | n/a |";
      } else if (r->n_ok() == 0) {
        o << " failed | failed | failed |";
      } else {
        MeanStd hours{r->wall_seconds.mean / 3600.0, r->wall_seconds.std / 3600.0};
        o << " " << format_mean_std(r->mae) << " | " << format_mean_std(r->mse) << " | "
          << format_mean_std(hours) << " |";
      }
    }
    o << "\n";
  }

  bool downstream = std::any_of(results.begin(), results.end(), [](const RunResult& r) { return r.roc_auc.has_value(); });
  if (downstream) {
    o << "\n## Downstream classification\n\n| Method |";
    for (const auto& p : panels) o << " " << p << " ROC-AUC ↑ | " << p << " PR-AUC ↑ |";
    o << "\n|---|";
    for (std::size_t i = 0; i < panels.size(); ++i) o << "---|---|";
    o << "\n";
    for (const auto& m : methods) {
      o << "| " << m << " |";
      for (const auto& p : panels) {
        const auto* r = find_cell(results, p, m);
        if (r && r->roc_auc)
          o << " " << format_mean_std(*r->roc_auc) << " | " << format_mean_std(*r->pr_auc) << " |";
        else
          o << " n/a | n/a |";
      }
      o << "\n";
    }
  }

  std::vector<std::string> failures;
  for (const auto& r : results)
    for (const auto& s : r.seeds)
      if (!s.ok) failures.push_back("- `" + r.cell.id + "` seed " + std::to_string(s.seed) + ": " + s.error);
  o << "\n## Failures\n\n";
  if (failures.empty()) o << "None.\n";
  for (const auto& f : failures) o << f << "\n";
  return o.str();
}

std::string format_timings_csv(const std::vector<RunResult>& results) {
  std::ostringstream o;
  o << "cell_id,seed,status,wall_seconds\n";
  for (const auto& r : results)
    for (const auto& s : r.seeds)
      o << csv::quote(r.cell.id) << "," << s.seed << "," << (s.ok ? "ok" : "failed") << ","
        << (s.ok ? num(s.wall_seconds) : "") << "\n";
  return o.str();
}

void emit_report(const std::vector<RunResult>& results, ReportFormat format, const fs::path& file) {
  if (results.empty()) throw ArgumentError("no results to report");
  auto out = csv::open_for_write(file.string());
  out << (format == ReportFormat::csv ? format_csv_report(results) : format_markdown_report(results));
  out.flush();
  if (!out) throw IoError("write failed: " + file.string());
}

void emit_all_reports(const std::vector<RunResult>& results, const fs::path& out_dir) {
  emit_report(results, ReportFormat::csv, out_dir / "report.csv");
  emit_report(results, ReportFormat::markdown, out_dir / "report.md");
  auto out = csv::open_for_write((out_dir / "timings.csv").string());
  out << format_timings_csv(results);
  if (!out) throw IoError("write failed: timings.csv");
}

}  // namespace maskbench
