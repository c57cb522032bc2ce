#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "maskbench/runner.hpp"

namespace maskbench {

enum class ReportFormat { csv, markdown };

std::string to_string(ReportFormat f);
ReportFormat parse_report_format(const std::string& s);

/// One row per cell with unrounded values (17 significant digits). Contains
/// no timings, so identical runs give identical bytes.
std::string format_csv_report(const std::vector<RunResult>& results);

/// Methods x panels with MAE, MSE and Time (h) per panel as mean±std to three
/// decimals, then downstream scores and a failures section.
std::string format_markdown_report(const std::vector<RunResult>& results);

/// cell_id,seed,status,wall_seconds
std::string format_timings_csv(const std::vector<RunResult>& results);

/// "0.211±0.003"; a zero std renders as "±0.0".
std::string format_mean_std(const MeanStd& m);

/// Throws ArgumentError on empty results.
void emit_report(const std::vector<RunResult>& results, ReportFormat format, const std::filesystem::path& file);

/// report.csv, report.md and timings.csv inside `out_dir`.
void emit_all_reports(const std::vector<RunResult>& results, const std::filesystem::path& out_dir);

}  // namespace maskbench
