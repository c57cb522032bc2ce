#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "maskbench/config.hpp"
#include "maskbench/dataset.hpp"
#include "maskbench/error.hpp"
#include "maskbench/masking.hpp"
#include "maskbench/report.hpp"
#include "maskbench/runner.hpp"
#include "maskbench/synth.hpp"

namespace fs = std::filesystem;
using namespace maskbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* app, CommonFlags& c) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out-dir", c.out_dir, "Output directory")->required();
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

struct CohortFlags {
  std::optional<std::string> config;
  CohortConfig cohort;
  std::string trajectory = "ar1";
};

void add_cohort_flags(CLI::App* app, CohortFlags& f) {
  auto& c = f.cohort;
  auto& m = c.mechanisms;
  app->add_option("--config", f.config, "Config file whose [cohort] section seeds the defaults");
  app->add_option("--samples", c.n_samples, "Number of stays");
  app->add_option("--steps", c.n_steps, "Hourly steps per stay");
  app->add_option("--features", c.n_features, "Vital-sign channels");
  app->add_option("--trajectory", f.trajectory, "stationary_gaussian | ar1 | deterioration");
  app->add_option("--prevalence", c.prevalence, "Positive-label fraction");
  app->add_option("--ar-coefficient", c.ar_coefficient);
  app->add_option("--drift", c.drift, "Deterioration drift at the last step");
  app->add_option("--drift-steps", c.drift_steps);
  app->add_option("--protocol-period", m.protocol_period_hours, "Measurement period in hours");
  app->add_option("--cluster-intensity", m.cluster_intensity);
  app->add_option("--cluster-window", m.cluster_window_len);
  app->add_option("--transport-len", m.transport_block_len);
  app->add_option("--transport-blocks", m.transport_blocks);
  app->add_option("--abnormal-z", m.abnormal_threshold_z);
  app->add_option("--followup-prob", m.followup_prob);
}

int cmd_generate(CLI::App* app, const CommonFlags& common, CohortFlags& f) {
  CohortConfig c = f.cohort;
  if (f.config) {
    auto cfg = load_experiment_config(*f.config);
    if (!cfg.dataset.cohort) throw ArgumentError("config has no [cohort] section");
    c = *cfg.dataset.cohort;
  }
  // Explicit flags win over the config file.
  auto set = [&](const char* name) { return app->count(name) > 0; };
  const auto& g = f.cohort;
  if (set("--samples")) c.n_samples = g.n_samples;
  if (set("--steps")) c.n_steps = g.n_steps;
  if (set("--features")) c.n_features = g.n_features;
  if (set("--trajectory") || !f.config) c.trajectory = parse_trajectory(f.trajectory);
  if (set("--prevalence")) c.prevalence = g.prevalence;
  if (set("--ar-coefficient")) c.ar_coefficient = g.ar_coefficient;
  if (set("--drift")) c.drift = g.drift;
  if (set("--drift-steps")) c.drift_steps = g.drift_steps;
  if (set("--protocol-period")) c.mechanisms.protocol_period_hours = g.mechanisms.protocol_period_hours;
  if (set("--cluster-intensity")) c.mechanisms.cluster_intensity = g.mechanisms.cluster_intensity;
  if (set("--cluster-window")) c.mechanisms.cluster_window_len = g.mechanisms.cluster_window_len;
  if (set("--transport-len")) c.mechanisms.transport_block_len = g.mechanisms.transport_block_len;
  if (set("--transport-blocks")) c.mechanisms.transport_blocks = g.mechanisms.transport_blocks;
  if (set("--abnormal-z")) c.mechanisms.abnormal_threshold_z = g.mechanisms.abnormal_threshold_z;
  if (set("--followup-prob")) c.mechanisms.followup_prob = g.mechanisms.followup_prob;
  if (common.seed) c.seed = *common.seed;

  ExperimentConfig cfg;
  cfg.dataset.cohort = c;
  auto ds = resolve_dataset(cfg);
  export_dataset(common.out_dir, ds);
  auto missing = 1.0 - static_cast<double>(ds.tensor.observed.count()) / static_cast<double>(ds.tensor.shape.cells());
  std::printf("wrote %s: %s, %zu positive, %.1f%% missing\n", common.out_dir.c_str(),
              to_string(ds.tensor.shape).c_str(), count_positive(ds.labels), 100.0 * missing);
  return kExitOk;
}

struct MaskFlags {
  std::string dataset;
  std::string pattern = "random";
  std::string strategy = "augmentation";
  double rate = 0.2;
  std::vector<std::size_t> block;
  std::string timing = "pre_mask";
  std::size_t epoch = 0;
  std::size_t batch_size = 256;
};

int cmd_mask(const CommonFlags& common, const MaskFlags& f) {
  auto files = load_tensor_files(f.dataset);
  MaskSpec spec;
  spec.pattern = parse_pattern(f.pattern);
  spec.strategy = parse_strategy(f.strategy);
  spec.rate = f.rate;
  spec.seed = common.seed.value_or(0);
  if (!f.block.empty()) {
    if (f.block.size() != 2) throw ArgumentError("--block takes two values: steps features");
    spec.block_shape = BlockShape{f.block[0], f.block[1]};
  }
  spec.validate();
  MaskSet masks = parse_timing(f.timing) == MaskTiming::pre_mask
                      ? generate_mask(spec, files.tensor.observed)
                      : minibatch_epoch_union(spec, files.tensor.observed, f.epoch, f.batch_size);
  write_maskset(common.out_dir, masks, files.tensor.feature_names, files.tensor.step_index, files.sample_ids);
  std::printf("wrote %s: %zu artificial, %zu evaluation cells\n", common.out_dir.c_str(),
              masks.artificial.count(), masks.evaluation.count());
  return kExitOk;
}

struct RunFlags {
  std::string config;
  std::optional<std::string> dataset;
  std::optional<std::string> pattern;
  std::optional<double> rate;
  std::optional<std::size_t> k_folds;
  std::vector<std::string> imputers;
  std::optional<std::string> metric_space;
  bool downstream = false;
  bool no_masks = false;
};

int exit_code_for(const std::vector<RunResult>& results) {
  int code = kExitOk;
  for (const auto& r : results) {
    if (r.status != RunStatus::ok) code = kExitPartial;
  }
  return code;
}

int cmd_run(const CommonFlags& common, const RunFlags& f) {
  auto cfg = load_experiment_config(f.config);
  if (f.dataset) {
    cfg.dataset.path = fs::path(*f.dataset);
    cfg.dataset.cohort.reset();
  }
  if (f.pattern) cfg.pattern = parse_pattern(*f.pattern);
  if (f.rate) cfg.rate = *f.rate;
  if (f.k_folds) cfg.k_folds = *f.k_folds;
  if (!f.imputers.empty()) {
    cfg.imputers.clear();
    for (const auto& name : f.imputers) cfg.imputers.push_back(classical_imputer(parse_imputer_kind(name)));
  }
  if (f.metric_space) cfg.metric_space = parse_metric_space(*f.metric_space);
  if (f.downstream) cfg.downstream.enabled = true;
  if (common.seed) cfg.seeds = {*common.seed};
  if (common.jobs) cfg.jobs = *common.jobs;
  cfg.validate();

  ExecuteOptions opts;
  opts.out_dir = common.out_dir;
  opts.write_masks = !f.no_masks;
  auto results = execute(cfg, opts);
  emit_all_reports(results, opts.out_dir);
  std::cout << format_markdown_report(results);
  return exit_code_for(results);
}

int cmd_report(const CommonFlags& common, const std::string& format) {
  auto results = load_results(common.out_dir);
  if (format == "all") {
    emit_all_reports(results, common.out_dir);
  } else {
    auto fmt = parse_report_format(format);
    emit_report(results, fmt, fs::path(common.out_dir) / (fmt == ReportFormat::csv ? "report.csv" : "report.md"));
  }
  std::cout << format_markdown_report(results);
  return exit_code_for(results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskbench: masking-aware evaluation of time-series imputation"};
  app.require_subcommand(1);

  CommonFlags gen_common, mask_common, run_common, report_common;

  auto* gen = app.add_subcommand("generate", "Write a synthetic ICU cohort in dataset layout");
  add_common(gen, gen_common);
  CohortFlags cohort;
  add_cohort_flags(gen, cohort);

  auto* mask = app.add_subcommand("mask", "Materialize one artificial mask for a dataset");
  add_common(mask, mask_common);
  MaskFlags mf;
  mask->add_option("--dataset", mf.dataset, "Dataset directory")->required();
  mask->add_option("--pattern", mf.pattern, "random | temporal | spatial | block");
  mask->add_option("--strategy", mf.strategy, "augmentation | overlay");
  mask->add_option("--rate", mf.rate, "Masking rate in [0, 1]");
  mask->add_option("--block", mf.block, "Block shape: steps features")->expected(2);
  mask->add_option("--timing", mf.timing, "pre_mask | mini_batch");
  mask->add_option("--epoch", mf.epoch, "Epoch for mini_batch timing");
  mask->add_option("--batch-size", mf.batch_size, "Batch size for mini_batch timing");

  auto* run = app.add_subcommand("run", "Run the experiment grid and write reports");
  add_common(run, run_common);
  RunFlags rf;
  run->add_option("--config", rf.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--dataset", rf.dataset, "Dataset directory (replaces the config's dataset)");
  run->add_option("--pattern", rf.pattern);
  run->add_option("--rate", rf.rate);
  run->add_option("--k-folds", rf.k_folds);
  run->add_option("--imputers", rf.imputers, "Classical imputers: mean median locf");
  run->add_option("--metric-space", rf.metric_space, "normalized | raw");
  run->add_flag("--downstream", rf.downstream, "Enable downstream classification");
  run->add_flag("--no-masks", rf.no_masks, "Skip writing mask files under runs/");

  auto* report = app.add_subcommand("report", "Re-emit reports from an existing run directory");
  add_common(report, report_common);
  std::string format = "all";
  report->add_option("--format", format, "csv | markdown | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*gen) return cmd_generate(gen, gen_common, cohort);
    if (*mask) return cmd_mask(mask_common, mf);
    if (*run) return cmd_run(run_common, rf);
    if (*report) return cmd_report(report_common, format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "maskbench: %s\n", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}
