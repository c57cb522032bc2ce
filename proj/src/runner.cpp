#include "maskbench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "maskbench/adapter.hpp"
#include "maskbench/error.hpp"
#include "maskbench/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace maskbench {

std::string panel_name(MaskStrategy s, MaskTiming t, NormRegime r) {
  std::string name = s == MaskStrategy::augmentation ? "Augmentation" : "Overlay";
  name += t == MaskTiming::pre_mask ? " Pre-Mask " : " Mini-Batch Mask ";
  return name + to_string(r);
}

std::vector<GridCell> expand_grid(const ExperimentConfig& cfg) {
  struct Panel {
    MaskStrategy s;
    MaskTiming t;
    NormRegime r;
  };
  std::vector<Panel> panels;
  if (cfg.standard_panels) {
    for (auto s : {MaskStrategy::augmentation, MaskStrategy::overlay}) {
      panels.push_back({s, MaskTiming::mini_batch, NormRegime::NBM});
      panels.push_back({s, MaskTiming::pre_mask, NormRegime::NBM});
      panels.push_back({s, MaskTiming::pre_mask, NormRegime::NAM});
    }
  } else {
    if (cfg.strategies.empty()) throw ArgumentError("grid axis is empty: strategies");
    if (cfg.timings.empty()) throw ArgumentError("grid axis is empty: timings");
    if (cfg.normalizations.empty()) throw ArgumentError("grid axis is empty: normalizations");
    for (auto s : cfg.strategies)
      for (auto t : cfg.timings)
        for (auto r : cfg.normalizations) panels.push_back({s, t, r});
  }
  if (cfg.imputers.empty()) throw ArgumentError("grid axis is empty: imputers");

  std::vector<GridCell> cells;
  for (const auto& p : panels) {
    for (const auto& imp : cfg.imputers) {
      GridCell c;
      c.index = cells.size();
      c.strategy = p.s;
      c.timing = p.t;
      c.normalization = p.r;
      c.imputer = imp;
      c.id = to_string(p.s) + "-" + to_string(p.t) + "-" + to_string(p.r) + "-" + imp.name;
      c.panel = panel_name(p.s, p.t, p.r);
      c.pattern = cfg.pattern;
      c.rate = cfg.rate;
      c.block_shape = cfg.block_shape;
      c.metric_space = cfg.metric_space;
      cells.push_back(std::move(c));
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cells[i].id == cells[j].id) throw ArgumentError("duplicate grid cell '" + cells[i].id + "'");
  return cells;
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::partial: return "partial";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

std::size_t RunResult::n_ok() const {
  return static_cast<std::size_t>(std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; }));
}

RunResult aggregate(const GridCell& cell, std::vector<SeedResult> seeds) {
  RunResult r;
  r.cell = cell;
  r.seeds = std::move(seeds);
  std::vector<double> mae, mse, wall, roc, pr;
  for (const auto& s : r.seeds) {
    if (!s.ok) continue;
    if (mae.empty()) r.n_eval_cells = s.score.n_eval_cells;
    mae.push_back(s.score.mae);
    mse.push_back(s.score.mse);
    wall.push_back(s.wall_seconds);
    if (s.downstream) {
      roc.push_back(s.downstream->roc_auc);
      pr.push_back(s.downstream->pr_auc);
      r.classifier_name = s.downstream->classifier_name;
    }
  }
  auto ok = r.n_ok();
  r.status = ok == 0 ? RunStatus::failed : ok == r.seeds.size() ? RunStatus::ok : RunStatus::partial;
  r.mae = mean_std(mae);
  r.mse = mean_std(mse);
  r.wall_seconds = mean_std(wall);
  if (!roc.empty()) {
    r.roc_auc = mean_std(roc);
    r.pr_auc = mean_std(pr);
  }
  return r;
}

Dataset resolve_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.path) {
    auto ds = load_dataset(*cfg.dataset.path);
    ds.tensor = ds.tensor.sentinelized();
    return ds;
  }
  if (!cfg.dataset.cohort) throw ArgumentError("config has no dataset");
  const auto& cc = *cfg.dataset.cohort;
  auto cohort = generate_cohort(cc);
  auto t = apply_clinical_mechanisms(cohort.tensor, cohort.labels, cc.mechanisms, cc.seed).sentinelized();
  Dataset ds;
  ds.manifest = manifest_for(t, "synthetic:" + to_string(cc.trajectory), static_cast<std::int64_t>(cc.seed));
  ds.sample_ids = default_sample_ids(t.shape.samples);
  ds.tensor = std::move(t);
  ds.labels = std::move(cohort.labels);
  return ds;
}

namespace {

class SubprocessGate {
 public:
  explicit SubprocessGate(std::size_t limit) : free_(std::max<std::size_t>(limit, 1)) {}
  void acquire() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lk(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t free_;
};

struct GateHold {
  SubprocessGate* gate;
  explicit GateHold(SubprocessGate* g) : gate(g) {
    if (gate) gate->acquire();
  }
  ~GateHold() {
    if (gate) gate->release();
  }
  GateHold(const GateHold&) = delete;
  GateHold& operator=(const GateHold&) = delete;
};

BinaryTensor restrict_rows(const BinaryTensor& m, const std::vector<std::size_t>& rows) {
  BinaryTensor out(m.shape);
  const std::size_t per = m.shape.steps * m.shape.features;
  for (auto s : rows)
    std::copy_n(m.bits.begin() + static_cast<std::ptrdiff_t>(s * per), per,
                out.bits.begin() + static_cast<std::ptrdiff_t>(s * per));
  return out;
}

TimeSeriesTensor impute_external(const TimeSeriesTensor& masked, const MaskSet& masks, const Dataset& ds,
                                 NormRegime regime, const ImputerDescriptor& imputer,
                                 const fs::path& task_dir, SubprocessGate* gate) {
  if (task_dir.empty()) throw ArgumentError("external imputer '" + imputer.name + "' needs a task directory");
  auto manifest = manifest_for(masked, ds.manifest.source, ds.manifest.seed_provenance);
  manifest.norm_provenance = to_string(regime);
  auto task = export_task(masked, masks, manifest, task_dir, *imputer.external_command,
                          imputer.timeout_seconds, ds.sample_ids);
  ExitReport rep;
  {
    GateHold hold(gate);
    rep = run_external(task);
  }
  if (!rep.success) {
    std::string msg = "external imputer '" + imputer.name + "': " + rep.message;
    if (!rep.stderr_text.empty()) msg += "; stderr: " + rep.stderr_text;
    throw Error(msg);
  }
  return import_result(task);
}

FoldOutcome run_fold_impl(const Dataset& ds, const MaskSet& masks, const Fold& fold, NormRegime regime,
                          const ImputerDescriptor& imputer, MetricSpace space, const fs::path& task_dir,
                          SubprocessGate* gate) {
  const auto& raw = ds.tensor;
  FoldOutcome out;
  TimeSeriesTensor truth, masked;
  if (regime == NormRegime::NBM) {
    out.stats = fit_stats(raw, NormRegime::NBM, nullptr, fold.train);
    truth = transform(raw, out.stats);
    masked = apply_mask(truth, masks);
  } else {
    auto hidden = apply_mask(raw, masks);
    out.stats = fit_stats(raw, NormRegime::NAM, &masks, fold.train);
    truth = transform(raw, out.stats);
    masked = transform(hidden, out.stats);
  }

  Stopwatch clock;
  if (imputer.kind == ImputerKind::external) {
    out.imputed = impute_external(masked, masks, ds, regime, imputer, task_dir, gate);
  } else {
    auto fitted = fit(imputer, masked, fold.train);
    out.imputed = impute(fitted, masked);
  }
  out.wall_seconds = clock.elapsed().count();

  auto eval = restrict_rows(masks.evaluation, fold.validation);
  if (space == MetricSpace::raw)
    out.score = score_imputation(raw, inverse_transform(out.imputed, out.stats), eval, space);
  else
    out.score = score_imputation(truth, out.imputed, eval, space);
  return out;
}

ordered_json cell_json(const GridCell& c) {
  ordered_json j;
  j["index"] = c.index;
  j["id"] = c.id;
  j["panel"] = c.panel;
  j["strategy"] = to_string(c.strategy);
  j["timing"] = to_string(c.timing);
  j["normalization"] = to_string(c.normalization);
  j["imputer"] = {{"name", c.imputer.name}, {"kind", to_string(c.imputer.kind)}};
  if (c.imputer.external_command) {
    j["imputer"]["command"] = *c.imputer.external_command;
    j["imputer"]["timeout_s"] = c.imputer.timeout_seconds;
  }
  j["pattern"] = to_string(c.pattern);
  j["rate"] = c.rate;
  if (c.block_shape) j["block_shape"] = {c.block_shape->steps, c.block_shape->features};
  j["metric_space"] = to_string(c.metric_space);
  return j;
}

GridCell cell_from_json(const ordered_json& j) {
  GridCell c;
  c.index = j.at("index").get<std::size_t>();
  c.id = j.at("id").get<std::string>();
  c.panel = j.at("panel").get<std::string>();
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.timing = parse_timing(j.at("timing").get<std::string>());
  c.normalization = parse_regime(j.at("normalization").get<std::string>());
  const auto& imp = j.at("imputer");
  c.imputer.name = imp.at("name").get<std::string>();
  c.imputer.kind = parse_imputer_kind(imp.at("kind").get<std::string>());
  if (imp.contains("command")) {
    c.imputer.external_command = imp.at("command").get<std::string>();
    c.imputer.timeout_seconds = imp.at("timeout_s").get<double>();
  }
  c.pattern = parse_pattern(j.at("pattern").get<std::string>());
  c.rate = j.at("rate").get<double>();
  if (j.contains("block_shape"))
    c.block_shape = BlockShape{j["block_shape"][0].get<std::size_t>(), j["block_shape"][1].get<std::size_t>()};
  c.metric_space = parse_metric_space(j.at("metric_space").get<std::string>());
  return c;
}

ordered_json score_json(const ImputationScore& s) {
  return {{"mae", s.mae}, {"mse", s.mse}, {"n_eval_cells", s.n_eval_cells}, {"space", to_string(s.space)}};
}

ImputationScore score_from_json(const ordered_json& j) {
  ImputationScore s;
  s.mae = j.at("mae").get<double>();
  s.mse = j.at("mse").get<double>();
  s.n_eval_cells = j.at("n_eval_cells").get<std::size_t>();
  s.space = parse_metric_space(j.at("space").get<std::string>());
  return s;
}

ordered_json seed_json(const SeedResult& r) {
  ordered_json j;
  j["cell_id"] = r.cell_id;
  j["seed"] = r.seed;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["aggregation"] = "fold-mean of cell-global scores";
  j["score"] = score_json(r.score);
  j["folds"] = ordered_json::array();
  for (const auto& f : r.folds) {
    auto fj = score_json(f.score);
    fj["fold"] = f.fold;
    j["folds"].push_back(fj);
  }
  j["wall_seconds"] = r.wall_seconds;
  if (r.downstream) {
    const auto& d = *r.downstream;
    j["downstream"] = {{"classifier", d.classifier_name}, {"roc_auc", d.roc_auc},     {"pr_auc", d.pr_auc},
                       {"n_pos", d.n_pos},                {"n_neg", d.n_neg},         {"folds_used", d.folds_used},
                       {"warnings", d.warnings}};
  }
  return j;
}

SeedResult seed_from_json(const ordered_json& j) {
  SeedResult r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  if (!r.ok) {
    r.error = j.value("error", std::string{});
    return r;
  }
  r.score = score_from_json(j.at("score"));
  for (const auto& fj : j.at("folds")) r.folds.push_back({fj.at("fold").get<std::size_t>(), score_from_json(fj)});
  r.wall_seconds = j.at("wall_seconds").get<double>();
  if (j.contains("downstream")) {
    const auto& dj = j["downstream"];
    ClassifierScore d;
    d.classifier_name = dj.at("classifier").get<std::string>();
    d.roc_auc = dj.at("roc_auc").get<double>();
    d.pr_auc = dj.at("pr_auc").get<double>();
    d.n_pos = dj.at("n_pos").get<std::size_t>();
    d.n_neg = dj.at("n_neg").get<std::size_t>();
    d.folds_used = dj.at("folds_used").get<std::size_t>();
    d.warnings = dj.at("warnings").get<std::vector<std::string>>();
    r.downstream = d;
  }
  return r;
}

void write_json(const fs::path& file, const ordered_json& j) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + file.string());
}

ordered_json read_json(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

std::vector<Fold> folds_for(const LabelVector& labels, std::size_t k, std::uint64_t seed) {
  if (k == 1) {
    Fold f;
    for (std::size_t i = 0; i < labels.size(); ++i) f.train.push_back(i);
    f.validation = f.train;
    return {f};
  }
  return split_kfold(labels, k, seed);
}

struct SeedJob {
  const ExperimentConfig* cfg;
  const Dataset* ds;
  const GridCell* cell;
  std::uint64_t seed;
  fs::path dir;  // empty: no artifacts
  bool write_masks;
  SubprocessGate* gate;
};

SeedResult run_seed(const SeedJob& job) {
  const auto& cfg = *job.cfg;
  const auto& ds = *job.ds;
  const auto& cell = *job.cell;
  SeedResult res;
  res.cell_id = cell.id;
  res.seed = job.seed;

  MaskSpec spec{cell.pattern, cell.strategy, cell.rate, cell.block_shape, job.seed};
  auto folds = folds_for(ds.labels, cfg.k_folds, job.seed);

  std::vector<MaskSet> masks;
  if (cell.timing == MaskTiming::pre_mask) {
    masks.push_back(generate_mask(spec, ds.tensor.observed));
  } else {
    for (std::size_t e = 0; e < cfg.minibatch.epochs; ++e)
      masks.push_back(minibatch_epoch_union(spec, ds.tensor.observed, e, cfg.minibatch.batch_size));
  }

  const bool artifacts = !job.dir.empty();
  if (artifacts) fs::create_directories(job.dir / "stats");

  std::vector<ImputationScore> fold_sums(folds.size());
  TimeSeriesTensor oof;
  ordered_json timing = ordered_json::array();
  for (std::size_t e = 0; e < masks.size(); ++e) {
    const std::string tag = masks.size() > 1 || cell.timing == MaskTiming::mini_batch ? "epoch-" + std::to_string(e) : "";
    if (artifacts && job.write_masks)
      write_maskset(job.dir / "masks" / tag, masks[e], ds.tensor.feature_names, ds.tensor.step_index, ds.sample_ids);
    if (e == 0) oof = TimeSeriesTensor(ds.tensor.shape);
    for (std::size_t k = 0; k < folds.size(); ++k) {
      fs::path task_dir;
      if (artifacts) task_dir = job.dir / "tasks" / tag / ("fold-" + std::to_string(k));
      auto out = run_fold_impl(ds, masks[e], folds[k], cell.normalization, cell.imputer, cell.metric_space,
                               task_dir, job.gate);
      fold_sums[k].mae += out.score.mae;
      fold_sums[k].mse += out.score.mse;
      fold_sums[k].n_eval_cells += out.score.n_eval_cells;
      res.wall_seconds += out.wall_seconds;
      timing.push_back({{"epoch", e}, {"fold", k}, {"seconds", out.wall_seconds}});
      if (artifacts) {
        auto name = (tag.empty() ? std::string{} : tag + "-") + "fold-" + std::to_string(k) + ".json";
        write_norm_stats(job.dir / "stats" / name, out.stats, ds.tensor.feature_names);
      }
      if (e == 0) {
        const std::size_t per = ds.tensor.shape.steps * ds.tensor.shape.features;
        for (auto s : folds[k].validation)
          std::copy_n(out.imputed.values.begin() + static_cast<std::ptrdiff_t>(s * per), per,
                      oof.values.begin() + static_cast<std::ptrdiff_t>(s * per));
      }
    }
  }

  const double epochs = static_cast<double>(masks.size());
  res.score.space = cell.metric_space;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    ImputationScore fs_;
    fs_.space = cell.metric_space;
    fs_.mae = fold_sums[k].mae / epochs;
    fs_.mse = fold_sums[k].mse / epochs;
    fs_.n_eval_cells = fold_sums[k].n_eval_cells;
    res.folds.push_back({k, fs_});
    res.score.mae += fs_.mae;
    res.score.mse += fs_.mse;
    res.score.n_eval_cells += fs_.n_eval_cells;
  }
  res.score.mae /= static_cast<double>(folds.size());
  res.score.mse /= static_cast<double>(folds.size());

  if (cfg.downstream.enabled) {
    oof.scale = Scale::normalized;
    oof.feature_names = ds.tensor.feature_names;
    oof.step_index = ds.tensor.step_index;
    fs::path root;
    if (artifacts) root = job.dir / "classify";
    GateHold hold(cfg.downstream.classifier.kind == ClassifierKind::external ? job.gate : nullptr);
    res.downstream = evaluate_downstream(oof, ds.labels, folds, cfg.downstream.classifier, root);
  }
  res.ok = true;
  if (artifacts) write_json(job.dir / "timing.json", {{"fit_impute_seconds", res.wall_seconds}, {"parts", timing}});
  return res;
}

ordered_json grid_json(const ExperimentConfig& cfg, const std::vector<GridCell>& cells) {
  ordered_json j;
  j["seeds"] = cfg.seeds;
  j["k_folds"] = cfg.k_folds;
  j["cells"] = ordered_json::array();
  for (const auto& c : cells) j["cells"].push_back(cell_json(c));
  return j;
}

}  // namespace

FoldOutcome run_fold(const Dataset& ds, const MaskSet& masks, const Fold& fold, NormRegime regime,
                     const ImputerDescriptor& imputer, MetricSpace space, const fs::path& task_dir) {
  return run_fold_impl(ds, masks, fold, regime, imputer, space, task_dir, nullptr);
}

std::vector<RunResult> execute(const ExperimentConfig& cfg, const ExecuteOptions& opts) {
  cfg.validate();
  auto ds = resolve_dataset(cfg);
  return execute(cfg, ds, opts);
}

std::vector<RunResult> execute(const ExperimentConfig& cfg, const Dataset& ds, const ExecuteOptions& opts) {
  cfg.validate();
  ds.tensor.validate();
  if (ds.labels.size() != ds.tensor.shape.samples)
    throw StructuralError("dataset has " + std::to_string(ds.labels.size()) + " labels for " +
                          std::to_string(ds.tensor.shape.samples) + " samples");
  auto cells = expand_grid(cfg);

  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir / "runs");
    write_json(opts.out_dir / "grid.json", grid_json(cfg, cells));
    std::ofstream(opts.out_dir / "config.toml", std::ios::binary) << format_experiment_config(cfg);
  }

  SubprocessGate gate(cfg.max_subprocesses);
  std::vector<SeedJob> jobs;
  for (const auto& c : cells) {
    for (auto seed : cfg.seeds) {
      fs::path dir;
      if (!opts.out_dir.empty()) dir = opts.out_dir / "runs" / c.id / std::to_string(seed);
      jobs.push_back({&cfg, &ds, &c, seed, dir, opts.write_masks, &gate});
    }
  }

  std::vector<SeedResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      try {
        if (!job.dir.empty()) fs::create_directories(job.dir);
        results[i] = run_seed(job);
      } catch (const std::exception& e) {
        results[i] = SeedResult{};
        results[i].cell_id = job.cell->id;
        results[i].seed = job.seed;
        results[i].error = e.what();
      }
      if (!job.dir.empty()) {
        try {
          write_json(job.dir / "result.json", seed_json(results[i]));
        } catch (const std::exception& e) {
          results[i].ok = false;
          results[i].error = e.what();
        }
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max<std::size_t>(cfg.jobs, 1), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RunResult> out;
  std::size_t i = 0;
  for (const auto& c : cells) {
    std::vector<SeedResult> seeds(results.begin() + static_cast<std::ptrdiff_t>(i),
                                  results.begin() + static_cast<std::ptrdiff_t>(i + cfg.seeds.size()));
    i += cfg.seeds.size();
    out.push_back(aggregate(c, std::move(seeds)));
  }
  return out;
}

std::vector<RunResult> load_results(const fs::path& out_dir) {
  auto grid = read_json(out_dir / "grid.json");
  auto seeds = grid.at("seeds").get<std::vector<std::uint64_t>>();
  std::vector<RunResult> out;
  for (const auto& cj : grid.at("cells")) {
    auto cell = cell_from_json(cj);
    std::vector<SeedResult> rs;
    for (auto seed : seeds) {
      auto file = out_dir / "runs" / cell.id / std::to_string(seed) / "result.json";
      SeedResult r;
      if (fs::exists(file)) {
        r = seed_from_json(read_json(file));
      } else {
        r.cell_id = cell.id;
        r.seed = seed;
        r.error = "missing " + file.string();
      }
      rs.push_back(std::move(r));
    }
    out.push_back(aggregate(cell, std::move(rs)));
  }
  return out;
}

}  // namespace maskbench
