#include "maskbench/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "maskbench/csv.hpp"
#include "maskbench/error.hpp"

namespace fs = std::filesystem;

namespace maskbench {

std::string to_string(MaskTiming t) { return t == MaskTiming::pre_mask ? "pre_mask" : "mini_batch"; }

MaskTiming parse_timing(const std::string& s) {
  if (s == "pre_mask" || s == "pre-mask" || s == "premask") return MaskTiming::pre_mask;
  if (s == "mini_batch" || s == "mini-batch" || s == "minibatch") return MaskTiming::mini_batch;
  throw ArgumentError("unknown mask timing '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (dataset.path.has_value() == dataset.cohort.has_value())
    throw ArgumentError("config needs exactly one of a dataset path or a synthetic cohort");
  if (dataset.cohort) dataset.cohort->validate();
  MaskSpec{pattern, MaskStrategy::augmentation, rate, block_shape, 0}.validate();
  if (!standard_panels && (strategies.empty() || timings.empty() || normalizations.empty()))
    throw ArgumentError("grid axes must not be empty");
  if (imputers.empty()) throw ArgumentError("no imputers configured");
  if (seeds.empty()) throw ArgumentError("no seeds configured");
  std::set<std::string> names;
  for (const auto& imp : imputers) {
    imp.validate();
    if (!names.insert(imp.name).second) throw ArgumentError("duplicate imputer '" + imp.name + "'");
  }
  if (k_folds < 1) throw ArgumentError("k_folds must be >= 1");
  if (minibatch.batch_size < 1 || minibatch.epochs < 1)
    throw ArgumentError("mini-batch size and epochs must be >= 1");
  if (downstream.enabled && downstream.classifier.kind == ClassifierKind::external &&
      !downstream.classifier.command)
    throw ArgumentError("external downstream classifier needs a command");
  if (jobs < 1 || max_subprocesses < 1) throw ArgumentError("jobs and max_subprocesses must be >= 1");
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) ++i;
      out += v[i];
    }
    return out;
  }
  return v;
}

// Splits a list body on commas outside quotes.
std::vector<std::string> split_list(const std::string& body) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(unquote(trim(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  auto last = trim(cur);
  if (!last.empty() || !items.empty()) items.push_back(unquote(last));
  return items;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string num(double x) { return csv::format_double(x); }

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto s = trim(strip_comment(line));
    if (!s.empty() && s.back() == '\r') s.pop_back();
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ArgumentError("config line " + std::to_string(line_no) + ": bad section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(std::string_view(s).substr(0, eq));
    auto value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(line_no) + ": empty key");
    auto full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full))
      throw ArgumentError("config line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
    cfg.entries_[full] = Entry{value, line_no};
    cfg.order_.push_back(full);
  }
  return cfg;
}

const KeyValueConfig::Entry& KeyValueConfig::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ArgumentError("config key '" + key + "' is missing");
  return it->second;
}

std::size_t KeyValueConfig::line_of(const std::string& key) const { return entry(key).line; }

std::string KeyValueConfig::get_string(const std::string& key) const { return unquote(entry(key).raw); }

double KeyValueConfig::get_double(const std::string& key) const {
  const auto& e = entry(key);
  auto s = unquote(e.raw);
  if (s == "inf" || s == "infinity") return INFINITY;
  auto v = csv::parse_double(s);
  if (!v) throw ArgumentError("config line " + std::to_string(e.line) + ": '" + key + "' is not a number");
  return *v;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key) const {
  const auto& e = entry(key);
  auto v = csv::parse_int(unquote(e.raw));
  if (!v || *v < 0)
    throw ArgumentError("config line " + std::to_string(e.line) + ": '" + key +
                        "' is not a non-negative integer");
  return static_cast<std::uint64_t>(*v);
}

bool KeyValueConfig::get_bool(const std::string& key) const {
  const auto& e = entry(key);
  auto s = unquote(e.raw);
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  throw ArgumentError("config line " + std::to_string(e.line) + ": '" + key + "' is not a boolean");
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
  const auto& e = entry(key);
  const auto& r = e.raw;
  if (r.size() >= 2 && r.front() == '[' && r.back() == ']') return split_list(r.substr(1, r.size() - 2));
  return {unquote(r)};
}

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
  auto kv = KeyValueConfig::parse(text);
  static const std::set<std::string> known = {
      "dataset.path",
      "cohort.n_samples", "cohort.n_steps", "cohort.n_features", "cohort.trajectory",
      "cohort.prevalence", "cohort.ar_coefficient", "cohort.drift", "cohort.drift_steps",
      "cohort.seed", "cohort.protocol_period_hours", "cohort.cluster_intensity",
      "cohort.cluster_window_len", "cohort.transport_block_len", "cohort.transport_blocks",
      "cohort.abnormal_threshold_z", "cohort.followup_prob",
      "mask.pattern", "mask.rate", "mask.block_shape",
      "grid.strategies", "grid.timings", "grid.normalizations", "grid.panels", "grid.imputers",
      "grid.seeds", "grid.k_folds", "grid.metric_space",
      "minibatch.batch_size", "minibatch.epochs",
      "downstream.enabled", "downstream.classifier", "downstream.learning_rate",
      "downstream.epochs", "downstream.l2", "downstream.command", "downstream.timeout_s",
      "run.jobs", "run.max_subprocesses"};
  for (const auto& key : kv.keys()) {
    if (known.count(key)) continue;
    if (key.rfind("imputer.", 0) == 0) {
      auto leaf = key.substr(key.rfind('.') + 1);
      if (leaf == "command" || leaf == "timeout_s") continue;
    }
    throw ArgumentError("config line " + std::to_string(kv.line_of(key)) + ": unknown key '" + key + "'");
  }

  ExperimentConfig cfg;
  if (kv.has("dataset.path")) {
    fs::path p = kv.get_string("dataset.path");
    cfg.dataset.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  bool any_cohort = std::any_of(kv.keys().begin(), kv.keys().end(),
                                [](const std::string& k) { return k.rfind("cohort.", 0) == 0; });
  if (any_cohort) {
    CohortConfig c;
    if (kv.has("cohort.n_samples")) c.n_samples = kv.get_uint("cohort.n_samples");
    if (kv.has("cohort.n_steps")) c.n_steps = kv.get_uint("cohort.n_steps");
    if (kv.has("cohort.n_features")) c.n_features = kv.get_uint("cohort.n_features");
    if (kv.has("cohort.trajectory")) c.trajectory = parse_trajectory(kv.get_string("cohort.trajectory"));
    if (kv.has("cohort.prevalence")) c.prevalence = kv.get_double("cohort.prevalence");
    if (kv.has("cohort.ar_coefficient")) c.ar_coefficient = kv.get_double("cohort.ar_coefficient");
    if (kv.has("cohort.drift")) c.drift = kv.get_double("cohort.drift");
    if (kv.has("cohort.drift_steps")) c.drift_steps = kv.get_uint("cohort.drift_steps");
    if (kv.has("cohort.seed")) c.seed = kv.get_uint("cohort.seed");
    auto& m = c.mechanisms;
    if (kv.has("cohort.protocol_period_hours")) m.protocol_period_hours = kv.get_uint("cohort.protocol_period_hours");
    if (kv.has("cohort.cluster_intensity")) m.cluster_intensity = kv.get_double("cohort.cluster_intensity");
    if (kv.has("cohort.cluster_window_len")) m.cluster_window_len = kv.get_uint("cohort.cluster_window_len");
    if (kv.has("cohort.transport_block_len")) m.transport_block_len = kv.get_uint("cohort.transport_block_len");
    if (kv.has("cohort.transport_blocks")) m.transport_blocks = kv.get_uint("cohort.transport_blocks");
    if (kv.has("cohort.abnormal_threshold_z")) m.abnormal_threshold_z = kv.get_double("cohort.abnormal_threshold_z");
    if (kv.has("cohort.followup_prob")) m.followup_prob = kv.get_double("cohort.followup_prob");
    cfg.dataset.cohort = c;
  }

  if (kv.has("mask.pattern")) cfg.pattern = parse_pattern(kv.get_string("mask.pattern"));
  if (kv.has("mask.rate")) cfg.rate = kv.get_double("mask.rate");
  if (kv.has("mask.block_shape")) {
    auto v = kv.get_list("mask.block_shape");
    auto a = v.size() == 2 ? csv::parse_int(v[0]) : std::nullopt;
    auto b = v.size() == 2 ? csv::parse_int(v[1]) : std::nullopt;
    if (!a || !b || *a < 1 || *b < 1) throw ArgumentError("mask.block_shape must be [steps, features]");
    cfg.block_shape = BlockShape{static_cast<std::size_t>(*a), static_cast<std::size_t>(*b)};
  }

  auto list_of = [&](const std::string& key, auto parse) {
    std::vector<decltype(parse(std::string{}))> out;
    for (const auto& s : kv.get_list(key)) out.push_back(parse(s));
    return out;
  };
  if (kv.has("grid.strategies")) cfg.strategies = list_of("grid.strategies", parse_strategy);
  if (kv.has("grid.timings")) cfg.timings = list_of("grid.timings", parse_timing);
  if (kv.has("grid.normalizations")) cfg.normalizations = list_of("grid.normalizations", parse_regime);
  if (kv.has("grid.panels")) {
    auto p = kv.get_string("grid.panels");
    if (p == "standard")
      cfg.standard_panels = true;
    else if (p != "product")
      throw ArgumentError("grid.panels must be \"standard\" or \"product\"");
  }
  if (kv.has("grid.seeds")) {
    cfg.seeds.clear();
    for (const auto& s : kv.get_list("grid.seeds")) {
      auto v = csv::parse_int(s);
      if (!v || *v < 0) throw ArgumentError("grid.seeds entries must be non-negative integers");
      cfg.seeds.push_back(static_cast<std::uint64_t>(*v));
    }
  }
  if (kv.has("grid.k_folds")) cfg.k_folds = kv.get_uint("grid.k_folds");
  if (kv.has("grid.metric_space")) cfg.metric_space = parse_metric_space(kv.get_string("grid.metric_space"));

  std::vector<std::string> imputer_names{"mean", "median", "locf"};
  if (kv.has("grid.imputers")) imputer_names = kv.get_list("grid.imputers");
  for (const auto& name : imputer_names) {
    const std::string cmd_key = "imputer." + name + ".command";
    if (kv.has(cmd_key)) {
      ImputerDescriptor d{name, ImputerKind::external, kv.get_string(cmd_key), 3600.0};
      if (kv.has("imputer." + name + ".timeout_s")) d.timeout_seconds = kv.get_double("imputer." + name + ".timeout_s");
      cfg.imputers.push_back(d);
    } else {
      auto kind = parse_imputer_kind(name);
      if (kind == ImputerKind::external)
        throw ArgumentError("imputer 'external' needs an [imputer.<name>] section with a command");
      cfg.imputers.push_back(classical_imputer(kind));
    }
  }

  if (kv.has("minibatch.batch_size")) cfg.minibatch.batch_size = kv.get_uint("minibatch.batch_size");
  if (kv.has("minibatch.epochs")) cfg.minibatch.epochs = kv.get_uint("minibatch.epochs");

  auto& ds = cfg.downstream;
  if (kv.has("downstream.enabled")) ds.enabled = kv.get_bool("downstream.enabled");
  if (kv.has("downstream.classifier")) {
    auto name = kv.get_string("downstream.classifier");
    ds.classifier.name = name;
    ds.classifier.kind = kv.has("downstream.command") ? ClassifierKind::external : parse_classifier_kind(name);
  }
  if (kv.has("downstream.learning_rate")) ds.classifier.hyper.learning_rate = kv.get_double("downstream.learning_rate");
  if (kv.has("downstream.epochs")) ds.classifier.hyper.epochs = kv.get_uint("downstream.epochs");
  if (kv.has("downstream.l2")) ds.classifier.hyper.l2 = kv.get_double("downstream.l2");
  if (kv.has("downstream.command")) {
    ds.classifier.command = kv.get_string("downstream.command");
    ds.classifier.kind = ClassifierKind::external;
  }
  if (kv.has("downstream.timeout_s")) ds.classifier.timeout_seconds = kv.get_double("downstream.timeout_s");

  if (kv.has("run.jobs")) cfg.jobs = kv.get_uint("run.jobs");
  if (kv.has("run.max_subprocesses")) cfg.max_subprocesses = kv.get_uint("run.max_subprocesses");

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), file.parent_path());
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto list = [](const auto& items, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + fmt(items[i]);
    return s + "]";
  };
  if (cfg.dataset.path) o << "[dataset]\npath = " << quote(cfg.dataset.path->string()) << "\n\n";
  if (cfg.dataset.cohort) {
    const auto& c = *cfg.dataset.cohort;
    const auto& m = c.mechanisms;
    o << "[cohort]\n"
      << "n_samples = " << c.n_samples << "\nn_steps = " << c.n_steps << "\nn_features = " << c.n_features
      << "\ntrajectory = " << quote(to_string(c.trajectory)) << "\nprevalence = " << num(c.prevalence)
      << "\nar_coefficient = " << num(c.ar_coefficient) << "\ndrift = " << num(c.drift)
      << "\ndrift_steps = " << c.drift_steps << "\nseed = " << c.seed
      << "\nprotocol_period_hours = " << m.protocol_period_hours
      << "\ncluster_intensity = " << num(m.cluster_intensity)
      << "\ncluster_window_len = " << m.cluster_window_len
      << "\ntransport_block_len = " << m.transport_block_len
      << "\ntransport_blocks = " << m.transport_blocks
      << "\nabnormal_threshold_z = " << (std::isinf(m.abnormal_threshold_z) ? "inf" : num(m.abnormal_threshold_z))
      << "\nfollowup_prob = " << num(m.followup_prob) << "\n\n";
  }
  o << "[mask]\npattern = " << quote(to_string(cfg.pattern)) << "\nrate = " << num(cfg.rate) << "\n";
  if (cfg.block_shape) o << "block_shape = [" << cfg.block_shape->steps << ", " << cfg.block_shape->features << "]\n";
  o << "\n[grid]\n";
  auto q = [](const auto& x) { return quote(to_string(x)); };
  if (cfg.standard_panels) {
    o << "panels = \"standard\"\n";
  } else {
    o << "strategies = " << list(cfg.strategies, q) << "\n";
    o << "timings = " << list(cfg.timings, q) << "\n";
    o << "normalizations = " << list(cfg.normalizations, q) << "\n";
  }
  o << "imputers = " << list(cfg.imputers, [](const ImputerDescriptor& d) { return quote(d.name); }) << "\n";
  o << "seeds = " << list(cfg.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n";
  o << "k_folds = " << cfg.k_folds << "\nmetric_space = " << quote(to_string(cfg.metric_space)) << "\n\n";
  o << "[minibatch]\nbatch_size = " << cfg.minibatch.batch_size << "\nepochs = " << cfg.minibatch.epochs << "\n\n";
  const auto& d = cfg.downstream;
  o << "[downstream]\nenabled = " << (d.enabled ? "true" : "false")
    << "\nclassifier = " << quote(d.classifier.name)
    << "\nlearning_rate = " << num(d.classifier.hyper.learning_rate)
    << "\nepochs = " << d.classifier.hyper.epochs << "\nl2 = " << num(d.classifier.hyper.l2) << "\n";
  if (d.classifier.command)
    o << "command = " << quote(*d.classifier.command) << "\ntimeout_s = " << num(d.classifier.timeout_seconds) << "\n";
  o << "\n[run]\njobs = " << cfg.jobs << "\nmax_subprocesses = " << cfg.max_subprocesses << "\n";
  for (const auto& imp : cfg.imputers)
    if (imp.external_command)
      o << "\n[imputer." << imp.name << "]\ncommand = " << quote(*imp.external_command)
        << "\ntimeout_s = " << num(imp.timeout_seconds) << "\n";
  return o.str();
}

}  // namespace maskbench
