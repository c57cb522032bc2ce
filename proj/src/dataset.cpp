#include "maskbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "maskbench/csv.hpp"
#include "maskbench/error.hpp"
#include "maskbench/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace maskbench {

namespace {

std::string coords(std::size_t s, std::size_t t, std::size_t f) {
  return "(" + std::to_string(s) + "," + std::to_string(t) + "," + std::to_string(f) + ")";
}

std::string header_line(const std::vector<std::string>& features) {
  std::string h = "sample_id,step";
  for (const auto& f : features) h += "," + f;
  return h;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing file " + p.string());
}

// Parses the shared "sample_id,step,<features>" header.
std::vector<std::string> parse_header(csv::Reader& r) {
  std::string line;
  if (!r.next_line(line)) throw StructuralError(r.path() + ": empty file");
  auto fields = csv::split(line);
  if (fields.size() < 2 || fields[0] != "sample_id" || fields[1] != "step")
    throw StructuralError(r.path() + ": header must start with sample_id,step");
  return {fields.begin() + 2, fields.end()};
}

struct RowKey {
  std::int64_t sample_id;
  double step;
};

RowKey parse_key(const std::vector<std::string_view>& fields, const csv::Reader& r) {
  auto id = csv::parse_int(fields[0]);
  auto step = csv::parse_double(fields[1]);
  if (!id || !step || !std::isfinite(*step))
    throw StructuralError(r.path() + " line " + std::to_string(r.line_number()) +
                          ": bad sample_id/step");
  return {*id, *step};
}

// Walks rows in sample-major, step-minor order and checks the layout.
class RowWalker {
 public:
  RowWalker(const Shape& shape, std::string path) : shape_(shape), path_(std::move(path)) {}

  // Returns (sample, step) for the row with the given key.
  std::pair<std::size_t, std::size_t> place(std::size_t row, const RowKey& key) {
    if (row >= shape_.samples * shape_.steps)
      throw StructuralError(path_ + ": more rows than n_samples*n_steps = " +
                            std::to_string(shape_.samples * shape_.steps));
    std::size_t s = row / shape_.steps;
    std::size_t t = row % shape_.steps;
    if (t == 0) {
      if (!ids.empty() && key.sample_id <= ids.back())
        throw StructuralError(path_ + " row " + std::to_string(row + 1) +
                              ": sample_id not ascending or wrong step count for previous sample");
      ids.push_back(key.sample_id);
    } else if (key.sample_id != ids.back()) {
      throw StructuralError(path_ + " row " + std::to_string(row + 1) + ": sample " +
                            std::to_string(ids.back()) + " has fewer than " +
                            std::to_string(shape_.steps) + " steps");
    }
    if (s == 0) {
      if (t > 0 && key.step <= steps.back())
        throw StructuralError(path_ + " row " + std::to_string(row + 1) + ": step not ascending");
      steps.push_back(key.step);
    } else if (key.step != steps[t]) {
      throw StructuralError(path_ + " row " + std::to_string(row + 1) +
                            ": step grid differs from the first sample");
    }
    return {s, t};
  }

  std::vector<std::int64_t> ids;
  std::vector<double> steps;

 private:
  Shape shape_;
  std::string path_;
};

}  // namespace

void DatasetManifest::check_against(const TimeSeriesTensor& t) const {
  if (n_samples != t.shape.samples || n_steps != t.shape.steps || n_features != t.shape.features)
    throw StructuralError("manifest counts (" + std::to_string(n_samples) + "," +
                          std::to_string(n_steps) + "," + std::to_string(n_features) +
                          ") do not match tensor " + to_string(t.shape));
  if (feature_names != t.feature_names)
    throw StructuralError("manifest feature_names do not match tensor feature names");
  if (scale == Scale::normalized && !norm_provenance)
    throw ValidationError("manifest: scale=normalized requires norm_provenance");
}

DatasetManifest manifest_for(const TimeSeriesTensor& t, std::string source, std::int64_t seed) {
  DatasetManifest m;
  m.n_samples = t.shape.samples;
  m.n_steps = t.shape.steps;
  m.n_features = t.shape.features;
  m.scale = t.scale;
  m.feature_names = t.feature_names;
  m.source = std::move(source);
  m.seed_provenance = seed;
  return m;
}

std::vector<std::int64_t> default_sample_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  return ids;
}

void write_manifest(const fs::path& file, const DatasetManifest& m) {
  json j;
  j["n_samples"] = m.n_samples;
  j["n_steps"] = m.n_steps;
  j["n_features"] = m.n_features;
  j["scale"] = to_string(m.scale);
  j["feature_names"] = m.feature_names;
  j["seed_provenance"] = m.seed_provenance;
  j["source"] = m.source;
  if (m.norm_provenance) j["norm_provenance"] = *m.norm_provenance;
  auto out = csv::open_for_write(file.string());
  out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& file) {
  require_file(file);
  std::ifstream in(file);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.n_steps = j.at("n_steps").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.scale = parse_scale(j.at("scale").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.seed_provenance = j.at("seed_provenance").get<std::int64_t>();
    m.source = j.value("source", std::string{});
    if (j.contains("norm_provenance")) m.norm_provenance = j["norm_provenance"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  if (m.feature_names.size() != m.n_features)
    throw StructuralError(file.string() + ": feature_names length differs from n_features");
  if (m.scale == Scale::normalized && !m.norm_provenance)
    throw ValidationError(file.string() + ": scale=normalized requires norm_provenance");
  return m;
}

namespace {

template <typename CellWriter>
void write_grid_csv(const fs::path& file, const Shape& shape,
                    const std::vector<std::string>& feature_names,
                    const std::vector<double>& step_index,
                    const std::vector<std::int64_t>& sample_ids, CellWriter&& cell) {
  if (feature_names.size() != shape.features)
    throw StructuralError("refusing to write " + file.string() + ": " +
                          std::to_string(feature_names.size()) + " feature names for " +
                          std::to_string(shape.features) + " features");
  if (sample_ids.size() != shape.samples || step_index.size() != shape.steps)
    throw StructuralError("refusing to write " + file.string() + ": id/step length mismatch");
  auto out = csv::open_for_write(file.string());
  std::string line;
  out << header_line(feature_names) << '\n';
  for (std::size_t s = 0; s < shape.samples; ++s)
    for (std::size_t t = 0; t < shape.steps; ++t) {
      line = std::to_string(sample_ids[s]);
      line += ',';
      line += csv::format_double(step_index[t]);
      for (std::size_t f = 0; f < shape.features; ++f) {
        line += ',';
        cell(line, shape.index(s, t, f));
      }
      line += '\n';
      out << line;
    }
  if (!out) throw IoError("write failed: " + file.string());
}

}  // namespace

void write_data_csv(const fs::path& file, const TimeSeriesTensor& t,
                    const std::vector<std::int64_t>& sample_ids) {
  write_grid_csv(file, t.shape, t.feature_names, t.step_index, sample_ids,
                 [&](std::string& line, std::size_t i) {
                   if (t.observed.bits[i]) line += csv::format_double(t.values[i]);
                 });
}

void write_dense_csv(const fs::path& file, const TimeSeriesTensor& t,
                     const std::vector<std::int64_t>& sample_ids) {
  write_grid_csv(file, t.shape, t.feature_names, t.step_index, sample_ids,
                 [&](std::string& line, std::size_t i) { line += csv::format_double(t.values[i]); });
}

void write_mask_csv(const fs::path& file, const BinaryTensor& mask,
                    const std::vector<std::string>& feature_names,
                    const std::vector<double>& step_index,
                    const std::vector<std::int64_t>& sample_ids) {
  write_grid_csv(file, mask.shape, feature_names, step_index, sample_ids,
                 [&](std::string& line, std::size_t i) { line += mask.bits[i] ? '1' : '0'; });
}

BinaryTensor read_mask_csv(const fs::path& file, const Shape& expected) {
  require_file(file);
  csv::Reader r(file.string());
  auto names = parse_header(r);
  if (names.size() != expected.features)
    throw StructuralError(file.string() + ": header has " + std::to_string(names.size()) +
                          " features, expected " + std::to_string(expected.features));
  BinaryTensor mask(expected);
  RowWalker walker(expected, file.string());
  std::string line;
  std::size_t row = 0;
  while (r.next_line(line)) {
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (fields.size() != expected.features + 2)
      throw StructuralError(file.string() + " row " + std::to_string(row + 1) +
                            ": wrong field count");
    auto [s, t] = walker.place(row, parse_key(fields, r));
    for (std::size_t f = 0; f < expected.features; ++f) {
      auto v = fields[f + 2];
      if (v != "0" && v != "1")
        throw ValidationError(file.string() + ": mask field not in {0,1} at " + coords(s, t, f));
      mask.at(s, t, f) = v == "1" ? 1 : 0;
    }
    ++row;
  }
  if (row != expected.samples * expected.steps)
    throw StructuralError(file.string() + ": " + std::to_string(row) + " rows, expected " +
                          std::to_string(expected.samples * expected.steps));
  return mask;
}

std::vector<double> read_dense_csv(const fs::path& file, const Shape& expected,
                                   const std::vector<std::string>& feature_names) {
  require_file(file);
  csv::Reader r(file.string());
  auto names = parse_header(r);
  if (names != feature_names)
    throw StructuralError(file.string() + ": header does not match the expected feature names");
  std::vector<double> values(expected.cells());
  RowWalker walker(expected, file.string());
  std::string line;
  std::size_t row = 0;
  while (r.next_line(line)) {
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (fields.size() != expected.features + 2)
      throw StructuralError(file.string() + " row " + std::to_string(row + 1) +
                            ": wrong field count");
    auto [s, t] = walker.place(row, parse_key(fields, r));
    for (std::size_t f = 0; f < expected.features; ++f) {
      auto v = csv::parse_double(fields[f + 2]);
      if (!v || !std::isfinite(*v))
        throw ValidationError(file.string() + ": missing or non-finite value at " + coords(s, t, f));
      values[expected.index(s, t, f)] = *v;
    }
    ++row;
  }
  if (row != expected.samples * expected.steps)
    throw StructuralError(file.string() + ": " + std::to_string(row) + " rows, expected " +
                          std::to_string(expected.samples * expected.steps));
  return values;
}

void write_labels_csv(const fs::path& file, const LabelVector& labels,
                      const std::vector<std::int64_t>& sample_ids) {
  if (labels.size() != sample_ids.size())
    throw StructuralError("labels/sample_ids length mismatch");
  auto out = csv::open_for_write(file.string());
  out << "sample_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << sample_ids[i] << ',' << int(labels[i]) << '\n';
}

TensorFiles load_tensor_files(const fs::path& root) {
  const auto data_path = root / "data.csv";
  const auto mask_path = root / "mask.csv";
  const auto manifest_path = root / "manifest.json";
  for (const auto& p : {data_path, mask_path, manifest_path}) require_file(p);

  TensorFiles ds;
  ds.manifest = read_manifest(manifest_path);
  const auto& m = ds.manifest;
  const Shape shape{m.n_samples, m.n_steps, m.n_features};

  csv::Reader data(data_path.string());
  csv::Reader mask(mask_path.string());
  auto data_names = parse_header(data);
  auto mask_names = parse_header(mask);
  if (data_names != m.feature_names)
    throw StructuralError("data.csv header does not match manifest feature_names");
  if (mask_names != data_names) throw StructuralError("mask.csv header differs from data.csv");

  TimeSeriesTensor& t = ds.tensor;
  t.shape = shape;
  t.values.assign(shape.cells(), 0.0);
  t.observed = BinaryTensor(shape);
  t.feature_names = m.feature_names;
  t.scale = m.scale;

  RowWalker walker(shape, data_path.string());
  std::string dline, mline;
  std::size_t row = 0;
  for (;;) {
    bool has_d = data.next_line(dline);
    bool has_m = mask.next_line(mline);
    if (has_d && dline.empty()) {
      if (has_m && mline.empty()) continue;
    }
    if (!has_d && !has_m) break;
    if (has_d != has_m)
      throw StructuralError("row count mismatch between data.csv and mask.csv at data row " +
                            std::to_string(row + 1) + " (" +
                            (has_d ? "mask.csv ended" : "data.csv ended") + ")");
    auto df = csv::split(dline);
    auto mf = csv::split(mline);
    if (df.size() != shape.features + 2 || mf.size() != shape.features + 2)
      throw StructuralError("wrong field count at data row " + std::to_string(row + 1));
    auto dkey = parse_key(df, data);
    auto mkey = parse_key(mf, mask);
    if (dkey.sample_id != mkey.sample_id || dkey.step != mkey.step)
      throw StructuralError("data.csv and mask.csv disagree on (sample_id, step) at row " +
                            std::to_string(row + 1));
    auto [s, st] = walker.place(row, dkey);
    for (std::size_t f = 0; f < shape.features; ++f) {
      auto flag = mf[f + 2];
      if (flag != "0" && flag != "1")
        throw ValidationError("mask.csv: field not in {0,1} at " + coords(s, st, f));
      if (flag == "0") continue;
      auto v = csv::parse_double(df[f + 2]);
      if (!v || !std::isfinite(*v))
        throw ValidationError("data.csv: missing or non-finite observed value at " +
                              coords(s, st, f));
      auto i = shape.index(s, st, f);
      t.values[i] = *v;
      t.observed.bits[i] = 1;
    }
    ++row;
  }
  if (row != shape.samples * shape.steps)
    throw StructuralError("data.csv has " + std::to_string(row) + " rows, manifest implies " +
                          std::to_string(shape.samples * shape.steps));
  ds.sample_ids = std::move(walker.ids);
  t.step_index = std::move(walker.steps);
  t.validate();
  m.check_against(t);
  return ds;
}

Dataset load_dataset(const fs::path& root) {
  const auto labels_path = root / "labels.csv";
  require_file(labels_path);
  auto files = load_tensor_files(root);
  Dataset ds{std::move(files.tensor), {}, std::move(files.manifest), std::move(files.sample_ids)};
  const Shape shape = ds.tensor.shape;

  csv::Reader labels(labels_path.string());
  std::string line;
  if (!labels.next_line(line) || line != "sample_id,label")
    throw StructuralError("labels.csv: header must be sample_id,label");
  while (labels.next_line(line)) {
    if (line.empty()) continue;
    auto f = csv::split(line);
    std::size_t i = ds.labels.size();
    if (f.size() != 2) throw StructuralError("labels.csv line " + std::to_string(labels.line_number()) + ": expected 2 fields");
    auto id = csv::parse_int(f[0]);
    if (i >= ds.sample_ids.size() || !id || *id != ds.sample_ids[i])
      throw StructuralError("labels.csv line " + std::to_string(labels.line_number()) +
                            ": sample_id does not follow data.csv order");
    if (f[1] != "0" && f[1] != "1")
      throw ValidationError("labels.csv line " + std::to_string(labels.line_number()) +
                            ": label not in {0,1}");
    ds.labels.push_back(f[1] == "1" ? 1 : 0);
  }
  if (ds.labels.size() != shape.samples)
    throw StructuralError("labels.csv has " + std::to_string(ds.labels.size()) +
                          " rows, expected " + std::to_string(shape.samples));
  return ds;
}

void export_dataset(const fs::path& root, const Dataset& ds) {
  ds.tensor.validate();
  ds.manifest.check_against(ds.tensor);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  auto ids = ds.sample_ids.empty() ? default_sample_ids(ds.tensor.shape.samples) : ds.sample_ids;
  write_data_csv(root / "data.csv", ds.tensor, ids);
  write_mask_csv(root / "mask.csv", ds.tensor.observed, ds.tensor.feature_names,
                 ds.tensor.step_index, ids);
  write_labels_csv(root / "labels.csv", ds.labels, ids);
  write_manifest(root / "manifest.json", ds.manifest);
}

std::vector<Fold> split_kfold(const LabelVector& labels, std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw ArgumentError("k-fold needs k >= 2");
  if (k > n)
    throw ArgumentError("k = " + std::to_string(k) + " exceeds n_samples = " + std::to_string(n));
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 1) throw ArgumentError("labels must be 0/1");
    (labels[i] ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty())
    throw ArgumentError("stratified k-fold needs both classes in the labels");

  Rng rng(mix_seed(seed, stream::kfold));
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<Fold> folds(k);
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg})
    for (auto i : *cls) folds[slot++ % k].validation.push_back(i);
  for (auto& fold : folds) {
    std::sort(fold.validation.begin(), fold.validation.end());
    std::vector<std::uint8_t> in_val(n, 0);
    for (auto i : fold.validation) in_val[i] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_val[i]) fold.train.push_back(i);
  }
  return folds;
}

std::vector<FeatureSummary> summarize(const TimeSeriesTensor& t) {
  const auto& sh = t.shape;
  std::vector<FeatureSummary> out(sh.features);
  std::vector<double> sum(sh.features, 0.0);
  std::vector<double> lo(sh.features, std::numeric_limits<double>::infinity());
  std::vector<double> hi(sh.features, -std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < sh.samples; ++s)
    for (std::size_t st = 0; st < sh.steps; ++st)
      for (std::size_t f = 0; f < sh.features; ++f) {
        auto i = sh.index(s, st, f);
        if (!t.observed.bits[i]) continue;
        double v = t.values[i];
        ++out[f].observed_count;
        sum[f] += v;
        lo[f] = std::min(lo[f], v);
        hi[f] = std::max(hi[f], v);
      }
  const double grid = static_cast<double>(sh.samples * sh.steps);
  for (std::size_t f = 0; f < sh.features; ++f) {
    auto& r = out[f];
    r.name = f < t.feature_names.size() ? t.feature_names[f] : "f" + std::to_string(f);
    r.observed_fraction = grid > 0 ? static_cast<double>(r.observed_count) / grid : 0.0;
    if (r.observed_count > 0) {
      r.min = lo[f];
      r.max = hi[f];
      r.mean = sum[f] / static_cast<double>(r.observed_count);
    }
  }
  return out;
}

}  // namespace maskbench
