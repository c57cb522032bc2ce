#include "maskbench/normalization.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "maskbench/csv.hpp"
#include "maskbench/error.hpp"

namespace maskbench {

std::string to_string(NormRegime r) { return r == NormRegime::NBM ? "NBM" : "NAM"; }

NormRegime parse_regime(const std::string& s) {
  if (s == "NBM" || s == "nbm") return NormRegime::NBM;
  if (s == "NAM" || s == "nam") return NormRegime::NAM;
  throw ArgumentError("unknown normalization regime '" + s + "'");
}

NormStats fit_stats(const TimeSeriesTensor& t, NormRegime regime, const MaskSet* masks,
                    const std::vector<std::size_t>& samples) {
  const auto& sh = t.shape;
  if (regime == NormRegime::NAM) {
    if (!masks) throw ArgumentError("NAM statistics need the artificial mask");
    if (masks->artificial.shape != sh) throw ArgumentError("mask shape does not match tensor");
  }
  std::vector<std::size_t> rows = samples;
  if (rows.empty()) {
    rows.resize(sh.samples);
    for (std::size_t s = 0; s < sh.samples; ++s) rows[s] = s;
  }
  auto fitted = [&](std::size_t i) {
    if (!t.observed.bits[i]) return false;
    return regime == NormRegime::NBM || !masks->artificial.bits[i];
  };

  NormStats st;
  st.provenance = regime;
  st.mean.assign(sh.features, 0.0);
  st.scale.assign(sh.features, kScaleFloor);
  st.counts.assign(sh.features, 0);
  std::vector<double> sum(sh.features, 0.0);
  for (auto s : rows)
    for (std::size_t k = 0; k < sh.steps; ++k)
      for (std::size_t f = 0; f < sh.features; ++f) {
        auto i = sh.index(s, k, f);
        if (!fitted(i)) continue;
        sum[f] += t.values[i];
        ++st.counts[f];
      }
  for (std::size_t f = 0; f < sh.features; ++f)
    if (st.counts[f]) st.mean[f] = sum[f] / static_cast<double>(st.counts[f]);

  // Second pass on centred values.
  std::vector<double> ss(sh.features, 0.0);
  for (auto s : rows)
    for (std::size_t k = 0; k < sh.steps; ++k)
      for (std::size_t f = 0; f < sh.features; ++f) {
        auto i = sh.index(s, k, f);
        if (!fitted(i)) continue;
        double d = t.values[i] - st.mean[f];
        ss[f] += d * d;
      }
  for (std::size_t f = 0; f < sh.features; ++f) {
    if (st.counts[f] < 2) continue;
    double sd = std::sqrt(ss[f] / static_cast<double>(st.counts[f]));
    st.scale[f] = std::max(sd, kScaleFloor);
  }
  return st;
}

namespace {

void check_features(const TimeSeriesTensor& t, const NormStats& st) {
  if (st.mean.size() != t.shape.features || st.scale.size() != t.shape.features)
    throw ArgumentError("normalization stats cover " + std::to_string(st.mean.size()) +
                        " features, tensor has " + std::to_string(t.shape.features));
}

}  // namespace

TimeSeriesTensor transform(const TimeSeriesTensor& t, const NormStats& st) {
  check_features(t, st);
  TimeSeriesTensor out = t;
  const std::size_t F = t.shape.features;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t f = i % F;
    out.values[i] = out.observed.bits[i] ? (t.values[i] - st.mean[f]) / st.scale[f] : 0.0;
  }
  out.scale = Scale::normalized;
  return out;
}

TimeSeriesTensor inverse_transform(const TimeSeriesTensor& t, const NormStats& st) {
  check_features(t, st);
  TimeSeriesTensor out = t;
  const std::size_t F = t.shape.features;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t f = i % F;
    out.values[i] = out.observed.bits[i] ? t.values[i] * st.scale[f] + st.mean[f] : 0.0;
  }
  out.scale = Scale::raw;
  return out;
}

void write_norm_stats(const std::filesystem::path& file, const NormStats& st,
                      const std::vector<std::string>& feature_names) {
  if (feature_names.size() != st.features())
    throw ArgumentError("feature_names length differs from stats");
  nlohmann::ordered_json j;
  j["provenance"] = to_string(st.provenance);
  auto& feats = j["features"] = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < st.features(); ++f)
    feats[feature_names[f]] = {{"mean", st.mean[f]}, {"scale", st.scale[f]}, {"count", st.counts[f]}};
  auto out = csv::open_for_write(file.string());
  out << j.dump(2) << '\n';
}

NormStats read_norm_stats(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  NormStats st;
  try {
    auto j = nlohmann::ordered_json::parse(in);
    st.provenance = parse_regime(j.at("provenance").get<std::string>());
    for (const auto& [name, v] : j.at("features").items()) {
      st.mean.push_back(v.at("mean").get<double>());
      st.scale.push_back(v.at("scale").get<double>());
      st.counts.push_back(v.at("count").get<std::size_t>());
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  return st;
}

}  // namespace maskbench
