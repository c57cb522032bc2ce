#include "maskbench/adapter.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "maskbench/csv.hpp"
#include "maskbench/error.hpp"
#include "maskbench/metrics.hpp"

namespace fs = std::filesystem;

namespace maskbench {

std::string to_string(TaskKind k) { return k == TaskKind::impute ? "impute" : "classify"; }

namespace {

void fresh_dir(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir / "input", ec);
  if (!ec) fs::create_directories(dir / "output", ec);
  if (ec) throw IoError("cannot create task directory " + dir.string() + ": " + ec.message());
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string read_tail(const fs::path& file, std::size_t max_bytes) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  auto s = ss.str();
  return s.size() > max_bytes ? s.substr(s.size() - max_bytes) : s;
}

}  // namespace

std::string substitute_task_dir(const std::string& command, const fs::path& task_dir) {
  static const std::string key = "{task_dir}";
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    auto hit = command.find(key, pos);
    if (hit == std::string::npos) break;
    out += command.substr(pos, hit - pos);
    out += shell_quote(task_dir.string());
    pos = hit + key.size();
  }
  return out + command.substr(pos);
}

ExchangeTask export_task(const TimeSeriesTensor& masked, const MaskSet& masks,
                         const DatasetManifest& manifest, const fs::path& task_dir,
                         const std::string& command, double timeout_seconds,
                         const std::vector<std::int64_t>& sample_ids) {
  masked.validate();
  manifest.check_against(masked);
  if (masks.artificial.shape != masked.shape)
    throw StructuralError("artificial mask shape does not match the masked tensor");
  for (std::size_t i = 0; i < masks.artificial.bits.size(); ++i)
    if (masks.artificial.bits[i] && masked.observed.bits[i])
      throw StructuralError("refusing to export: an artificially masked cell is still observed "
                            "(apply the mask first)");
  if (command.find("{task_dir}") == std::string::npos)
    throw ArgumentError("external command lacks the {task_dir} placeholder");

  fresh_dir(task_dir);
  const auto in = task_dir / "input";
  auto ids = sample_ids.empty() ? default_sample_ids(masked.shape.samples) : sample_ids;
  write_data_csv(in / "data.csv", masked, ids);
  write_mask_csv(in / "mask.csv", masked.observed, masked.feature_names, masked.step_index, ids);
  write_mask_csv(in / "mask-artificial.csv", masks.artificial, masked.feature_names,
                 masked.step_index, ids);
  write_manifest(in / "manifest.json", manifest);
  return {task_dir, TaskKind::impute, command, timeout_seconds};
}

ExchangeTask export_classify_task(const TimeSeriesTensor& dense, const LabelVector& labels,
                                  const std::vector<std::size_t>& train,
                                  const std::vector<std::size_t>& predict, const fs::path& task_dir,
                                  const std::string& command, double timeout_seconds) {
  if (labels.size() != dense.shape.samples) throw StructuralError("labels length differs from n_samples");
  if (command.find("{task_dir}") == std::string::npos)
    throw ArgumentError("external command lacks the {task_dir} placeholder");
  fresh_dir(task_dir);
  const auto in = task_dir / "input";
  auto ids = default_sample_ids(dense.shape.samples);
  write_dense_csv(in / "data.csv", dense, ids);
  write_mask_csv(in / "mask.csv", BinaryTensor(dense.shape, 1), dense.feature_names,
                 dense.step_index, ids);
  write_manifest(in / "manifest.json", manifest_for(dense, "imputed"));
  {
    auto out = csv::open_for_write((in / "labels.csv").string());
    out << "sample_id,label\n";
    for (auto i : train) out << ids.at(i) << ',' << int(labels[i]) << '\n';
  }
  {
    auto out = csv::open_for_write((in / "predict.csv").string());
    out << "sample_id\n";
    for (auto i : predict) out << ids.at(i) << '\n';
  }
  return {task_dir, TaskKind::classify, command, timeout_seconds};
}

ExitReport run_external(const ExchangeTask& task) {
  ExitReport rep;
  std::error_code ec;
  fs::create_directories(task.task_dir / "output", ec);
  const std::string cmd = substitute_task_dir(task.command, task.task_dir);
  const std::string out_path = (task.task_dir / "stdout.txt").string();
  const std::string err_path = (task.task_dir / "stderr.txt").string();

  Stopwatch clock;
  const pid_t pid = fork();
  if (pid < 0) {
    rep.message = "fork failed";
    return rep;
  }
  if (pid == 0) {
    setpgid(0, 0);
    int devnull = open("/dev/null", O_RDONLY);
    int out = open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    int err = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (devnull >= 0) dup2(devnull, 0);
    if (out >= 0) dup2(out, 1);
    if (err >= 0) dup2(err, 2);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);

  int status = 0;
  auto pause = std::chrono::milliseconds(1);
  for (;;) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) {
      rep.message = "waitpid failed";
      return rep;
    }
    if (clock.elapsed().count() > task.timeout_seconds) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      rep.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::milliseconds(50));
  }
  rep.wall_seconds = clock.elapsed().count();
  rep.stderr_text = read_tail(err_path, 4096);
  if (rep.timed_out) {
    rep.message = "timed out after " + std::to_string(task.timeout_seconds) + " s";
    return rep;
  }
  if (WIFEXITED(status)) {
    rep.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    rep.message = "killed by signal " + std::to_string(WTERMSIG(status));
    return rep;
  }
  if (rep.exit_code != 0) {
    rep.message = "exit code " + std::to_string(rep.exit_code);
    return rep;
  }
  const auto expected =
      task.task_dir / "output" / (task.kind == TaskKind::impute ? "imputed.csv" : "scores.csv");
  if (!fs::is_regular_file(expected)) {
    rep.message = "command succeeded but " + expected.string() + " is missing";
    return rep;
  }
  rep.success = true;
  return rep;
}

TimeSeriesTensor import_result(const ExchangeTask& task, double tolerance) {
  auto input = load_tensor_files(task.task_dir / "input");
  const auto& in = input.tensor;
  TimeSeriesTensor out = in;
  out.values = read_dense_csv(task.task_dir / "output" / "imputed.csv", in.shape, in.feature_names);
  const auto& sh = in.shape;
  for (std::size_t s = 0; s < sh.samples; ++s)
    for (std::size_t t = 0; t < sh.steps; ++t)
      for (std::size_t f = 0; f < sh.features; ++f) {
        auto i = sh.index(s, t, f);
        if (!in.observed.bits[i]) continue;
        const double a = in.values[i];
        const double b = out.values[i];
        if (std::abs(b - a) > tolerance * std::max(1.0, std::abs(a)))
          throw ValidationError("imputed.csv changes observed input at (" + std::to_string(s) + "," +
                                std::to_string(t) + "," + std::to_string(f) + "): " +
                                csv::format_double(a) + " -> " + csv::format_double(b));
      }
  std::fill(out.observed.bits.begin(), out.observed.bits.end(), std::uint8_t{1});
  return out;
}

std::vector<double> import_scores(const ExchangeTask& task) {
  std::vector<std::int64_t> wanted;
  {
    csv::Reader r((task.task_dir / "input" / "predict.csv").string());
    std::string line;
    r.next_line(line);
    while (r.next_line(line)) {
      if (line.empty()) continue;
      auto id = csv::parse_int(line);
      if (!id) throw StructuralError("predict.csv: bad sample_id on line " + std::to_string(r.line_number()));
      wanted.push_back(*id);
    }
  }
  std::unordered_map<std::int64_t, double> got;
  csv::Reader r((task.task_dir / "output" / "scores.csv").string());
  std::string line;
  if (!r.next_line(line) || line != "sample_id,score")
    throw StructuralError("scores.csv: header must be sample_id,score");
  while (r.next_line(line)) {
    if (line.empty()) continue;
    auto f = csv::split(line);
    std::optional<long long> id;
    std::optional<double> v;
    if (f.size() == 2) {
      id = csv::parse_int(f[0]);
      v = csv::parse_double(f[1]);
    }
    if (!id || !v || !std::isfinite(*v))
      throw ValidationError("scores.csv line " + std::to_string(r.line_number()) + ": malformed row");
    got[*id] = *v;
  }
  std::vector<double> scores;
  scores.reserve(wanted.size());
  for (auto id : wanted) {
    auto it = got.find(id);
    if (it == got.end()) throw StructuralError("scores.csv lacks sample_id " + std::to_string(id));
    scores.push_back(it->second);
  }
  return scores;
}

}  // namespace maskbench
