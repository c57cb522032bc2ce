#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "maskbench/dataset.hpp"
#include "maskbench/masking.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string("'") + MASKBENCH_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("generate, mask, run, report") {
  auto root = oracle::scratch("cli");
  auto data = root / "data";
  auto log = root / "log.txt";

  REQUIRE(run_cli("generate --out-dir '" + data.string() +
                      "' --samples 40 --steps 10 --features 3 --trajectory deterioration --prevalence 0.4 "
                      "--protocol-period 2 --seed 3",
                  log) == 0);
  auto ds = maskbench::load_dataset(data);
  CHECK(ds.tensor.shape == maskbench::Shape{40, 10, 3});
  CHECK(ds.manifest.seed_provenance == 3);
  CHECK(ds.tensor.observed.count() < ds.tensor.shape.cells());

  auto masks = root / "masks";
  REQUIRE(run_cli("mask --dataset '" + data.string() + "' --out-dir '" + masks.string() +
                      "' --pattern block --block 2 1 --rate 0.1 --seed 4",
                  log) == 0);
  auto m = maskbench::read_maskset(masks, ds.tensor.shape);
  CHECK(m.spec.pattern == maskbench::MaskPattern::block);
  CHECK(m.artificial.count() > 0);
  for (std::size_t i = 0; i < m.artificial.bits.size(); ++i)
    if (m.artificial.bits[i]) CHECK(ds.tensor.observed.bits[i] == 1);

  auto cfg = root / "exp.toml";
  write_text(cfg, "[dataset]\npath = \"data\"\n\n[grid]\nstrategies = [\"augmentation\", \"overlay\"]\n"
                  "imputers = [\"mean\", \"locf\"]\nseeds = [0, 1]\nk_folds = 2\n");
  auto out = root / "out";
  REQUIRE(run_cli("run --config '" + cfg.string() + "' --out-dir '" + out.string() + "' --downstream --jobs 2", log) == 0);
  auto stdout_text = slurp(log);
  CHECK(stdout_text.find("| Method |") != std::string::npos);
  CHECK(stdout_text.find("Overlay Pre-Mask NBM") != std::string::npos);
  for (auto f : {"report.csv", "report.md", "timings.csv", "grid.json", "config.toml"}) CHECK(fs::is_regular_file(out / f));
  auto csv_before = slurp(out / "report.csv");
  fs::remove(out / "report.csv");
  CHECK(run_cli("report --out-dir '" + out.string() + "' --format csv", log) == 0);
  CHECK(slurp(out / "report.csv") == csv_before);

  // A failing external imputer makes the run partial.
  write_text(cfg, "[dataset]\npath = \"data\"\n\n[grid]\nimputers = [\"mean\", \"bad\"]\nk_folds = 2\n"
                  "\n[imputer.bad]\ncommand = \"exit 9 # {task_dir}\"\n");
  CHECK(run_cli("run --config '" + cfg.string() + "' --out-dir '" + (root / "out2").string() + "'", log) == 2);
  CHECK(slurp(root / "out2" / "report.md").find("exit code 9") != std::string::npos);
}

TEST_CASE("fatal errors exit with 1") {
  auto root = oracle::scratch("cli-fatal");
  auto log = root / "log.txt";
  CHECK(run_cli("run --out-dir x", log) == 1);
  CHECK(run_cli("mask --dataset '" + (root / "nope").string() + "' --out-dir '" + (root / "m").string() + "'", log) == 1);
  CHECK(slurp(log).find("maskbench:") != std::string::npos);
  auto cfg = root / "bad.toml";
  write_text(cfg, "[cohort]\nn_samples = 10\nbogus = 1\n");
  CHECK(run_cli("run --config '" + cfg.string() + "' --out-dir '" + (root / "o").string() + "'", log) == 1);
  CHECK(slurp(log).find("line 3") != std::string::npos);
  CHECK(run_cli("report --out-dir '" + (root / "empty").string() + "'", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
}
