// Exercises the installed CLI surface end to end via std::system. The binary
// path arrives in EMA_CLI (set by ctest); the suite is skipped without it.

#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ema/gradient_io.hpp"
#include "ema/rng.hpp"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return std::getenv("EMA_CLI"); }

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + cli_path() + "\" " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("ema_cli_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_small_config(const fs::path& p, int rounds = 2) {
  std::ofstream os(p);
  os << "[simulation]\nn_clients = 12\nrounds = " << rounds << "\nseed = 3\n\n"
     << "[dataset]\nkind = blobs\nn_classes = 3\ndim = 4\nn_samples = 600\n\n"
     << "[attack]\nkind = sign_flip\nfraction = 0\n\n"
     << "[rule]\nname = ema\n";
}

}  // namespace

TEST_CASE("cli: sweep emits the cross product in deterministic order") {
  if (!cli_path()) return;
  TempDir dir;
  write_small_config(dir.path / "c.ini", 2);
  const fs::path out = dir.path / "sweep.csv";
  REQUIRE(run("sweep --config " + (dir.path / "c.ini").string() +
              " --fractions 0,0.2 --seeds 1,2 --rules ema,mean --out " + out.string() +
              " > /dev/null") == 0);
  const std::string csv = slurp(out);
  // header + 2 fractions * 2 seeds * 2 rules * 2 rounds
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 16);
  // fraction-major order: first data row is fraction 0, ema, seed 1
  const auto first = csv.substr(csv.find('\n') + 1, csv.find('\n', csv.find('\n') + 1));
  CHECK(first.find("0,ema,sign_flip,0,1,") == 0);

  // determinism across re-runs, including with the worker pool capped to 1
  const fs::path out2 = dir.path / "sweep2.csv";
  const std::string capped = std::string("EMA_THREADS=1 \"") + cli_path() + "\" sweep --config " +
                             (dir.path / "c.ini").string() +
                             " --fractions 0,0.2 --seeds 1,2 --rules ema,mean --out " +
                             out2.string() + " > /dev/null";
  const int status = std::system(capped.c_str());
  REQUIRE((WIFEXITED(status) && WEXITSTATUS(status) == 0));
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("cli: pretest writes a both-tests report for a dumped round") {
  if (!cli_path()) return;
  TempDir dir;
  ema::Rng rng(5);
  std::vector<ema::ClientUpdate> updates;
  for (std::uint32_t i = 0; i < 50; ++i) {
    std::vector<double> v(100);
    for (auto& x : v) x = rng.normal(0.0, 1.0);
    updates.push_back({i, 0, ema::GradientVector::flat(std::move(v)), ""});
  }
  const fs::path dump = dir.path / "round.emag";
  ema::save_round_binary(dump, updates);

  const fs::path report = dir.path / "report.json";
  REQUIRE(run("pretest --dump " + dump.string() + " --alpha 0.05 --test both --out " +
              report.string() + " > /dev/null") == 0);
  const std::string json = slurp(report);
  CHECK(json.find("\"shapiro_wilk\"") != std::string::npos);
  CHECK(json.find("\"anderson_darling\"") != std::string::npos);
  CHECK(json.find("\"both\"") != std::string::npos);
}

TEST_CASE("cli: aggregate excludes a planted outlier and writes a loadable dump") {
  if (!cli_path()) return;
  TempDir dir;
  const fs::path dump = dir.path / "round.csv";
  {
    std::ofstream os(dump);
    os << "client_id,coord_0,coord_1\n";
    os << "0,1,10\n1,2,20\n2,3,30\n3,4,40\n4,1000000,1000000\n";
  }
  const fs::path out = dir.path / "global.emag";
  REQUIRE(run("aggregate --dump " + dump.string() + " --rule ema --out " + out.string() +
              " > /dev/null") == 0);
  const auto loaded = ema::load_round_binary(out);
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded[0].gradient.dim() == 2);
  CHECK(loaded[0].gradient.values[0] >= 1.0);
  CHECK(loaded[0].gradient.values[0] <= 4.0);
  CHECK(loaded[0].gradient.values[1] >= 10.0);
  CHECK(loaded[0].gradient.values[1] <= 40.0);
}

TEST_CASE("cli: heterogeneity prints the exact verdict sentences") {
  if (!cli_path()) return;
  TempDir dir;
  const fs::path losses = dir.path / "losses.csv";
  std::ofstream(losses) << "client_id,loss\n0,2.4\n1,1.4\n";
  const fs::path captured = dir.path / "stdout.txt";
  REQUIRE(run("heterogeneity --losses " + losses.string() + " --threshold 0.25 > " +
              captured.string()) == 0);
  const std::string text = slurp(captured);
  CHECK(text.find("The dataset is likely non-iid.\n") != std::string::npos);

  std::ofstream(losses, std::ios::trunc) << "client_id,loss\n0,2.0\n1,2.1\n";
  REQUIRE(run("heterogeneity --losses " + losses.string() + " --threshold 0.25 > " +
              captured.string()) == 0);
  CHECK(slurp(captured).find("The dataset is likely iid.\n") != std::string::npos);
}

TEST_CASE("cli: runtime simulation failures exit 3") {
  if (!cli_path()) return;
  TempDir dir;
  const fs::path config = dir.path / "c.ini";
  {
    std::ofstream os(config);
    os << "[simulation]\nn_clients = 4\nrounds = 1\n\n"
       << "[dataset]\nkind = blobs\nn_classes = 3\ndim = 4\nn_samples = 200\n\n"
       << "[rule]\nname = krum\nbyzantine_count_f = 5\n";  // needs n >= f + 3
  }
  CHECK(run("simulate --config " + config.string() + " --out " + (dir.path / "o").string() +
            " > /dev/null 2>&1") == 3);
}
