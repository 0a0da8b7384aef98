#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "asadg_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "\"" ASADG_CLI_PATH "\" " + args + " > \"" + (workdir() / "stdout.txt").string() +
                          "\" 2> \"" + (workdir() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = workdir() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage and config errors exit with 2") {
    CHECK(run("solve --config " + (workdir() / "missing.json").string() + " --input 0.5,0.5") == 2);
    CHECK(slurp(workdir() / "stderr.txt").find("missing.json") != std::string::npos);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("--mode sideways sample") == 2);
    const auto bad = write_config("bad.json", R"({"asadg":{"lambda":0.5}})");
    CHECK(run("--config " + bad.string() + " sample") == 2);
    const auto broken = write_config("broken.json", "{ not json");
    CHECK(run("--config " + broken.string() + " sample") == 2);
    CHECK(run("--out " + (workdir() / "x").string() + " solve --input 0.5") == 2);
  }

  TEST_CASE("zero source gives a zero solution") {
    const auto cfg = write_config("zero.json", R"({"solver":{"node_count":33},
      "low_dim":{"inputs":["a","gaussian_amplitude"],"box":[[-1,1],[-1,1]]}})");
    const auto out = workdir() / "zero";
    REQUIRE(run("--config " + cfg.string() + " --out " + out.string() + " solve --input 0,0") == 0);
    const auto rows = lines(out / "solution.csv");
    REQUIRE(rows.size() == 34);
    CHECK(rows[0] == "x,re,im");
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].substr(rows[i].find(',')) == ",0,0");
  }

  TEST_CASE("case-1 solve writes one row per node") {
    const auto out = workdir() / "solve";
    REQUIRE(run("--out " + out.string() + " solve --input 0.8,0.5") == 0);
    CHECK(lines(out / "solution.csv").size() == 130);
  }

  TEST_CASE("lhs sample of 500") {
    const auto out = workdir() / "lhs";
    REQUIRE(run("--out " + out.string() + " --seed 4 sample --method lhs --n 500") == 0);
    const auto rows = lines(out / "samples.csv");
    REQUIRE(rows.size() == 501);
    CHECK(rows[0] == "mach,x_m");
    CHECK(fs::exists(out / "samples.json"));
    CHECK_FALSE(fs::exists(out / "report.json"));
  }

  TEST_CASE("asadg sample outputs and report") {
    const auto cfg = write_config("four.json", R"({"solver":{"node_count":33},"asadg":{"max_points":4}})");
    const auto out = workdir() / "four";
    REQUIRE(run("--config " + cfg.string() + " --out " + out.string() + " sample") == 0);
    CHECK(lines(out / "samples.csv").size() == 5);
    CHECK(fs::exists(out / "mesh.obj"));

    const auto a = workdir() / "ada_a", b = workdir() / "ada_b";
    const auto small = write_config("small.json", R"({"solver":{"node_count":65}})");
    REQUIRE(run("--config " + small.string() + " --out " + a.string() + " sample") == 0);
    REQUIRE(run("--config " + small.string() + " --out " + b.string() + " sample") == 0);
    for (const char* f : {"samples.csv", "manifold.csv", "mesh.obj", "metric_series.csv"})
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);

    fs::remove(a / "metric_series.csv");
    REQUIRE(run("--out " + a.string() + " report") == 0);
    CHECK(slurp(a / "metric_series.csv") == slurp(b / "metric_series.csv"));
    CHECK(slurp(workdir() / "stdout.txt").find("stop reason") != std::string::npos);
    CHECK(run("--out " + (workdir() / "nothing").string() + " report") == 2);
  }

  TEST_CASE("benchmark writes both tables") {
    const auto cfg = write_config("bench.json", R"({"solver":{"node_count":33},
      "benchmark":{"train_size":10,"seeds":[3]},
      "network":{"hidden_sizes":[4],"epochs":3,"batch_size":5}})");
    const auto out = workdir() / "bench";
    REQUIRE(run("--config " + cfg.string() + " --out " + out.string() + " benchmark") == 0);
    CHECK(fs::exists(out / "table1.json"));
    CHECK(fs::exists(out / "table3.json"));
  }
}
