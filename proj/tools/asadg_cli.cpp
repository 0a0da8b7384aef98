// asadg: solve, sample, benchmark and report from a JSON experiment config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asadg/error.hpp"
#include "asadg/harness.hpp"
#include "asadg/log.hpp"
#include "asadg/rng.hpp"

namespace fs = std::filesystem;
using namespace asadg;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  bool verbose = false;

  std::vector<double> input;
  std::string method;
  std::optional<std::size_t> n;
  std::string report_path;
};

harness::ExperimentConfig load_config(const Options& o) {
  try {
    auto cfg = o.config_path.empty() ? harness::ExperimentConfig{} : harness::ExperimentConfig::load(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.mode.empty()) cfg.mode = harness::mode_from_string(o.mode);
    if (!o.method.empty()) cfg.sampler.method = sampling::method_from_string(std::string(o.method));
    if (o.n) cfg.sampler.n = *o.n;
    cfg.high.grid.node_count = cfg.solver.node_count;
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

fs::path prepare_output(const harness::ExperimentConfig& cfg) {
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  std::ofstream out(dir / "config.json");
  out << cfg.to_json().dump(2) << '\n';
  return dir;
}

int cmd_solve(const Options& o) {
  const auto cfg = load_config(o);
  harness::Problem problem(cfg);
  std::vector<double> input;
  try {
    input = problem.input_of(o.input);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto dir = prepare_output(cfg);
  auto ctx = problem.make_context();
  const auto solved = ctx.solve(input);
  harness::write_solution(solved.output, problem.grid(), dir / "solution.csv");
  log::info("residual " + std::to_string(solved.residual));
  std::cout << (dir / "solution.csv").string() << '\n';
  return 0;
}

int cmd_sample(const Options& o) {
  const auto cfg = load_config(o);
  harness::Problem problem(cfg);
  const auto dir = prepare_output(cfg);
  const auto method = cfg.sampler.method;
  const auto run = harness::run_sampler(problem, method, cfg.sampler.n,
                                        derive_seed(cfg.seed, harness::kSamplerSeedOffset), cfg.asadg);
  harness::write_samples(run, problem, dir);
  if (run.report) {
    harness::write_asadg_outputs(run, problem, dir);
    std::cout << run.samples.size() << " points, stop: " << run.report->stop_reason << '\n';
    if (!run.report->complete) {
      std::cerr << "asadg: run incomplete: " << run.report->error << '\n';
      return kRuntimeFailure;
    }
  } else {
    std::cout << run.samples.size() << " points\n";
  }
  return 0;
}

int cmd_benchmark(const Options& o) {
  const auto cfg = load_config(o);
  const auto dir = prepare_output(cfg);
  const auto result = harness::run_benchmark(cfg);
  std::ofstream(dir / "table1.json") << result.table1.dump(2) << '\n';
  std::ofstream(dir / "table3.json") << result.table3.dump(2) << '\n';
  for (const auto& s : result.table3["summary"])
    std::cout << s["sampler"].get<std::string>() << ": mean MNRE " << s["mean_mnre"].dump() << ", wins "
              << s["wins"].get<std::size_t>() << '\n';
  if (!result.complete) {
    std::cerr << "asadg: benchmark incomplete, see table3.json\n";
    return kRuntimeFailure;
  }
  return 0;
}

int cmd_report(const Options& o) {
  fs::path path = o.report_path;
  if (path.empty()) path = fs::path(load_config(o).output_dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open report " + path.string());
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
  harness::write_metric_series(report, path.parent_path() / "metric_series.csv");
  const auto& timing = report.at("timing");
  std::cout << "points          " << report.at("initial_points") << " -> " << report.at("final_points") << '\n'
            << "iterations      " << report.at("iterations").size() << '\n'
            << "stop reason     " << report.at("stop_reason").get<std::string>() << '\n'
            << "solver calls    " << report.at("solver_calls") << " (" << timing.at("solver_seconds") << " s)\n"
            << "residual calls  " << report.at("residual_calls") << " (" << timing.at("residual_seconds") << " s)\n";
  for (const auto& it : report.at("iterations"))
    std::cout << "  k=" << it.at("iteration") << " points=" << it.at("points") << " metric=" << it.at("metric_mean")
              << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive sampling for parametric transport problems"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "Experiment config (JSON)");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--mode", o.mode, "Input mode")->check(CLI::IsMember({"low", "high", "low-dim", "high-dim"}));
  app.add_flag("-v,--verbose", o.verbose, "Progress messages on standard error");

  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("--input", o.input, "Input values, comma separated")->delimiter(',')->required();
  auto* sample = app.add_subcommand("sample", "Generate a training set");
  sample->add_option("--method", o.method, "Sampler override")
      ->check(CLI::IsMember({"corners", "lhs", "uniform", "cartesian", "asadg"}));
  sample->add_option("--n", o.n, "Sample count override");
  auto* bench = app.add_subcommand("benchmark", "Compare samplers by surrogate precision");
  auto* report = app.add_subcommand("report", "Summarize an adaptive-sampling report");
  report->add_option("--report", o.report_path, "Path to report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  log::set_level(o.verbose ? log::Level::info : log::Level::warn);

  try {
    if (*solve) return cmd_solve(o);
    if (*sample) return cmd_sample(o);
    if (*bench) return cmd_benchmark(o);
    if (*report) return cmd_report(o);
  } catch (const UsageError& e) {
    std::cerr << "asadg: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "asadg: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
