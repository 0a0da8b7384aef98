#include "asadg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "asadg/error.hpp"
#include "asadg/log.hpp"
#include "asadg/rng.hpp"
#include "csv_format.hpp"

namespace asadg::harness {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(Errc::format_error, section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(Errc::format_error, "unknown key '" + key + "' in " + section);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// npos and infinity are written as null.
void read_count(const json& j, const char* key, std::size_t& out) {
  if (!j.contains(key)) return;
  out = j.at(key).is_null() ? npos : j.at(key).get<std::size_t>();
}

void read_limit(const json& j, const char* key, double& out) {
  if (!j.contains(key)) return;
  out = j.at(key).is_null() ? std::numeric_limits<double>::infinity() : j.at(key).get<double>();
}

ojson count_or_null(std::size_t n) { return n == npos ? ojson(nullptr) : ojson(n); }
ojson limit_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }
ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(Errc::invalid_argument, message);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  return out;
}

void write_json(const ojson& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

std::size_t test_count(const BenchmarkSettings& b) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(b.test_fraction * double(b.train_size))));
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::low ? "low" : "high"; }

Mode mode_from_string(const std::string& s) {
  if (s == "low" || s == "low-dim") return Mode::low;
  if (s == "high" || s == "high-dim") return Mode::high;
  throw Error(Errc::invalid_argument, "unknown mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// ExperimentConfig

void ExperimentConfig::validate() const {
  require(solver.node_count >= 2, "solver.node_count must be at least 2");
  require(std::isfinite(solver.wave_number), "solver.wave_number must be finite");
  require(solver.tolerance > 0.0 && std::isfinite(solver.tolerance), "solver.tolerance must be positive");

  if (mode == Mode::low) {
    require(low.setup.inputs[0] != low.setup.inputs[1], "low_dim.inputs must be distinct");
    require(low.box.size() == 2, "low_dim.box needs one interval per input");
    sampling::BoundingBox box(low.box);
    for (std::size_t i = 0; i < 2; ++i) {
      if (low.setup.inputs[i] == problems::Case1Input::mach)
        require(box.lo(i) > 0.0 || box.hi(i) < 0.0, "mach range must exclude zero");
      if (low.setup.inputs[i] == problems::Case1Input::sigma)
        require(box.lo(i) > 0.0, "sigma range must be positive");
    }
    require(low.setup.mach != 0.0 && std::isfinite(low.setup.mach), "low_dim.mach must be finite and non-zero");
  } else {
    high.grid.validate();
    if (high.projector == reduced::ProjectorKind::imported) {
      require(!high.embedding_path.empty(), "high_dim.embedding_path is required for an imported projector");
      if (!std::filesystem::exists(high.embedding_path))
        throw Error(Errc::io_failure, "embedding file not found: " + high.embedding_path);
    }
  }

  const bool counted = sampler.method != sampling::Method::asadg && sampler.method != sampling::Method::corners;
  require(!counted || sampler.n > 0, "sampler.n must be positive");

  require(asadg.rho0 > 0.0 && std::isfinite(asadg.rho0), "asadg.rho0 must be positive");
  require(asadg.lambda > 1.0 && std::isfinite(asadg.lambda), "asadg.lambda must exceed 1");
  require(asadg.dedup_tolerance >= 0.0, "asadg.dedup_tolerance must be non-negative");
  require(asadg.max_accept_per_iteration > 0, "asadg.max_accept_per_iteration must be positive");
  asadg.stop.validate();

  require(!benchmark.samplers.empty(), "benchmark.samplers must not be empty");
  for (auto m : benchmark.samplers)
    require(m != sampling::Method::corners, "corners cannot be benchmarked at a fixed budget");
  require(benchmark.train_size >= 3, "benchmark.train_size must be at least 3");
  require(benchmark.test_fraction > 0.0 && benchmark.test_fraction <= 1.0, "benchmark.test_fraction must be in (0, 1]");
  require(!benchmark.seeds.empty(), "benchmark.seeds must not be empty");

  surrogate::MlpConfig net;
  net.hidden_sizes = network.hidden_sizes;
  net.learning_rate = network.learning_rate;
  net.epochs = network.epochs;
  net.batch_size = network.batch_size;
  net.validate();
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  ojson j;
  j["mode"] = to_string(mode);
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["solver"] = {{"node_count", solver.node_count},
                 {"wave_number", solver.wave_number},
                 {"tolerance", solver.tolerance},
                 {"residual_norm", transport::to_string(solver.norm)}};

  const auto& src = low.setup.source;
  j["low_dim"] = {{"inputs", {problems::to_string(low.setup.inputs[0]), problems::to_string(low.setup.inputs[1])}},
                  {"box", low.box},
                  {"mach", low.setup.mach},
                  {"source",
                   {{"a", src.a},
                    {"alpha", src.alpha},
                    {"sigma", src.sigma},
                    {"x_m", src.x_m},
                    {"gaussian_amplitude", src.gaussian_amplitude}}}};

  ojson grid = high.grid.to_json();
  grid.erase("node_count");
  j["high_dim"] = {{"grid", grid},
                   {"projector", reduced::to_string(high.projector)},
                   {"embedding_path", high.embedding_path}};

  j["sampler"] = {{"method", std::string(sampling::to_string(sampler.method))}, {"n", sampler.n}};

  j["asadg"] = {{"rho0", asadg.rho0},
                {"lambda", asadg.lambda},
                {"max_iterations", count_or_null(asadg.stop.max_iterations)},
                {"max_points", count_or_null(asadg.stop.max_points)},
                {"time_limit_seconds", limit_or_null(asadg.stop.time_limit_seconds)},
                {"metric_floor", asadg.stop.metric_floor},
                {"stability_window", asadg.stop.stability_window},
                {"stability_tolerance", asadg.stop.stability_tolerance},
                {"max_accept_per_iteration", count_or_null(asadg.max_accept_per_iteration)},
                {"dedup_tolerance", asadg.dedup_tolerance}};

  std::vector<std::string> names;
  for (auto m : benchmark.samplers) names.emplace_back(sampling::to_string(m));
  j["benchmark"] = {{"samplers", names},
                    {"train_size", benchmark.train_size},
                    {"test_fraction", benchmark.test_fraction},
                    {"seeds", benchmark.seeds}};

  j["network"] = {{"hidden_sizes", network.hidden_sizes},
                  {"learning_rate", network.learning_rate},
                  {"epochs", network.epochs},
                  {"batch_size", network.batch_size}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    check_keys(j, "config",
               {"mode", "seed", "output_dir", "solver", "low_dim", "high_dim", "sampler", "asadg", "benchmark", "network"});
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      check_keys(s, "solver", {"node_count", "wave_number", "tolerance", "residual_norm"});
      read(s, "node_count", c.solver.node_count);
      read(s, "wave_number", c.solver.wave_number);
      read(s, "tolerance", c.solver.tolerance);
      if (s.contains("residual_norm"))
        c.solver.norm = transport::residual_norm_from_string(s.at("residual_norm").get<std::string>());
    }

    if (j.contains("low_dim")) {
      const auto& l = j.at("low_dim");
      check_keys(l, "low_dim", {"inputs", "box", "mach", "source"});
      if (l.contains("inputs")) {
        const auto names = l.at("inputs").get<std::vector<std::string>>();
        if (names.size() != 2) throw Error(Errc::format_error, "low_dim.inputs must name two quantities");
        for (std::size_t i = 0; i < 2; ++i) c.low.setup.inputs[i] = problems::case1_input_from_string(names[i]);
      }
      read(l, "box", c.low.box);
      read(l, "mach", c.low.setup.mach);
      if (l.contains("source")) {
        const auto& s = l.at("source");
        check_keys(s, "low_dim.source", {"a", "alpha", "sigma", "x_m", "gaussian_amplitude"});
        auto& src = c.low.setup.source;
        read(s, "a", src.a);
        read(s, "alpha", src.alpha);
        read(s, "sigma", src.sigma);
        read(s, "x_m", src.x_m);
        read(s, "gaussian_amplitude", src.gaussian_amplitude);
      }
    }

    if (j.contains("high_dim")) {
      const auto& h = j.at("high_dim");
      check_keys(h, "high_dim", {"grid", "projector", "embedding_path"});
      if (h.contains("grid")) {
        check_keys(h.at("grid"), "high_dim.grid", {"degree", "levels", "varied", "ranges"});
        c.high.grid = case2::GridSpec::from_json(h.at("grid"));
      }
      if (h.contains("projector"))
        c.high.projector = reduced::projector_kind_from_string(h.at("projector").get<std::string>());
      read(h, "embedding_path", c.high.embedding_path);
    }

    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      check_keys(s, "sampler", {"method", "n"});
      if (s.contains("method")) c.sampler.method = sampling::method_from_string(s.at("method").get<std::string>());
      read(s, "n", c.sampler.n);
    }

    if (j.contains("asadg")) {
      const auto& a = j.at("asadg");
      check_keys(a, "asadg",
                 {"rho0", "lambda", "max_iterations", "max_points", "time_limit_seconds", "metric_floor",
                  "stability_window", "stability_tolerance", "max_accept_per_iteration", "dedup_tolerance"});
      read(a, "rho0", c.asadg.rho0);
      read(a, "lambda", c.asadg.lambda);
      read_count(a, "max_iterations", c.asadg.stop.max_iterations);
      read_count(a, "max_points", c.asadg.stop.max_points);
      read_limit(a, "time_limit_seconds", c.asadg.stop.time_limit_seconds);
      read(a, "metric_floor", c.asadg.stop.metric_floor);
      read(a, "stability_window", c.asadg.stop.stability_window);
      read(a, "stability_tolerance", c.asadg.stop.stability_tolerance);
      read_count(a, "max_accept_per_iteration", c.asadg.max_accept_per_iteration);
      read(a, "dedup_tolerance", c.asadg.dedup_tolerance);
    }

    if (j.contains("benchmark")) {
      const auto& b = j.at("benchmark");
      check_keys(b, "benchmark", {"samplers", "train_size", "test_fraction", "seeds"});
      if (b.contains("samplers")) {
        c.benchmark.samplers.clear();
        for (const auto& n : b.at("samplers").get<std::vector<std::string>>())
          c.benchmark.samplers.push_back(sampling::method_from_string(n));
      }
      read(b, "train_size", c.benchmark.train_size);
      read(b, "test_fraction", c.benchmark.test_fraction);
      read(b, "seeds", c.benchmark.seeds);
    }

    if (j.contains("network")) {
      const auto& n = j.at("network");
      check_keys(n, "network", {"hidden_sizes", "learning_rate", "epochs", "batch_size"});
      read(n, "hidden_sizes", c.network.hidden_sizes);
      read(n, "learning_rate", c.network.learning_rate);
      read(n, "epochs", c.network.epochs);
      read(n, "batch_size", c.network.batch_size);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::format_error) throw;
    throw Error(Errc::format_error, e.what());
  }
  c.high.grid.node_count = c.solver.node_count;
  c.low.setup.wave_number = c.solver.wave_number;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(const ExperimentConfig& config) : config_(config), grid_(config.solver.node_count) {
  config_.high.grid.node_count = config_.solver.node_count;
  config_.low.setup.wave_number = config_.solver.wave_number;
  config_.validate();
}

sampling::BoundingBox Problem::sample_box() const {
  return config_.mode == Mode::low ? sampling::BoundingBox(config_.low.box) : config_.high.grid.varied_box();
}

std::vector<std::string> Problem::sample_columns() const {
  std::vector<std::string> names;
  if (config_.mode == Mode::low) {
    for (auto in : config_.low.setup.inputs) names.emplace_back(problems::to_string(in));
  } else {
    const auto& spec = config_.high.grid;
    for (const auto& c : spec.varied) names.push_back(spec.column_name(spec.slot(c)));
  }
  return names;
}

std::vector<double> Problem::input_of(std::span<const double> sample) const {
  const auto box = sample_box();
  if (sample.size() != box.dim())
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(box.dim()) + " input values, got " +
                                              std::to_string(sample.size()));
  if (config_.mode == Mode::low) return {sample.begin(), sample.end()};
  const auto& spec = config_.high.grid;
  return spec.expand(spec.coefficients_from_varied(sample));
}

std::size_t Problem::input_dim() const {
  return config_.mode == Mode::low ? 2 : config_.high.grid.input_dim();
}

SolverContext Problem::make_context() const {
  auto map = config_.mode == Mode::low ? problems::case1_param_map(config_.low.setup)
                                       : problems::case2_param_map(config_.solver.wave_number);
  return SolverContext(grid_, std::move(map), config_.solver.tolerance, config_.solver.norm);
}

const WorkingSpace& Problem::working_space() {
  if (space_) return *space_;
  if (config_.mode == Mode::low) {
    space_ = std::make_unique<PlaneSpace>(sample_box());
    return *space_;
  }
  coefficient_grid_ = std::make_unique<case2::CoefficientGrid>(case2::build_grid(config_.high.grid));
  Eigen::MatrixXd inputs = coefficient_grid_->nodal_inputs();
  const double h = coefficient_grid_->spacing();
  if (config_.high.projector == reduced::ProjectorKind::imported) {
    embedding_ = std::make_shared<reduced::GridEmbedding>(
        reduced::fit_imported(std::move(inputs), h, config_.high.embedding_path));
  } else {
    reduced::LinearProjectorOptions opts;
    opts.seed = derive_seed(config_.seed, kProjectorSeedOffset);
    embedding_ = std::make_shared<reduced::GridEmbedding>(reduced::fit_linear(std::move(inputs), h, opts));
  }
  log::info("embedded " + std::to_string(embedding_->size()) + " grid inputs, " +
            std::to_string(embedding_->perturbed().size()) + " perturbed");
  space_ = std::make_unique<reduced::ReducedSpace>(embedding_);
  return *space_;
}

std::vector<double> Problem::sample_of(const ManifoldPoint& p) const {
  if (config_.mode == Mode::low) return p.input;
  if (!coefficient_grid_ || p.grid_index >= coefficient_grid_->size())
    throw Error(Errc::index_out_of_range, "manifold point has no grid index");
  const auto& spec = config_.high.grid;
  const auto& coeffs = coefficient_grid_->coefficients[p.grid_index];
  std::vector<double> out;
  for (const auto& c : spec.varied) out.push_back(coeffs[spec.slot(c)]);
  return out;
}

// ---------------------------------------------------------------------------
// Sampler runs

SampleRun run_sampler(Problem& problem, sampling::Method method, std::size_t n, std::uint64_t seed,
                      const AsadgSettings& settings) {
  SampleRun run;
  run.method = method;
  run.seed = seed;
  SolverContext ctx = problem.make_context();

  if (method == sampling::Method::asadg) {
    const WorkingSpace& space = problem.working_space();
    AdaptiveSampler sampler(space, ctx, settings);
    run.report = sampler.run();
    run.manifold = sampler.points();
    for (const auto& p : run.manifold) {
      run.samples.push_back(problem.sample_of(p));
      run.inputs.push_back(p.input);
      run.outputs.push_back(p.output);
    }
    try {
      run.mesh = sampler.triangulation();
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_input) throw;
    }
    run.counters = ctx.counters();
    return run;
  }

  const auto box = problem.sample_box();
  sampling::SampleSet set;
  switch (method) {
    case sampling::Method::corners: set = sampling::corners(box); break;
    case sampling::Method::lhs: set = sampling::lhs(n, box, seed); break;
    case sampling::Method::uniform: set = sampling::uniform(n, box, seed); break;
    case sampling::Method::cartesian: {
      // Largest equal level count whose tensor product fits in n.
      std::size_t levels = 1;
      auto fits = [&](std::size_t l) {
        std::size_t total = 1;
        for (std::size_t d = 0; d < box.dim(); ++d) {
          if (total > n / l) return false;
          total *= l;
        }
        return true;
      };
      while (fits(levels + 1)) ++levels;
      std::vector<std::size_t> counts(box.dim(), levels);
      set = sampling::cartesian(counts, box, n);
      break;
    }
    case sampling::Method::asadg: break;
  }
  for (auto& s : set.points) {
    auto input = problem.input_of(s);
    run.outputs.push_back(ctx.solve(input).output);
    run.inputs.push_back(std::move(input));
    run.samples.push_back(std::move(s));
  }
  run.counters = ctx.counters();
  return run;
}

void write_samples(const SampleRun& run, const Problem& problem, const std::filesystem::path& dir) {
  sampling::SampleSet set{run.samples, run.seed, run.method};
  const auto names = problem.sample_columns();
  sampling::write_csv(set, problem.sample_box(), names, dir / "samples.csv");
}

void write_solution(const transport::SolutionVector& y, const transport::SpatialGrid& grid,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "x,re,im\n";
  for (std::size_t j = 0; j < grid.node_count(); ++j) {
    const auto z = y.at(j);
    out << detail::format_double(grid[j]) << ',' << detail::format_double(z.real()) << ','
        << detail::format_double(z.imag()) << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

void write_metric_series(const nlohmann::json& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iteration,points,candidates,accepted,rejected,threshold,metric_mean\n";
  try {
    for (const auto& it : report.at("iterations")) {
      const auto& m = it.at("metric_mean");
      out << it.at("iteration").get<std::size_t>() << ',' << it.at("points").get<std::size_t>() << ','
          << it.at("candidates").get<std::size_t>() << ',' << it.at("accepted").get<std::size_t>() << ','
          << it.at("rejected").get<std::size_t>() << ',' << detail::format_double(it.at("threshold").get<double>())
          << ',' << (m.is_null() ? std::string("nan") : detail::format_double(m.get<double>())) << '\n';
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("report: ") + e.what());
  }
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

void write_asadg_outputs(const SampleRun& run, const Problem& problem, const std::filesystem::path& dir) {
  if (!run.report) throw Error(Errc::invalid_argument, "run has no adaptive-sampling report");

  ojson report;
  report["mode"] = to_string(problem.mode());
  report["node_count"] = problem.grid().node_count();
  report["residual_norm"] = transport::to_string(problem.config().solver.norm);
  if (const auto* e = problem.embedding()) {
    report["projector"] = reduced::to_string(e->kind());
    report["grid_size"] = e->size();
    report["perturbed"] = e->perturbed().size();
  }
  const auto body = run.report->to_json();
  for (const auto& [key, value] : body.items()) report[key] = value;
  write_json(report, dir / "report.json");
  write_metric_series(report, dir / "metric_series.csv");

  const auto names = problem.sample_columns();
  auto out = open_out(dir / "manifold.csv");
  out << "index,u,v";
  for (const auto& n : names) out << ',' << n;
  out << ",nu,residual,grid_index\n";
  for (std::size_t i = 0; i < run.manifold.size(); ++i) {
    const auto& p = run.manifold[i];
    out << i << ',' << detail::format_double(p.working.x) << ',' << detail::format_double(p.working.y);
    for (double s : run.samples[i]) out << ',' << detail::format_double(s);
    out << ',' << detail::format_double(reduced::nu(p.output)) << ','
        << detail::format_double(p.residual_at_creation) << ',';
    if (p.grid_index != npos) out << p.grid_index;
    out << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed for manifold.csv");

  if (run.mesh) {
    std::vector<double> heights;
    heights.reserve(run.mesh->vertices.size());
    for (std::size_t src : run.mesh->payload) heights.push_back(reduced::nu(run.manifold[src].output));
    geometry::export_surface(*run.mesh, heights, dir / "mesh.obj");
  }
  if (const auto* e = problem.embedding()) e->write_embedding(dir / "embedding.csv");
}

// ---------------------------------------------------------------------------
// Benchmark

namespace {

struct ArmOutcome {
  sampling::Method method = sampling::Method::uniform;
  bool complete = true;
  std::string error;
  std::string stop_reason;
  std::size_t train_points = 0;
  SolverContext::Counters counters;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::optional<surrogate::MnreReport> mnre;
};

Eigen::MatrixXd columns(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(Eigen::Index(rows.front().size()), Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.col(Eigen::Index(i)) = Eigen::Map<const Eigen::VectorXd>(rows[i].data(), Eigen::Index(rows[i].size()));
  return m;
}

ArmOutcome run_arm(Problem& problem, sampling::Method method, std::uint64_t seed, const Eigen::MatrixXd& test_in,
                   const Eigen::MatrixXd& test_out) {
  const auto& cfg = problem.config();
  ArmOutcome arm;
  arm.method = method;
  try {
    AsadgSettings settings = cfg.asadg;
    settings.stop.max_points = cfg.benchmark.train_size;
    settings.stop.max_iterations = npos;
    auto run = run_sampler(problem, method, cfg.benchmark.train_size, derive_seed(seed, kSamplerSeedOffset), settings);
    arm.counters = run.counters;
    arm.train_points = run.samples.size();
    if (run.report) {
      arm.stop_reason = run.report->stop_reason;
      if (!run.report->complete) {
        arm.complete = false;
        arm.error = run.report->error;
      }
    }
    if (arm.train_points < cfg.benchmark.train_size) arm.complete = false;
    if (arm.train_points == 0) throw Error(Errc::invalid_argument, "sampler produced no training data");

    std::vector<std::vector<double>> outputs;
    outputs.reserve(run.outputs.size());
    for (auto& y : run.outputs) outputs.push_back(std::move(y.values));
    auto data = surrogate::Dataset::from_rows(run.inputs, outputs);

    surrogate::MlpConfig net;
    net.input_dim = problem.input_dim();
    net.output_dim = problem.output_dim();
    net.hidden_sizes = cfg.network.hidden_sizes;
    net.learning_rate = cfg.network.learning_rate;
    net.epochs = cfg.network.epochs;
    net.batch_size = std::min(cfg.network.batch_size, data.size());
    net.seed = derive_seed(seed, kNetworkSeedOffset);
    auto trained = surrogate::train(data, net);
    arm.final_loss = trained.loss_trace.back();
    arm.mnre = surrogate::mnre(trained.model.predict(test_in), test_out);
  } catch (const Error& e) {
    arm.complete = false;
    arm.error = e.what();
    log::warn(std::string(sampling::to_string(method)) + " arm failed: " + e.what());
  }
  return arm;
}

ojson counts_json(const ArmOutcome& a) {
  return {{"sampler", std::string(sampling::to_string(a.method))},
          {"train_points", a.train_points},
          {"solver_calls", a.counters.solver_calls},
          {"residual_calls", a.counters.residual_calls}};
}

ojson timing_json(const std::string& sampler, const SolverContext::Counters& c) {
  auto avg = [](double s, std::size_t n) { return n ? ojson(s / double(n)) : ojson(nullptr); };
  return {{"sampler", sampler},
          {"solver_seconds", c.solver_seconds},
          {"residual_seconds", c.residual_seconds},
          {"total_seconds", c.solver_seconds + c.residual_seconds},
          {"avg_solver_seconds", avg(c.solver_seconds, c.solver_calls)},
          {"avg_residual_seconds", avg(c.residual_seconds, c.residual_calls)}};
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  Problem problem(config);
  const auto& bench = config.benchmark;
  const std::size_t n_test = test_count(bench);
  const std::size_t n_arms = bench.samplers.size();

  BenchmarkResult result;
  ojson t3_seeds = ojson::array(), t1_counts = ojson::array(), t1_timing = ojson::array();
  std::vector<SolverContext::Counters> totals(n_arms);
  std::vector<double> mnre_sum(n_arms, 0.0), std_sum(n_arms, 0.0);
  std::vector<std::size_t> wins(n_arms, 0), scored(n_arms, 0);
  SolverContext::Counters test_counters;

  for (std::uint64_t seed : bench.seeds) {
    log::info("benchmark seed " + std::to_string(seed));
    // Shared test set, solved once per seed and charged to neither arm.
    SolverContext test_ctx = problem.make_context();
    const auto test_set = sampling::uniform(n_test, problem.sample_box(), derive_seed(seed, kTestSeedOffset));
    std::vector<std::vector<double>> test_inputs, test_outputs;
    for (const auto& s : test_set.points) {
      test_inputs.push_back(problem.input_of(s));
      test_outputs.push_back(test_ctx.solve(test_inputs.back()).output.values);
    }
    const auto& tc = test_ctx.counters();
    test_counters.solver_calls += tc.solver_calls;
    test_counters.solver_seconds += tc.solver_seconds;
    const Eigen::MatrixXd test_in = columns(test_inputs), test_out = columns(test_outputs);

    std::vector<ArmOutcome> arms;
    for (auto method : bench.samplers) arms.push_back(run_arm(problem, method, seed, test_in, test_out));

    ojson arms3 = ojson::array(), arms_c = ojson::array(), arms_t = ojson::array();
    std::optional<std::size_t> best;
    bool tie = false;
    for (std::size_t a = 0; a < n_arms; ++a) {
      const auto& arm = arms[a];
      result.complete = result.complete && arm.complete;
      ojson entry = {{"arm", a},
                     {"sampler", std::string(sampling::to_string(arm.method))},
                     {"train_points", arm.train_points},
                     {"complete", arm.complete}};
      if (!arm.stop_reason.empty()) entry["stop_reason"] = arm.stop_reason;
      if (!arm.error.empty()) entry["error"] = arm.error;
      if (arm.mnre) {
        entry["mnre"] = arm.mnre->mnre;
        entry["std"] = arm.mnre->std;
        entry["final_loss"] = number_or_null(arm.final_loss);
        entry["excluded_components"] = arm.mnre->excluded_components.size();
        mnre_sum[a] += arm.mnre->mnre;
        std_sum[a] += arm.mnre->std;
        ++scored[a];
        if (!best || arm.mnre->mnre < arms[*best].mnre->mnre) {
          best = a;
          tie = false;
        } else if (arm.mnre->mnre == arms[*best].mnre->mnre) {
          tie = true;
        }
      }
      arms3.push_back(entry);
      arms_c.push_back(counts_json(arm));
      arms_t.push_back(timing_json(std::string(sampling::to_string(arm.method)), arm.counters));
      auto& t = totals[a];
      t.solver_calls += arm.counters.solver_calls;
      t.residual_calls += arm.counters.residual_calls;
      t.solver_seconds += arm.counters.solver_seconds;
      t.residual_seconds += arm.counters.residual_seconds;
    }
    ojson winner = nullptr;
    if (best && !tie) {
      winner = {{"arm", *best}, {"sampler", std::string(sampling::to_string(arms[*best].method))}};
      ++wins[*best];
    }
    t3_seeds.push_back({{"seed", seed}, {"arms", arms3}, {"winner", winner}, {"tie", best.has_value() && tie}});
    t1_counts.push_back({{"seed", seed}, {"arms", arms_c}});
    t1_timing.push_back({{"seed", seed}, {"arms", arms_t}});
  }

  ojson summary = ojson::array(), count_totals = ojson::array(), timing_totals = ojson::array();
  for (std::size_t a = 0; a < n_arms; ++a) {
    const std::string name(sampling::to_string(bench.samplers[a]));
    summary.push_back({{"arm", a},
                       {"sampler", name},
                       {"mean_mnre", scored[a] ? ojson(mnre_sum[a] / double(scored[a])) : ojson(nullptr)},
                       {"mean_std", scored[a] ? ojson(std_sum[a] / double(scored[a])) : ojson(nullptr)},
                       {"wins", wins[a]}});
    count_totals.push_back({{"arm", a},
                            {"sampler", name},
                            {"solver_calls", totals[a].solver_calls},
                            {"residual_calls", totals[a].residual_calls}});
    auto t = timing_json(name, totals[a]);
    t["arm"] = a;
    timing_totals.push_back(t);
  }

  ojson net = {{"hidden_sizes", config.network.hidden_sizes},
               {"learning_rate", config.network.learning_rate},
               {"epochs", config.network.epochs},
               {"batch_size", config.network.batch_size}};

  auto& t3 = result.table3;
  t3["mode"] = to_string(config.mode);
  t3["node_count"] = config.solver.node_count;
  t3["train_size"] = bench.train_size;
  t3["test_size"] = n_test;
  t3["epsilon"] = surrogate::MnreReport{}.epsilon;
  t3["network"] = net;
  t3["complete"] = result.complete;
  t3["seeds"] = t3_seeds;
  t3["summary"] = summary;

  auto& t1 = result.table1;
  t1["mode"] = to_string(config.mode);
  t1["node_count"] = config.solver.node_count;
  t1["complete"] = result.complete;
  t1["counts"] = {{"seeds", t1_counts}, {"totals", count_totals}, {"test_set_solver_calls", test_counters.solver_calls}};
  t1["timing"] = {{"seeds", t1_timing}, {"totals", timing_totals}, {"test_set_solver_seconds", test_counters.solver_seconds}};
  return result;
}

}  // namespace asadg::harness
