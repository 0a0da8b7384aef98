#pragma once

// Experiment configuration and orchestration behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asadg/asadg.hpp"
#include "asadg/case2_grid.hpp"
#include "asadg/problems.hpp"
#include "asadg/reduced.hpp"
#include "asadg/samplers.hpp"
#include "asadg/surrogate.hpp"

namespace asadg::harness {

enum class Mode { low, high };

const char* to_string(Mode m);
/// Accepts low, high, low-dim, high-dim.
Mode mode_from_string(const std::string& s);

/// Per-component seeds are derive_seed(master, offset).
inline constexpr std::uint64_t kSamplerSeedOffset = 1;
inline constexpr std::uint64_t kTestSeedOffset = 2;
inline constexpr std::uint64_t kNetworkSeedOffset = 3;
inline constexpr std::uint64_t kProjectorSeedOffset = 4;

struct SolverSettings {
  std::size_t node_count = 129;
  double wave_number = 20.0;
  double tolerance = 1e-6;
  transport::ResidualNorm norm = transport::ResidualNorm::rms;
};

struct LowDimSettings {
  problems::Case1Setup setup;  // wave_number comes from SolverSettings
  std::vector<std::pair<double, double>> box{{0.3, 1.0}, {0.2, 0.8}};
};

struct HighDimSettings {
  case2::GridSpec grid;  // node_count comes from SolverSettings
  reduced::ProjectorKind projector = reduced::ProjectorKind::builtin_linear;
  std::string embedding_path;  // imported projector only
};

struct SamplerSettings {
  sampling::Method method = sampling::Method::asadg;
  std::size_t n = 500;  // ignored by asadg (see AsadgSettings) and corners
};

struct BenchmarkSettings {
  std::vector<sampling::Method> samplers{sampling::Method::lhs, sampling::Method::asadg};
  std::size_t train_size = 200;
  double test_fraction = 0.1;
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

struct NetworkSettings {
  std::vector<std::size_t> hidden_sizes{64, 512};
  double learning_rate = 0.01;
  std::size_t epochs = 300;
  std::size_t batch_size = 100;
};

struct ExperimentConfig {
  Mode mode = Mode::low;
  std::uint64_t seed = 0;
  std::string output_dir = "asadg_out";
  SolverSettings solver;
  LowDimSettings low;
  HighDimSettings high;
  SamplerSettings sampler;
  AsadgSettings asadg;
  BenchmarkSettings benchmark;
  NetworkSettings network;

  /// Throws Error{invalid_argument} or Error{io_failure} for a missing import file.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys and wrong types raise Error{format_error}.
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Throws Error{io_failure} or Error{format_error}.
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// The solver, input mapping and working space selected by a config.
class Problem {
 public:
  explicit Problem(const ExperimentConfig& config);

  Mode mode() const noexcept { return config_.mode; }
  const ExperimentConfig& config() const noexcept { return config_; }
  const transport::SpatialGrid& grid() const noexcept { return grid_; }

  /// Space the baseline samplers draw from: the two named inputs, or the varied coefficients.
  sampling::BoundingBox sample_box() const;
  std::vector<std::string> sample_columns() const;
  /// Solver input of a sample-space point.
  std::vector<double> input_of(std::span<const double> sample) const;
  std::size_t input_dim() const;
  std::size_t output_dim() const { return 2 * grid_.node_count(); }

  SolverContext make_context() const;

  /// Plane for low-dim; reduced grid embedding for high-dim, fitted on first use.
  const WorkingSpace& working_space();
  /// Sample-space coordinates of a manifold point.
  std::vector<double> sample_of(const ManifoldPoint& p) const;

  /// High-dim only; null until working_space() has run.
  const reduced::GridEmbedding* embedding() const noexcept { return embedding_.get(); }
  const case2::CoefficientGrid* coefficient_grid() const noexcept { return coefficient_grid_.get(); }

 private:
  ExperimentConfig config_;
  transport::SpatialGrid grid_;
  std::unique_ptr<WorkingSpace> space_;
  std::shared_ptr<const reduced::GridEmbedding> embedding_;
  std::unique_ptr<case2::CoefficientGrid> coefficient_grid_;
};

struct SampleRun {
  sampling::Method method = sampling::Method::uniform;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> samples;  // sample-space coordinates
  std::vector<std::vector<double>> inputs;   // solver inputs
  std::vector<transport::SolutionVector> outputs;
  SolverContext::Counters counters;
  std::optional<RunReport> report;        // asadg only
  std::vector<ManifoldPoint> manifold;    // asadg only
  std::optional<geometry::Triangulation> mesh;  // asadg only, when triangulable
};

/// Runs one sampler and solves every sample. For asadg, `settings` controls stopping and `n` is ignored.
SampleRun run_sampler(Problem& problem, sampling::Method method, std::size_t n, std::uint64_t seed,
                      const AsadgSettings& settings);

/// samples.csv and its sidecar.
void write_samples(const SampleRun& run, const Problem& problem, const std::filesystem::path& dir);
/// report.json, manifold.csv, mesh.obj (heights nu(y)), metric_series.csv.
void write_asadg_outputs(const SampleRun& run, const Problem& problem, const std::filesystem::path& dir);
/// Rows of x, Re y, Im y under a header.
void write_solution(const transport::SolutionVector& y, const transport::SpatialGrid& grid,
                    const std::filesystem::path& path);
/// iteration, points, candidates, accepted, rejected, threshold, metric_mean.
void write_metric_series(const nlohmann::json& report, const std::filesystem::path& path);

struct BenchmarkResult {
  nlohmann::ordered_json table1;  // generation cost: counts, with wall-clock under "timing"
  nlohmann::ordered_json table3;  // surrogate precision per seed and sampler
  bool complete = true;
};

/// For each seed: shared uniform test set, one training set per sampler with the same budget,
/// identical network settings, MNRE per arm. The asadg arm runs until it holds train_size points.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

}  // namespace asadg::harness
