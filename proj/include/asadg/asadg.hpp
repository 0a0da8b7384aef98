#pragma once

// Adaptive sampling of a triangulated response manifold.
//
// The manifold starts from the solved corners of the working-coordinate box.
// Each iteration triangulates the working coordinates, scores every new
// simplex by the discrete residual of the equal-weight interpolated output at
// its barycenter, and solves the problem at the barycenters whose score exceeds
// the geometrically relaxed threshold rho0 / lambda^k. Only solved points enter
// the manifold; interpolated outputs are never stored as members.

#include <array>
#include <chrono>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "asadg/samplers.hpp"
#include "asadg/transport.hpp"
#include "asadg/triangulation.hpp"

namespace asadg {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Maps an input vector s to equation parameters and accounts for every solve
/// and residual evaluation (count and monotonic-clock seconds).
class SolverContext {
 public:
  using ParamMap = std::function<transport::TransportParams(std::span<const double>)>;

  struct Counters {
    std::size_t solver_calls = 0;
    std::size_t residual_calls = 0;
    double solver_seconds = 0.0;
    double residual_seconds = 0.0;
  };

  struct Solved {
    transport::SolutionVector output;
    double residual = 0.0;
  };

  SolverContext(transport::SpatialGrid grid, ParamMap to_params, double tolerance,
                transport::ResidualNorm norm = transport::ResidualNorm::rms);

  const transport::SpatialGrid& grid() const noexcept { return grid_; }
  double tolerance() const noexcept { return tolerance_; }
  transport::ResidualNorm norm() const noexcept { return norm_; }
  transport::TransportParams params(std::span<const double> input) const { return to_params_(input); }

  /// One solver call: march, then verify manifold membership (residual <= tolerance).
  /// Both are charged to the solver budget. Throws Error{membership_violation}.
  Solved solve(std::span<const double> input);

  /// One residual call, charged to the residual budget.
  double residual(std::span<const double> input, const transport::SolutionVector& y);

  const Counters& counters() const noexcept { return counters_; }

 private:
  transport::SpatialGrid grid_;
  ParamMap to_params_;
  double tolerance_;
  transport::ResidualNorm norm_;
  Counters counters_;
};

/// Input recovered from a working-coordinate point.
struct Recovered {
  std::vector<double> input;
  geometry::Point2 working;
  std::size_t grid_index = npos;
};

/// The 2D space the triangulation lives in.
class WorkingSpace {
 public:
  virtual ~WorkingSpace() = default;
  virtual std::size_t input_dim() const = 0;
  virtual sampling::BoundingBox box() const = 0;
  virtual Recovered recover(const geometry::Point2& q) const = 0;
};

/// Two-parameter inputs used directly as working coordinates.
class PlaneSpace final : public WorkingSpace {
 public:
  explicit PlaneSpace(sampling::BoundingBox box);
  std::size_t input_dim() const override { return 2; }
  sampling::BoundingBox box() const override { return box_; }
  Recovered recover(const geometry::Point2& q) const override { return {{q.x, q.y}, q, npos}; }

 private:
  sampling::BoundingBox box_;
};

struct ManifoldPoint {
  std::vector<double> input;
  geometry::Point2 working;
  transport::SolutionVector output;
  double residual_at_creation = 0.0;
  std::size_t grid_index = npos;
};

struct Candidate {
  geometry::Point2 working;
  transport::SolutionVector interpolated_output;
  double rho = 0.0;
  std::array<std::size_t, 3> parent{};  // manifold point indices, ascending
  std::size_t iteration = 0;            // iteration that scored it
  Recovered recovered;
  bool skipped = false;  // coincides with an existing vertex or an already-solved grid input
};

using Rational = boost::multiprecision::cpp_rational;

/// Threshold with its exact rational value folded into a double comparison.
struct Threshold {
  double value = 0.0;
  bool rounded_up = false;  // value is strictly above the exact threshold

  static Threshold zero() { return {}; }
  /// rho > exact threshold.
  bool exceeded_by(double rho) const { return rho > value || (rho == value && rounded_up); }
};

/// rho0 / lambda^k with lambda > 1, held exactly.
class RelaxationSchedule {
 public:
  RelaxationSchedule(double rho0, double lambda);

  double rho0() const noexcept { return rho0_; }
  double lambda() const noexcept { return lambda_; }
  Rational exact(std::size_t k) const;
  Threshold at(std::size_t k) const;
  /// Nearest double to rho0 / lambda^k.
  double threshold(std::size_t k) const { return at(k).value; }

 private:
  double rho0_;
  double lambda_;
};

inline double relaxation_threshold(const RelaxationSchedule& s, std::size_t k) { return s.threshold(k); }

struct StoppingCriteria {
  std::size_t max_iterations = 20;
  std::size_t max_points = 10000;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  double metric_floor = 0.0;
  std::size_t stability_window = 0;  // 0 disables plateau detection
  double stability_tolerance = 0.0;  // relative spread of the window's metric means

  void validate() const;
};

struct AsadgSettings {
  double rho0 = 1e3;
  double lambda = 1.5;
  StoppingCriteria stop;
  std::size_t max_accept_per_iteration = npos;
  double dedup_tolerance = 1e-9;  // normalized working coordinates
};

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  double threshold = 0.0;
  std::size_t points = 0;  // manifold size after the step
  std::size_t candidates = 0;
  std::size_t newly_scored = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // below threshold, plus clipped and duplicates
  std::size_t clipped = 0;   // above threshold but beyond the point budget or per-iteration cap
  std::size_t duplicates = 0;
  std::size_t skipped = 0;
  double metric_mean = 0.0;  // over all candidates of the iteration; NaN when none
  SolverContext::Counters cumulative;
};

struct RunReport {
  std::size_t initial_points = 0;
  SolverContext::Counters initial;
  std::vector<IterationRecord> iterations;
  std::size_t final_points = 0;
  std::string stop_reason;
  bool complete = true;
  std::string error;
  double rho0 = 0.0;
  double lambda = 0.0;

  std::vector<double> metric_series() const;
  std::vector<std::size_t> point_series() const;

  /// Counts in "iterations", wall-clock fields only under "timing".
  nlohmann::ordered_json to_json() const;
};

class AdaptiveSampler {
 public:
  AdaptiveSampler(const WorkingSpace& space, SolverContext& solver, AsadgSettings settings);

  /// Solves the distinct inputs recovered from the box corners.
  void initialize();

  /// Scores every simplex of the current triangulation not scored before and
  /// returns the live candidates (cached scores are reused, never recomputed).
  /// Throws Error{degenerate_input} if the manifold cannot be triangulated.
  std::vector<const Candidate*> score_candidates();

  /// One refinement iteration against the schedule's current threshold.
  IterationRecord step();
  IterationRecord step(const Threshold& threshold);

  /// initialize() + step() until a stopping criterion fires. Solver errors end
  /// the run with a partial report flagged incomplete.
  RunReport run();

  const std::vector<ManifoldPoint>& points() const noexcept { return points_; }
  const RelaxationSchedule& schedule() const noexcept { return schedule_; }
  std::size_t iteration() const noexcept { return k_; }
  const SolverContext& solver() const noexcept { return solver_; }
  geometry::Triangulation triangulation() const;

 private:
  using Key = std::array<std::size_t, 3>;

  const WorkingSpace& space_;
  SolverContext& solver_;
  AsadgSettings settings_;
  RelaxationSchedule schedule_;
  std::vector<ManifoldPoint> points_;
  std::set<std::size_t> used_grid_;
  std::map<Key, Candidate> cache_;
  std::vector<Key> live_;
  std::size_t k_ = 0;
  std::size_t last_newly_scored_ = 0;
  geometry::Point2 origin_{};
  geometry::Point2 scale_{1.0, 1.0};

  void add_point(const Recovered& r);
  std::optional<std::string> stop_reason(const RunReport& report,
                                         std::chrono::steady_clock::time_point start) const;
};

}  // namespace asadg
