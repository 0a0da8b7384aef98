#pragma once

// Two-dimensional working coordinates for high-dimensional inputs.
//
// A preprocessing grid of inputs is embedded in the plane. Projection maps an
// input to the plane; the pseudo-inverse maps a planar point back to the grid
// input with the nearest embedded coordinate, so recovered inputs are always
// grid members.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asadg/asadg.hpp"
#include "asadg/triangulation.hpp"

namespace asadg::reduced {

enum class ProjectorKind { builtin_linear, imported };

const char* to_string(ProjectorKind k);
ProjectorKind projector_kind_from_string(const std::string& s);

inline constexpr double kPerturbation = 1e-12;

struct LinearProjectorOptions {
  std::uint64_t seed = 0x5eed;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-12;
};

class GridEmbedding {
 public:
  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }
  ProjectorKind kind() const noexcept { return kind_; }
  double spacing() const noexcept { return spacing_; }

  std::vector<double> grid_input(std::size_t i) const;
  const Eigen::MatrixXd& grid_inputs() const noexcept { return inputs_; }
  const std::vector<geometry::Point2>& embedded() const noexcept { return embedded_; }
  /// Grid indices whose coordinate was moved to restore injectivity.
  const std::vector<std::size_t>& perturbed() const noexcept { return perturbed_; }

  /// Linear kind only: centering vector and the two orthonormal principal directions.
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::Matrix<double, Eigen::Dynamic, 2>& axes() const noexcept { return axes_; }

  /// Throws Error{dimension_mismatch}.
  geometry::Point2 project(std::span<const double> p) const;

  /// Index of the embedded coordinate nearest to q; ties go to the lowest index.
  std::size_t nearest(const geometry::Point2& q) const;
  std::vector<double> pseudo_inverse(const geometry::Point2& q) const { return grid_input(nearest(q)); }

  sampling::BoundingBox embedded_box() const;

  /// CSV with columns grid_index,u,v.
  void write_embedding(const std::filesystem::path& path) const;

  friend GridEmbedding fit_linear(Eigen::MatrixXd inputs, double spacing, const LinearProjectorOptions& opts);
  friend GridEmbedding fit_imported(Eigen::MatrixXd inputs, double spacing, const std::filesystem::path& csv);

 private:
  struct BucketIndex {
    double x0 = 0.0, y0 = 0.0, cell = 1.0;
    std::size_t nx = 1, ny = 1;
    std::vector<std::vector<std::size_t>> cells;
  };

  ProjectorKind kind_ = ProjectorKind::builtin_linear;
  Eigen::MatrixXd inputs_;  // one column per grid input
  std::vector<geometry::Point2> embedded_;
  std::vector<std::size_t> perturbed_;
  double spacing_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> axes_;
  // Unperturbed coordinate -> grid indices that shared it.
  std::map<std::pair<double, double>, std::vector<std::size_t>> collisions_;
  BucketIndex index_;

  geometry::Point2 linear_map(std::span<const double> p) const;
  std::size_t nearest_input(std::span<const double> p) const;
  void finalize(std::vector<geometry::Point2> raw);
  void build_index();
};

/// Principal-direction projection via block subspace iteration from a seeded start.
/// `spacing` <= 0 derives the coarsest per-dimension step from the inputs.
/// Throws Error{invalid_argument} for fewer than 3 inputs, Error{embedding_collision}.
GridEmbedding fit_linear(Eigen::MatrixXd inputs, double spacing = 0.0, const LinearProjectorOptions& opts = {});

/// Coordinates from a CSV with columns grid_index,u,v covering every grid index once.
/// Throws Error{format_error}, Error{io_failure}, Error{embedding_collision}.
GridEmbedding fit_imported(Eigen::MatrixXd inputs, double spacing, const std::filesystem::path& csv);

/// Largest gap between consecutive distinct values of any one coordinate.
double coarsest_step(const Eigen::MatrixXd& inputs);

/// Euclidean norm of the output with real and imaginary parts as separate components.
double nu(const transport::SolutionVector& y);

struct ReducedPoint {
  geometry::Point2 coords;
  double height = 0.0;
};

/// Residual at the grid input recovered from a planar point.
double reduced_residual(const GridEmbedding& e, const geometry::Point2& q, const transport::SolutionVector& y,
                        SolverContext& solver);

/// Working space over the embedded grid; recovered points snap to the embedded grid coordinate.
class ReducedSpace final : public WorkingSpace {
 public:
  explicit ReducedSpace(std::shared_ptr<const GridEmbedding> embedding);
  std::size_t input_dim() const override { return embedding_->input_dim(); }
  sampling::BoundingBox box() const override { return box_; }
  Recovered recover(const geometry::Point2& q) const override;
  const GridEmbedding& embedding() const { return *embedding_; }

 private:
  std::shared_ptr<const GridEmbedding> embedding_;
  sampling::BoundingBox box_;
};

}  // namespace asadg::reduced
