#pragma once

// One-dimensional harmonic transport problem
//
//   m(x) y'(x) - i k y(x) - g(x) = 0,   x in [0, 1],   y(0) = 0,
//
// with either a scalar Mach number and the parametric Gaussian-wavelet
// source (low-dimensional inputs), or nodal Mach/source fields
// (high-dimensional inputs).

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace asadg::transport {

using Complex = std::complex<double>;

/// Equally spaced nodes on [0, 1], both endpoints included.
class SpatialGrid {
 public:
  explicit SpatialGrid(std::size_t node_count);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  /// Length of a real-packed solution on this grid (2 * node_count).
  std::size_t output_dim() const noexcept { return 2 * nodes_.size(); }
  double spacing() const noexcept { return spacing_; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  double operator[](std::size_t j) const noexcept { return nodes_[j]; }

 private:
  std::vector<double> nodes_;
  double spacing_;
};

/// g(x) = a e^{i alpha x} + b e^{i alpha x - (x - x_m)^2 / (2 sigma^2)}.
/// The standard source has b = 1; b is exposed so the two amplitudes can
/// serve as linear inputs.
struct Case1Source {
  double a = 1.0;
  double alpha = 30.0;
  double sigma = 0.05;
  double x_m = 0.5;
  double gaussian_amplitude = 1.0;
};

Complex eval_case1_source(const Case1Source& src, double x);

using MachProfile = std::variant<double, std::vector<double>>;
using SourceProfile = std::variant<Case1Source, std::vector<Complex>>;

struct TransportParams {
  double wave_number = 20.0;
  MachProfile mach = 1.0;
  SourceProfile source = Case1Source{};
};

/// Validates field lengths against the grid and the sign/finiteness rules.
/// Throws Error{dimension_mismatch} or Error{invalid_argument}.
void validate(const TransportParams& params, const SpatialGrid& grid);

/// Real packing of a complex nodal solution: (Re y_0..Re y_{n-1}, Im y_0..Im y_{n-1}).
struct SolutionVector {
  std::vector<double> values;

  SolutionVector() = default;
  explicit SolutionVector(std::size_t node_count) : values(2 * node_count, 0.0) {}
  explicit SolutionVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t node_count() const noexcept { return values.size() / 2; }
  Complex at(std::size_t j) const { return {values[j], values[node_count() + j]}; }
  void set(std::size_t j, Complex z) {
    values[j] = z.real();
    values[node_count() + j] = z.imag();
  }

  friend bool operator==(const SolutionVector&, const SolutionVector&) = default;
};

/// Marches y' = (i k y + g) / m from y(0) = 0 with classical RK4, one step per grid interval.
/// Stage values of m and g at interval midpoints come from the closed form
/// (scalar Mach, Case1Source) or from 4-point Lagrange interpolation of nodal fields.
/// Throws Error{non_finite_result} if the march overflows.
SolutionVector solve(const TransportParams& params, const SpatialGrid& grid);

/// Discrete residual of the marched scheme, in equation units:
///
///   r_j = m(x_{j+1/2}) * [ (y_{j+1} - y_j) / h - (K1 + 2 K2 + 2 K3 + K4) / 6 ],
///
/// where K1..K4 are the RK4 stage slopes built from y_j. Returns the RMS of
/// |r_j| over the node_count - 1 intervals plus the boundary penalty |y_0|.
/// For an exact solution of the ODE r_j is the O(h^4) truncation error; for
/// the output of solve() it is rounding noise.
///
/// ResidualNorm::l2 returns the root-sum-square instead of the RMS; its
/// magnitude grows with sqrt(node_count - 1).
enum class ResidualNorm { rms, l2 };

const char* to_string(ResidualNorm n);
/// Throws Error{invalid_argument} for unknown names.
ResidualNorm residual_norm_from_string(const std::string& s);

double residual(const TransportParams& params, const SolutionVector& y, const SpatialGrid& grid,
                ResidualNorm norm = ResidualNorm::rms);

/// RMS over all nodes of |m (D y)_j - i k y_j - g_j| plus |y_0|, with D the second-order
/// central difference (one-sided second order at both ends). Independent of the
/// marching scheme; used as a cross-check on solve().
double central_difference_residual(const TransportParams& params, const SolutionVector& y,
                                   const SpatialGrid& grid);

/// Clenshaw evaluation of sum_n c_n T_n(t), t in [-1, 1].
double chebyshev_value(std::span<const double> coefficients, double t);

/// sum_n c_n T_n(2x - 1) at every grid node.
std::vector<double> expand_chebyshev(std::span<const double> coefficients, const SpatialGrid& grid);

struct Case2Fields {
  std::vector<double> mach;
  std::vector<double> re_source;
  std::vector<double> im_source;
};

/// Concatenates (mach, Re g, Im g); all three must share one length.
std::vector<double> pack_case2_input(std::span<const double> mach, std::span<const double> re_source,
                                     std::span<const double> im_source);
Case2Fields unpack_case2_input(std::span<const double> packed);

/// Nodal parameters from a packed case-2 input of length 3 * node_count.
TransportParams case2_params(std::span<const double> packed, double wave_number);

}  // namespace asadg::transport
