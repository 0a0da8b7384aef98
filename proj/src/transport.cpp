#include "asadg/transport.hpp"

#include <cmath>
#include <string>

#include "asadg/error.hpp"

namespace asadg::transport {

namespace {

constexpr Complex kI{0.0, 1.0};

// Coefficient values at nodes and at interval midpoints, as consumed by the RK4 stages.
struct Coefficients {
  std::vector<double> mach_node, mach_mid;
  std::vector<Complex> source_node, source_mid;
};

// Value at the midpoint of interval [j, j+1] from the cubic through four neighbouring nodes.
template <typename T>
T midpoint_value(const std::vector<T>& f, std::size_t j) {
  const std::size_t n = f.size();
  if (n < 4) return 0.5 * (f[j] + f[j + 1]);
  if (j == 0) return (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0;
  if (j + 2 >= n) return (f[n - 4] - 5.0 * f[n - 3] + 15.0 * f[n - 2] + 5.0 * f[n - 1]) / 16.0;
  return (-f[j - 1] + 9.0 * f[j] + 9.0 * f[j + 1] - f[j + 2]) / 16.0;
}

Coefficients tabulate(const TransportParams& params, const SpatialGrid& grid) {
  validate(params, grid);
  const std::size_t n = grid.node_count();
  const double h = grid.spacing();
  Coefficients c;
  c.mach_node.resize(n);
  c.mach_mid.resize(n - 1);
  c.source_node.resize(n);
  c.source_mid.resize(n - 1);

  if (const auto* m = std::get_if<double>(&params.mach)) {
    std::fill(c.mach_node.begin(), c.mach_node.end(), *m);
    std::fill(c.mach_mid.begin(), c.mach_mid.end(), *m);
  } else {
    c.mach_node = std::get<std::vector<double>>(params.mach);
    for (std::size_t j = 0; j + 1 < n; ++j) c.mach_mid[j] = midpoint_value(c.mach_node, j);
  }

  if (const auto* src = std::get_if<Case1Source>(&params.source)) {
    for (std::size_t j = 0; j < n; ++j) c.source_node[j] = eval_case1_source(*src, grid[j]);
    for (std::size_t j = 0; j + 1 < n; ++j)
      c.source_mid[j] = eval_case1_source(*src, grid[j] + 0.5 * h);
  } else {
    c.source_node = std::get<std::vector<Complex>>(params.source);
    for (std::size_t j = 0; j + 1 < n; ++j) c.source_mid[j] = midpoint_value(c.source_node, j);
  }
  return c;
}

struct Stages {
  Complex k1, k2, k3, k4;
  Complex increment() const { return (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0; }
};

inline Stages rk4_stages(const Coefficients& c, double k, double h, std::size_t j, Complex yj) {
  const Complex ik = kI * k;
  Stages s;
  s.k1 = (ik * yj + c.source_node[j]) / c.mach_node[j];
  s.k2 = (ik * (yj + 0.5 * h * s.k1) + c.source_mid[j]) / c.mach_mid[j];
  s.k3 = (ik * (yj + 0.5 * h * s.k2) + c.source_mid[j]) / c.mach_mid[j];
  s.k4 = (ik * (yj + h * s.k3) + c.source_node[j + 1]) / c.mach_node[j + 1];
  return s;
}

void require_length(const SolutionVector& y, const SpatialGrid& grid) {
  if (y.values.size() != grid.output_dim()) {
    throw Error(Errc::dimension_mismatch, "solution length " + std::to_string(y.values.size()) +
                                              " does not match grid output dimension " +
                                              std::to_string(grid.output_dim()));
  }
}

}  // namespace

SpatialGrid::SpatialGrid(std::size_t node_count) {
  if (node_count < 2) throw Error(Errc::invalid_argument, "grid needs at least 2 nodes");
  spacing_ = 1.0 / static_cast<double>(node_count - 1);
  nodes_.resize(node_count);
  for (std::size_t j = 0; j < node_count; ++j) nodes_[j] = static_cast<double>(j) * spacing_;
  nodes_.back() = 1.0;
}

Complex eval_case1_source(const Case1Source& src, double x) {
  const double d = x - src.x_m;
  const Complex carrier = std::exp(kI * (src.alpha * x));
  return carrier * (src.a + src.gaussian_amplitude * std::exp(-d * d / (2.0 * src.sigma * src.sigma)));
}

void validate(const TransportParams& params, const SpatialGrid& grid) {
  const std::size_t n = grid.node_count();
  if (!std::isfinite(params.wave_number))
    throw Error(Errc::invalid_argument, "wave number must be finite");
  if (const auto* m = std::get_if<double>(&params.mach)) {
    if (*m == 0.0 || !std::isfinite(*m)) throw Error(Errc::invalid_argument, "mach must be nonzero");
  } else {
    const auto& field = std::get<std::vector<double>>(params.mach);
    if (field.size() != n)
      throw Error(Errc::dimension_mismatch, "mach field has " + std::to_string(field.size()) +
                                                " values for " + std::to_string(n) + " nodes");
    for (double m : field)
      if (m == 0.0 || !std::isfinite(m)) throw Error(Errc::invalid_argument, "mach must be nonzero");
  }
  if (const auto* src = std::get_if<Case1Source>(&params.source)) {
    if (!(src->sigma > 0.0)) throw Error(Errc::invalid_argument, "source sigma must be positive");
  } else {
    const auto& field = std::get<std::vector<Complex>>(params.source);
    if (field.size() != n)
      throw Error(Errc::dimension_mismatch, "source field has " + std::to_string(field.size()) +
                                                " values for " + std::to_string(n) + " nodes");
  }
}

SolutionVector solve(const TransportParams& params, const SpatialGrid& grid) {
  const Coefficients c = tabulate(params, grid);
  const std::size_t n = grid.node_count();
  const double h = grid.spacing();
  SolutionVector out(n);
  Complex y{0.0, 0.0};
  for (std::size_t j = 0; j + 1 < n; ++j) {
    y += h * rk4_stages(c, params.wave_number, h, j, y).increment();
    if (!std::isfinite(y.real()) || !std::isfinite(y.imag()))
      throw Error(Errc::non_finite_result, "march diverged at node " + std::to_string(j + 1));
    out.set(j + 1, y);
  }
  return out;
}

const char* to_string(ResidualNorm n) { return n == ResidualNorm::rms ? "rms" : "l2"; }

ResidualNorm residual_norm_from_string(const std::string& s) {
  if (s == "rms") return ResidualNorm::rms;
  if (s == "l2") return ResidualNorm::l2;
  throw Error(Errc::invalid_argument, "unknown residual norm '" + s + "'");
}

double residual(const TransportParams& params, const SolutionVector& y, const SpatialGrid& grid,
                ResidualNorm norm) {
  require_length(y, grid);
  const Coefficients c = tabulate(params, grid);
  const std::size_t n = grid.node_count();
  const double h = grid.spacing();
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const Complex yj = y.at(j);
    const Complex slope = (y.at(j + 1) - yj) / h;
    const Complex r = c.mach_mid[j] * (slope - rk4_stages(c, params.wave_number, h, j, yj).increment());
    sum += std::norm(r);
  }
  if (norm == ResidualNorm::rms) sum /= static_cast<double>(n - 1);
  return std::sqrt(sum) + std::abs(y.at(0));
}

double central_difference_residual(const TransportParams& params, const SolutionVector& y,
                                   const SpatialGrid& grid) {
  require_length(y, grid);
  const std::size_t n = grid.node_count();
  if (n < 3) throw Error(Errc::invalid_argument, "central differences need at least 3 nodes");
  const Coefficients c = tabulate(params, grid);
  const double h = grid.spacing();
  const Complex ik = kI * params.wave_number;
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    Complex dy;
    if (j == 0) {
      dy = (-3.0 * y.at(0) + 4.0 * y.at(1) - y.at(2)) / (2.0 * h);
    } else if (j == n - 1) {
      dy = (3.0 * y.at(n - 1) - 4.0 * y.at(n - 2) + y.at(n - 3)) / (2.0 * h);
    } else {
      dy = (y.at(j + 1) - y.at(j - 1)) / (2.0 * h);
    }
    sum += std::norm(c.mach_node[j] * dy - ik * y.at(j) - c.source_node[j]);
  }
  return std::sqrt(sum / static_cast<double>(n)) + std::abs(y.at(0));
}

double chebyshev_value(std::span<const double> coefficients, double t) {
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t n = coefficients.size(); n-- > 1;) {
    const double b0 = coefficients[n] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  const double c0 = coefficients.empty() ? 0.0 : coefficients[0];
  return c0 + t * b1 - b2;
}

std::vector<double> expand_chebyshev(std::span<const double> coefficients, const SpatialGrid& grid) {
  if (coefficients.empty()) throw Error(Errc::invalid_argument, "empty Chebyshev coefficient vector");
  std::vector<double> out(grid.node_count());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = chebyshev_value(coefficients, 2.0 * grid[j] - 1.0);
  return out;
}

std::vector<double> pack_case2_input(std::span<const double> mach, std::span<const double> re_source,
                                     std::span<const double> im_source) {
  if (re_source.size() != mach.size() || im_source.size() != mach.size())
    throw Error(Errc::dimension_mismatch, "case-2 fields must share one length");
  std::vector<double> packed;
  packed.reserve(3 * mach.size());
  packed.insert(packed.end(), mach.begin(), mach.end());
  packed.insert(packed.end(), re_source.begin(), re_source.end());
  packed.insert(packed.end(), im_source.begin(), im_source.end());
  return packed;
}

Case2Fields unpack_case2_input(std::span<const double> packed) {
  if (packed.size() % 3 != 0 || packed.empty())
    throw Error(Errc::dimension_mismatch, "case-2 input length must be a positive multiple of 3");
  const std::size_t n = packed.size() / 3;
  Case2Fields f;
  f.mach.assign(packed.begin(), packed.begin() + n);
  f.re_source.assign(packed.begin() + n, packed.begin() + 2 * n);
  f.im_source.assign(packed.begin() + 2 * n, packed.end());
  return f;
}

TransportParams case2_params(std::span<const double> packed, double wave_number) {
  Case2Fields f = unpack_case2_input(packed);
  std::vector<Complex> source(f.mach.size());
  for (std::size_t j = 0; j < source.size(); ++j) source[j] = {f.re_source[j], f.im_source[j]};
  return TransportParams{wave_number, std::move(f.mach), std::move(source)};
}

}  // namespace asadg::transport
