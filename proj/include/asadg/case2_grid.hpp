#pragma once

// Preprocessing grids over Chebyshev coefficients of the variable-coefficient case.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "asadg/samplers.hpp"
#include "asadg/transport.hpp"

namespace asadg::case2 {

enum class Field { mach, re_source, im_source };

const char* to_string(Field f);
Field field_from_string(const std::string& s);

struct Coefficient {
  Field field = Field::mach;
  std::size_t order = 0;
  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

/// Grid description. Coefficients not listed in `varied` stay at the midpoint of their range.
struct GridSpec {
  std::size_t degree = 5;
  std::size_t levels = 4;
  std::size_t node_count = 129;
  std::vector<Coefficient> varied = default_varied();
  std::pair<double, double> mach_constant{0.5, 1.0};
  std::pair<double, double> mach_higher{-0.1, 0.1};
  std::pair<double, double> source{-1.0, 1.0};

  static std::vector<Coefficient> default_varied();

  std::size_t coefficients_per_field() const { return degree + 1; }
  std::size_t coefficient_count() const { return 3 * (degree + 1); }
  std::size_t input_dim() const { return 3 * node_count; }
  std::size_t slot(const Coefficient& c) const;
  std::pair<double, double> range(const Coefficient& c) const;
  /// Box over the varied coefficients, in `varied` order.
  sampling::BoundingBox varied_box() const;
  /// Full coefficient vector (mach, Re g, Im g blocks) with the varied slots set from `values`.
  std::vector<double> coefficients_from_varied(std::span<const double> values) const;
  /// Packed nodal input (3 * node_count) of a full coefficient vector.
  std::vector<double> expand(std::span<const double> coefficients) const;
  std::string column_name(std::size_t slot) const;

  /// Throws Error{invalid_argument} on an empty, repeated or out-of-range varied list,
  /// fewer than 2 levels, or a Mach range that can reach zero.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

/// Cartesian product over the varied coefficients, first varied coefficient outermost.
struct CoefficientGrid {
  GridSpec spec;
  std::vector<std::vector<double>> coefficients;  // full coefficient vectors

  std::size_t size() const { return coefficients.size(); }
  /// Largest per-coefficient level step.
  double spacing() const;
  /// Packed nodal inputs, one column per grid point.
  Eigen::MatrixXd nodal_inputs() const;
};

/// Throws Error{budget_exceeded} above `budget` points.
CoefficientGrid build_grid(const GridSpec& spec, std::size_t budget = 1u << 22);

/// CSV of coefficient vectors plus a JSON descriptor next to it (same stem, .json).
void write_grid(const CoefficientGrid& grid, const std::filesystem::path& csv_path);
/// Throws Error{io_failure} or Error{format_error}.
CoefficientGrid read_grid(const std::filesystem::path& csv_path);

}  // namespace asadg::case2
