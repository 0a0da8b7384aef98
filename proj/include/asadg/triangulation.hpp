#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "asadg/transport.hpp"

namespace asadg::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Simplex {
  std::array<std::size_t, 3> v{};
  Point2 barycenter;
};

/// 2D Delaunay triangulation.
///
/// `vertices` holds the distinct input points in first-occurrence order and
/// `payload[i]` is the input index vertex i came from. Triangles are
/// counterclockwise, rotated so the smallest vertex index comes first, and
/// sorted lexicographically.
struct Triangulation {
  std::vector<Point2> vertices;
  std::vector<std::size_t> payload;
  std::vector<Simplex> triangles;
  std::size_t merged_inputs = 0;
};

inline constexpr double kMergeTolerance = 1e-12;

/// Bowyer-Watson insertion in input order, with ghost triangles on the hull
/// (no super-triangle) and floating-point-filtered exact orientation and
/// in-circle predicates. A point exactly on a circumcircle does not invalidate
/// the triangle; this acts as a symbolic perturbation favouring earlier inputs.
/// Points closer than merge_tolerance after normalization to the unit box are
/// merged into the first occurrence.
/// Throws Error{degenerate_input} for fewer than 3 distinct or all-collinear points.
Triangulation delaunay(std::span<const Point2> points, double merge_tolerance = kMergeTolerance);

Point2 barycenter(const std::array<std::size_t, 3>& simplex, std::span<const Point2> vertices);

/// Equal-weight average of the three vertex outputs (the linear interpolant at the barycenter).
transport::SolutionVector interpolate_output(const transport::SolutionVector& a,
                                             const transport::SolutionVector& b,
                                             const transport::SolutionVector& c);

/// Sign of the orientation determinant of (a, b, c): +1 counterclockwise, -1 clockwise, 0 collinear.
int orientation(const Point2& a, const Point2& b, const Point2& c);

/// +1 if d lies strictly inside the circumcircle of counterclockwise (a, b, c), -1 outside, 0 on it.
int in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

/// OBJ text: "v x y h" per vertex, then "f i j k" (1-based) per triangle.
std::string surface_obj(const Triangulation& tri, std::span<const double> heights);
void export_surface(const Triangulation& tri, std::span<const double> heights,
                    const std::filesystem::path& path);

}  // namespace asadg::geometry
