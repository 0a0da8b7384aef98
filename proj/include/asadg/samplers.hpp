#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace asadg::sampling {

/// Axis-aligned box; min < max in every dimension.
class BoundingBox {
 public:
  explicit BoundingBox(std::vector<std::pair<double, double>> bounds);

  std::size_t dim() const noexcept { return bounds_.size(); }
  double lo(std::size_t i) const { return bounds_[i].first; }
  double hi(std::size_t i) const { return bounds_[i].second; }
  double width(std::size_t i) const { return bounds_[i].second - bounds_[i].first; }
  const std::vector<std::pair<double, double>>& bounds() const noexcept { return bounds_; }
  bool contains(std::span<const double> p) const;

 private:
  std::vector<std::pair<double, double>> bounds_;
};

enum class Method { corners, lhs, uniform, cartesian, asadg };

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

struct SampleSet {
  std::vector<std::vector<double>> points;
  std::uint64_t seed = 0;
  Method method = Method::uniform;
};

inline constexpr std::size_t kMaxCornerDim = 20;

/// All 2^d vertices of the box, first dimension outermost.
SampleSet corners(const BoundingBox& box);

/// Random-permutation Latin hypercube with uniform jitter inside each bin.
SampleSet lhs(std::size_t n, const BoundingBox& box, std::uint64_t seed);

/// n i.i.d. points, each coordinate uniform on its interval.
SampleSet uniform(std::size_t n, const BoundingBox& box, std::uint64_t seed);

/// Tensor grid with counts[i] levels per dimension, endpoints included, first dimension
/// outermost. A count of 1 places the single level at the interval midpoint.
/// Throws Error{budget_exceeded} when the product of counts exceeds budget.
SampleSet cartesian(std::span<const std::size_t> counts, const BoundingBox& box, std::size_t budget);

/// Writes one point per row under a header of dimension names, plus a sidecar
/// JSON (same stem, .json) recording method, seed, size and box.
void write_csv(const SampleSet& set, const BoundingBox& box, std::span<const std::string> names,
               const std::filesystem::path& csv_path);

}  // namespace asadg::sampling
