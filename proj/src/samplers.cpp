#include "asadg/samplers.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "asadg/error.hpp"
#include "asadg/rng.hpp"
#include "csv_format.hpp"

namespace asadg::sampling {

BoundingBox::BoundingBox(std::vector<std::pair<double, double>> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw Error(Errc::invalid_argument, "bounding box needs at least one dimension");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto [lo, hi] = bounds_[i];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw Error(Errc::invalid_argument, "bounding box dimension " + std::to_string(i) +
                                              " needs finite min < max");
  }
}

bool BoundingBox::contains(std::span<const double> p) const {
  if (p.size() != dim()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!(p[i] >= lo(i) && p[i] <= hi(i))) return false;
  return true;
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::corners: return "corners";
    case Method::lhs: return "lhs";
    case Method::uniform: return "uniform";
    case Method::cartesian: return "cartesian";
    case Method::asadg: return "asadg";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::corners, Method::lhs, Method::uniform, Method::cartesian, Method::asadg})
    if (to_string(m) == name) return m;
  throw Error(Errc::invalid_argument, "unknown sampler '" + std::string(name) + "'");
}

SampleSet corners(const BoundingBox& box) {
  const std::size_t d = box.dim();
  if (d > kMaxCornerDim)
    throw Error(Errc::dimension_too_large,
                "corner initialization limited to " + std::to_string(kMaxCornerDim) + " dimensions");
  SampleSet set{{}, 0, Method::corners};
  const std::size_t count = std::size_t{1} << d;
  set.points.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i) {
      const bool upper = (code >> (d - 1 - i)) & 1U;
      p[i] = upper ? box.hi(i) : box.lo(i);
    }
    set.points.push_back(std::move(p));
  }
  return set;
}

SampleSet lhs(std::size_t n, const BoundingBox& box, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "lhs needs n >= 1");
  const std::size_t d = box.dim();
  CounterRng rng(seed);
  SampleSet set{std::vector<std::vector<double>>(n, std::vector<double>(d)), seed, Method::lhs};
  std::vector<std::size_t> bins(n);
  for (std::size_t i = 0; i < d; ++i) {
    std::iota(bins.begin(), bins.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(bins));
    for (std::size_t s = 0; s < n; ++s) {
      const double u = rng.uniform_open();
      const double x = box.lo(i) + box.width(i) * ((static_cast<double>(bins[s]) + u) / static_cast<double>(n));
      set.points[s][i] = std::min(x, box.hi(i));
    }
  }
  return set;
}

SampleSet uniform(std::size_t n, const BoundingBox& box, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "uniform sampler needs n >= 1");
  CounterRng rng(seed);
  SampleSet set{{}, seed, Method::uniform};
  set.points.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> p(box.dim());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(box.lo(i), box.hi(i));
    set.points.push_back(std::move(p));
  }
  return set;
}

SampleSet cartesian(std::span<const std::size_t> counts, const BoundingBox& box, std::size_t budget) {
  if (counts.size() != box.dim())
    throw Error(Errc::dimension_mismatch, "one level count per box dimension required");
  std::size_t total = 1;
  for (std::size_t c : counts) {
    if (c == 0) throw Error(Errc::invalid_argument, "cartesian level counts must be positive");
    if (total > budget / c)
      throw Error(Errc::budget_exceeded, "cartesian grid exceeds budget of " + std::to_string(budget));
    total *= c;
  }
  const std::size_t d = box.dim();
  std::vector<std::vector<double>> levels(d);
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t c = counts[i];
    if (c == 1) {
      levels[i] = {0.5 * (box.lo(i) + box.hi(i))};
      continue;
    }
    levels[i].resize(c);
    for (std::size_t j = 0; j < c; ++j)
      levels[i][j] = box.lo(i) + box.width(i) * static_cast<double>(j) / static_cast<double>(c - 1);
    levels[i].back() = box.hi(i);
  }
  SampleSet set{{}, 0, Method::cartesian};
  set.points.reserve(total);
  std::vector<std::size_t> index(d, 0);
  for (std::size_t s = 0; s < total; ++s) {
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = levels[i][index[i]];
    set.points.push_back(std::move(p));
    for (std::size_t i = d; i-- > 0;) {
      if (++index[i] < counts[i]) break;
      index[i] = 0;
    }
  }
  return set;
}

void write_csv(const SampleSet& set, const BoundingBox& box, std::span<const std::string> names,
               const std::filesystem::path& csv_path) {
  if (names.size() != box.dim())
    throw Error(Errc::dimension_mismatch, "one column name per dimension required");
  std::ofstream out(csv_path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + csv_path.string());
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  for (const auto& p : set.points) {
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << detail::format_double(p[i]);
    out << '\n';
  }
  if (!out) throw Error(Errc::io_failure, "write failed for " + csv_path.string());

  nlohmann::ordered_json meta;
  meta["method"] = std::string(to_string(set.method));
  meta["seed"] = set.seed;
  meta["count"] = set.points.size();
  meta["dimension"] = box.dim();
  meta["columns"] = std::vector<std::string>(names.begin(), names.end());
  meta["box"] = box.bounds();
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream js(json_path);
  if (!js) throw Error(Errc::io_failure, "cannot open " + json_path.string());
  js << meta.dump(2) << '\n';
}

}  // namespace asadg::sampling
