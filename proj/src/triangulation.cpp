#include "asadg/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

#include "asadg/error.hpp"
#include "asadg/log.hpp"
#include "csv_format.hpp"
#include "exact_rational.hpp"

namespace asadg::geometry {

namespace {

using boost::multiprecision::cpp_rational;

using detail::to_rational;

int sign(const cpp_rational& r) { return r.sign(); }

int orientation_exact(const Point2& a, const Point2& b, const Point2& c) {
  const cpp_rational ax = to_rational(a.x), ay = to_rational(a.y);
  const cpp_rational det = (to_rational(b.x) - ax) * (to_rational(c.y) - ay) - (to_rational(b.y) - ay) * (to_rational(c.x) - ax);
  return sign(det);
}

int in_circle_exact(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const cpp_rational dx = to_rational(d.x), dy = to_rational(d.y);
  const cpp_rational adx = to_rational(a.x) - dx, ady = to_rational(a.y) - dy;
  const cpp_rational bdx = to_rational(b.x) - dx, bdy = to_rational(b.y) - dy;
  const cpp_rational cdx = to_rational(c.x) - dx, cdy = to_rational(c.y) - dy;
  const cpp_rational det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                           (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                           (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  return sign(det);
}

// Static error bounds of the floating-point filters (Shewchuk 1997, eps = 2^-53).
constexpr double kEps = 0x1.0p-53;
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

constexpr std::size_t kGhost = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Triangle record. n[i] is the neighbour across the edge opposite v[i].
// Ghost triangles keep the ghost vertex at v[2]; the hull lies to the right of v[0] -> v[1].
struct Tri {
  std::array<std::size_t, 3> v;
  std::array<std::size_t, 3> n{kNone, kNone, kNone};
  bool alive = true;
  bool ghost() const { return v[2] == kGhost; }
};

class Builder {
 public:
  explicit Builder(const std::vector<Point2>& pts) : pts_(pts) {}

  void run() {
    seed_triangle();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (i == seed_[0] || i == seed_[1] || i == seed_[2]) continue;
      insert(i);
    }
  }

  std::vector<std::array<std::size_t, 3>> real_triangles() const {
    std::vector<std::array<std::size_t, 3>> out;
    for (const Tri& t : tris_)
      if (t.alive && !t.ghost()) out.push_back(t.v);
    return out;
  }

 private:
  const std::vector<Point2>& pts_;
  std::vector<Tri> tris_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t stamp_ = 0;
  std::size_t last_ = 0;
  std::array<std::size_t, 3> seed_{};

  void seed_triangle() {
    const std::size_t a = 0, b = 1;
    std::size_t c = kNone;
    int o = 0;
    for (std::size_t i = 2; i < pts_.size(); ++i) {
      o = orientation(pts_[a], pts_[b], pts_[i]);
      if (o != 0) {
        c = i;
        break;
      }
    }
    if (c == kNone) throw Error(Errc::degenerate_input, "all input points are collinear");
    seed_ = {a, b, c};
    std::array<std::size_t, 3> v = o > 0 ? std::array{a, b, c} : std::array{a, c, b};
    tris_.push_back(Tri{v});
    tris_.push_back(Tri{{v[1], v[0], kGhost}});
    tris_.push_back(Tri{{v[2], v[1], kGhost}});
    tris_.push_back(Tri{{v[0], v[2], kGhost}});
    for (std::size_t t = 0; t < tris_.size(); ++t)
      for (std::size_t u = 0; u < tris_.size(); ++u)
        if (t != u) link_if_shared(t, u);
    last_ = 0;
  }

  void link_if_shared(std::size_t t, std::size_t u) {
    for (int i = 0; i < 3; ++i) {
      const std::size_t x = tris_[t].v[(i + 1) % 3], y = tris_[t].v[(i + 2) % 3];
      for (int j = 0; j < 3; ++j)
        if (tris_[u].v[(j + 1) % 3] == y && tris_[u].v[(j + 2) % 3] == x) tris_[t].n[i] = u;
    }
  }

  static void set_neighbor(Tri& t, std::size_t x, std::size_t y, std::size_t nb) {
    for (int i = 0; i < 3; ++i) {
      if (t.v[(i + 1) % 3] == x && t.v[(i + 2) % 3] == y) {
        t.n[i] = nb;
        return;
      }
    }
    throw std::logic_error("delaunay: edge not found while linking");
  }

  bool strictly_between(const Point2& u, const Point2& w, const Point2& p) const {
    if (u.x != w.x) return std::min(u.x, w.x) < p.x && p.x < std::max(u.x, w.x);
    return std::min(u.y, w.y) < p.y && p.y < std::max(u.y, w.y);
  }

  bool conflicts(const Tri& t, const Point2& p) const {
    if (t.ghost()) {
      const Point2& u = pts_[t.v[0]];
      const Point2& w = pts_[t.v[1]];
      const int o = orientation(u, w, p);
      if (o != 0) return o > 0;
      return strictly_between(u, w, p);
    }
    return in_circle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0;
  }

  std::size_t locate(const Point2& p) {
    std::size_t t = last_;
    if (!tris_[t].alive) t = 0;
    while (!tris_[t].alive) ++t;
    if (tris_[t].ghost()) t = tris_[t].n[2];
    const std::size_t limit = 4 * tris_.size() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& tri = tris_[t];
      if (tri.ghost()) return t;
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        if (orientation(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) < 0) {
          t = tri.n[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (std::size_t u = 0; u < tris_.size(); ++u)
      if (tris_[u].alive && conflicts(tris_[u], p)) return u;
    throw std::logic_error("delaunay: point location failed");
  }

  void insert(std::size_t pi) {
    const Point2& p = pts_[pi];
    std::size_t start = locate(p);
    if (!conflicts(tris_[start], p)) {
      start = kNone;
      for (std::size_t u = 0; u < tris_.size(); ++u)
        if (tris_[u].alive && conflicts(tris_[u], p)) {
          start = u;
          break;
        }
      if (start == kNone) throw std::logic_error("delaunay: no conflicting triangle");
    }

    ++stamp_;
    mark_.resize(tris_.size(), 0);
    std::vector<std::size_t> cavity{start};
    mark_[start] = stamp_;
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const Tri& t = tris_[cavity[k]];
      for (std::size_t nb : t.n) {
        if (mark_[nb] == stamp_) continue;
        if (conflicts(tris_[nb], p)) {
          mark_[nb] = stamp_;
          cavity.push_back(nb);
        }
      }
    }

    struct Boundary {
      std::size_t a, b, outside;
    };
    std::vector<Boundary> boundary;
    for (std::size_t c : cavity) {
      const Tri& t = tris_[c];
      for (int i = 0; i < 3; ++i)
        if (mark_[t.n[i]] != stamp_) boundary.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], t.n[i]});
    }
    for (std::size_t c : cavity) tris_[c].alive = false;

    std::unordered_map<std::size_t, std::size_t> by_start, by_end;
    std::vector<std::size_t> created;
    created.reserve(boundary.size());
    for (const Boundary& e : boundary) {
      Tri t{};
      if (e.a == kGhost) {
        t.v = {e.b, pi, kGhost};
      } else if (e.b == kGhost) {
        t.v = {pi, e.a, kGhost};
      } else {
        if (orientation(pts_[e.a], pts_[e.b], p) <= 0)
          throw std::logic_error("delaunay: cavity is not star-shaped");
        t.v = {e.a, e.b, pi};
      }
      const std::size_t id = tris_.size();
      tris_.push_back(t);
      set_neighbor(tris_[id], e.a, e.b, e.outside);
      set_neighbor(tris_[e.outside], e.b, e.a, id);
      by_start[e.a] = id;
      by_end[e.b] = id;
      created.push_back(id);
    }
    for (std::size_t k = 0; k < created.size(); ++k) {
      const Boundary& e = boundary[k];
      const std::size_t id = created[k];
      set_neighbor(tris_[id], e.b, pi, by_start.at(e.b));
      set_neighbor(tris_[id], pi, e.a, by_end.at(e.a));
    }
    last_ = created.front();
  }
};

std::vector<std::size_t> deduplicate(std::span<const Point2> points, double tol, std::size_t& merged) {
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = max_x;
  for (const Point2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error(Errc::invalid_argument, "non-finite point passed to delaunay");
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double sx = max_x > min_x ? max_x - min_x : 1.0;
  const double sy = max_y > min_y ? max_y - min_y : 1.0;
  const double cell = tol > 0.0 ? tol : std::numeric_limits<double>::min();

  auto key = [](std::int64_t i, std::int64_t j) {
    return static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(j);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> kept;
  merged = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double nx = (points[i].x - min_x) / sx, ny = (points[i].y - min_y) / sy;
    const auto cx = static_cast<std::int64_t>(std::floor(nx / cell));
    const auto cy = static_cast<std::int64_t>(std::floor(ny / cell));
    bool duplicate = false;
    for (std::int64_t di = -1; di <= 1 && !duplicate; ++di) {
      for (std::int64_t dj = -1; dj <= 1 && !duplicate; ++dj) {
        auto it = buckets.find(key(cx + di, cy + dj));
        if (it == buckets.end()) continue;
        for (std::size_t k : it->second) {
          const double kx = (points[k].x - min_x) / sx, ky = (points[k].y - min_y) / sy;
          if (std::abs(kx - nx) <= tol && std::abs(ky - ny) <= tol) {
            duplicate = true;
            break;
          }
        }
      }
    }
    if (duplicate) {
      ++merged;
      continue;
    }
    buckets[key(cx, cy)].push_back(i);
    kept.push_back(i);
  }
  return kept;
}

}  // namespace

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  const double left = (b.x - a.x) * (c.y - a.y);
  const double right = (b.y - a.y) * (c.x - a.x);
  const double det = left - right;
  const double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orientation_exact(a, b, c);
}

int in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kInCircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return in_circle_exact(a, b, c, d);
}

Triangulation delaunay(std::span<const Point2> points, double merge_tolerance) {
  Triangulation out;
  const std::vector<std::size_t> kept = deduplicate(points, merge_tolerance, out.merged_inputs);
  if (out.merged_inputs > 0)
    log::info("delaunay: merged " + std::to_string(out.merged_inputs) + " duplicate point(s)");
  if (kept.size() < 3)
    throw Error(Errc::degenerate_input, "delaunay needs at least 3 distinct points, got " +
                                            std::to_string(kept.size()));
  out.payload = kept;
  out.vertices.reserve(kept.size());
  for (std::size_t i : kept) out.vertices.push_back(points[i]);

  Builder builder(out.vertices);
  builder.run();
  auto tris = builder.real_triangles();
  for (auto& v : tris) std::rotate(v.begin(), std::min_element(v.begin(), v.end()), v.end());
  std::sort(tris.begin(), tris.end());
  out.triangles.reserve(tris.size());
  for (const auto& v : tris) out.triangles.push_back(Simplex{v, barycenter(v, out.vertices)});
  return out;
}

Point2 barycenter(const std::array<std::size_t, 3>& simplex, std::span<const Point2> vertices) {
  for (std::size_t i : simplex)
    if (i >= vertices.size())
      throw Error(Errc::index_out_of_range, "simplex vertex " + std::to_string(i) + " out of range");
  const Point2& a = vertices[simplex[0]];
  const Point2& b = vertices[simplex[1]];
  const Point2& c = vertices[simplex[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

transport::SolutionVector interpolate_output(const transport::SolutionVector& a,
                                             const transport::SolutionVector& b,
                                             const transport::SolutionVector& c) {
  if (a.values.size() != b.values.size() || a.values.size() != c.values.size())
    throw Error(Errc::dimension_mismatch, "vertex outputs differ in length");
  transport::SolutionVector out(std::vector<double>(a.values.size()));
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = (a.values[i] + b.values[i] + c.values[i]) / 3.0;
  return out;
}

std::string surface_obj(const Triangulation& tri, std::span<const double> heights) {
  if (heights.size() != tri.vertices.size())
    throw Error(Errc::dimension_mismatch, "one height per vertex required");
  std::ostringstream os;
  for (std::size_t i = 0; i < tri.vertices.size(); ++i)
    os << "v " << detail::format_double(tri.vertices[i].x) << ' ' << detail::format_double(tri.vertices[i].y)
       << ' ' << detail::format_double(heights[i]) << '\n';
  for (const Simplex& s : tri.triangles) os << "f " << s.v[0] + 1 << ' ' << s.v[1] + 1 << ' ' << s.v[2] + 1 << '\n';
  return os.str();
}

void export_surface(const Triangulation& tri, std::span<const double> heights,
                    const std::filesystem::path& path) {
  const std::string text = surface_obj(tri, heights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

}  // namespace asadg::geometry
