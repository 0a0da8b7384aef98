#include "asadg/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "asadg/error.hpp"
#include "asadg/log.hpp"
#include "asadg/rng.hpp"
#include "csv_format.hpp"
#include "exact_rational.hpp"

namespace asadg::reduced {

namespace {

using geometry::Point2;

double dist2(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// True if a is strictly closer to q than b, exactly; equal distances go to the lower index.
bool closer(const Point2& q, const Point2& a, std::size_t ia, const Point2& b, std::size_t ib) {
  const double da = dist2(q, a), db = dist2(q, b);
  if (std::abs(da - db) > 1e-12 * (da + db)) return da < db;
  using detail::to_rational;
  const auto sq = [&](const Point2& p) -> Rational {
    const Rational dx = to_rational(q.x) - to_rational(p.x), dy = to_rational(q.y) - to_rational(p.y);
    return dx * dx + dy * dy;
  };
  const Rational ea = sq(a), eb = sq(b);
  if (ea != eb) return ea < eb;
  return ia < ib;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> p) {
  return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

}  // namespace

const char* to_string(ProjectorKind k) { return k == ProjectorKind::builtin_linear ? "builtin_linear" : "imported"; }

ProjectorKind projector_kind_from_string(const std::string& s) {
  if (s == "builtin_linear" || s == "linear") return ProjectorKind::builtin_linear;
  if (s == "imported") return ProjectorKind::imported;
  throw Error(Errc::invalid_argument, "unknown projector kind '" + s + "'");
}

double coarsest_step(const Eigen::MatrixXd& inputs) {
  double h = 0.0;
  std::vector<double> row(static_cast<std::size_t>(inputs.cols()));
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) row[static_cast<std::size_t>(c)] = inputs(r, c);
    std::sort(row.begin(), row.end());
    for (std::size_t i = 1; i < row.size(); ++i) h = std::max(h, row[i] - row[i - 1]);
  }
  return h;
}

std::vector<double> GridEmbedding::grid_input(std::size_t i) const {
  if (i >= size()) throw Error(Errc::index_out_of_range, "grid index out of range");
  const auto col = inputs_.col(static_cast<Eigen::Index>(i));
  return std::vector<double>(col.data(), col.data() + col.size());
}

Point2 GridEmbedding::linear_map(std::span<const double> p) const {
  const Eigen::VectorXd d = as_vector(p) - mean_;
  return {axes_.col(0).dot(d), axes_.col(1).dot(d)};
}

std::size_t GridEmbedding::nearest_input(std::span<const double> p) const {
  const auto v = as_vector(p);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < inputs_.cols(); ++c) {
    const double d = (inputs_.col(c) - v).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

Point2 GridEmbedding::project(std::span<const double> p) const {
  if (p.size() != input_dim())
    throw Error(Errc::dimension_mismatch, "input has dimension " + std::to_string(p.size()) + ", embedding expects " +
                                              std::to_string(input_dim()));
  if (kind_ == ProjectorKind::imported) return embedded_[nearest_input(p)];
  const Point2 q = linear_map(p);
  if (auto it = collisions_.find({q.x, q.y}); it != collisions_.end()) {
    const auto v = as_vector(p);
    for (std::size_t i : it->second)
      if (inputs_.col(static_cast<Eigen::Index>(i)) == v) return embedded_[i];
  }
  return q;
}

void GridEmbedding::finalize(std::vector<Point2> raw) {
  const std::size_t n = raw.size();
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& p : raw) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(Errc::embedding_collision, "non-finite embedded point");
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  const double extent = std::max(xhi - xlo, yhi - ylo);
  if (!(extent > 0.0)) throw Error(Errc::embedding_collision, "all grid inputs embed to one point");

  embedded_ = raw;
  collisions_.clear();
  perturbed_.clear();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_coord = [this](std::size_t a, std::size_t b) {
    const Point2 &p = embedded_[a], &q = embedded_[b];
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
    return a < b;
  };
  for (int pass = 0;; ++pass) {
    std::sort(order.begin(), order.end(), by_coord);
    bool clean = true;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i + 1;
      while (j < n && embedded_[order[j]] == embedded_[order[i]]) ++j;
      if (j - i > 1) {
        clean = false;
        if (pass >= 8) throw Error(Errc::embedding_collision, "cannot separate coincident embedded points");
        const Point2 base = embedded_[order[i]];
        for (std::size_t r = i; r < j; ++r) {
          const std::size_t idx = order[r];
          for (std::size_t s = i; s < r; ++s)
            if (inputs_.col(static_cast<Eigen::Index>(order[s])) == inputs_.col(static_cast<Eigen::Index>(idx)))
              throw Error(Errc::embedding_collision, "grid inputs " + std::to_string(order[s]) + " and " +
                                                         std::to_string(idx) + " are identical");
          if (r == i) continue;
          const double step = kPerturbation * extent * static_cast<double>((r - i) << pass);
          embedded_[idx] = {base.x + step, base.y + 0.5 * step};
          perturbed_.push_back(idx);
        }
      }
      i = j;
    }
    if (clean) break;
  }
  std::sort(perturbed_.begin(), perturbed_.end());
  perturbed_.erase(std::unique(perturbed_.begin(), perturbed_.end()), perturbed_.end());
  for (std::size_t idx : perturbed_) collisions_[{raw[idx].x, raw[idx].y}].push_back(idx);
  if (!perturbed_.empty())
    log::info("perturbed " + std::to_string(perturbed_.size()) + " coincident embedded grid points");
  build_index();
}

void GridEmbedding::build_index() {
  BucketIndex& ix = index_;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& p : embedded_) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  const double n = static_cast<double>(embedded_.size());
  const double wx = xhi - xlo, wy = yhi - ylo;
  double cell = std::sqrt(wx * wy / n);
  cell = std::max(cell, std::max(wx, wy) / n);
  ix.x0 = xlo;
  ix.y0 = ylo;
  ix.cell = cell;
  ix.nx = static_cast<std::size_t>(wx / cell) + 1;
  ix.ny = static_cast<std::size_t>(wy / cell) + 1;
  ix.cells.assign(ix.nx * ix.ny, {});
  for (std::size_t i = 0; i < embedded_.size(); ++i) {
    const auto cx = std::min(ix.nx - 1, static_cast<std::size_t>((embedded_[i].x - xlo) / cell));
    const auto cy = std::min(ix.ny - 1, static_cast<std::size_t>((embedded_[i].y - ylo) / cell));
    ix.cells[cy * ix.nx + cx].push_back(i);
  }
}

std::size_t GridEmbedding::nearest(const Point2& q) const {
  const BucketIndex& ix = index_;
  const auto clamp_cell = [](double t, std::size_t count) -> std::ptrdiff_t {
    if (!(t > 0.0)) return 0;
    return static_cast<std::ptrdiff_t>(std::min(static_cast<double>(count - 1), std::floor(t)));
  };
  const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(ix.nx), ny = static_cast<std::ptrdiff_t>(ix.ny);
  const std::ptrdiff_t cx = clamp_cell((q.x - ix.x0) / ix.cell, ix.nx);
  const std::ptrdiff_t cy = clamp_cell((q.y - ix.y0) / ix.cell, ix.ny);

  std::size_t best = npos;
  double best_d = std::numeric_limits<double>::infinity();
  const auto visit = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    const double rx0 = ix.x0 + static_cast<double>(i) * ix.cell, ry0 = ix.y0 + static_cast<double>(j) * ix.cell;
    const double dx = std::max({rx0 - q.x, 0.0, q.x - (rx0 + ix.cell)});
    const double dy = std::max({ry0 - q.y, 0.0, q.y - (ry0 + ix.cell)});
    if (best != npos && dx * dx + dy * dy > best_d * (1.0 + 1e-9)) return;
    for (std::size_t k : ix.cells[static_cast<std::size_t>(j * nx + i)]) {
      if (best == npos || closer(q, embedded_[k], k, embedded_[best], best)) {
        best = k;
        best_d = dist2(q, embedded_[k]);
      }
    }
  };
  for (std::ptrdiff_t r = 0;; ++r) {
    for (std::ptrdiff_t j = cy - r; j <= cy + r; ++j) {
      if (j < 0 || j >= ny) continue;
      const bool edge_row = (j == cy - r || j == cy + r);
      for (std::ptrdiff_t i = cx - r; i <= cx + r; i += (edge_row || r == 0) ? 1 : 2 * r) {
        if (i >= 0 && i < nx) visit(i, j);
      }
    }
    // Lower bound on the distance to every cell outside the searched block.
    double lb = std::numeric_limits<double>::infinity();
    if (cx - r > 0) lb = std::min(lb, std::max(0.0, q.x - (ix.x0 + static_cast<double>(cx - r) * ix.cell)));
    if (cx + r + 1 < nx) lb = std::min(lb, std::max(0.0, ix.x0 + static_cast<double>(cx + r + 1) * ix.cell - q.x));
    if (cy - r > 0) lb = std::min(lb, std::max(0.0, q.y - (ix.y0 + static_cast<double>(cy - r) * ix.cell)));
    if (cy + r + 1 < ny) lb = std::min(lb, std::max(0.0, ix.y0 + static_cast<double>(cy + r + 1) * ix.cell - q.y));
    if (std::isinf(lb)) break;
    if (best != npos && lb * lb > best_d * (1.0 + 1e-9)) break;
  }
  return best;
}

sampling::BoundingBox GridEmbedding::embedded_box() const {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& p : embedded_) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  if (!(xlo < xhi) || !(ylo < yhi))
    throw Error(Errc::degenerate_input, "embedded grid is collinear; no two-dimensional box");
  return sampling::BoundingBox({{xlo, xhi}, {ylo, yhi}});
}

void GridEmbedding::write_embedding(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << "grid_index,u,v\n";
  for (std::size_t i = 0; i < embedded_.size(); ++i)
    out << i << ',' << detail::format_double(embedded_[i].x) << ',' << detail::format_double(embedded_[i].y) << '\n';
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

GridEmbedding fit_linear(Eigen::MatrixXd inputs, double spacing, const LinearProjectorOptions& opts) {
  const Eigen::Index dim = inputs.rows(), count = inputs.cols();
  if (count < 3) throw Error(Errc::invalid_argument, "embedding needs at least 3 grid inputs");
  if (dim < 2) throw Error(Errc::invalid_argument, "linear projector needs inputs of dimension >= 2");
  if (!inputs.allFinite()) throw Error(Errc::invalid_argument, "grid inputs must be finite");

  GridEmbedding e;
  e.kind_ = ProjectorKind::builtin_linear;
  e.mean_ = inputs.rowwise().mean();
  e.spacing_ = spacing > 0.0 ? spacing : coarsest_step(inputs);

  // Covariance products without forming the covariance: C W = X (X^T W) / count.
  const auto apply = [&](const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
    Eigen::MatrixXd t = inputs.transpose() * w;
    t.rowwise() -= e.mean_.transpose() * w;
    Eigen::MatrixXd z = inputs * t;
    z -= e.mean_ * t.colwise().sum();
    return z / static_cast<double>(count);
  };

  const Eigen::Index block = std::min<Eigen::Index>(dim, 4);
  CounterRng rng(opts.seed);
  Eigen::MatrixXd w(dim, block);
  for (Eigen::Index c = 0; c < block; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) w(r, c) = rng.uniform(-1.0, 1.0);
  w = Eigen::HouseholderQR<Eigen::MatrixXd>(w).householderQ() * Eigen::MatrixXd::Identity(dim, block);

  Eigen::MatrixXd ritz(dim, 2);
  std::size_t it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::MatrixXd z = apply(w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w.transpose() * z);
    // Descending Ritz values.
    const Eigen::MatrixXd v = eig.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd theta = eig.eigenvalues().reverse();
    const Eigen::MatrixXd u = w * v, cu = z * v;
    ritz = u.leftCols(2);
    const double scale = std::max(theta(0), 0.0);
    if (scale == 0.0) {
      converged = true;
      break;
    }
    double worst = 0.0;
    for (Eigen::Index j = 0; j < 2; ++j) worst = std::max(worst, (cu.col(j) - theta(j) * u.col(j)).norm());
    if (worst <= opts.tolerance * scale) {
      converged = true;
      break;
    }
    w = Eigen::HouseholderQR<Eigen::MatrixXd>(cu).householderQ() * Eigen::MatrixXd::Identity(dim, block);
  }
  if (!converged) log::warn("principal directions did not converge in " + std::to_string(it) + " iterations");

  for (Eigen::Index j = 0; j < 2; ++j) {
    Eigen::Index arg = 0;
    ritz.col(j).cwiseAbs().maxCoeff(&arg);
    if (ritz(arg, j) < 0.0) ritz.col(j) = -ritz.col(j);
  }
  e.axes_ = ritz;
  e.inputs_ = std::move(inputs);

  std::vector<Point2> raw(static_cast<std::size_t>(count));
  for (Eigen::Index c = 0; c < count; ++c)
    raw[static_cast<std::size_t>(c)] =
        e.linear_map(std::span<const double>(e.inputs_.col(c).data(), static_cast<std::size_t>(dim)));
  e.finalize(std::move(raw));
  return e;
}

GridEmbedding fit_imported(Eigen::MatrixXd inputs, double spacing, const std::filesystem::path& csv) {
  const std::size_t count = static_cast<std::size_t>(inputs.cols());
  if (count < 3) throw Error(Errc::invalid_argument, "embedding needs at least 3 grid inputs");
  std::ifstream in(csv);
  if (!in) throw Error(Errc::io_failure, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::format_error, csv.string() + ": missing header");
  const auto header = detail::split_csv(line);
  if (header.size() != 3 || header[0] != "grid_index" || header[1] != "u" || header[2] != "v")
    throw Error(Errc::format_error, csv.string() + ": header must be grid_index,u,v");

  std::vector<Point2> raw(count);
  std::vector<bool> seen(count, false);
  std::size_t row = 1, rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    const auto where = csv.string() + ": row " + std::to_string(row);
    if (f.size() != 3) throw Error(Errc::format_error, where + " needs 3 fields");
    const auto idx = detail::parse_number<std::size_t>(f[0]);
    const auto u = detail::parse_number<double>(f[1]);
    const auto v = detail::parse_number<double>(f[2]);
    if (!idx || !u || !v || !std::isfinite(*u) || !std::isfinite(*v)) throw Error(Errc::format_error, where + " is malformed");
    if (*idx >= count) throw Error(Errc::format_error, where + " has an out-of-range grid index");
    if (seen[*idx]) throw Error(Errc::format_error, where + " repeats grid index " + std::to_string(*idx));
    seen[*idx] = true;
    raw[*idx] = {*u, *v};
    ++rows;
  }
  if (rows != count)
    throw Error(Errc::format_error, csv.string() + ": " + std::to_string(rows) + " rows for " + std::to_string(count) +
                                        " grid inputs");

  GridEmbedding e;
  e.kind_ = ProjectorKind::imported;
  e.spacing_ = spacing > 0.0 ? spacing : coarsest_step(inputs);
  e.inputs_ = std::move(inputs);
  e.finalize(std::move(raw));
  return e;
}

double nu(const transport::SolutionVector& y) {
  double s = 0.0;
  for (double v : y.values) s += v * v;
  return std::sqrt(s);
}

double reduced_residual(const GridEmbedding& e, const Point2& q, const transport::SolutionVector& y,
                        SolverContext& solver) {
  return solver.residual(e.pseudo_inverse(q), y);
}

ReducedSpace::ReducedSpace(std::shared_ptr<const GridEmbedding> embedding)
    : embedding_(std::move(embedding)), box_(embedding_->embedded_box()) {}

Recovered ReducedSpace::recover(const Point2& q) const {
  const std::size_t i = embedding_->nearest(q);
  return {embedding_->grid_input(i), embedding_->embedded()[i], i};
}

}  // namespace asadg::reduced
