#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "asadg/case2_grid.hpp"
#include "asadg/error.hpp"
#include "asadg/problems.hpp"
#include "asadg/reduced.hpp"
#include "asadg/rng.hpp"

using namespace asadg;
using geometry::Point2;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("asadg_reduced_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Errc error_code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an asadg::Error");
  return Errc::invalid_argument;
}

// Columns are points of a planar lattice placed in R^dim by an orthonormal pair.
Eigen::MatrixXd planar_grid(Eigen::Index dim, int side, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::MatrixXd basis(dim, 2);
  for (Eigen::Index r = 0; r < dim; ++r) basis(r, 0) = rng.uniform(-1, 1), basis(r, 1) = rng.uniform(-1, 1);
  basis = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() * Eigen::MatrixXd::Identity(dim, 2);
  Eigen::VectorXd offset(dim);
  for (Eigen::Index r = 0; r < dim; ++r) offset(r) = rng.uniform(-3, 3);
  Eigen::MatrixXd x(dim, side * side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      x.col(i * side + j) = offset + basis * Eigen::Vector2d(0.7 * i + 0.05 * j * j, 1.3 * j);
  return x;
}

std::size_t brute_nearest(const std::vector<Point2>& pts, const Point2& q) {
  std::size_t best = 0;
  long double bd = INFINITY;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const long double dx = (long double)pts[i].x - q.x, dy = (long double)pts[i].y - q.y;
    const long double d = dx * dx + dy * dy;
    if (d < bd) bd = d, best = i;
  }
  return best;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

SolverContext case2_context(std::size_t n, double tol = 1e-6) {
  return SolverContext(transport::SpatialGrid(n), problems::case2_param_map(), tol);
}

}  // namespace

TEST_SUITE("reduced") {
  TEST_CASE("nu is the Euclidean norm of the output") {
    transport::SolutionVector y(4);
    CHECK(reduced::nu(y) == 0.0);
    y.values[0] = 1.0;
    CHECK(reduced::nu(y) == 1.0);
    y.values[0] = 3.0;
    y.values[3] = 4.0;
    CHECK(reduced::nu(y) == 5.0);

    CounterRng rng(11);
    for (int t = 0; t < 50; ++t) {
      transport::SolutionVector a(9), b(9), s(9), c(9);
      const double k = rng.uniform(-5, 5);
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        a.values[i] = rng.uniform(-2, 2);
        b.values[i] = rng.uniform(-2, 2);
        s.values[i] = a.values[i] + b.values[i];
        c.values[i] = k * a.values[i];
      }
      CHECK(reduced::nu(c) == doctest::Approx(std::abs(k) * reduced::nu(a)).epsilon(1e-12));
      CHECK(reduced::nu(s) <= reduced::nu(a) + reduced::nu(b) + 1e-12);
    }
  }

  TEST_CASE("planar grid keeps pairwise distances") {
    const Eigen::MatrixXd x = planar_grid(40, 7, 3);
    const auto e = reduced::fit_linear(x);
    CHECK(e.kind() == reduced::ProjectorKind::builtin_linear);
    CHECK(e.perturbed().empty());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
        const Point2 a = e.embedded()[i], b = e.embedded()[j];
        const double d2 = std::hypot(a.x - b.x, a.y - b.y);
        CHECK(d2 == doctest::Approx((x.col(i) - x.col(j)).norm()).epsilon(1e-9));
      }
    // The axes are orthonormal.
    CHECK((e.axes().transpose() * e.axes() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
  }

  TEST_CASE("projection is linear, total and exact on the grid") {
    const Eigen::MatrixXd x = planar_grid(12, 5, 8);
    const auto e = reduced::fit_linear(x);
    const std::vector<double> mean(e.mean().data(), e.mean().data() + e.mean().size());
    CHECK(e.project(mean) == Point2{0.0, 0.0});
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto p = e.grid_input(i);
      CHECK(e.project(p) == e.embedded()[i]);
      CHECK(e.pseudo_inverse(e.embedded()[i]) == p);
      CHECK(e.pseudo_inverse(e.project(p)) == p);
    }
    std::vector<double> far(12, 1e6);
    const Point2 q = e.project(far);
    CHECK(std::isfinite(q.x));
    CHECK(std::isfinite(q.y));
    CHECK(error_code_of([&] { e.project(std::vector<double>(11)); }) == Errc::dimension_mismatch);
  }

  TEST_CASE("identical inputs cannot be embedded") {
    Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 6, 0.25);
    CHECK(error_code_of([&] { reduced::fit_linear(same); }) == Errc::embedding_collision);
    Eigen::MatrixXd dup = planar_grid(6, 3, 1);
    dup.col(4) = dup.col(7);
    CHECK(error_code_of([&] { reduced::fit_linear(dup); }) == Errc::embedding_collision);
    CHECK(error_code_of([&] { reduced::fit_linear(Eigen::MatrixXd::Random(4, 2)); }) == Errc::invalid_argument);
    CHECK(error_code_of([&] { reduced::fit_linear(Eigen::MatrixXd::Random(1, 5)); }) == Errc::invalid_argument);
  }

  TEST_CASE("coincident projections are separated by index") {
    // The third coordinate has no variance along the principal plane.
    Eigen::MatrixXd x(3, 8);
    int c = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) x.col(c++) = Eigen::Vector3d(4.0 * i, 3.0 * j, 0.01 * k);
    const auto e = reduced::fit_linear(x);
    CHECK(e.perturbed().size() == 4);
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : e.embedded()) distinct.insert({p.x, p.y});
    CHECK(distinct.size() == 8);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e.pseudo_inverse(e.project(e.grid_input(i))) == e.grid_input(i));
  }

  TEST_CASE("nearest agrees with brute force") {
    CounterRng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(5, 60 + trial * 7, [&] { return rng.uniform(-1, 1); });
      const auto e = reduced::fit_linear(x);
      for (int q = 0; q < 200; ++q) {
        const Point2 p{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        const std::size_t i = e.nearest(p);
        const std::size_t j = brute_nearest(e.embedded(), p);
        const auto d = [&](std::size_t k) { return std::hypot(e.embedded()[k].x - p.x, e.embedded()[k].y - p.y); };
        CHECK(d(i) == doctest::Approx(d(j)).epsilon(1e-14));
        // Containment: the recovered input is a grid column.
        const auto r = e.pseudo_inverse(p);
        CHECK(r == e.grid_input(i));
      }
    }
  }

  TEST_CASE("imported embeddings") {
    const auto dir = scratch_dir("import");
    Eigen::MatrixXd x(2, 3);
    x << 0, 1, 2, 0, 1, 0;
    write_text(dir / "tie.csv", "grid_index,u,v\n1,0,0\n0,2,0\n2,1,5\n");
    const auto e = reduced::fit_imported(x, 0.0, dir / "tie.csv");
    CHECK(e.kind() == reduced::ProjectorKind::imported);
    CHECK(e.embedded()[0] == Point2{2, 0});
    CHECK(e.embedded()[1] == Point2{0, 0});
    // Equidistant from grid indices 0 and 1.
    CHECK(e.nearest({1.0, 0.0}) == 0);
    CHECK(e.nearest({1.0, -7.0}) == 0);
    CHECK(e.pseudo_inverse({0.0, 0.0}) == e.grid_input(1));
    // Projection goes through the nearest grid input.
    CHECK(e.project(std::vector<double>{0.9, 0.8}) == Point2{0, 0});
    CHECK(e.spacing() == 1.0);

    const auto bad = [&](const std::string& name, const std::string& body) {
      write_text(dir / name, body);
      return error_code_of([&] { reduced::fit_imported(x, 0.0, dir / name); });
    };
    CHECK(bad("header.csv", "index,u,v\n0,0,0\n1,1,0\n2,0,1\n") == Errc::format_error);
    CHECK(bad("short.csv", "grid_index,u,v\n0,0,0\n1,1,0\n") == Errc::format_error);
    CHECK(bad("repeat.csv", "grid_index,u,v\n0,0,0\n0,1,0\n2,0,1\n") == Errc::format_error);
    CHECK(bad("range.csv", "grid_index,u,v\n0,0,0\n1,1,0\n3,0,1\n") == Errc::format_error);
    CHECK(bad("text.csv", "grid_index,u,v\n0,0,0\n1,one,0\n2,0,1\n") == Errc::format_error);
    CHECK(bad("fields.csv", "grid_index,u,v\n0,0,0,0\n1,1,0\n2,0,1\n") == Errc::format_error);
    CHECK(bad("same.csv", "grid_index,u,v\n0,0,0\n1,0,0\n2,0,0\n") == Errc::embedding_collision);
    CHECK(error_code_of([&] { reduced::fit_imported(x, 0.0, dir / "missing.csv"); }) == Errc::io_failure);
  }

  TEST_CASE("linear embedding survives an export and import") {
    const auto dir = scratch_dir("roundtrip");
    const Eigen::MatrixXd x = planar_grid(9, 6, 5);
    const auto a = reduced::fit_linear(x);
    a.write_embedding(dir / "emb.csv");
    const auto b = reduced::fit_imported(x, a.spacing(), dir / "emb.csv");
    CHECK(b.embedded() == a.embedded());
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.pseudo_inverse(b.project(b.grid_input(i))) == b.grid_input(i));
  }

  TEST_CASE("coefficient grid") {
    case2::GridSpec spec;
    spec.node_count = 33;
    const auto g = case2::build_grid(spec);
    CHECK(g.size() == 4096);
    CHECK(g.spacing() == doctest::Approx(2.0 / 3.0));
    CHECK(g.coefficients[0].size() == 18);
    // Unvaried coefficients sit at their midpoint.
    CHECK(g.coefficients[5][spec.slot({case2::Field::mach, 3})] == 0.0);
    CHECK(g.coefficients[0][0] == 0.5);
    CHECK(g.coefficients.back()[0] == 1.0);
    const Eigen::MatrixXd x = g.nodal_inputs();
    CHECK(x.rows() == 99);
    CHECK(x.cols() == 4096);
    // First point: mach c0 = 0.5, c1 = -0.1, so m = 0.5 - 0.1 (2x - 1).
    CHECK(x(0, 0) == doctest::Approx(0.6));
    CHECK(x(32, 0) == doctest::Approx(0.4));

    CHECK(spec.column_name(0) == "mach_c0");
    CHECK(spec.column_name(7) == "re_source_c1");
    CHECK(spec.column_name(17) == "im_source_c5");

    case2::GridSpec risky = spec;
    risky.varied.push_back({case2::Field::mach, 2});
    risky.varied.push_back({case2::Field::mach, 3});
    risky.varied.push_back({case2::Field::mach, 4});
    risky.varied.push_back({case2::Field::mach, 5});
    CHECK_NOTHROW(risky.validate());
    risky.mach_higher = {-0.2, 0.2};
    CHECK(error_code_of([&] { risky.validate(); }) == Errc::invalid_argument);
    case2::GridSpec twice = spec;
    twice.varied.push_back({case2::Field::mach, 0});
    CHECK(error_code_of([&] { twice.validate(); }) == Errc::invalid_argument);
    case2::GridSpec big = spec;
    big.levels = 40;
    CHECK(error_code_of([&] { case2::build_grid(big, 1000000); }) == Errc::budget_exceeded);
  }

  TEST_CASE("coefficient grid files") {
    const auto dir = scratch_dir("grid");
    case2::GridSpec spec;
    spec.levels = 2;
    spec.varied = {{case2::Field::mach, 0}, {case2::Field::im_source, 3}};
    const auto g = case2::build_grid(spec);
    case2::write_grid(g, dir / "grid.csv");
    const auto r = case2::read_grid(dir / "grid.csv");
    CHECK(r.coefficients == g.coefficients);
    CHECK(r.spec.to_json() == g.spec.to_json());
    CHECK(std::filesystem::exists(dir / "grid.json"));

    std::ofstream(dir / "grid.csv", std::ios::app) << "1,2,3\n";
    CHECK(error_code_of([&] { case2::read_grid(dir / "grid.csv"); }) == Errc::format_error);
    CHECK(error_code_of([&] { case2::read_grid(dir / "nothing.csv"); }) == Errc::io_failure);
  }

  TEST_CASE("grid identity on the default case-2 grid") {
    case2::GridSpec spec;
    spec.node_count = 65;
    const auto g = case2::build_grid(spec);
    const auto e = reduced::fit_linear(g.nodal_inputs(), g.spacing());
    CHECK(e.size() == 4096);
    CHECK(e.input_dim() == 195);
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : e.embedded()) distinct.insert({p.x, p.y});
    CHECK(distinct.size() == 4096);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto p = e.grid_input(i);
      if (e.pseudo_inverse(e.project(p)) != p) ++failures;
    }
    CHECK(failures == 0);
  }

  TEST_CASE("refinement never worsens recovery") {
    for (std::size_t varied : {2u, 3u}) {
      case2::GridSpec spec;
      spec.node_count = 33;
      spec.varied = {{case2::Field::mach, 0}, {case2::Field::re_source, 0}, {case2::Field::im_source, 1}};
      spec.varied.resize(varied);
      const auto box = spec.varied_box();
      CounterRng rng(99);
      std::vector<std::vector<double>> queries;
      for (int q = 0; q < 100; ++q) {
        std::vector<double> v(box.dim());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(box.lo(i), box.hi(i));
        queries.push_back(spec.expand(spec.coefficients_from_varied(v)));
      }
      double previous = INFINITY;
      for (std::size_t levels : {3u, 5u, 9u}) {
        spec.levels = levels;
        const auto g = case2::build_grid(spec);
        const auto e = reduced::fit_linear(g.nodal_inputs(), g.spacing());
        double worst = 0.0;
        for (const auto& q : queries) {
          const auto r = e.pseudo_inverse(e.project(q));
          const Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
          Eigen::Index best = 0;
          (e.grid_inputs().colwise() - qv).colwise().squaredNorm().minCoeff(&best);
          worst = std::max(worst, (Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()) - e.grid_inputs().col(best)).norm());
        }
        CHECK(worst <= previous + 1e-12);
        if (varied == 2) CHECK(worst < 1e-9);
        previous = worst;
      }
    }
  }

  TEST_CASE("reduced residual") {
    case2::GridSpec spec;
    spec.node_count = 129;
    spec.varied = {{case2::Field::re_source, 0}, {case2::Field::im_source, 0}};
    const auto g = case2::build_grid(spec);
    const auto e = reduced::fit_linear(g.nodal_inputs(), g.spacing());
    SolverContext ctx = case2_context(129);
    const std::size_t v = 6;
    const auto solved = ctx.solve(e.grid_input(v));
    CHECK(reduced::reduced_residual(e, e.embedded()[v], solved.output, ctx) <= 1e-6);

    // With y = 0 only the source term is left.
    const auto p = ctx.params(e.grid_input(v));
    const auto src = std::get<std::vector<transport::Complex>>(p.source);
    double rms = 0.0;
    for (const auto& s : src) rms += std::norm(s);
    rms = std::sqrt(rms / static_cast<double>(src.size()));
    const double r0 = reduced::reduced_residual(e, e.embedded()[v], transport::SolutionVector(129), ctx);
    CHECK(r0 == doctest::Approx(rms).epsilon(0.05));
    CHECK(r0 > 0.1);
  }

  TEST_CASE("affine response over source coefficients") {
    case2::GridSpec spec;
    spec.node_count = 129;
    spec.levels = 4;
    spec.varied = {{case2::Field::re_source, 0}, {case2::Field::im_source, 0}};
    const auto g = case2::build_grid(spec);
    auto e = std::make_shared<const reduced::GridEmbedding>(reduced::fit_linear(g.nodal_inputs(), g.spacing()));
    reduced::ReducedSpace space(e);
    SolverContext ctx = case2_context(129);
    AsadgSettings st;
    st.rho0 = 1e-5;
    AdaptiveSampler sampler(space, ctx, st);
    const RunReport rep = sampler.run();
    CHECK(rep.complete);
    CHECK(rep.final_points == 4);
    CHECK(ctx.counters().residual_calls == 2);
    for (const Candidate* c : sampler.score_candidates()) {
      CHECK(c->rho <= 1e-6);
      CHECK(c->recovered.grid_index != npos);
    }
    std::set<std::size_t> grid_points;
    for (const auto& p : sampler.points()) {
      grid_points.insert(p.grid_index);
      CHECK(p.working == e->embedded()[p.grid_index]);
    }
    CHECK(grid_points.size() == 4);
  }

  TEST_CASE("reduced space recovers grid members") {
    case2::GridSpec spec;
    spec.node_count = 33;
    spec.levels = 3;
    const auto g = case2::build_grid(spec);
    auto e = std::make_shared<const reduced::GridEmbedding>(reduced::fit_linear(g.nodal_inputs(), g.spacing()));
    reduced::ReducedSpace space(e);
    CHECK(space.input_dim() == 99);
    const auto box = space.box();
    const Recovered r = space.recover({box.lo(0), box.lo(1)});
    CHECK(r.grid_index < e->size());
    CHECK(r.input == e->grid_input(r.grid_index));
    CHECK(r.working == e->embedded()[r.grid_index]);

    SolverContext ctx = case2_context(33, 1e-6);
    AsadgSettings st;
    st.rho0 = 1e-3;
    st.stop.max_iterations = 4;
    AdaptiveSampler sampler(space, ctx, st);
    const RunReport rep = sampler.run();
    CHECK(rep.complete);
    std::set<std::size_t> used;
    for (const auto& p : sampler.points()) {
      CHECK(used.insert(p.grid_index).second);
      CHECK(p.residual_at_creation <= 1e-6);
    }
  }
}
