#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "asadg/error.hpp"
#include "asadg/rng.hpp"
#include "asadg/surrogate.hpp"

using namespace asadg;
using namespace asadg::surrogate;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return rng.uniform(lo, hi); });
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

// Norm-wise relative error between backpropagation and central differences.
double gradient_check(MlpModel model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double h) {
  const LossGradient g = loss_and_gradient(model, x, y);
  double num = 0.0, den_a = 0.0, den_b = 0.0;
  auto& layers = model.layers();
  const auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = loss_and_gradient(model, x, y).loss;
    param = saved - h;
    const double down = loss_and_gradient(model, x, y).loss;
    param = saved;
    const double fd = (up - down) / (2.0 * h);
    num += (fd - analytic) * (fd - analytic);
    den_a += fd * fd;
    den_b += analytic * analytic;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (Eigen::Index r = 0; r < layers[l].weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layers[l].weights.cols(); ++c)
        probe(layers[l].weights(r, c), g.gradient[l].weights(r, c));
    for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r) probe(layers[l].bias(r), g.gradient[l].bias(r));
  }
  return std::sqrt(num) / std::max(std::sqrt(std::max(den_a, den_b)), 1e-300);
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("config validation") {
    MlpConfig c;
    CHECK_NOTHROW(c.validate());
    c.hidden_sizes.clear();
    CHECK(error_code_of([&] { c.validate(); }) == Errc::invalid_argument);
    c = {};
    c.batch_size = 101;
    CHECK(error_code_of([&] { c.validate(100); }) == Errc::invalid_argument);
    c = {};
    c.learning_rate = -1.0;
    CHECK(error_code_of([&] { c.validate(); }) == Errc::invalid_argument);
    c = {};
    c.hidden_sizes = {4, 0};
    CHECK(error_code_of([&] { c.validate(); }) == Errc::invalid_argument);

    MlpConfig d;
    d.hidden_sizes = {3, 5};
    d.seed = 77;
    d.learning_rate = 0.125;
    CHECK(MlpConfig::from_json(d.to_json()).to_json() == d.to_json());
  }

  TEST_CASE("initialization is bounded by fan-in") {
    MlpConfig c;
    c.input_dim = 9;
    c.output_dim = 3;
    c.hidden_sizes = {16};
    const MlpModel m = MlpModel::initialize(c);
    REQUIRE(m.layers().size() == 2);
    CHECK(m.layers()[0].weights.rows() == 16);
    CHECK(m.layers()[0].weights.cols() == 9);
    CHECK(m.layers()[0].weights.cwiseAbs().maxCoeff() <= 1.0 / 3.0);
    CHECK(m.layers()[1].weights.cwiseAbs().maxCoeff() <= 0.25);
    CHECK(m.parameter_count() == 9 * 16 + 16 + 16 * 3 + 3);
  }

  TEST_CASE("predict") {
    SUBCASE("zero network") {
      std::vector<Layer> layers{{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                                {Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)}};
      const MlpModel m(layers);
      CHECK(m.predict(std::vector<double>{1.0, -2.0, 3.0}) == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("identity layer") {
      const MlpModel m({{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3)}});
      const std::vector<double> x{0.5, -7.0, 1e3};
      CHECK(m.predict(x) == x);
    }
    SUBCASE("deterministic and shape preserving") {
      MlpConfig c;
      c.input_dim = 5;
      c.output_dim = 7;
      c.hidden_sizes = {6, 4};
      const MlpModel m = MlpModel::initialize(c);
      CounterRng rng(1);
      const Eigen::MatrixXd x = random_matrix(5, 10, rng);
      CHECK(m.predict(x) == m.predict(x));
      CHECK(m.predict(x).rows() == 7);
      const std::vector<double> one(x.col(3).data(), x.col(3).data() + 5);
      const auto y = m.predict(one);
      CHECK(y.size() == 7);
      for (std::size_t i = 0; i < 7; ++i) CHECK(y[i] == doctest::Approx(m.predict(x)(static_cast<Eigen::Index>(i), 3)).epsilon(1e-15));
      CHECK(error_code_of([&] { m.predict(std::vector<double>(4)); }) == Errc::dimension_mismatch);
    }
    SUBCASE("layers must chain") {
      std::vector<Layer> layers{{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                                {Eigen::MatrixXd::Zero(2, 5), Eigen::VectorXd::Zero(2)}};
      CHECK(error_code_of([&] { MlpModel m(layers); }) == Errc::dimension_mismatch);
      CHECK(error_code_of([&] { MlpModel m(std::vector<Layer>{}); }) == Errc::dimension_mismatch);
    }
  }

  TEST_CASE("backpropagation matches central differences") {
    CounterRng rng(2024);
    for (int net = 0; net < 20; ++net) {
      MlpConfig c;
      c.input_dim = 1 + rng.below(8);
      c.output_dim = 1 + rng.below(8);
      c.hidden_sizes.assign(1 + rng.below(2), 0);
      for (auto& h : c.hidden_sizes) h = 1 + rng.below(8);
      c.seed = rng();
      const MlpModel m = MlpModel::initialize(c);
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
      const Eigen::MatrixXd x = random_matrix(static_cast<Eigen::Index>(c.input_dim), n, rng);
      // Targets at least 0.5 away from the prediction keep the check off the |e| kink.
      Eigen::MatrixXd y = m.predict(x);
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
      CHECK(gradient_check(m, x, y, 1e-5) < 1e-4);
    }
  }

  TEST_CASE("loss subgradient is zero at zero error") {
    MlpConfig c;
    c.input_dim = 2;
    c.output_dim = 2;
    c.hidden_sizes = {3};
    const MlpModel m = MlpModel::initialize(c);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 4);
    const LossGradient g = loss_and_gradient(m, x, m.predict(x));
    CHECK(g.loss == 0.0);
    for (const auto& l : g.gradient) {
      CHECK(l.weights.isZero(0.0));
      CHECK(l.bias.isZero(0.0));
    }
  }

  TEST_CASE("training") {
    CounterRng rng(5);
    Dataset d{random_matrix(3, 40, rng), random_matrix(2, 40, rng)};
    MlpConfig c;
    c.input_dim = 3;
    c.output_dim = 2;
    c.hidden_sizes = {8};
    c.epochs = 30;
    c.batch_size = 16;
    c.learning_rate = 0.05;
    c.seed = 9;

    SUBCASE("constant target descends") {
      Dataset same{Eigen::MatrixXd::Constant(3, 10, 0.3), Eigen::MatrixXd::Constant(2, 10, 0.8)};
      MlpConfig one = c;
      one.hidden_sizes = {1};
      one.batch_size = 5;
      one.epochs = 200;
      const double before = mean_absolute_error(MlpModel::initialize(one), same);
      const TrainResult r = train(same, one);
      CHECK(mean_absolute_error(r.model, same) < before);
      CHECK(r.loss_trace.back() < r.loss_trace.front());
    }
    SUBCASE("zero learning rate leaves the weights") {
      MlpConfig z = c;
      z.learning_rate = 0.0;
      const TrainResult r = train(d, z);
      const MlpModel init = MlpModel::initialize(z);
      for (std::size_t l = 0; l < init.layers().size(); ++l) {
        CHECK(r.model.layers()[l].weights == init.layers()[l].weights);
        CHECK(r.model.layers()[l].bias == init.layers()[l].bias);
      }
    }
    SUBCASE("seeded runs are bit-identical") {
      const TrainResult a = train(d, c), b = train(d, c);
      CHECK(a.loss_trace == b.loss_trace);
      CHECK(a.loss_trace.size() == 30);
      CHECK(a.model.to_json() == b.model.to_json());
      MlpConfig other = c;
      other.seed = 10;
      CHECK(train(d, other).model.to_json() != a.model.to_json());
    }
    SUBCASE("shape and size errors") {
      MlpConfig wrong = c;
      wrong.input_dim = 4;
      CHECK(error_code_of([&] { train(d, wrong); }) == Errc::dimension_mismatch);
      MlpConfig big = c;
      big.batch_size = 41;
      CHECK(error_code_of([&] { train(d, big); }) == Errc::invalid_argument);
      CHECK(error_code_of([&] { train(Dataset{}, c); }) == Errc::invalid_argument);
    }
    SUBCASE("divergence is reported") {
      Dataset huge{random_matrix(3, 40, rng, -1e150, 1e150), random_matrix(2, 40, rng, -1e300, 1e300)};
      MlpConfig fast = c;
      fast.learning_rate = 1e308;
      CHECK(error_code_of([&] { train(huge, fast); }) == Errc::non_finite_loss);
    }
  }

  TEST_CASE("model files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "asadg_surrogate";
    std::filesystem::create_directories(dir);
    MlpConfig c;
    c.input_dim = 4;
    c.output_dim = 3;
    c.hidden_sizes = {5, 2};
    const MlpModel m = MlpModel::initialize(c);
    m.save(dir / "model.json");
    const MlpModel back = MlpModel::load(dir / "model.json");
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      CHECK(back.layers()[l].weights == m.layers()[l].weights);
      CHECK(back.layers()[l].bias == m.layers()[l].bias);
    }
    auto j = m.to_json();
    j["layers"][1]["cols"] = 6;
    CHECK(error_code_of([&] { MlpModel::from_json(j); }) == Errc::format_error);
    std::ofstream(dir / "junk.json") << "{not json";
    CHECK(error_code_of([&] { MlpModel::load(dir / "junk.json"); }) == Errc::format_error);
    CHECK(error_code_of([&] { MlpModel::load(dir / "absent.json"); }) == Errc::io_failure);
  }

  TEST_CASE("mnre") {
    CounterRng rng(31);
    const Eigen::MatrixXd y = random_matrix(6, 25, rng);
    SUBCASE("perfect prediction") {
      const MnreReport r = mnre(y, y);
      CHECK(r.mnre == 0.0);
      CHECK(r.std == 0.0);
      CHECK(r.excluded_components.empty());
      CHECK(r.samples == 25);
    }
    SUBCASE("ten percent relative error") {
      Eigen::MatrixXd t(1, 4);
      t << 0.0, 1.0, 2.0, 4.0;
      // u = 0.1 + t / 4; predictions shifted so that u_hat = 1.1 u.
      Eigen::MatrixXd p(1, 4);
      for (Eigen::Index s = 0; s < 4; ++s) {
        const double u = 0.1 + t(0, s) / 4.0;
        p(0, s) = (1.1 * u - 0.1) * 4.0;
      }
      const MnreReport r = mnre(p, t);
      CHECK(r.mnre == doctest::Approx(0.1).epsilon(1e-12));
      CHECK(r.std == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("constant components are excluded") {
      Eigen::MatrixXd t = y, p = y;
      t.row(2).setConstant(3.0);
      p.row(2).setConstant(100.0);
      p(0, 0) += 0.5;
      const MnreReport r = mnre(p, t);
      REQUIRE(r.excluded_components.size() == 1);
      CHECK(r.excluded_components[0] == 2);
      Eigen::MatrixXd t5(5, 25), p5(5, 25);
      t5 << t.topRows(2), t.bottomRows(3);
      p5 << p.topRows(2), p.bottomRows(3);
      CHECK(r.mnre == doctest::Approx(mnre(p5, t5).mnre).epsilon(1e-15));
    }
    SUBCASE("affine rescaling leaves the report unchanged") {
      for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd t = random_matrix(5, 12, rng), p = t + 0.3 * random_matrix(5, 12, rng);
        const MnreReport base = mnre(p, t);
        Eigen::MatrixXd ts = t, ps = p;
        for (Eigen::Index i = 0; i < 5; ++i) {
          const double a = rng.uniform(0.01, 100.0), b = rng.uniform(-50.0, 50.0);
          ts.row(i) = (a * t.row(i).array() + b).matrix();
          ps.row(i) = (a * p.row(i).array() + b).matrix();
        }
        const MnreReport r = mnre(ps, ts);
        CHECK(std::abs(r.mnre - base.mnre) <= 1e-12);
        CHECK(std::abs(r.std - base.std) <= 1e-12);
      }
    }
    SUBCASE("errors") {
      CHECK(error_code_of([&] { mnre(Eigen::MatrixXd(3, 0), Eigen::MatrixXd(3, 0)); }) == Errc::empty_test_set);
      CHECK(error_code_of([&] { mnre(y.topRows(5), y); }) == Errc::dimension_mismatch);
      CHECK(error_code_of([&] { mnre(y, y, 1.0); }) == Errc::invalid_argument);
      CHECK(error_code_of([&] { mnre(y, y, 0.0); }) == Errc::invalid_argument);
    }
    SUBCASE("json") {
      const auto j = mnre(y, y).to_json();
      CHECK(j["mnre"] == 0.0);
      CHECK(j["epsilon"] == 0.1);
      CHECK(j["components"] == 6);
    }
  }
}
