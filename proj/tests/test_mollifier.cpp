#include <doctest.h>

#include <cmath>

#include "gmc/mollifier.hpp"
#include "gmc/numerics.hpp"
#include "gmc/rng.hpp"

using namespace gmc;

TEST_CASE("uniform circle nodes") {
  const MollifierSpec c = make_uniform_circle(8);
  CHECK(c.dimension == 2);
  CHECK(c.nodes.cols() == 8);
  CHECK(c.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 0; i < 8; ++i) {
    CHECK(c.nodes.col(i).norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.weights[i] == doctest::Approx(1.0 / 8.0));
  }
  CHECK(c.node_floor == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(c.min_spacing == doctest::Approx(2.0 * std::sin(M_PI / 8.0)).epsilon(1e-12));
  CHECK_THROWS(make_uniform_circle(4));
}

TEST_CASE("cell floor calibration constants are the continuum self-energies") {
  // One dimension: the mean of log|x-y| over a cell of width s is log s - 3/2.
  // Shift each half of the inner integral so the log singularity sits at the
  // origin; evaluating log(x - y) near a nonzero endpoint cancels to log(0).
  const double s = 0.37;
  const auto tail = [&](double w) {
    return w > 0 ? integrate([](double u) { return std::log(u); }, 0.0, w, 1e-10) : 0.0;
  };
  const auto inner = [&](double x) { return tail(x) + tail(s - x); };
  const double mean_log = integrate(inner, 0.0, s, 1e-7) / (s * s);
  CHECK(mean_log == doctest::Approx(std::log(s) - 1.5).epsilon(1e-4));

  // Two dimensions: Monte Carlo for the unit-square constant c2.
  auto rng = CounterRng::keyed(314, 1, 5);
  RunningStat st;
  for (int i = 0; i < 400000; ++i) {
    const double dx = rng.uniform() - rng.uniform();
    const double dy = rng.uniform() - rng.uniform();
    st.add(std::log(std::sqrt(dx * dx + dy * dy)));
  }
  CHECK(std::abs(st.mean + 0.8050867219494344) <= 4.0 * st.se());
}

TEST_CASE("cosine bump density") {
  const MollifierSpec b1 = cosine_bump_mollifier(0.1, 1);
  CHECK(b1.dimension == 1);
  CHECK(b1.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b1.weights.minCoeff() >= 0.0);
  CHECK(b1.nodes.row(0).maxCoeff() <= 1.0);
  CHECK(b1.nodes.row(0).minCoeff() >= -1.0);
  // Symmetric profile: zero mean.
  CHECK(std::abs((b1.nodes.row(0) * b1.weights)(0)) <= 1e-12);
  CHECK(b1.node_floor == doctest::Approx(0.1 * std::exp(-1.5)).epsilon(1e-12));

  const MollifierSpec b2 = cosine_bump_mollifier(0.1, 2);
  CHECK(b2.dimension == 2);
  CHECK(b2.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b2.node_floor == doctest::Approx(0.1 * std::exp(-0.8050867219494344)).epsilon(1e-12));
  double max_norm = 0;
  for (int i = 0; i < b2.nodes.cols(); ++i)
    max_norm = std::max(max_norm, b2.nodes.col(i).norm());
  CHECK(max_norm <= 1.0 + 1e-12);

  CHECK_THROWS(make_density([](const Eigen::VectorXd&) { return -1.0; }, 0.1, 1));
  CHECK_THROWS(make_density([](const Eigen::VectorXd&) { return 0.0; }, 0.1, 1));
}

TEST_CASE("admissibility condition") {
  CHECK(mollifier_admissible(make_uniform_circle(64)));
  CHECK(mollifier_admissible(cosine_bump_mollifier(0.1, 1)));
  CHECK(mollifier_admissible(cosine_bump_mollifier(0.1, 2)));
  CHECK(cond_theta_supremum(make_uniform_circle(64)) < 100.0);

  // A single atom with a vanishing clamp blows the condition up.
  MollifierSpec atom;
  atom.kind = MollifierSpec::Kind::Density;
  atom.dimension = 1;
  atom.nodes = Eigen::MatrixXd::Zero(1, 1);
  atom.weights = Eigen::VectorXd::Ones(1);
  atom.node_floor = 1e-9;
  atom.min_spacing = 1e-9;
  CHECK_FALSE(mollifier_admissible(atom));
}

TEST_CASE("node scaling") {
  const MollifierSpec c = make_uniform_circle(16);
  Eigen::VectorXd x(2);
  x << 0.3, -0.2;
  const auto [nodes, weights] = scaled_weights(c, 0.05, x);
  CHECK(nodes.cols() == 16);
  CHECK(weights.sum() == doctest::Approx(1.0));
  for (int i = 0; i < 16; ++i) {
    CHECK((nodes.col(i) - x).norm() == doctest::Approx(0.05).epsilon(1e-12));
  }
}
