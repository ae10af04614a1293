#include <doctest.h>

#include <cmath>

#include "gmc/fields.hpp"
#include "gmc/numerics.hpp"
#include "gmc/rng.hpp"

using namespace gmc;

TEST_CASE("circle averages on the disk have exact variances") {
  // Roots-of-unity identity: discrete self-energy with the 1/m floor equals
  // -log(delta) exactly; the harmonic part averages to log(1 - |x|^2).
  const KernelSpec disk = gff_disk();
  Eigen::Vector2d x(0.15, -0.1);
  for (double delta : {0.2, 0.05, 0.01}) {
    const auto ens = build_ensemble(
        disk, {FunctionalDescriptor::circle_average(delta, x, "c")});
    const double expected = std::log(1.0 / delta) + std::log(1.0 - x.squaredNorm());
    CHECK(ens.covariance(0, 0) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("convolution against a matching circle collapses to the circle average") {
  const KernelSpec disk = gff_disk();
  Eigen::Vector2d x(0.2, 0.1), y(-0.3, 0.05);
  const double eps = 0.04;
  const auto ens = build_ensemble(
      disk, {FunctionalDescriptor::convolution(make_uniform_circle(64), eps, x, "conv"),
             FunctionalDescriptor::circle_average(eps, x, "circ"),
             FunctionalDescriptor::circle_average(0.08, y, "other")});
  CHECK(ens.covariance(0, 0) == doctest::Approx(ens.covariance(1, 1)).epsilon(1e-12));
  CHECK(ens.covariance(0, 2) == doctest::Approx(ens.covariance(1, 2)).epsilon(1e-12));
  CHECK(ens.covariance(0, 1) == doctest::Approx(ens.covariance(0, 0)).epsilon(1e-12));
}

TEST_CASE("ensemble covariance matches the floored double sum") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  const MollifierSpec theta = cosine_bump_mollifier(0.2, 1);
  Eigen::VectorXd xa(1), xb(1);
  xa << 0.0;
  xb << 0.3;
  const double ea = 0.05, eb = 0.1;
  const auto ens = build_ensemble(
      star, {FunctionalDescriptor::convolution(theta, ea, xa, "a"),
             FunctionalDescriptor::convolution(theta, eb, xb, "b")});

  const auto [na, wa] = scaled_weights(theta, ea, xa);
  const auto [nb, wb] = scaled_weights(theta, eb, xb);
  const double fl = std::sqrt((ea * theta.node_floor) * (eb * theta.node_floor));
  double direct = 0;
  for (int i = 0; i < na.cols(); ++i)
    for (int j = 0; j < nb.cols(); ++j)
      direct += wa[i] * wb[j] * star.table->full_floored((na.col(i) - nb.col(j)).norm(), fl);
  CHECK(ens.covariance(0, 1) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(ens.covariance(1, 0) == doctest::Approx(direct).epsilon(1e-12));
  // The diagonal sits within the regular part's range of log(1/eps).
  CHECK(std::abs(ens.covariance(0, 0) - std::log(1.0 / ea)) < 2.0);

  // Cholesky factor reproduces the covariance.
  const Eigen::MatrixXd recon = ens.factor * ens.factor.transpose();
  CHECK((recon - ens.covariance).cwiseAbs().maxCoeff() <=
        1e-8 * ens.covariance.cwiseAbs().maxCoeff());
}

TEST_CASE("ensemble boundary and degeneracy checks") {
  Eigen::Vector2d rim(0.95, 0.0);
  CHECK_THROWS(build_ensemble(
      gff_disk(), {FunctionalDescriptor::convolution(make_uniform_circle(16), 0.2, rim, "r")}));

  // Coincident atoms with no floor cannot be assembled under a log kernel.
  MollifierSpec atom;
  atom.kind = MollifierSpec::Kind::Density;
  atom.dimension = 1;
  atom.nodes = Eigen::MatrixXd::Zero(1, 1);
  atom.weights = Eigen::VectorXd::Ones(1);
  atom.node_floor = 0;
  atom.min_spacing = 0;
  Eigen::VectorXd x0(1);
  x0 << 0.1;
  CHECK_THROWS(build_ensemble(
      star_scale(cosine_seed(), 1),
      {FunctionalDescriptor::convolution(atom, 0.05, x0, "p"),
       FunctionalDescriptor::convolution(atom, 0.05, x0, "q")}));
}

TEST_CASE("field samples are keyed and have the right covariance") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  const MollifierSpec theta = cosine_bump_mollifier(0.2, 1);
  std::vector<FunctionalDescriptor> ds;
  Eigen::VectorXd x(1);
  for (int i = 0; i < 3; ++i) {
    x << 0.3 * i;
    ds.push_back(FunctionalDescriptor::convolution(theta, 0.0625, x, "f" + std::to_string(i)));
  }
  const auto ens = build_ensemble(star, ds);

  const FieldSample s1 = sample(ens, 77);
  const FieldSample s2 = sample(ens, 77);
  const FieldSample s3 = sample(ens, 78);
  CHECK((s1.values - s2.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.values - s3.values).cwiseAbs().maxCoeff() > 0.0);
  CHECK(s1.values.size() == 3);

  const int n = 30000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int r = 0; r < n; ++r) {
    const Eigen::VectorXd v = sample(ens, 1000 + static_cast<std::uint64_t>(r)).values;
    acc += v * v.transpose();
  }
  acc /= double(n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((ens.covariance(i, i) * ens.covariance(j, j) +
                                   ens.covariance(i, j) * ens.covariance(i, j)) / double(n));
      CHECK(std::abs(acc(i, j) - ens.covariance(i, j)) <= 4.0 * se);
    }
}

TEST_CASE("layered star samples carry the scale-cutoff covariances") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  Eigen::MatrixXd grid(1, 2);
  grid << 0.0, 0.4;
  const std::vector<double> scales = {0.5, 0.25};
  const LayeredSample first = sample_star_layers(star, grid, scales, 5);
  CHECK(first.values.rows() == 2);
  CHECK(first.values.cols() == 2);
  CHECK((sample_star_layers(star, grid, scales, 5).values - first.values)
            .cwiseAbs().maxCoeff() == 0.0);

  const int n = 6000;
  RunningStat var_deep, cross_level, cross_point;
  for (int r = 0; r < n; ++r) {
    const auto s = sample_star_layers(star, grid, scales, 9000 + static_cast<std::uint64_t>(r));
    var_deep.add(s.values(1, 0) * s.values(1, 0));
    cross_level.add(s.values(0, 0) * s.values(1, 0));
    cross_point.add(s.values(1, 0) * s.values(1, 1));
  }
  const StarKernelTable& table = *star.table;
  const double v_deep = table.cutoff(0.0, 0.25);
  CHECK(std::abs(var_deep.mean - v_deep) <= 4.0 * var_deep.se());
  // Scales common to both levels stop at the shallower cutoff.
  CHECK(std::abs(cross_level.mean - table.cutoff(0.0, 0.5)) <= 4.0 * cross_level.se());
  CHECK(std::abs(cross_point.mean - table.cutoff(0.4, 0.25)) <= 4.0 * cross_point.se());
}

TEST_CASE("comparison against the matching reference is exact for circles") {
  const KernelSpec disk = gff_disk();
  const MollifierSpec circle = make_uniform_circle(64);
  Eigen::Vector2d x(0.15, -0.1);
  const double eps = 0.0625;
  std::vector<double> schedule;
  for (int j = 0; j <= 8; ++j) schedule.push_back(0.25 * std::pow(2.0, -j / 4.0));
  schedule.back() = eps;
  const auto cc = comparison_coefficients(disk, circle, eps, schedule, x);
  CHECK(std::abs(cc.lambda_eps - 1.0) <= 1e-10);
  CHECK(std::abs(cc.var_y) <= 1e-10);
  for (const auto& r : cc.rho) CHECK(std::abs(r.second) <= 1e-10);
}

TEST_CASE("minimum particle statistic from a hand example") {
  Eigen::MatrixXd values(2, 3);
  values << 0.2, 1.5, -0.3, 2.0, 0.1, 0.4;
  const std::vector<double> scales = {0.5, 0.25};
  const double s1 = std::sqrt(2.0) * std::log(2.0) - 1.5;
  const double s2 = std::sqrt(2.0) * std::log(4.0) - 2.0;
  CHECK(min_particle_statistic(values, scales, 1) ==
        doctest::Approx(std::min(s1, s2)).epsilon(1e-14));
}

TEST_CASE("increment roughness stays on the convolution scale") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  const MollifierSpec theta = cosine_bump_mollifier(0.1, 1);
  const double eps = 0.0625;
  Eigen::VectorXd a(1), b(1);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
  a << 0.0;
  b << eps / 2;
  pairs.emplace_back(a, b);
  a << 0.3;
  b << 0.3 + eps / 4;
  pairs.emplace_back(a, b);
  const double rough = increment_roughness(star, theta, eps, pairs);
  CHECK(rough > 0.0);
  CHECK(rough < 10.0);

  b << 0.3 + 2 * eps;
  pairs.back() = {a, b};
  CHECK_THROWS(increment_roughness(star, theta, eps, pairs));
}

TEST_CASE("circulant lattice field reproduces the cutoff covariance") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  const double eps = 0.0625;
  const CirculantStarField field(star.table, eps, 4);
  CHECK(field.size() == 128);
  CHECK(field.spacing() == doctest::Approx(eps / 2));
  CHECK(field.deltas().size() == 17);
  CHECK(field.deltas().front() == doctest::Approx(1.0));
  CHECK(field.deltas().back() == doctest::Approx(eps));
  CHECK(field.coordinate(0) == doctest::Approx(0.0));
  CHECK(std::abs(field.coordinate(64)) == doctest::Approx(2.0));
  CHECK(field.clamped_mass() <= 1e-2);

  const StarKernelTable& table = *star.table;
  CHECK(field.lambda_eps() ==
        doctest::Approx(table.cutoff(eps / 2, eps) / std::log(1.0 / eps)).epsilon(1e-12));
  for (double delta : {0.25, 0.0833}) {
    const double expect = -2.0 * (table.cutoff(eps / 2, delta) -
                                  field.lambda_eps() * std::log(1.0 / delta));
    CHECK(field.rho(delta) == doctest::Approx(expect).epsilon(1e-10));
  }

  FftWorkspace ws;
  Eigen::Matrix2Xd f1, f2, f3;
  field.sample_pair(ws, 11, 0, 4, f1, nullptr);
  field.sample_pair(ws, 11, 0, 4, f2, nullptr);
  field.sample_pair(ws, 11, 0, 5, f3, nullptr);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f1 - f3).cwiseAbs().maxCoeff() > 0.0);

  const int pairs = 1500;
  RunningStat var0, cov_half, cross_row, var_conv_stat, mean_conv;
  const int lag = static_cast<int>(std::llround(0.5 / field.spacing()));
  for (int p = 0; p < pairs; ++p) {
    Eigen::Matrix2Xd f, hc;
    field.sample_pair(ws, 99, 1, static_cast<std::uint64_t>(p), f, nullptr);
    field.convolve_two_atom(ws, 99, 1, static_cast<std::uint64_t>(p), f, hc);
    for (int r = 0; r < 2; ++r) {
      var0.add(f(r, 0) * f(r, 0));
      cov_half.add(f(r, 0) * f(r, lag));
      var_conv_stat.add(hc(r, 0) * hc(r, 0));
      mean_conv.add(hc(r, 0));
    }
    cross_row.add(f(0, 0) * f(1, 0));
  }
  const double v_theory = table.cutoff(0.0, eps);
  CHECK(std::abs(var0.mean - v_theory) <= 4.0 * var0.se());
  CHECK(std::abs(cov_half.mean - table.cutoff(0.5, eps)) <= 4.0 * cov_half.se());
  CHECK(std::abs(cross_row.mean) <= 4.0 * cross_row.se());
  CHECK(std::abs(var_conv_stat.mean - field.var_conv()) <= 4.0 * var_conv_stat.se());
  CHECK(std::abs(mean_conv.mean) <= 4.0 * mean_conv.se());

  CHECK_THROWS(CirculantStarField(star.table, 0.23, 4));
  CHECK_THROWS(CirculantStarField(star.table, 0.5, 4));
}
