#include <doctest.h>

#include <cmath>
#include <vector>

#include "gmc/bessel.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/numerics.hpp"
#include "gmc/rng.hpp"

using namespace gmc;

TEST_CASE("brownian sampling on a grid") {
  Eigen::VectorXd grid(3);
  grid << 0.0, 0.5, 1.25;
  const Path p = sample_brownian(grid, 2.0, 31);
  CHECK(p.kind == Path::Kind::Brownian);
  CHECK(p.values[0] == doctest::Approx(2.0));
  const Path q = sample_brownian(grid, 2.0, 31);
  CHECK((p.values - q.values).cwiseAbs().maxCoeff() == 0.0);

  RunningStat inc1, inc2, cross;
  for (int r = 0; r < 20000; ++r) {
    const Path s = sample_brownian(grid, 0.0, 100 + static_cast<std::uint64_t>(r));
    const double a = s.values[1] - s.values[0];
    const double b = s.values[2] - s.values[1];
    inc1.add(a * a);
    inc2.add(b * b);
    cross.add(a * b);
  }
  CHECK(std::abs(inc1.mean - 0.5) <= 4.0 * inc1.se());
  CHECK(std::abs(inc2.mean - 0.75) <= 4.0 * inc2.se());
  CHECK(std::abs(cross.mean) <= 4.0 * cross.se());

  Eigen::VectorXd bad(2);
  bad << 0.1, 0.5;
  CHECK_THROWS(sample_brownian(bad, 0.0, 1));
}

TEST_CASE("radial process marginals match the closed forms") {
  Eigen::VectorXd grid(2);
  grid << 0.0, 4.0;
  const double x0 = 1.0, t = 4.0;
  RunningStat sq, inv;
  for (int r = 0; r < 40000; ++r) {
    const Path p = sample_bessel3(grid, x0, 500 + static_cast<std::uint64_t>(r));
    CHECK(p.values.minCoeff() > 0.0);
    sq.add(p.values[1] * p.values[1]);
    inv.add(1.0 / p.values[1]);
  }
  CHECK(std::abs(sq.mean - (x0 * x0 + 3.0 * t)) <= 4.0 * sq.se());
  const double exact_inv = (1.0 / x0) * (2.0 * normal_cdf(x0 / std::sqrt(t)) - 1.0);
  CHECK(std::abs(inv.mean - exact_inv) <= 4.0 * inv.se());

  const Path p1 = sample_bessel3(grid, x0, 9);
  const Path p2 = sample_bessel3(grid, x0, 9);
  CHECK((p1.values - p2.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one-step and two-step marginals agree in law") {
  Eigen::VectorXd one(2), two(3);
  one << 0.0, 2.0;
  two << 0.0, 0.8, 2.0;
  std::vector<double> a, b;
  for (int r = 0; r < 6000; ++r) {
    a.push_back(sample_bessel3(one, 0.7, 40000 + static_cast<std::uint64_t>(r)).values[1]);
    b.push_back(sample_bessel3(two, 0.7, 80000 + static_cast<std::uint64_t>(r)).values[2]);
  }
  CHECK(ks_two_sample(a, b) < ks_critical(0.01, a.size(), b.size()));
}

TEST_CASE("martingale value on a grid path") {
  Path p;
  p.kind = Path::Kind::Brownian;
  p.times = Eigen::VectorXd::Zero(3);
  p.values = Eigen::VectorXd::Zero(3);
  p.times << 0.0, 0.5, 1.0;
  TiltSpec tilt;
  tilt.gamma = 2.0;
  tilt.beta = 1.0;
  tilt.start = StartLaw::deterministic(0.0);

  // The barrier carries the tilt drift: f_t = beta + gamma t - B_t.
  p.values << 0.0, 0.2, 0.3;
  CHECK(martingale_value(p, tilt, 1.0) ==
        doctest::Approx(2.7 * std::exp(2.0 * 0.3 - 2.0)).epsilon(1e-14));
  CHECK(martingale_value(p, tilt, 0.0) == doctest::Approx(1.0));

  // Barrier breached midway kills the value even if the endpoint recovers.
  p.values << 0.0, 2.2, 0.3;
  CHECK(martingale_value(p, tilt, 1.0) == 0.0);
  p.values << 0.0, 0.2, 0.3;
  CHECK_THROWS(martingale_value(p, tilt, 0.25));
}

TEST_CASE("moment suite on constructed paths") {
  Path a, b;
  a.kind = b.kind = Path::Kind::Bessel3;
  a.times = Eigen::VectorXd::Zero(2);
  a.times << 0.0, 1.0;
  b.times = a.times;
  a.values = Eigen::VectorXd::Zero(2);
  b.values = Eigen::VectorXd::Zero(2);
  a.values << 1.0, 2.0;
  b.values << 1.0, 0.5;
  const auto m = bessel_moment_suite({a, b}, 1.0, {0.1, 8.0});
  CHECK(m.inverse.estimate == doctest::Approx(1.25));
  CHECK(m.inverse_square.estimate == doctest::Approx((0.25 + 4.0) / 2.0));
  // Only the path at 0.5 sits below t^(1/4) = 1.
  CHECK(m.small_ball.estimate == doctest::Approx(1.0));
  CHECK(m.envelope_hit_rates.size() == 2);
  CHECK(m.envelope_hit_rates[0].second == doctest::Approx(0.0));
  CHECK(m.envelope_hit_rates[1].second == doctest::Approx(1.0));
}

TEST_CASE("barrier-tilted mean is conserved and grid-stable") {
  TiltSpec tilt;
  tilt.gamma = 2.0;
  tilt.beta = 1.0;
  tilt.start = StartLaw::deterministic(0.0);
  const auto est = martingale_conservation(tilt, 1.0, 32, 20000, 614);
  CHECK(std::abs(est.mean - 1.0) <= 4.0 * est.se);

  const auto pairs = conservation_refinement(tilt, 1.0, 32, 20000, 615);
  const double comb = std::sqrt(pairs.coarse.se * pairs.coarse.se +
                                pairs.fine.se * pairs.fine.se);
  CHECK(std::abs(pairs.diff_mean) <= 2.0 * comb);
  CHECK(std::abs(pairs.coarse.mean - 1.0) <= 4.0 * pairs.coarse.se);
  CHECK(std::abs(pairs.fine.mean - 1.0) <= 4.0 * pairs.fine.se);
}

TEST_CASE("size-biased start laws against quadrature oracles") {
  // Gaussian start: the accepted weight w = c - b has density w phi(b) / Z.
  {
    TiltSpec tilt;
    tilt.gamma = 1.0;
    tilt.beta = 2.0;
    tilt.start = StartLaw::gaussian(1.5, 1.0);
    const double c = tilt.gamma * 1.0 + tilt.beta;
    const double z = integrate(
        [&](double b) { return (c - b) * normal_pdf(b - 1.5); }, 1.5 - 9.0, c, 1e-10);
    const double first = integrate(
        [&](double b) { return (c - b) * (c - b) * normal_pdf(b - 1.5); }, 1.5 - 9.0, c, 1e-10);
    const double exact_w = first / z;
    auto rng = CounterRng::keyed(2024, 8, 1);
    RunningStat st;
    for (int i = 0; i < 40000; ++i) {
      const double w = sample_biased_start(tilt, rng);
      CHECK(w > 0.0);
      st.add(w);
    }
    CHECK(std::abs(st.mean - exact_w) <= 4.0 * st.se());
  }
  // Bounded start: pure reweighting on a compact interval.
  {
    TiltSpec tilt;
    tilt.gamma = 1.0;
    tilt.beta = 2.0;
    tilt.start = StartLaw::bounded_gaussian(0.0, 1.0, -1.0, 1.0);
    const double z_trunc = normal_cdf(1.0) - normal_cdf(-1.0);
    const double var_trunc = 1.0 - 2.0 * normal_pdf(1.0) / z_trunc;
    CHECK(tilt.start.variance() == doctest::Approx(var_trunc).epsilon(1e-12));
    const double c = tilt.gamma * var_trunc + tilt.beta;
    const double z = integrate(
        [&](double b) { return (c - b) * normal_pdf(b); }, -1.0, 1.0, 1e-11);
    const double first = integrate(
        [&](double b) { return (c - b) * (c - b) * normal_pdf(b); }, -1.0, 1.0, 1e-11);
    const double exact_w = first / z;
    auto rng = CounterRng::keyed(2024, 8, 2);
    RunningStat st;
    for (int i = 0; i < 40000; ++i) st.add(sample_biased_start(tilt, rng));
    CHECK(std::abs(st.mean - exact_w) <= 4.0 * st.se());
  }
  // A deterministic start outside the barrier is rejected outright.
  {
    TiltSpec tilt;
    tilt.gamma = 1.0;
    tilt.beta = 2.0;
    tilt.start = StartLaw::deterministic(5.0);
    auto rng = CounterRng::keyed(1, 1, 1);
    CHECK_THROWS(sample_biased_start(tilt, rng));
  }
}

TEST_CASE("rooted sampler runs on the log-scale clock") {
  std::vector<double> schedule;
  for (int k = 0; k <= 32; ++k) schedule.push_back(0.25 * std::pow(2.0, -k / 8.0));
  TiltSpec tilt;
  tilt.gamma = std::sqrt(2.0);
  tilt.beta = 1.0;
  tilt.start = StartLaw::deterministic(0.0);
  ComparisonCoefficients trivial;

  const Path p = rooted_radial_sampler(schedule, trivial, tilt, 1, 99);
  CHECK(p.kind == Path::Kind::Bessel3);
  CHECK(p.times[0] == doctest::Approx(0.0));
  CHECK(p.times[p.times.size() - 1] ==
        doctest::Approx(std::log(schedule.front() / schedule.back())).epsilon(1e-12));
  CHECK(p.values.minCoeff() > 0.0);
  CHECK(p.values[0] == doctest::Approx(tilt.beta));
  const Path q = rooted_radial_sampler(schedule, trivial, tilt, 1, 99);
  CHECK((p.values - q.values).cwiseAbs().maxCoeff() == 0.0);

  // Marginal at the horizon matches a direct radial sample from beta.
  const double horizon = std::log(schedule.front() / schedule.back());
  Eigen::VectorXd grid(2);
  grid << 0.0, horizon;
  std::vector<double> rooted, direct;
  for (int r = 0; r < 4000; ++r) {
    rooted.push_back(rooted_radial_sampler(schedule, trivial, tilt, 1,
                                           7000 + static_cast<std::uint64_t>(r))
                         .values[schedule.size() - 1]);
    direct.push_back(sample_bessel3(grid, tilt.beta, 90000 + static_cast<std::uint64_t>(r)).values[1]);
  }
  CHECK(ks_two_sample(rooted, direct) < ks_critical(0.01, rooted.size(), direct.size()));

  // A shift entry must exist for every schedule point once any are given.
  ComparisonCoefficients partial;
  partial.rho.emplace_back(schedule[0], 0.1);
  CHECK_THROWS(rooted_radial_sampler(schedule, partial, tilt, 1, 1));
  CHECK_THROWS(rooted_radial_sampler({0.5, 0.6}, trivial, tilt, 1, 1));
}

TEST_CASE("tilted normalization estimate is keyed and sane") {
  const KernelSpec star = star_scale(cosine_seed(), 1);
  const MollifierSpec theta = cosine_bump_mollifier(0.1, 1);
  Eigen::VectorXd x(1);
  x << 0.0;
  const double beta = 5.0;
  const auto za = z_ratio_estimate(star, theta, 0.015625, beta, x, 1500, 321);
  const auto zb = z_ratio_estimate(star, theta, 0.015625, beta, x, 1500, 321);
  CHECK(za.z_tilde_hat == zb.z_tilde_hat);
  CHECK(za.z_hat == zb.z_hat);
  CHECK(za.n == 1500);
  // beta plus order-one kernel corrections; the band only catches scale bugs.
  CHECK(za.z_tilde_hat > 0.5 * beta);
  CHECK(za.z_tilde_hat < 2.0 * beta);
  CHECK(za.z_hat > 0.0);
  CHECK(za.ratio > 0.0);
  CHECK(za.z_tilde_se > 0.0);
  CHECK_THROWS(z_ratio_estimate(star, theta, 0.017, beta, x, 100, 1));
}
