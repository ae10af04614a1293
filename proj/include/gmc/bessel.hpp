#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "gmc/fields.hpp"
#include "gmc/rng.hpp"

namespace gmc {

struct Path {
  enum class Kind { Brownian, Bessel3 };
  Kind kind = Kind::Brownian;
  Eigen::VectorXd times;
  Eigen::VectorXd values;
};

struct StartLaw {
  enum class Kind { Deterministic, Gaussian, BoundedGaussian };
  Kind kind = Kind::Deterministic;
  double value = 0;       // Deterministic
  double mean = 0, sd = 1;
  double lo = 0, hi = 0;  // BoundedGaussian support

  static StartLaw deterministic(double v);
  static StartLaw gaussian(double mean, double sd);
  static StartLaw bounded_gaussian(double mean, double sd, double lo, double hi);
  double variance() const;
  double mean_value() const;
};

struct TiltSpec {
  double gamma = 2;
  double beta = 1;
  StartLaw start;
};

Path sample_brownian(const Eigen::VectorXd& t_grid, double b0, std::uint64_t seed);

// Exact: modulus of a 3-component Brownian path started at (x0, 0, 0).
Path sample_bessel3(const Eigen::VectorXd& t_grid, double x0, std::uint64_t seed);

// (-B_t + gamma t + beta) 1{-B_u + gamma u + beta > 0 at all grid u <= t}
// e^{gamma B_t - gamma^2 t / 2}, barrier checked on the discrete grid only.
double martingale_value(const Path& path, const TiltSpec& tilt, double t);

struct MomentEstimate {
  double estimate = 0;
  double se = 0;
  long n = 0;
};

struct BesselMomentReport {
  MomentEstimate inverse;         // E[1/X_t]
  MomentEstimate inverse_square;  // E[1/X_t^2]
  MomentEstimate small_ball;      // E[(1/X_t) 1{X_t <= t^(1/4)}]
  std::vector<std::pair<double, double>> envelope_hit_rates;  // (R, rate)
};

// Envelope per path: sqrt(u)/(R log(2+u)^2) <= X_u <= R(1+sqrt(u log(1+u)))
// at every positive grid time.
BesselMomentReport bessel_moment_suite(const std::vector<Path>& paths, double t,
                                       const std::vector<double>& envelope_r = {2, 4, 8});

struct ConservationEstimate {
  double mean = 0;
  double se = 0;
  long n = 0;
  int steps = 0;
};

// Unbiased estimate of E[martingale at t] with the continuum barrier: under
// the gamma-tilt the drift cancels, leaving f_u = f_0 - W_u, and survival is
// scored by the exact Brownian-bridge non-crossing product
// prod_k (1 - e^{-2 f_k f_{k+1} / dt}). Start drawn from tilt.start.
ConservationEstimate martingale_conservation(const TiltSpec& tilt, double t,
                                             int grid_per_unit, long paths,
                                             std::uint64_t seed);

struct RefinementPair {
  ConservationEstimate coarse, fine;
  double diff_mean = 0;
  double diff_se = 0;
};

// Coarse estimate reuses every other point of the fine path, so the reported
// difference isolates the grid effect from Monte Carlo noise.
RefinementPair conservation_refinement(const TiltSpec& tilt, double t,
                                       int base_per_unit, long paths,
                                       std::uint64_t seed);

// Start of the rooted radial process: a draw from the density proportional
// to (-b + gamma var + beta) * start density, by rejection. Returns the
// weight value itself (the tilted coordinate at time zero).
double sample_biased_start(const TiltSpec& tilt, CounterRng& rng);

// Bessel(3) in the log-time clock t = log(1/u) - log(1/u_0) for the shifted
// coordinate; returned values have rho added back, times are log-times.
Path rooted_radial_sampler(const std::vector<double>& eps_schedule,
                           const ComparisonCoefficients& coeffs,
                           const TiltSpec& tilt, int d, std::uint64_t seed);

struct ZRatioEstimate {
  double z_hat = 0, z_se = 0;
  double z_tilde_hat = 0, z_tilde_se = 0;
  double ratio = 0, ratio_se = 0;
  long n = 0;
};

ZRatioEstimate z_ratio_estimate(const KernelSpec& kernel, const MollifierSpec& theta,
                                double eps, double beta, const Eigen::VectorXd& x,
                                int replicas, std::uint64_t seed, double eps0 = 0.25,
                                int per_octave = 8, double f_threshold = 1.0);

}  // namespace gmc
