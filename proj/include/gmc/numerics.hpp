#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gmc {

// Adaptive Gauss-Kronrod (G7/K15) integration with absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 48);

// Cubic Hermite interpolation on a uniform grid; evaluation clamps to the
// table range, so callers must handle out-of-range semantics themselves.
template <typename Scalar>
struct HermiteTable {
  Scalar x0 = 0, dx = 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y, m;

  Scalar operator()(Scalar x) const {
    const Eigen::Index n = y.size();
    Scalar u = (x - x0) / dx;
    if (u <= 0) return y[0];
    if (u >= Scalar(n - 1)) return y[n - 1];
    const Eigen::Index i = static_cast<Eigen::Index>(u);
    const Scalar t = u - Scalar(i);
    const Scalar t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * dx * m[i] +
           (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * dx * m[i + 1];
  }
};

// Derivatives estimated by fourth-order central differences.
HermiteTable<double> hermite_from_samples(double x0, double dx,
                                          const Eigen::VectorXd& y);

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

struct Summary {
  double mean = 0, se = 0, median = 0, sd = 0;
  std::int64_t n = 0;
};
Summary summarize(const Eigen::VectorXd& values);
double median(std::vector<double> values);

// Distribution-free 95% confidence interval for the median (order statistics,
// normal approximation to the binomial).
std::pair<double, double> median_ci95(std::vector<double> values);

// Two-sample Kolmogorov-Smirnov distance and its critical value at level
// alpha for sample sizes n and m (asymptotic formula).
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double ks_critical(double alpha, std::size_t n, std::size_t m);

// Streaming mean/variance accumulator (Welford).
struct RunningStat {
  std::int64_t n = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double se() const { return n > 0 ? sd() / std::sqrt(double(n)) : 0.0; }
};

// Deterministic work partition: body(i) runs exactly once for each
// i in [0, count); any thread may execute it.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace gmc
