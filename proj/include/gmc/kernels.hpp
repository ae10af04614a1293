#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "gmc/numerics.hpp"

namespace gmc {

// Radial seed k with k(0) = 1 and compact support; profiles produced by
// seed_from_bump are positive definite by construction (k = g * g).
struct SeedFunction {
  std::function<double(double)> profile;
  double support_radius = 0;
  double value_at_zero = 1;

  double operator()(double r) const { return profile(r); }
};

// k = g * g (radial self-convolution in the ambient dimension), rescaled so
// k(0) = 1. Throws std::invalid_argument for zero or non-integrable g.
SeedFunction seed_from_bump(const std::function<double(double)>& g_profile,
                            double support, int dimension = 1);

// Stock seeds used throughout the tests and the harness configs.
SeedFunction cosine_seed(int dimension = 1);    // g(u) = cos^2(pi u) on [0, 1/2]
SeedFunction triangle_seed(int dimension = 1);  // g(u) = 1 - 2u on [0, 1/2]

// int_1^inf k(u r)/u du; +infinity at r = 0, zero for r >= support.
double star_kernel_eval(const SeedFunction& k, double r);

// int_1^{1/eps} k(u r)/u du; finite everywhere, log(1/eps) at r = 0.
// Throws std::domain_error unless 0 < eps < 1.
double star_kernel_cutoff_eval(const SeedFunction& k, double r, double eps);

// Tabulated evaluation of the star kernel through its regular part:
//   K(r) = -log r + gs(r) for r < S,  K(r) = 0 for r >= S,
// so gs(r) = int_r^S (k(v)-1)/v dv + log S and gs(r) = log r beyond S.
// Cutoffs follow from K_delta(r) = K(r) - K(r/delta), exact at r = 0.
class StarKernelTable {
 public:
  explicit StarKernelTable(const SeedFunction& k, int intervals = 2048);

  double support() const { return S_; }
  double gs(double r) const;
  double gs0() const { return gs_.y[0]; }
  double full(double r) const;  // +infinity at r = 0
  double full_floored(double r, double floor_r) const;
  double cutoff(double r, double delta) const;
  double cutoff_floored(double r, double delta, double floor_r) const;

 private:
  double S_;
  HermiteTable<double> gs_;
};

struct KernelSpec {
  enum class Kind { GffDisk, StarScale, StarScaleCutoff };
  Kind kind = Kind::GffDisk;
  int dimension = 2;
  SeedFunction seed;
  double eps = 0;  // cutoff scale for StarScaleCutoff
  std::shared_ptr<const StarKernelTable> table;
};

KernelSpec gff_disk();
// allow_unchecked skips the positive-definiteness spot check for seeds that
// did not come from seed_from_bump.
KernelSpec star_scale(SeedFunction k, int dimension = 1,
                      bool allow_unchecked = false);
KernelSpec star_scale_cutoff(SeedFunction k, double eps, int dimension = 1,
                             bool allow_unchecked = false);

// Zero-boundary Green function of the unit disk, natural-log normalization:
// log(|1 - x conj(y)| / |x - y|). Throws on coincident or exterior points.
double green_disk(const Eigen::Vector2d& x, const Eigen::Vector2d& y);

// Pointwise kernel value; +infinity on the diagonal of non-cutoff kernels.
double kernel_eval(const KernelSpec& K, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// K(x,y) + log|x-y| (the regular part). Throws on coincident points.
double kernel_log_remainder(const KernelSpec& K, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y);

// Minimum eigenvalue of the Gram matrix on the given points (columns).
// Diagonal entries use the kernel's own cutoff when it has one, otherwise
// the cutoff at self_eps. Throws on duplicate points.
double check_positive_definite(const KernelSpec& K,
                               const Eigen::MatrixXd& points,
                               double ridge = 0.0, double self_eps = 0.01);

// Same diagnostic for an arbitrary kernel callable (test stubs).
double check_positive_definite(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& k,
    double self_variance, const Eigen::MatrixXd& points, double ridge = 0.0);

}  // namespace gmc
