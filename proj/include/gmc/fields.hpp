#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"
#include "gmc/rng.hpp"

namespace gmc {

struct FunctionalDescriptor {
  enum class Kind { Convolution, CircleAverage, StarCutoff };
  Kind kind = Kind::Convolution;
  MollifierSpec theta;  // Convolution only
  double scale = 0;     // eps or delta
  Eigen::VectorXd x;
  std::string label;

  static FunctionalDescriptor convolution(MollifierSpec theta, double eps,
                                          Eigen::VectorXd x, std::string label);
  static FunctionalDescriptor circle_average(double delta, Eigen::VectorXd x,
                                             std::string label, int nodes = 64);
  static FunctionalDescriptor star_cutoff(double eps, Eigen::VectorXd x,
                                          std::string label);
};

struct FunctionalEnsemble {
  KernelSpec kernel;
  std::vector<FunctionalDescriptor> descriptors;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd factor;  // lower triangular, factor factor^T = covariance + ridge I
  double ridge = 0;
};

// Covariance entries are double sums of kernel values over quadrature nodes;
// coincident and sub-cell distances are clamped at the mollifier node floors
// so the sums reproduce the continuum self-energies. Star cutoff pairs use
// the cutoff kernel at max(eps, eps').
FunctionalEnsemble build_ensemble(const KernelSpec& kernel,
                                  std::vector<FunctionalDescriptor> descriptors);

struct FieldSample {
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
};

FieldSample sample(const FunctionalEnsemble& ensemble, std::uint64_t seed);

// Layered star-scale sampling on an arbitrary point set: increment j has
// covariance K_{delta_j} - K_{delta_{j-1}} (delta_0 = 1), increments are
// independent across layers, and row j of values holds the running sum,
// i.e. a sample of the cutoff averages at scale delta_j.
struct LayeredSample {
  std::vector<double> scales;
  Eigen::MatrixXd values;  // scales.size() x points
  std::uint64_t seed = 0;
};

LayeredSample sample_star_layers(const KernelSpec& star,
                                 const Eigen::MatrixXd& x_grid,
                                 const std::vector<double>& scale_grid,
                                 std::uint64_t seed);

struct ComparisonCoefficients {
  double lambda_eps = 0;
  double var_tilde = 0;
  double var_conv = 0;
  double var_y = 0;
  std::vector<std::pair<double, double>> rho;  // (delta, rho_delta)
};

// lambda = cov(h_eps, t_eps)/var(t_eps); rho(delta) = -2 cov(h_eps - lambda
// t_eps, t_delta); var_y = var(h_eps) - lambda^2 var(t_eps). The reference
// family t is the circle average for the disk kernel and the scale cutoff
// for star kernels. Pure covariance algebra, no sampling.
ComparisonCoefficients comparison_coefficients(const KernelSpec& kernel,
                                               const MollifierSpec& theta,
                                               double eps,
                                               const std::vector<double>& delta_schedule,
                                               const Eigen::VectorXd& x);

// min over (scale, point) of -value + sqrt(2d) log(1/scale).
double min_particle_statistic(const Eigen::MatrixXd& values,
                              const std::vector<double>& scales, int d);

// max over pairs of E[(h_eps(x)-h_eps(y))^2] sqrt(eps)/sqrt(|x-y|).
double increment_roughness(const KernelSpec& kernel, const MollifierSpec& theta,
                           double eps,
                           const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);

struct FftWorkspace {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum_in, time_out;
};

// Fast d=1 path: periodized lattice of spacing eps/2, stationary layer
// increments sampled by circulant embedding (one inverse FFT yields two
// independent replicas), plus the two-atom convolution h_eps(x) =
// (h(x-eps/2)+h(x+eps/2))/2 completed by the independent sub-eps tail with
// cell-averaged covariance. Layer eigenvalues are nonnegative up to
// periodization leakage; tiny negatives are clamped and reported.
class CirculantStarField {
 public:
  CirculantStarField(std::shared_ptr<const StarKernelTable> table, double eps,
                     int per_octave, double period = 4.0);

  int size() const { return n_; }
  double spacing() const { return dx_; }
  double eps() const { return eps_; }
  double period() const { return period_; }
  const std::vector<double>& deltas() const { return deltas_; }
  double coordinate(int i) const;  // lattice position wrapped to [-P/2, P/2)
  double clamped_mass() const { return clamped_mass_; }

  double var_conv() const { return var_conv_; }
  double lambda_eps() const { return lambda_; }
  double rho(double delta) const;

  // Draws two independent layered replicas; after adding layer j (j >= 1,
  // scale deltas()[j]) calls layer_hook(j, F) where row r of F is replica r
  // of the running sum. Streams are keyed by (master, stream, pair, layer).
  void sample_pair(FftWorkspace& ws, std::uint64_t master, std::uint64_t stream,
                   std::uint64_t pair_index, Eigen::Matrix2Xd& F,
                   const std::function<void(int, const Eigen::Matrix2Xd&)>& layer_hook = {}) const;

  // Completes the running sums at the finest scale into the two-atom
  // convolution field (adds the independent tail sample).
  void convolve_two_atom(FftWorkspace& ws, std::uint64_t master,
                         std::uint64_t stream, std::uint64_t pair_index,
                         const Eigen::Matrix2Xd& F, Eigen::Matrix2Xd& hc) const;

 private:
  Eigen::VectorXd sqrt_spectrum(const Eigen::VectorXd& cov, FftWorkspace& ws,
                                double* clamped) const;
  void add_stationary(FftWorkspace& ws, const Eigen::VectorXd& sqrt_spec,
                      CounterRng& rng, Eigen::Matrix2Xd& out) const;

  std::shared_ptr<const StarKernelTable> table_;
  double eps_, dx_, period_;
  int n_, per_octave_;
  std::vector<double> deltas_;
  std::vector<Eigen::VectorXd> layer_sqrt_;
  Eigen::VectorXd tail_sqrt_;
  double var_conv_ = 0, lambda_ = 0, clamped_mass_ = 0;
};

}  // namespace gmc
