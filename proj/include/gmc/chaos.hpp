#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace gmc {

struct CellPartition {
  Eigen::MatrixXd centers;  // d x cells
  Eigen::VectorXd volumes;
  std::string window;

  int cells() const { return static_cast<int>(centers.cols()); }
  double window_volume() const { return volumes.sum(); }

  static CellPartition uniform_interval(double lo, double hi, int count);
};

struct ChaosField {
  enum class Kind { Subcritical, CriticalMass, Derivative, CutoffMass, CutoffDerivative };
  Kind kind = Kind::Subcritical;
  double gamma = 0;  // Subcritical only
  double beta = 0;   // Cutoff* only
  double eps = 0;
  Eigen::VectorXd masses;
  double total() const { return masses.sum(); }
};

// Derivative weight: -v + sqrt(2d) var (Variance) or -v + sqrt(2d) log(1/eps)
// (LogEps); the two differ by a bounded amount per cell.
enum class Normalization { Variance, LogEps };

ChaosField subcritical_measure(const Eigen::VectorXd& values,
                               const Eigen::VectorXd& variances, double gamma,
                               const CellPartition& partition, double eps);

std::pair<ChaosField, ChaosField> critical_and_derivative(
    const Eigen::VectorXd& values, const Eigen::VectorXd& variances, int d,
    const CellPartition& partition, double eps,
    Normalization normalization = Normalization::Variance);

ChaosField seneta_heyde(const ChaosField& m);

// Tracks, cell by cell, the conjunction over visited scales of
// -tilde + sqrt(2d) lambda log(1/delta) + beta - rho > 0.
class BarrierTracker {
 public:
  BarrierTracker(int cells, int d, double lambda, double beta);
  void visit(double delta, double rho_delta, const double* tilde, int stride = 1);
  const std::vector<char>& alive() const { return alive_; }
  int surviving() const;

 private:
  double gamma_c_, lambda_, beta_;
  std::vector<char> alive_;
};

struct BarrierSchedule {
  std::vector<double> deltas;  // strictly decreasing, eps0 down to eps
  Eigen::MatrixXd tilde;       // deltas.size() x cells
  double lambda = 1;
  Eigen::VectorXd rho;         // one entry per delta
};

std::pair<ChaosField, ChaosField> cutoff_measures(
    const Eigen::VectorXd& conv_values, const Eigen::VectorXd& variances,
    const BarrierSchedule& barrier, double beta, int d,
    const CellPartition& partition, double eps, double eps0,
    double f_threshold = 1.0);

struct RatioResult {
  double value = 0;
  bool degenerate = false;
};

RatioResult ratio_statistic(const ChaosField& m, const ChaosField& d_field);

double derivative_consistency(const Eigen::VectorXd& values,
                              const Eigen::VectorXd& variances, int d,
                              double gamma_step, const CellPartition& partition,
                              double eps);

struct TiltedCoordinates {
  double f = 0;
  double g_exp = 0;
  double f_tilde = 0;
  double g_tilde = 0;
  bool barrier_ok = false;
};

TiltedCoordinates tilted_coordinates(double conv_value, double conv_variance,
                                     double tilde_eps_value, double var_tilde_eps,
                                     const std::vector<double>& deltas,
                                     const Eigen::VectorXd& tilde_values,
                                     const Eigen::VectorXd& rho, double lambda,
                                     double beta, int d);

}  // namespace gmc
