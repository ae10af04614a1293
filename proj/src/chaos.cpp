#include "gmc/chaos.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gmc {
namespace {

void check_aligned(const Eigen::VectorXd& values, const Eigen::VectorXd& variances,
                   const CellPartition& partition) {
  if (values.size() != partition.cells() || variances.size() != partition.cells())
    throw std::invalid_argument("values and variances must align with the partition");
}

}  // namespace

CellPartition CellPartition::uniform_interval(double lo, double hi, int count) {
  if (!(hi > lo) || count < 1) throw std::invalid_argument("bad interval partition");
  CellPartition p;
  const double w = (hi - lo) / count;
  p.centers.resize(1, count);
  for (int i = 0; i < count; ++i) p.centers(0, i) = lo + (i + 0.5) * w;
  p.volumes = Eigen::VectorXd::Constant(count, w);
  p.window = "interval(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
  return p;
}

ChaosField subcritical_measure(const Eigen::VectorXd& values,
                               const Eigen::VectorXd& variances, double gamma,
                               const CellPartition& partition, double eps) {
  if (gamma < 0) throw std::invalid_argument("gamma must be nonnegative");
  if (!(eps > 0) || !(eps < 1)) throw std::invalid_argument("eps must lie in (0,1)");
  check_aligned(values, variances, partition);
  ChaosField out;
  out.kind = ChaosField::Kind::Subcritical;
  out.gamma = gamma;
  out.eps = eps;
  out.masses =
      (gamma * values.array() - 0.5 * gamma * gamma * variances.array()).exp() *
      partition.volumes.array();
  return out;
}

std::pair<ChaosField, ChaosField> critical_and_derivative(
    const Eigen::VectorXd& values, const Eigen::VectorXd& variances, int d,
    const CellPartition& partition, double eps, Normalization normalization) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(eps > 0) || !(eps < 1)) throw std::invalid_argument("eps must lie in (0,1)");
  check_aligned(values, variances, partition);
  const double gamma_c = std::sqrt(2.0 * d);
  Eigen::ArrayXd density =
      (gamma_c * values.array() - d * variances.array()).exp() *
      partition.volumes.array();

  ChaosField m;
  m.kind = ChaosField::Kind::CriticalMass;
  m.eps = eps;
  m.masses = density.matrix();

  Eigen::ArrayXd weight;
  if (normalization == Normalization::Variance) {
    weight = -values.array() + gamma_c * variances.array();
  } else {
    weight = -values.array() + gamma_c * std::log(1.0 / eps);
  }
  ChaosField dm;
  dm.kind = ChaosField::Kind::Derivative;
  dm.eps = eps;
  dm.masses = (weight * density).matrix();
  return {m, dm};
}

ChaosField seneta_heyde(const ChaosField& m) {
  if (m.kind != ChaosField::Kind::CriticalMass)
    throw std::invalid_argument("seneta_heyde expects a critical mass field");
  if (!(m.eps > 0) || !(m.eps < 1))
    throw std::invalid_argument("seneta_heyde needs eps in (0,1)");
  ChaosField out = m;
  out.masses *= std::sqrt(std::log(1.0 / m.eps));
  return out;
}

BarrierTracker::BarrierTracker(int cells, int d, double lambda, double beta)
    : gamma_c_(std::sqrt(2.0 * d)), lambda_(lambda), beta_(beta),
      alive_(static_cast<size_t>(cells), 1) {
  if (cells < 1) throw std::invalid_argument("barrier needs at least one cell");
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
}

void BarrierTracker::visit(double delta, double rho_delta, const double* tilde,
                           int stride) {
  const double drift = gamma_c_ * lambda_ * std::log(1.0 / delta) + beta_ - rho_delta;
  for (size_t i = 0; i < alive_.size(); ++i)
    if (alive_[i] && !(drift - tilde[stride * static_cast<int>(i)] > 0)) alive_[i] = 0;
}

int BarrierTracker::surviving() const {
  int n = 0;
  for (char a : alive_) n += a;
  return n;
}

std::pair<ChaosField, ChaosField> cutoff_measures(
    const Eigen::VectorXd& conv_values, const Eigen::VectorXd& variances,
    const BarrierSchedule& barrier, double beta, int d,
    const CellPartition& partition, double eps, double eps0, double f_threshold) {
  check_aligned(conv_values, variances, partition);
  const int cells = partition.cells();
  const int levels = static_cast<int>(barrier.deltas.size());
  if (levels < 1 || barrier.tilde.rows() != levels || barrier.tilde.cols() != cells ||
      barrier.rho.size() != levels)
    throw std::invalid_argument("barrier schedule shape mismatch");
  if (std::abs(barrier.deltas.front() - eps0) > 1e-9 * eps0 ||
      std::abs(barrier.deltas.back() - eps) > 1e-9 * eps)
    throw std::invalid_argument("barrier schedule must cover [eps, eps0]");
  for (int j = 1; j < levels; ++j)
    if (!(barrier.deltas[static_cast<size_t>(j)] < barrier.deltas[static_cast<size_t>(j - 1)]))
      throw std::invalid_argument("barrier schedule must decrease strictly");

  BarrierTracker tracker(cells, d, barrier.lambda, beta);
  for (int j = 0; j < levels; ++j)
    tracker.visit(barrier.deltas[static_cast<size_t>(j)], barrier.rho[j],
                  barrier.tilde.row(j).data(), static_cast<int>(barrier.tilde.rows()));

  const double gamma_c = std::sqrt(2.0 * d);
  ChaosField m, dm;
  m.kind = ChaosField::Kind::CutoffMass;
  dm.kind = ChaosField::Kind::CutoffDerivative;
  m.beta = dm.beta = beta;
  m.eps = dm.eps = eps;
  m.masses.resize(cells);
  dm.masses.resize(cells);
  for (int i = 0; i < cells; ++i) {
    const double f = -conv_values[i] + gamma_c * variances[i] + beta;
    const bool on = tracker.alive()[static_cast<size_t>(i)] && f > f_threshold;
    if (!on) {
      m.masses[i] = dm.masses[i] = 0;
      continue;
    }
    const double g = std::exp(gamma_c * conv_values[i] - d * variances[i]);
    m.masses[i] = partition.volumes[i] * g;
    dm.masses[i] = partition.volumes[i] * f * g;
  }
  return {m, dm};
}

RatioResult ratio_statistic(const ChaosField& m, const ChaosField& d_field) {
  if (std::abs(m.eps - d_field.eps) > 1e-12 * m.eps)
    throw std::invalid_argument("mass and derivative fields must share eps");
  if (!(m.eps > 0) || !(m.eps < 1))
    throw std::invalid_argument("ratio needs eps in (0,1)");
  RatioResult r;
  const double denom = d_field.total();
  if (!(denom > 0)) {
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.degenerate = true;
    return r;
  }
  r.value = std::sqrt(std::log(1.0 / m.eps)) * m.total() / denom;
  return r;
}

double derivative_consistency(const Eigen::VectorXd& values,
                              const Eigen::VectorXd& variances, int d,
                              double gamma_step, const CellPartition& partition,
                              double eps) {
  if (!(gamma_step > 0) || !(gamma_step < 0.1))
    throw std::invalid_argument("gamma step must lie in (0, 0.1)");
  const double gamma_c = std::sqrt(2.0 * d);
  const ChaosField up =
      subcritical_measure(values, variances, gamma_c + gamma_step, partition, eps);
  const ChaosField dn =
      subcritical_measure(values, variances, gamma_c - gamma_step, partition, eps);
  const ChaosField deriv =
      critical_and_derivative(values, variances, d, partition, eps).second;

  double worst = 0;
  for (int i = 0; i < partition.cells(); ++i) {
    const double fd = -(up.masses[i] - dn.masses[i]) / (2.0 * gamma_step);
    const double ref = deriv.masses[i];
    const double tiny = 1e-13 * partition.volumes[i];
    if (std::abs(ref) < tiny && std::abs(fd) < tiny) continue;
    worst = std::max(worst, std::abs(fd - ref) / std::abs(ref));
  }
  return worst;
}

TiltedCoordinates tilted_coordinates(double conv_value, double conv_variance,
                                     double tilde_eps_value, double var_tilde_eps,
                                     const std::vector<double>& deltas,
                                     const Eigen::VectorXd& tilde_values,
                                     const Eigen::VectorXd& rho, double lambda,
                                     double beta, int d) {
  if (tilde_values.size() != static_cast<Eigen::Index>(deltas.size()) ||
      rho.size() != tilde_values.size())
    throw std::invalid_argument("schedule arrays must align");
  const double gamma_c = std::sqrt(2.0 * d);
  TiltedCoordinates tc;
  tc.f = -conv_value + gamma_c * conv_variance + beta;
  tc.g_exp = std::exp(gamma_c * conv_value - d * conv_variance);
  tc.f_tilde = -tilde_eps_value + gamma_c * lambda * var_tilde_eps + beta;
  tc.g_tilde = std::exp(gamma_c * lambda * tilde_eps_value -
                        d * lambda * lambda * var_tilde_eps);
  BarrierTracker tracker(1, d, lambda, beta);
  for (size_t j = 0; j < deltas.size(); ++j) {
    const double v = tilde_values[static_cast<Eigen::Index>(j)];
    tracker.visit(deltas[j], rho[static_cast<Eigen::Index>(j)], &v);
  }
  tc.barrier_ok = tracker.alive()[0] != 0;
  return tc;
}

}  // namespace gmc
