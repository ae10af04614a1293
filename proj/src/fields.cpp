#include "gmc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace gmc {
namespace {

constexpr int kMaxFunctionals = 4096;
constexpr std::uint64_t kStreamEnsemble = 0xE51;
constexpr std::uint64_t kStreamLayers = 0x1A7;

// e^{-3/2}: cell-average floor calibration in units of the cell width.
const double kCellFloor = std::exp(-1.5);

struct Expanded {
  Eigen::MatrixXd nodes;  // d x m
  Eigen::VectorXd weights;
  double floor = 0;   // realized distance floor, 0 for point evaluations
  double cutoff = 0;  // scale-cutoff level, 0 for none
  const FunctionalDescriptor* desc = nullptr;
};

Expanded expand(const KernelSpec& kernel, const FunctionalDescriptor& d) {
  Expanded e;
  e.desc = &d;
  const int dim = kernel.dimension;
  if (d.x.size() != dim)
    throw std::invalid_argument("descriptor '" + d.label + "': point dimension mismatch");
  switch (d.kind) {
    case FunctionalDescriptor::Kind::Convolution:
    case FunctionalDescriptor::Kind::CircleAverage: {
      if (d.theta.dimension != dim)
        throw std::invalid_argument("descriptor '" + d.label + "': mollifier dimension mismatch");
      if (!(d.scale > 0) || !(d.scale < 1))
        throw std::invalid_argument("descriptor '" + d.label + "': scale must lie in (0,1)");
      e.nodes = (d.theta.nodes * d.scale).colwise() + d.x;
      e.weights = d.theta.weights;
      e.floor = d.theta.node_floor * d.scale;
      break;
    }
    case FunctionalDescriptor::Kind::StarCutoff: {
      if (kernel.kind == KernelSpec::Kind::GffDisk)
        throw std::invalid_argument("descriptor '" + d.label + "': scale cutoff needs a star kernel");
      if (!(d.scale > 0) || !(d.scale < 1))
        throw std::invalid_argument("descriptor '" + d.label + "': scale must lie in (0,1)");
      e.nodes = d.x;
      e.weights = Eigen::VectorXd::Ones(1);
      e.cutoff = d.scale;
      break;
    }
  }
  if (kernel.kind == KernelSpec::Kind::GffDisk) {
    for (Eigen::Index j = 0; j < e.nodes.cols(); ++j)
      if (e.nodes.col(j).norm() >= 1.0 - 1e-9)
        throw std::invalid_argument("descriptor '" + d.label + "': nodes reach the disk boundary");
  }
  return e;
}

double link_gff(const Eigen::Ref<const Eigen::VectorXd>& p,
                const Eigen::Ref<const Eigen::VectorXd>& q, double fl) {
  const double r = std::max((p - q).norm(), fl);
  if (!(r > 0)) throw std::runtime_error("coincident nodes with zero floor");
  const std::complex<double> zp(p[0], p[1]), zq(q[0], q[1]);
  return -std::log(r) + std::log(std::abs(1.0 - zp * std::conj(zq)));
}

double pair_entry(const KernelSpec& kernel, const Expanded& a, const Expanded& b) {
  const bool gff = kernel.kind == KernelSpec::Kind::GffDisk;
  const double base = kernel.kind == KernelSpec::Kind::StarScaleCutoff ? kernel.eps : 0.0;
  const double cut = std::max({base, a.cutoff, b.cutoff});
  const double fl = (a.floor > 0 && b.floor > 0) ? std::sqrt(a.floor * b.floor) : 0.0;
  const StarKernelTable* table = kernel.table.get();
  double acc = 0;
  for (Eigen::Index i = 0; i < a.nodes.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.nodes.cols(); ++j) {
      double v;
      if (gff) {
        v = link_gff(a.nodes.col(i), b.nodes.col(j), fl);
      } else {
        const double r = (a.nodes.col(i) - b.nodes.col(j)).norm();
        if (cut > 0) {
          v = table->cutoff_floored(r, cut, fl);
        } else {
          if (std::max(r, fl) <= 0)
            throw std::runtime_error("coincident nodes with zero floor");
          v = table->full_floored(r, fl);
        }
      }
      acc += a.weights[i] * b.weights[j] * v;
    }
  }
  return acc;
}

Eigen::MatrixXd assemble_covariance(const KernelSpec& kernel,
                                    const std::vector<Expanded>& ex) {
  const int n = static_cast<int>(ex.size());
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) c(i, j) = c(j, i) = pair_entry(kernel, ex[i], ex[j]);
  return c;
}

std::vector<Expanded> expand_all(const KernelSpec& kernel,
                                 const std::vector<FunctionalDescriptor>& ds) {
  if (ds.empty()) throw std::invalid_argument("ensemble needs at least one functional");
  if (static_cast<int>(ds.size()) > kMaxFunctionals)
    throw std::invalid_argument("ensemble exceeds the functional cap");
  std::unordered_set<std::string> seen;
  std::vector<Expanded> ex;
  ex.reserve(ds.size());
  for (const auto& d : ds) {
    if (!seen.insert(d.label).second)
      throw std::invalid_argument("duplicate functional label '" + d.label + "'");
    ex.push_back(expand(kernel, d));
  }
  return ex;
}

Eigen::MatrixXd factor_with_ridge(const Eigen::MatrixXd& c, double ridge,
                                  const std::vector<FunctionalDescriptor>& ds) {
  const int n = static_cast<int>(c.rows());
  Eigen::MatrixXd shifted = c;
  shifted.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (int k = 1; k <= n; ++k) {
    Eigen::LLT<Eigen::MatrixXd> probe(shifted.topLeftCorner(k, k));
    if (probe.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "covariance is not positive semidefinite: leading minor of order " << k;
      if (!ds.empty()) msg << " (functional '" << ds[static_cast<size_t>(k - 1)].label << "')";
      throw std::runtime_error(msg.str());
    }
  }
  throw std::runtime_error("covariance factorization failed");
}

}  // namespace

FunctionalDescriptor FunctionalDescriptor::convolution(MollifierSpec theta, double eps,
                                                       Eigen::VectorXd x, std::string label) {
  FunctionalDescriptor d;
  d.kind = Kind::Convolution;
  d.theta = std::move(theta);
  d.scale = eps;
  d.x = std::move(x);
  d.label = std::move(label);
  return d;
}

FunctionalDescriptor FunctionalDescriptor::circle_average(double delta, Eigen::VectorXd x,
                                                          std::string label, int nodes) {
  FunctionalDescriptor d;
  d.kind = Kind::CircleAverage;
  d.theta = make_uniform_circle(nodes);
  d.scale = delta;
  d.x = std::move(x);
  d.label = std::move(label);
  return d;
}

FunctionalDescriptor FunctionalDescriptor::star_cutoff(double eps, Eigen::VectorXd x,
                                                       std::string label) {
  FunctionalDescriptor d;
  d.kind = Kind::StarCutoff;
  d.scale = eps;
  d.x = std::move(x);
  d.label = std::move(label);
  return d;
}

FunctionalEnsemble build_ensemble(const KernelSpec& kernel,
                                  std::vector<FunctionalDescriptor> descriptors) {
  FunctionalEnsemble out;
  out.kernel = kernel;
  out.descriptors = std::move(descriptors);
  const auto ex = expand_all(kernel, out.descriptors);
  out.covariance = assemble_covariance(kernel, ex);
  const int n = static_cast<int>(out.covariance.rows());
  out.ridge = 1e-10 * out.covariance.trace() / n;
  out.factor = factor_with_ridge(out.covariance, out.ridge, out.descriptors);
  return out;
}

FieldSample sample(const FunctionalEnsemble& ensemble, std::uint64_t seed) {
  auto rng = CounterRng::keyed(seed, kStreamEnsemble);
  FieldSample s;
  s.seed = seed;
  s.values = ensemble.factor * rng.normal_vector(ensemble.factor.rows());
  return s;
}

LayeredSample sample_star_layers(const KernelSpec& star, const Eigen::MatrixXd& x_grid,
                                 const std::vector<double>& scale_grid, std::uint64_t seed) {
  if (star.kind != KernelSpec::Kind::StarScale)
    throw std::invalid_argument("layered sampling needs an uncut star kernel");
  if (x_grid.rows() != star.dimension)
    throw std::invalid_argument("point dimension mismatch");
  const int p = static_cast<int>(x_grid.cols());
  if (p == 0 || p > kMaxFunctionals) throw std::invalid_argument("bad point count");
  if (scale_grid.empty()) throw std::invalid_argument("empty scale grid");
  const StarKernelTable& table = *star.table;

  LayeredSample out;
  out.scales = scale_grid;
  out.seed = seed;
  out.values.setZero(static_cast<int>(scale_grid.size()), p);

  Eigen::MatrixXd dist(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) dist(i, j) = (x_grid.col(i) - x_grid.col(j)).norm();

  Eigen::VectorXd running = Eigen::VectorXd::Zero(p);
  double prev = 1.0;
  for (size_t level = 0; level < scale_grid.size(); ++level) {
    const double cur = scale_grid[level];
    if (!(cur > 0) || !(cur < prev))
      throw std::invalid_argument("scale grid must decrease strictly inside (0,1)");
    Eigen::MatrixXd c(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j) {
        double v = table.cutoff(dist(i, j), cur);
        if (prev < 1.0) v -= table.cutoff(dist(i, j), prev);
        c(i, j) = c(j, i) = v;
      }
    const double ridge = 1e-10 * c.trace() / p;
    Eigen::MatrixXd factor = factor_with_ridge(c, ridge, {});
    auto rng = CounterRng::keyed(seed, kStreamLayers, static_cast<std::uint64_t>(level));
    running += factor * rng.normal_vector(p);
    out.values.row(static_cast<int>(level)) = running.transpose();
    prev = cur;
  }
  return out;
}

ComparisonCoefficients comparison_coefficients(const KernelSpec& kernel,
                                               const MollifierSpec& theta, double eps,
                                               const std::vector<double>& delta_schedule,
                                               const Eigen::VectorXd& x) {
  const bool gff = kernel.kind == KernelSpec::Kind::GffDisk;
  auto tilde = [&](double delta, std::string label) {
    return gff ? FunctionalDescriptor::circle_average(delta, x, std::move(label))
               : FunctionalDescriptor::star_cutoff(delta, x, std::move(label));
  };
  std::vector<FunctionalDescriptor> ds;
  ds.push_back(FunctionalDescriptor::convolution(theta, eps, x, "conv"));
  int eps_index = -1;
  for (size_t k = 0; k < delta_schedule.size(); ++k) {
    const double d = delta_schedule[k];
    if (!(d >= eps * (1.0 - 1e-12)) || !(d < 1))
      throw std::invalid_argument("reference scales must lie in [eps, 1)");
    if (eps_index < 0 && std::abs(d - eps) <= 1e-9 * eps) eps_index = static_cast<int>(k) + 1;
    ds.push_back(tilde(d, "t" + std::to_string(k)));
  }
  if (eps_index < 0) {
    eps_index = static_cast<int>(ds.size());
    ds.push_back(tilde(eps, "t_eps"));
  }
  const auto ex = expand_all(kernel, ds);
  const Eigen::MatrixXd c = assemble_covariance(kernel, ex);

  ComparisonCoefficients out;
  out.var_tilde = c(eps_index, eps_index);
  if (!(out.var_tilde > 0)) throw std::runtime_error("degenerate reference family: zero variance");
  out.var_conv = c(0, 0);
  out.lambda_eps = c(0, eps_index) / out.var_tilde;
  out.var_y = out.var_conv - out.lambda_eps * out.lambda_eps * out.var_tilde;
  out.rho.reserve(delta_schedule.size());
  for (size_t k = 0; k < delta_schedule.size(); ++k) {
    const int idx = static_cast<int>(k) + 1;
    const double r = -2.0 * (c(0, idx) - out.lambda_eps * c(eps_index, idx));
    out.rho.emplace_back(delta_schedule[k], r);
  }
  return out;
}

double min_particle_statistic(const Eigen::MatrixXd& values,
                              const std::vector<double>& scales, int d) {
  if (values.rows() != static_cast<Eigen::Index>(scales.size()))
    throw std::invalid_argument("one row of values per scale required");
  if (d != 1 && d != 2) throw std::invalid_argument("dimension must be 1 or 2");
  const double gamma_c = std::sqrt(2.0 * d);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    const double drift = gamma_c * std::log(1.0 / scales[static_cast<size_t>(j)]);
    best = std::min(best, drift - values.row(j).maxCoeff());
  }
  return best;
}

double increment_roughness(const KernelSpec& kernel, const MollifierSpec& theta, double eps,
                           const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
  double worst = 0;
  for (const auto& pr : pairs) {
    const double r = (pr.first - pr.second).norm();
    if (!(r < eps)) throw std::invalid_argument("pair separation must stay below eps");
    if (r == 0) continue;
    std::vector<FunctionalDescriptor> ds = {
        FunctionalDescriptor::convolution(theta, eps, pr.first, "a"),
        FunctionalDescriptor::convolution(theta, eps, pr.second, "b")};
    const auto ex = expand_all(kernel, ds);
    const Eigen::MatrixXd c = assemble_covariance(kernel, ex);
    const double inc = c(0, 0) + c(1, 1) - 2.0 * c(0, 1);
    worst = std::max(worst, inc * std::sqrt(eps) / std::sqrt(r));
  }
  return worst;
}

CirculantStarField::CirculantStarField(std::shared_ptr<const StarKernelTable> table,
                                       double eps, int per_octave, double period)
    : table_(std::move(table)), eps_(eps), period_(period), per_octave_(per_octave) {
  if (!table_) throw std::invalid_argument("null kernel table");
  if (!(eps > 0) || !(eps <= 0.25)) throw std::invalid_argument("eps must lie in (0, 1/4]");
  if (per_octave < 1 || per_octave > 64) throw std::invalid_argument("bad layer density");
  if (!(period >= 2.0 + 2.0 * table_->support()))
    throw std::invalid_argument("period too short for the kernel support");
  dx_ = eps_ / 2.0;
  const double nf = period_ / dx_;
  n_ = static_cast<int>(std::llround(nf));
  if (std::abs(nf - n_) > 1e-9) throw std::invalid_argument("period must be a lattice multiple");
  const double lf = per_octave_ * std::log2(1.0 / eps_);
  const int levels = static_cast<int>(std::llround(lf));
  if (std::abs(lf - levels) > 1e-9)
    throw std::invalid_argument("eps must sit on the layer schedule");

  deltas_.resize(static_cast<size_t>(levels) + 1);
  for (int j = 0; j <= levels; ++j)
    deltas_[static_cast<size_t>(j)] = std::pow(2.0, -static_cast<double>(j) / per_octave_);
  deltas_.back() = eps_;

  Eigen::VectorXd dist(n_);
  for (int i = 0; i < n_; ++i) dist[i] = std::min(i, n_ - i) * dx_;

  FftWorkspace ws;
  layer_sqrt_.reserve(static_cast<size_t>(levels));
  Eigen::VectorXd cov(n_);
  for (int j = 1; j <= levels; ++j) {
    const double cur = deltas_[static_cast<size_t>(j)];
    const double prev = deltas_[static_cast<size_t>(j - 1)];
    for (int i = 0; i < n_; ++i) {
      double v = table_->cutoff(dist[i], cur);
      if (j > 1) v -= table_->cutoff(dist[i], prev);
      cov[i] = v;
    }
    layer_sqrt_.push_back(sqrt_spectrum(cov, ws, &clamped_mass_));
  }

  // Sub-eps remainder convolved with the two-atom mollifier: atom pairs sit
  // at lattice distances s-1, s, s+1 in eps units, floored at the cell width.
  for (int i = 0; i < n_; ++i) {
    const double s = dist[i] / eps_;
    cov[i] = 0.25 * table_->full_floored(std::abs(s - 1.0), kCellFloor) +
             0.50 * table_->full_floored(s, kCellFloor) +
             0.25 * table_->full_floored(s + 1.0, kCellFloor);
  }
  tail_sqrt_ = sqrt_spectrum(cov, ws, &clamped_mass_);

  var_conv_ = std::log(1.0 / eps_) + 0.5 * (1.5 + table_->gs0()) + 0.5 * table_->gs(eps_);
  lambda_ = table_->cutoff(eps_ / 2.0, eps_) / std::log(1.0 / eps_);
}

double CirculantStarField::coordinate(int i) const {
  const double x = i * dx_;
  return x - period_ * std::floor((x + period_ / 2.0) / period_);
}

double CirculantStarField::rho(double delta) const {
  return -2.0 * (table_->cutoff(eps_ / 2.0, delta) - lambda_ * std::log(1.0 / delta));
}

Eigen::VectorXd CirculantStarField::sqrt_spectrum(const Eigen::VectorXd& cov,
                                                  FftWorkspace& ws, double* clamped) const {
  Eigen::VectorXcd in(n_), out(n_);
  for (int i = 0; i < n_; ++i) in[i] = cov[i];
  ws.fft.fwd(out, in);
  Eigen::VectorXd sq(n_);
  for (int k = 0; k < n_; ++k) {
    double lam = out[k].real();
    if (lam < 0) {
      *clamped = std::max(*clamped, -lam);
      lam = 0;
    }
    sq[k] = std::sqrt(lam);
  }
  return sq;
}

void CirculantStarField::add_stationary(FftWorkspace& ws, const Eigen::VectorXd& sqrt_spec,
                                        CounterRng& rng, Eigen::Matrix2Xd& out) const {
  ws.spectrum_in.resize(n_);
  for (int k = 0; k < n_; ++k) {
    const double a = rng.normal();
    const double b = rng.normal();
    ws.spectrum_in[k] = std::complex<double>(sqrt_spec[k] * a, sqrt_spec[k] * b);
  }
  ws.fft.inv(ws.time_out, ws.spectrum_in);
  const double scale = std::sqrt(static_cast<double>(n_));
  for (int i = 0; i < n_; ++i) {
    out(0, i) += scale * ws.time_out[i].real();
    out(1, i) += scale * ws.time_out[i].imag();
  }
}

void CirculantStarField::sample_pair(
    FftWorkspace& ws, std::uint64_t master, std::uint64_t stream, std::uint64_t pair_index,
    Eigen::Matrix2Xd& F, const std::function<void(int, const Eigen::Matrix2Xd&)>& layer_hook) const {
  F.setZero(2, n_);
  const int levels = static_cast<int>(layer_sqrt_.size());
  for (int j = 1; j <= levels; ++j) {
    auto rng = CounterRng::keyed(master, stream, pair_index, static_cast<std::uint64_t>(j));
    add_stationary(ws, layer_sqrt_[static_cast<size_t>(j - 1)], rng, F);
    if (layer_hook) layer_hook(j, F);
  }
}

void CirculantStarField::convolve_two_atom(FftWorkspace& ws, std::uint64_t master,
                                           std::uint64_t stream, std::uint64_t pair_index,
                                           const Eigen::Matrix2Xd& F,
                                           Eigen::Matrix2Xd& hc) const {
  if (F.cols() != n_) throw std::invalid_argument("field size mismatch");
  hc.resize(2, n_);
  for (int i = 0; i < n_; ++i) {
    const int lo = (i + n_ - 1) % n_;
    const int hi = (i + 1) % n_;
    hc(0, i) = 0.5 * (F(0, lo) + F(0, hi));
    hc(1, i) = 0.5 * (F(1, lo) + F(1, hi));
  }
  const std::uint64_t tail_id = layer_sqrt_.size() + 1;
  auto rng = CounterRng::keyed(master, stream, pair_index, tail_id);
  add_stationary(ws, tail_sqrt_, rng, hc);
}

}  // namespace gmc
