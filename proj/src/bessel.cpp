#include "gmc/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gmc/chaos.hpp"
#include "gmc/numerics.hpp"

namespace gmc {
namespace {

constexpr std::uint64_t kStreamBrownian = 0xB0;
constexpr std::uint64_t kStreamBessel = 0xB3;
constexpr std::uint64_t kStreamConservation = 0xC0;
constexpr std::uint64_t kStreamRooted = 0x27;
constexpr std::uint64_t kStreamZRatio = 0x5A;

void check_grid(const Eigen::VectorXd& t) {
  if (t.size() < 1 || t[0] != 0) throw std::invalid_argument("time grid must start at 0");
  for (Eigen::Index i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("time grid must increase strictly");
}

Eigen::Index locate_time(const Path& path, double t) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  for (Eigen::Index i = 0; i < path.times.size(); ++i)
    if (std::abs(path.times[i] - t) <= tol) return i;
  throw std::invalid_argument("t is not a grid time of the path");
}

double draw_plain_start(const StartLaw& law, CounterRng& rng) {
  switch (law.kind) {
    case StartLaw::Kind::Deterministic:
      return law.value;
    case StartLaw::Kind::Gaussian:
      return law.mean + law.sd * rng.normal();
    case StartLaw::Kind::BoundedGaussian:
      for (int i = 0; i < 100000; ++i) {
        const double b = law.mean + law.sd * rng.normal();
        if (b >= law.lo && b <= law.hi) return b;
      }
      throw std::runtime_error("start support carries negligible Gaussian mass");
  }
  throw std::logic_error("unreachable");
}

double bessel_step(double x, double dt, CounterRng& rng) {
  const double s = std::sqrt(dt);
  const double a = x + s * rng.normal();
  const double b = s * rng.normal();
  const double c = s * rng.normal();
  return std::sqrt(a * a + b * b + c * c);
}

// Survival weight of the positive barrier between consecutive grid values,
// exact for a Brownian bridge: P(no zero crossing) = 1 - e^{-2 f0 f1 / dt}.
double bridge_factor(double f0, double f1, double dt) {
  return -std::expm1(-2.0 * f0 * f1 / dt);
}

}  // namespace

StartLaw StartLaw::deterministic(double v) {
  StartLaw s;
  s.kind = Kind::Deterministic;
  s.value = v;
  return s;
}

StartLaw StartLaw::gaussian(double mean, double sd) {
  if (!(sd > 0)) throw std::invalid_argument("sd must be positive");
  StartLaw s;
  s.kind = Kind::Gaussian;
  s.mean = mean;
  s.sd = sd;
  return s;
}

StartLaw StartLaw::bounded_gaussian(double mean, double sd, double lo, double hi) {
  if (!(sd > 0) || !(hi > lo)) throw std::invalid_argument("bad bounded start");
  StartLaw s;
  s.kind = Kind::BoundedGaussian;
  s.mean = mean;
  s.sd = sd;
  s.lo = lo;
  s.hi = hi;
  return s;
}

double StartLaw::variance() const {
  switch (kind) {
    case Kind::Deterministic:
      return 0;
    case Kind::Gaussian:
      return sd * sd;
    case Kind::BoundedGaussian: {
      const double a = (lo - mean) / sd, b = (hi - mean) / sd;
      const double z = normal_cdf(b) - normal_cdf(a);
      if (!(z > 0)) throw std::runtime_error("empty truncated start");
      const double pa = normal_pdf(a), pb = normal_pdf(b);
      const double r = (pa - pb) / z;
      return sd * sd * (1.0 + (a * pa - b * pb) / z - r * r);
    }
  }
  throw std::logic_error("unreachable");
}

double StartLaw::mean_value() const {
  switch (kind) {
    case Kind::Deterministic:
      return value;
    case Kind::Gaussian:
      return mean;
    case Kind::BoundedGaussian: {
      const double a = (lo - mean) / sd, b = (hi - mean) / sd;
      const double z = normal_cdf(b) - normal_cdf(a);
      if (!(z > 0)) throw std::runtime_error("empty truncated start");
      return mean + sd * (normal_pdf(a) - normal_pdf(b)) / z;
    }
  }
  throw std::logic_error("unreachable");
}

Path sample_brownian(const Eigen::VectorXd& t_grid, double b0, std::uint64_t seed) {
  check_grid(t_grid);
  auto rng = CounterRng::keyed(seed, kStreamBrownian);
  Path p;
  p.kind = Path::Kind::Brownian;
  p.times = t_grid;
  p.values.resize(t_grid.size());
  p.values[0] = b0;
  for (Eigen::Index i = 1; i < t_grid.size(); ++i)
    p.values[i] = p.values[i - 1] + std::sqrt(t_grid[i] - t_grid[i - 1]) * rng.normal();
  return p;
}

Path sample_bessel3(const Eigen::VectorXd& t_grid, double x0, std::uint64_t seed) {
  if (!(x0 > 0)) throw std::invalid_argument("bessel3 start must be positive");
  check_grid(t_grid);
  auto rng = CounterRng::keyed(seed, kStreamBessel);
  Path p;
  p.kind = Path::Kind::Bessel3;
  p.times = t_grid;
  p.values.resize(t_grid.size());
  p.values[0] = x0;
  for (Eigen::Index i = 1; i < t_grid.size(); ++i)
    p.values[i] = bessel_step(p.values[i - 1], t_grid[i] - t_grid[i - 1], rng);
  return p;
}

double martingale_value(const Path& path, const TiltSpec& tilt, double t) {
  if (path.kind != Path::Kind::Brownian)
    throw std::invalid_argument("martingale is defined on Brownian paths");
  const Eigen::Index k = locate_time(path, t);
  double f_t = 0;
  for (Eigen::Index i = 0; i <= k; ++i) {
    f_t = -path.values[i] + tilt.gamma * path.times[i] + tilt.beta;
    if (!(f_t > 0)) return 0;
  }
  return f_t * std::exp(tilt.gamma * path.values[k] -
                        0.5 * tilt.gamma * tilt.gamma * path.times[k]);
}

BesselMomentReport bessel_moment_suite(const std::vector<Path>& paths, double t,
                                       const std::vector<double>& envelope_r) {
  if (paths.empty()) throw std::invalid_argument("no paths supplied");
  const double quarter = std::pow(t, 0.25);
  RunningStat inv, inv_sq, small;
  std::vector<long> inside(envelope_r.size(), 0);
  for (const auto& p : paths) {
    if (p.kind != Path::Kind::Bessel3)
      throw std::invalid_argument("moment suite expects bessel3 paths");
    const Eigen::Index k = locate_time(p, t);
    const double x = p.values[k];
    inv.add(1.0 / x);
    inv_sq.add(1.0 / (x * x));
    small.add(x <= quarter ? 1.0 / x : 0.0);
    for (size_t r = 0; r < envelope_r.size(); ++r) {
      const double big_r = envelope_r[r];
      bool ok = true;
      for (Eigen::Index i = 0; i < p.times.size() && ok; ++i) {
        const double u = p.times[i];
        if (u <= 0) continue;
        const double lg = std::log(2.0 + u);
        const double lower = std::sqrt(u) / (big_r * lg * lg);
        const double upper = big_r * (1.0 + std::sqrt(u * std::log1p(u)));
        ok = p.values[i] >= lower && p.values[i] <= upper;
      }
      if (ok) ++inside[r];
    }
  }
  BesselMomentReport rep;
  auto pack = [](const RunningStat& s) {
    return MomentEstimate{s.mean, s.se(), s.n};
  };
  rep.inverse = pack(inv);
  rep.inverse_square = pack(inv_sq);
  rep.small_ball = pack(small);
  for (size_t r = 0; r < envelope_r.size(); ++r)
    rep.envelope_hit_rates.emplace_back(envelope_r[r],
                                        double(inside[r]) / double(paths.size()));
  return rep;
}

ConservationEstimate martingale_conservation(const TiltSpec& tilt, double t,
                                             int grid_per_unit, long paths,
                                             std::uint64_t seed) {
  if (!(t > 0) || grid_per_unit < 1 || paths < 2)
    throw std::invalid_argument("bad conservation configuration");
  const int steps = std::max<int>(1, static_cast<int>(std::lround(grid_per_unit * t)));
  const double dt = t / steps;
  RunningStat stat;
  for (long r = 0; r < paths; ++r) {
    auto rng = CounterRng::keyed(seed, kStreamConservation, static_cast<std::uint64_t>(r));
    const double f0 = tilt.beta - draw_plain_start(tilt.start, rng);
    if (!(f0 > 0)) {
      stat.add(0.0);
      continue;
    }
    double w = 0, f_prev = f0, surv = 1;
    for (int k = 0; k < steps; ++k) {
      w += std::sqrt(dt) * rng.normal();
      const double f = f0 - w;
      if (!(f > 0)) {
        surv = 0;
        break;
      }
      surv *= bridge_factor(f_prev, f, dt);
      f_prev = f;
    }
    stat.add(surv > 0 ? f_prev * surv : 0.0);
  }
  return {stat.mean, stat.se(), stat.n, steps};
}

RefinementPair conservation_refinement(const TiltSpec& tilt, double t,
                                       int base_per_unit, long paths,
                                       std::uint64_t seed) {
  if (!(t > 0) || base_per_unit < 1 || paths < 2)
    throw std::invalid_argument("bad refinement configuration");
  const int coarse_steps = std::max<int>(1, static_cast<int>(std::lround(base_per_unit * t)));
  const int fine_steps = 2 * coarse_steps;
  const double dtf = t / fine_steps;
  RunningStat coarse, fine, diff;
  Eigen::VectorXd w(fine_steps + 1);
  for (long r = 0; r < paths; ++r) {
    auto rng = CounterRng::keyed(seed, kStreamConservation, static_cast<std::uint64_t>(r), 1);
    const double f0 = tilt.beta - draw_plain_start(tilt.start, rng);
    w[0] = 0;
    for (int k = 1; k <= fine_steps; ++k) w[k] = w[k - 1] + std::sqrt(dtf) * rng.normal();
    auto value = [&](int stride) {
      if (!(f0 > 0)) return 0.0;
      double surv = 1, f_prev = f0;
      for (int k = stride; k <= fine_steps; k += stride) {
        const double f = f0 - w[k];
        if (!(f > 0)) return 0.0;
        surv *= bridge_factor(f_prev, f, stride * dtf);
        f_prev = f;
      }
      return f_prev * surv;
    };
    const double vc = value(2), vf = value(1);
    coarse.add(vc);
    fine.add(vf);
    diff.add(vf - vc);
  }
  RefinementPair out;
  out.coarse = {coarse.mean, coarse.se(), coarse.n, coarse_steps};
  out.fine = {fine.mean, fine.se(), fine.n, fine_steps};
  out.diff_mean = diff.mean;
  out.diff_se = diff.se();
  return out;
}

double sample_biased_start(const TiltSpec& tilt, CounterRng& rng) {
  const StartLaw& law = tilt.start;
  const double c = tilt.gamma * law.variance() + tilt.beta;
  switch (law.kind) {
    case StartLaw::Kind::Deterministic: {
      const double w = c - law.value;
      if (!(w > 0)) throw std::invalid_argument("deterministic start sits outside the barrier");
      return w;
    }
    case StartLaw::Kind::Gaussian: {
      // Weight grows linearly into the left tail; the envelope is capped at
      // ten standard deviations, beyond which the Gaussian mass is ~1e-23.
      const double cap = (c - law.mean) + 10.0 * law.sd;
      if (!(cap > 0)) throw std::invalid_argument("start weight is nonpositive");
      for (int i = 0; i < 1000000; ++i) {
        const double w = c - (law.mean + law.sd * rng.normal());
        if (!(w > 0)) continue;
        if (w >= cap || rng.uniform() * cap <= w) return w;
      }
      throw std::runtime_error("biased start rejection failed to accept");
    }
    case StartLaw::Kind::BoundedGaussian: {
      const double cap = c - law.lo;
      if (!(cap > 0)) throw std::invalid_argument("start weight is nonpositive");
      for (int i = 0; i < 1000000; ++i) {
        const double w = c - draw_plain_start(law, rng);
        if (!(w > 0)) continue;
        if (rng.uniform() * cap <= w) return w;
      }
      throw std::runtime_error("biased start rejection failed to accept");
    }
  }
  throw std::logic_error("unreachable");
}

Path rooted_radial_sampler(const std::vector<double>& eps_schedule,
                           const ComparisonCoefficients& coeffs,
                           const TiltSpec& tilt, int d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("dimension must be at least 1");
  if (!(tilt.gamma > 0) || !(tilt.beta > 0))
    throw std::invalid_argument("tilt parameters must be positive");
  const size_t n = eps_schedule.size();
  if (n == 0) throw std::invalid_argument("empty scale schedule");
  for (size_t k = 0; k < n; ++k) {
    if (!(eps_schedule[k] > 0) || !(eps_schedule[k] < 1) ||
        (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1])))
      throw std::invalid_argument("scale schedule must decrease strictly inside (0,1)");
  }
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (!coeffs.rho.empty()) {
    for (size_t k = 0; k < n; ++k) {
      bool found = false;
      for (const auto& entry : coeffs.rho)
        if (std::abs(entry.first - eps_schedule[k]) <= 1e-9 * eps_schedule[k]) {
          rho[static_cast<Eigen::Index>(k)] = entry.second;
          found = true;
          break;
        }
      if (!found) throw std::invalid_argument("rho is undefined at a schedule point");
    }
  }

  auto rng = CounterRng::keyed(seed, kStreamRooted);
  double x = 0;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    x = sample_biased_start(tilt, rng) - rho[0];
    if (x > 0) break;
  }
  if (!(x > 0)) throw std::runtime_error("biased start never cleared the shift");

  Path p;
  p.kind = Path::Kind::Bessel3;
  p.times.resize(static_cast<Eigen::Index>(n));
  p.values.resize(static_cast<Eigen::Index>(n));
  const double t0 = std::log(1.0 / eps_schedule[0]);
  p.times[0] = 0;
  p.values[0] = x + rho[0];
  for (size_t k = 1; k < n; ++k) {
    const double t = std::log(1.0 / eps_schedule[k]) - t0;
    x = bessel_step(x, t - p.times[static_cast<Eigen::Index>(k - 1)], rng);
    p.times[static_cast<Eigen::Index>(k)] = t;
    p.values[static_cast<Eigen::Index>(k)] = x + rho[static_cast<Eigen::Index>(k)];
  }
  return p;
}

ZRatioEstimate z_ratio_estimate(const KernelSpec& kernel, const MollifierSpec& theta,
                                double eps, double beta, const Eigen::VectorXd& x,
                                int replicas, std::uint64_t seed, double eps0,
                                int per_octave, double f_threshold) {
  if (!(eps > 0) || !(eps < eps0) || !(eps0 < 1))
    throw std::invalid_argument("need 0 < eps < eps0 < 1");
  if (!(beta > 0) || replicas < 2) throw std::invalid_argument("bad tilt or replica count");
  const double lf = per_octave * std::log2(eps0 / eps);
  const int levels = static_cast<int>(std::llround(lf));
  if (std::abs(lf - levels) > 1e-9)
    throw std::invalid_argument("eps must sit on the schedule of eps0");
  std::vector<double> deltas(static_cast<size_t>(levels) + 1);
  for (int j = 0; j <= levels; ++j)
    deltas[static_cast<size_t>(j)] = eps0 * std::pow(2.0, -double(j) / per_octave);
  deltas.back() = eps;

  const bool gff = kernel.kind == KernelSpec::Kind::GffDisk;
  std::vector<FunctionalDescriptor> ds;
  ds.push_back(FunctionalDescriptor::convolution(theta, eps, x, "conv"));
  for (size_t j = 0; j < deltas.size(); ++j) {
    ds.push_back(gff ? FunctionalDescriptor::circle_average(deltas[j], x, "t" + std::to_string(j))
                     : FunctionalDescriptor::star_cutoff(deltas[j], x, "t" + std::to_string(j)));
  }
  const FunctionalEnsemble ens = build_ensemble(kernel, std::move(ds));
  const Eigen::MatrixXd& c = ens.covariance;
  const int te = levels + 1;  // index of the eps-scale reference functional
  const double var_conv = c(0, 0);
  const double var_te = c(te, te);
  const double lambda = c(0, te) / var_te;
  Eigen::VectorXd rho(levels + 1);
  for (int j = 0; j <= levels; ++j)
    rho[j] = -2.0 * (c(0, 1 + j) - lambda * c(te, 1 + j));

  const int d = kernel.dimension;
  double sm = 0, st = 0, smm = 0, stt = 0, smt = 0;
  for (int r = 0; r < replicas; ++r) {
    auto rng = CounterRng::keyed(seed, kStreamZRatio, static_cast<std::uint64_t>(r));
    const Eigen::VectorXd v = ens.factor * rng.normal_vector(c.rows());
    const TiltedCoordinates tc =
        tilted_coordinates(v[0], var_conv, v[te], var_te, deltas,
                           v.segment(1, levels + 1), rho, lambda, beta, d);
    const double zm = tc.barrier_ok && tc.f > f_threshold ? tc.f * tc.g_exp : 0.0;
    const double zt = tc.barrier_ok ? tc.f_tilde * tc.g_exp : 0.0;
    sm += zm;
    st += zt;
    smm += zm * zm;
    stt += zt * zt;
    smt += zm * zt;
  }
  const double n = replicas;
  ZRatioEstimate out;
  out.n = replicas;
  out.z_hat = sm / n;
  out.z_tilde_hat = st / n;
  const double vm = (smm - n * out.z_hat * out.z_hat) / (n - 1);
  const double vt = (stt - n * out.z_tilde_hat * out.z_tilde_hat) / (n - 1);
  const double cmt = (smt - n * out.z_hat * out.z_tilde_hat) / (n - 1);
  out.z_se = std::sqrt(std::max(vm, 0.0) / n);
  out.z_tilde_se = std::sqrt(std::max(vt, 0.0) / n);
  if (out.z_tilde_hat > 0 && out.z_hat > 0) {
    out.ratio = out.z_hat / out.z_tilde_hat;
    const double rel = vm / (out.z_hat * out.z_hat) + vt / (out.z_tilde_hat * out.z_tilde_hat) -
                       2.0 * cmt / (out.z_hat * out.z_tilde_hat);
    out.ratio_se = out.ratio * std::sqrt(std::max(rel, 0.0) / n);
  } else {
    out.ratio = std::numeric_limits<double>::quiet_NaN();
    out.ratio_se = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace gmc
