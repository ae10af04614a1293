#include "gmc/kernels.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "gmc/rng.hpp"

namespace gmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radial_convolution_1d(const std::function<double(double)>& g, double s,
                             double r) {
  // supp(g(|t|) g(|r-t|)) = [r-s, s] for r >= 0; split at the kinks t=0, t=r.
  const double lo = std::max(-s, r - s);
  if (lo >= s) return 0.0;
  auto f = [&](double t) { return g(std::abs(t)) * g(std::abs(r - t)); };
  double v = 0;
  double cuts[4] = {lo, 0.0, r, s};
  std::sort(std::begin(cuts), std::end(cuts));
  for (int i = 0; i + 1 < 4; ++i) {
    const double a = std::max(lo, cuts[i]), b = std::min(s, cuts[i + 1]);
    if (b > a) v += integrate(f, a, b, 1e-12);
  }
  return v;
}

double radial_convolution_2d(const std::function<double(double)>& g, double s,
                             double r) {
  auto outer = [&](double rho) {
    auto inner = [&](double phi) {
      const double d = std::sqrt(std::max(
          0.0, r * r + rho * rho - 2.0 * r * rho * std::cos(phi)));
      return g(d);
    };
    return 2.0 * rho * g(rho) * integrate(inner, 0.0, M_PI, 1e-11);
  };
  return integrate(outer, 0.0, s, 1e-10);
}

}  // namespace

SeedFunction seed_from_bump(const std::function<double(double)>& g_profile,
                            double support, int dimension) {
  if (!(support > 0)) throw std::invalid_argument("seed_from_bump: support must be positive");
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("seed_from_bump: dimension must be 1 or 2");

  auto conv = [&](double r) {
    return dimension == 1 ? radial_convolution_1d(g_profile, support, r)
                          : radial_convolution_2d(g_profile, support, r);
  };
  const double k0 = conv(0.0);
  if (!(k0 > 1e-14)) throw std::invalid_argument("seed_from_bump: invalid seed (zero or non-integrable profile)");

  const double S = 2.0 * support;
  const int n = dimension == 1 ? 4096 : 1024;
  const double dx = S / n;
  Eigen::VectorXd y(n + 1);
  for (int i = 0; i <= n; ++i) y[i] = conv(i * dx) / k0;
  auto table = std::make_shared<HermiteTable<double>>(hermite_from_samples(0.0, dx, y));

  SeedFunction k;
  k.support_radius = S;
  k.value_at_zero = 1.0;
  k.profile = [table, S](double r) { return r >= S ? 0.0 : (*table)(r); };
  return k;
}

SeedFunction cosine_seed(int dimension) {
  auto g = [](double u) {
    const double c = std::cos(M_PI * u);
    return u <= 0.5 ? c * c : 0.0;
  };
  return seed_from_bump(g, 0.5, dimension);
}

SeedFunction triangle_seed(int dimension) {
  auto g = [](double u) { return u <= 0.5 ? 1.0 - 2.0 * u : 0.0; };
  return seed_from_bump(g, 0.5, dimension);
}

double star_kernel_eval(const SeedFunction& k, double r) {
  if (r < 0) throw std::domain_error("star_kernel_eval: r must be nonnegative");
  if (r == 0) return kInf;
  const double S = k.support_radius;
  if (r >= S) return 0.0;
  auto f = [&](double u) { return k.profile(u * r) / u; };
  return integrate(f, 1.0, S / r, 1e-10);
}

double star_kernel_cutoff_eval(const SeedFunction& k, double r, double eps) {
  if (!(eps > 0 && eps < 1)) throw std::domain_error("star_kernel_cutoff_eval: eps must lie in (0,1)");
  if (r < 0) throw std::domain_error("star_kernel_cutoff_eval: r must be nonnegative");
  if (r == 0) return std::log(1.0 / eps);
  const double S = k.support_radius;
  const double upper = std::min(1.0 / eps, S / r);
  if (upper <= 1.0) return 0.0;
  auto f = [&](double u) { return k.profile(u * r) / u; };
  return integrate(f, 1.0, upper, 1e-10);
}

StarKernelTable::StarKernelTable(const SeedFunction& k, int intervals)
    : S_(k.support_radius) {
  if (intervals < 16) throw std::invalid_argument("StarKernelTable: too few intervals");
  const int n = intervals;
  const double dx = S_ / n;
  // (k(v)-1)/v extends continuously to 0 at v=0 because k is even with
  // k(0)=1; the per-interval quadrature keeps the node values exact.
  auto f = [&](double v) { return v <= 0 ? 0.0 : (k.profile(v) - 1.0) / v; };
  Eigen::VectorXd seg(n);
  for (int i = 0; i < n; ++i)
    seg[i] = integrate(f, i * dx, (i + 1) * dx, 1e-13);
  Eigen::VectorXd y(n + 1);
  y[n] = std::log(S_);
  for (int i = n - 1; i >= 0; --i) y[i] = y[i + 1] + seg[i];
  gs_.x0 = 0.0;
  gs_.dx = dx;
  gs_.y = y;
  gs_.m.resize(n + 1);
  for (int i = 0; i <= n; ++i) gs_.m[i] = -f(i * dx);
}

double StarKernelTable::gs(double r) const {
  return r >= S_ ? std::log(r) : gs_(r);
}

double StarKernelTable::full(double r) const {
  if (r <= 0) return kInf;
  if (r >= S_) return 0.0;
  return -std::log(r) + gs_(r);
}

double StarKernelTable::full_floored(double r, double floor_r) const {
  return -std::log(std::max(r, floor_r)) + gs(r);
}

double StarKernelTable::cutoff(double r, double delta) const {
  if (r <= 0) return std::log(1.0 / delta);
  if (r >= S_) return 0.0;
  const double rs = r / delta;
  if (rs >= S_) return full(r);
  return std::log(1.0 / delta) + gs_(r) - gs_(rs);
}

double StarKernelTable::cutoff_floored(double r, double delta,
                                       double floor_r) const {
  if (floor_r <= 0) return cutoff(r, delta);
  const double rs = r / delta;
  if (rs >= S_) return full_floored(r, floor_r);
  return full_floored(r, floor_r) - full_floored(rs, floor_r / delta);
}

namespace {

void validate_seed(const SeedFunction& k, bool allow_unchecked) {
  if (std::abs(k.value_at_zero - 1.0) > 1e-9 || std::abs(k.profile(0.0) - 1.0) > 1e-9)
    throw std::invalid_argument("star kernel seed: k(0) must equal 1");
  if (!(k.support_radius > 0))
    throw std::invalid_argument("star kernel seed: positive support required");
  if (std::abs(k.profile(k.support_radius * 1.0001)) > 1e-12)
    throw std::invalid_argument("star kernel seed: profile must vanish beyond its support");
  if (allow_unchecked) return;
  // Spot check of positive definiteness on a random point set.
  CounterRng rng = CounterRng::keyed(0x5eedULL);
  const int n = 24;
  Eigen::MatrixXd g(n, n);
  Eigen::VectorXd pts(n);
  for (int i = 0; i < n; ++i) pts[i] = 2.0 * k.support_radius * rng.uniform();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = k.profile(std::abs(pts[i] - pts[j]));
  const double mineig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                            g, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
  if (mineig < -1e-6)
    throw std::invalid_argument("star kernel seed: failed positive definiteness check; "
                                "build it with seed_from_bump or pass allow_unchecked");
}

}  // namespace

KernelSpec gff_disk() {
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::GffDisk;
  spec.dimension = 2;
  return spec;
}

KernelSpec star_scale(SeedFunction k, int dimension, bool allow_unchecked) {
  validate_seed(k, allow_unchecked);
  KernelSpec spec;
  spec.kind = KernelSpec::Kind::StarScale;
  spec.dimension = dimension;
  spec.table = std::make_shared<StarKernelTable>(k);
  spec.seed = std::move(k);
  return spec;
}

KernelSpec star_scale_cutoff(SeedFunction k, double eps, int dimension,
                             bool allow_unchecked) {
  if (!(eps > 0 && eps < 1)) throw std::domain_error("star_scale_cutoff: eps must lie in (0,1)");
  KernelSpec spec = star_scale(std::move(k), dimension, allow_unchecked);
  spec.kind = KernelSpec::Kind::StarScaleCutoff;
  spec.eps = eps;
  return spec;
}

double green_disk(const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
  if (x.norm() > 1.0 + 1e-12 || y.norm() > 1.0 + 1e-12)
    throw std::domain_error("green_disk: points must lie in the closed unit disk");
  const std::complex<double> zx(x[0], x[1]), zy(y[0], y[1]);
  const double sep = std::abs(zx - zy);
  if (sep == 0.0) throw std::domain_error("green_disk: coincident points");
  return std::log(std::abs(1.0 - zx * std::conj(zy)) / sep);
}

double kernel_eval(const KernelSpec& K, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  switch (K.kind) {
    case KernelSpec::Kind::GffDisk:
      return green_disk(x, y);
    case KernelSpec::Kind::StarScale:
      return K.table->full((x - y).norm());
    case KernelSpec::Kind::StarScaleCutoff:
      return K.table->cutoff((x - y).norm(), K.eps);
  }
  throw std::logic_error("kernel_eval: unknown kind");
}

double kernel_log_remainder(const KernelSpec& K, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw std::domain_error("kernel_log_remainder: coincident points");
  switch (K.kind) {
    case KernelSpec::Kind::GffDisk: {
      const std::complex<double> zx(x[0], x[1]), zy(y[0], y[1]);
      return std::log(std::abs(1.0 - zx * std::conj(zy)));
    }
    case KernelSpec::Kind::StarScale:
      return K.table->gs(r);
    case KernelSpec::Kind::StarScaleCutoff:
      return K.table->cutoff(r, K.eps) + std::log(r);
  }
  throw std::logic_error("kernel_log_remainder: unknown kind");
}

namespace {

double min_gram_eigenvalue(const Eigen::MatrixXd& gram, double ridge) {
  Eigen::MatrixXd g = gram;
  g.diagonal().array() += ridge;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

}  // namespace

double check_positive_definite(const KernelSpec& K,
                               const Eigen::MatrixXd& points, double ridge,
                               double self_eps) {
  const Eigen::Index n = points.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((points.col(i) - points.col(j)).norm() == 0.0)
        throw std::invalid_argument("check_positive_definite: duplicate points");
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j)
      g(i, j) = g(j, i) = kernel_eval(K, points.col(i), points.col(j));
    switch (K.kind) {
      case KernelSpec::Kind::GffDisk:
        g(i, i) = std::log(1.0 / self_eps) +
                  std::log(std::max(1e-300, 1.0 - points.col(i).squaredNorm()));
        break;
      case KernelSpec::Kind::StarScale:
        g(i, i) = K.table->cutoff(0.0, self_eps);
        break;
      case KernelSpec::Kind::StarScaleCutoff:
        g(i, i) = K.table->cutoff(0.0, K.eps);
        break;
    }
  }
  return min_gram_eigenvalue(g, ridge);
}

double check_positive_definite(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& k,
    double self_variance, const Eigen::MatrixXd& points, double ridge) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = self_variance;
    for (Eigen::Index j = i + 1; j < n; ++j)
      g(i, j) = g(j, i) = k(points.col(i), points.col(j));
  }
  return min_gram_eigenvalue(g, ridge);
}

}  // namespace gmc
