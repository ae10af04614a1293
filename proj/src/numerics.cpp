#include "gmc/numerics.hpp"

#include <atomic>
#include <thread>

namespace gmc {
namespace {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
  double kronrod, gauss;
};

PanelResult g7k15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0, g = 0;
  for (int i = 0; i < 8; ++i) {
    const double x = h * kKronrodNodes[i];
    const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
    k += kKronrodWeights[i] * fv;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * fv;
  }
  return {k * h, g * h};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double tol, int depth) {
  const PanelResult p = g7k15(f, a, b);
  if (depth <= 0 || std::abs(p.kronrod - p.gauss) <= tol) return p.kronrod;
  const double c = 0.5 * (a + b);
  return adapt(f, a, c, 0.5 * tol, depth - 1) +
         adapt(f, c, b, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
  if (!(abs_tol > 0)) throw std::invalid_argument("integrate: abs_tol must be positive");
  if (a == b) return 0.0;
  return adapt(f, a, b, abs_tol, max_depth);
}

HermiteTable<double> hermite_from_samples(double x0, double dx,
                                          const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  if (n < 5) throw std::invalid_argument("hermite_from_samples: need >= 5 samples");
  HermiteTable<double> t;
  t.x0 = x0;
  t.dx = dx;
  t.y = y;
  t.m.resize(n);
  for (Eigen::Index i = 2; i + 2 < n; ++i)
    t.m[i] = (8 * (y[i + 1] - y[i - 1]) - (y[i + 2] - y[i - 2])) / (12 * dx);
  t.m[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * dx);
  t.m[1] = (y[2] - y[0]) / (2 * dx);
  t.m[n - 2] = (y[n - 1] - y[n - 3]) / (2 * dx);
  t.m[n - 1] = (3 * y[n - 1] - 4 * y[n - 2] + y[n - 3]) / (2 * dx);
  return t;
}

Summary summarize(const Eigen::VectorXd& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = values.mean();
  if (s.n > 1) {
    s.sd = std::sqrt((values.array() - s.mean).square().sum() / double(s.n - 1));
    s.se = s.sd / std::sqrt(double(s.n));
  }
  std::vector<double> v(values.data(), values.data() + values.size());
  s.median = median(std::move(v));
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  double hi = v[h];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + h - 1, v.begin() + h);
  return 0.5 * (v[h - 1] + hi);
}

std::pair<double, double> median_ci95(std::vector<double> v) {
  if (v.size() < 8) throw std::invalid_argument("median_ci95: need >= 8 values");
  std::sort(v.begin(), v.end());
  const double n = double(v.size());
  const double half = 0.98 * std::sqrt(n);  // 1.96 * sqrt(n)/2
  auto lo = static_cast<std::ptrdiff_t>(std::floor(0.5 * (n - 1) - half));
  auto hi = static_cast<std::ptrdiff_t>(std::ceil(0.5 * (n - 1) + half));
  lo = std::clamp<std::ptrdiff_t>(lo, 0, std::ptrdiff_t(v.size()) - 1);
  hi = std::clamp<std::ptrdiff_t>(hi, 0, std::ptrdiff_t(v.size()) - 1);
  return {v[lo], v[hi]};
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt(double(n + m) / (double(n) * double(m)));
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace gmc
