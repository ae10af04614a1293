#include "gmc/harness.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gmc/bessel.hpp"
#include "gmc/numerics.hpp"
#include "gmc/rng.hpp"

namespace gmc {
namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();
const double kRatioTarget = 0.7978845608028654;  // sqrt(2/pi)

std::string fmt17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string fmt4(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

GateResult gate(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass ? 0 : 1, std::move(detail)};
}

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - t0_).count();
    t0_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

std::vector<double> geometric_schedule(double hi, double lo, int per_octave) {
  const double lf = per_octave * std::log2(hi / lo);
  const int levels = static_cast<int>(std::llround(lf));
  if (levels < 1 || std::abs(lf - levels) > 1e-9)
    throw std::invalid_argument("scales must be an exact number of schedule steps apart");
  std::vector<double> out(static_cast<size_t>(levels) + 1);
  for (int j = 0; j <= levels; ++j)
    out[static_cast<size_t>(j)] = hi * std::pow(2.0, -double(j) / per_octave);
  out.front() = hi;
  out.back() = lo;
  return out;
}

double median_of(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }),
          v.end());
  if (v.empty()) return kNan;
  return median(std::move(v));
}

std::pair<double, double> ci_of(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }),
          v.end());
  if (v.size() < 8) return {kNan, kNan};
  return median_ci95(std::move(v));
}

double nan_fraction(const std::vector<double>& v) {
  if (v.empty()) return 0;
  long bad = 0;
  for (double x : v) bad += std::isnan(x);
  return double(bad) / double(v.size());
}

}  // namespace

std::vector<double> ExperimentConfig::eps_schedule() const {
  if (eps_count < 1 || !(eps_ratio > 0) || !(eps_ratio < 1) || !(eps_base > 0) ||
      !(eps_base < 1))
    throw std::invalid_argument("bad eps schedule");
  std::vector<double> out(static_cast<size_t>(eps_count));
  for (int k = 0; k < eps_count; ++k)
    out[static_cast<size_t>(k)] = eps_base * std::pow(eps_ratio, k);
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.kernel = j.value("kernel", c.kernel);
  c.seed_profile = j.value("seed_profile", c.seed_profile);
  c.dimension = j.value("dimension", c.dimension);
  c.mollifier = j.value("mollifier", c.mollifier);
  c.mollifier_step = j.value("mollifier_step", c.mollifier_step);
  c.circle_nodes = j.value("circle_nodes", c.circle_nodes);
  c.window_lo = j.value("window_lo", c.window_lo);
  c.window_hi = j.value("window_hi", c.window_hi);
  c.cells = j.value("cells", c.cells);
  c.eps_base = j.value("eps_base", c.eps_base);
  c.eps_ratio = j.value("eps_ratio", c.eps_ratio);
  c.eps_count = j.value("eps_count", c.eps_count);
  c.per_octave = j.value("per_octave", c.per_octave);
  c.eps0 = j.value("eps0", c.eps0);
  c.beta = j.value("beta", c.beta);
  c.replicas = j.value("replicas", c.replicas);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.normalization = j.value("normalization", c.normalization);
  c.f_threshold = j.value("f_threshold", c.f_threshold);
  c.threads = j.value("threads", c.threads);
  if (c.replicas < 2) throw std::invalid_argument("replicas must be at least 2");
  return c;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["kernel"] = kernel;
  j["seed_profile"] = seed_profile;
  j["dimension"] = dimension;
  j["mollifier"] = mollifier;
  j["mollifier_step"] = mollifier_step;
  j["circle_nodes"] = circle_nodes;
  j["window_lo"] = window_lo;
  j["window_hi"] = window_hi;
  j["cells"] = cells;
  j["eps_base"] = eps_base;
  j["eps_ratio"] = eps_ratio;
  j["eps_count"] = eps_count;
  j["per_octave"] = per_octave;
  j["eps0"] = eps0;
  j["beta"] = beta;
  j["replicas"] = replicas;
  j["master_seed"] = master_seed;
  j["normalization"] = normalization;
  j["f_threshold"] = f_threshold;
  j["threads"] = threads;
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string dump = config.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

KernelSpec make_kernel(const ExperimentConfig& config) {
  if (config.kernel == "gff_disk") return gff_disk();
  const SeedFunction seed =
      config.seed_profile == "triangle" ? triangle_seed() : cosine_seed();
  if (config.kernel == "star_scale") return star_scale(seed, config.dimension);
  throw std::invalid_argument("unknown kernel '" + config.kernel + "'");
}

MollifierSpec make_mollifier(const ExperimentConfig& config) {
  if (config.mollifier == "uniform_circle") return make_uniform_circle(config.circle_nodes);
  if (config.mollifier == "cosine_bump")
    return cosine_bump_mollifier(config.mollifier_step, config.dimension);
  throw std::invalid_argument("unknown mollifier '" + config.mollifier + "'");
}

int ExperimentReport::exit_status() const {
  int status = 0;
  for (const auto& g : gates) {
    if (g.status == 1) return 1;
    status = std::max(status, g.status);
  }
  return status;
}

void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (format == "csv") {
    out << "replica,eps,kind,beta,total_mass,ratio_statistic\n";
    for (const auto& r : report.records)
      out << r.replica << ',' << fmt17(r.eps) << ',' << r.kind << ',' << fmt17(r.beta)
          << ',' << fmt17(r.total_mass) << ',' << fmt17(r.ratio_statistic) << '\n';
  } else if (format == "json") {
    nlohmann::ordered_json j;
    j["name"] = report.name;
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016" PRIx64, report.config);
    j["config_hash"] = hex;
    j["summary"] = report.summary;
    j["gates"] = nlohmann::ordered_json::array();
    for (const auto& g : report.gates)
      j["gates"].push_back({{"name", g.name}, {"status", g.status}, {"detail", g.detail}});
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
      nlohmann::ordered_json rec;
      rec["replica"] = r.replica;
      rec["eps"] = r.eps;
      rec["kind"] = r.kind;
      rec["beta"] = r.beta;
      rec["total_mass"] = fmt17(r.total_mass);
      rec["ratio_statistic"] = fmt17(r.ratio_statistic);
      j["records"].push_back(std::move(rec));
    }
    out << j.dump(2) << '\n';
  } else {
    throw std::invalid_argument("format must be csv or json");
  }
  if (!out.good()) throw std::runtime_error("write to '" + path + "' failed");
}

LatticeChaosResult run_lattice_chaos(const LatticeChaosOptions& o) {
  const SeedFunction seed =
      o.seed_profile == "triangle" ? triangle_seed() : cosine_seed();
  const KernelSpec spec = star_scale(seed, 1);
  const CirculantStarField field(spec.table, o.eps, o.per_octave);
  const std::vector<double>& deltas = field.deltas();
  const int levels = static_cast<int>(deltas.size()) - 1;
  const int n = field.size();
  const double dx = field.spacing();
  const double sqrt2 = std::sqrt(2.0);
  const double var_conv = field.var_conv();
  const double lambda = field.lambda_eps();

  std::vector<double> rho(static_cast<size_t>(levels) + 1, 0.0);
  for (int j = 1; j <= levels; ++j) rho[static_cast<size_t>(j)] = field.rho(deltas[static_cast<size_t>(j)]);
  int barrier_from = levels + 1;
  for (int j = 1; j <= levels; ++j)
    if (deltas[static_cast<size_t>(j)] <= o.eps0 * (1.0 + 1e-12)) {
      barrier_from = j;
      break;
    }

  std::vector<int> depth_level(o.min_depths.size(), -1);
  for (size_t k = 0; k < o.min_depths.size(); ++k) {
    for (int j = 1; j <= levels; ++j)
      if (std::abs(deltas[static_cast<size_t>(j)] - o.min_depths[k]) <= 1e-9 * o.min_depths[k])
        depth_level[k] = j;
    if (depth_level[k] < 0)
      throw std::invalid_argument("min depth does not sit on the layer schedule");
  }

  std::vector<int> window;
  window.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = field.coordinate(i);
    if (x > o.window_lo && x < o.window_hi) window.push_back(i);
  }

  LatticeChaosResult res;
  res.deltas = deltas;
  res.lambda = lambda;
  res.var_conv = var_conv;
  res.clamped = field.clamped_mass();
  res.eps = o.eps;
  res.replicas.assign(static_cast<size_t>(2 * o.pairs), LatticeReplicaStats{});

  parallel_for(static_cast<int>(o.pairs), o.threads, [&](int p) {
    FftWorkspace ws;
    Eigen::Matrix2Xd F, hc;
    BarrierTracker tracker[2] = {BarrierTracker(n, 1, lambda, o.beta),
                                 BarrierTracker(n, 1, lambda, o.beta)};
    double runmin[2] = {std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()};
    std::vector<std::vector<double>> mins(2, std::vector<double>(o.min_depths.size(), 0));

    field.sample_pair(
        ws, o.master_seed, o.stream, static_cast<std::uint64_t>(p), F,
        [&](int j, const Eigen::Matrix2Xd& ff) {
          if (j >= barrier_from)
            for (int r = 0; r < 2; ++r)
              tracker[r].visit(deltas[static_cast<size_t>(j)], rho[static_cast<size_t>(j)],
                               ff.data() + r, 2);
          if (!o.min_depths.empty()) {
            const double drift = sqrt2 * std::log(1.0 / deltas[static_cast<size_t>(j)]);
            for (int r = 0; r < 2; ++r) {
              double mx = -std::numeric_limits<double>::infinity();
              for (int i : window) mx = std::max(mx, ff(r, i));
              runmin[r] = std::min(runmin[r], drift - mx);
            }
            for (size_t k = 0; k < depth_level.size(); ++k)
              if (depth_level[k] == j)
                for (int r = 0; r < 2; ++r) mins[static_cast<size_t>(r)][k] = runmin[r];
          }
        });
    field.convolve_two_atom(ws, o.master_seed, o.stream, static_cast<std::uint64_t>(p), F, hc);

    for (int r = 0; r < 2; ++r) {
      LatticeReplicaStats s;
      double mb = 0, db = 0, mp = 0, dp = 0;
      const auto& alive = tracker[r].alive();
      for (int i : window) {
        const double h = hc(r, i);
        const double f = -h + sqrt2 * var_conv + o.beta;
        const double g = std::exp(sqrt2 * h - var_conv);
        mp += g;
        dp += (f - o.beta) * g;
        if (alive[static_cast<size_t>(i)] && f > o.f_threshold) {
          mb += g;
          db += f * g;
        }
      }
      s.cutoff_mass = mb * dx;
      s.cutoff_derivative = db * dx;
      s.plain_mass = mp * dx;
      s.plain_derivative = dp * dx;
      s.min_at_depth = mins[static_cast<size_t>(r)];
      res.replicas[static_cast<size_t>(2 * p + r)] = std::move(s);
    }
  });
  return res;
}

ExperimentReport run_ratio_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "ratio" : config.name;
  rep.config = config_hash(config);
  Timer timer;
  const std::vector<double> eps_list = config.eps_schedule();

  struct LevelStats {
    double eps;
    std::vector<double> raw, corrected, plain;
  };
  std::vector<LevelStats> levels;

  for (size_t li = 0; li < eps_list.size(); ++li) {
    const double eps = eps_list[li];
    LatticeChaosOptions o;
    o.eps = eps;
    o.per_octave = config.per_octave;
    o.eps0 = config.eps0;
    o.beta = config.beta;
    o.f_threshold = config.f_threshold;
    o.pairs = config.replicas / 2;
    o.master_seed = config.master_seed;
    o.stream = li;
    o.threads = config.threads;
    o.window_lo = config.window_lo;
    o.window_hi = config.window_hi;
    o.seed_profile = config.seed_profile;
    const LatticeChaosResult res = run_lattice_chaos(o);

    LevelStats st;
    st.eps = eps;
    const double sq_t = std::sqrt(std::log(1.0 / eps));
    for (size_t r = 0; r < res.replicas.size(); ++r) {
      const auto& s = res.replicas[r];
      const double corr_den = s.cutoff_derivative - config.beta * s.cutoff_mass;
      const double raw = s.cutoff_derivative > 0 ? sq_t * s.cutoff_mass / s.cutoff_derivative : kNan;
      const double corr = corr_den > 0 ? sq_t * s.cutoff_mass / corr_den : kNan;
      const double plain = s.plain_derivative > 0 ? sq_t * s.plain_mass / s.plain_derivative : kNan;
      st.raw.push_back(raw);
      st.corrected.push_back(corr);
      st.plain.push_back(plain);
      const long id = static_cast<long>(r);
      rep.records.push_back({id, eps, "cutoff_mass", config.beta, s.cutoff_mass, kNan});
      rep.records.push_back({id, eps, "cutoff_derivative", config.beta, s.cutoff_derivative, raw});
      rep.records.push_back({id, eps, "cutoff_corrected", config.beta, corr_den, corr});
      rep.records.push_back({id, eps, "critical_mass", config.beta, s.plain_mass, kNan});
      rep.records.push_back({id, eps, "derivative", config.beta, s.plain_derivative, plain});
    }
    levels.push_back(std::move(st));
  }

  nlohmann::ordered_json per_eps = nlohmann::ordered_json::array();
  for (const auto& st : levels) {
    const auto ci = ci_of(st.corrected);
    per_eps.push_back({{"eps", st.eps},
                       {"median_raw", median_of(st.raw)},
                       {"median_corrected", median_of(st.corrected)},
                       {"median_plain", median_of(st.plain)},
                       {"corrected_ci95", {ci.first, ci.second}},
                       {"degenerate_raw", nan_fraction(st.raw)},
                       {"degenerate_corrected", nan_fraction(st.corrected)},
                       {"degenerate_plain", nan_fraction(st.plain)}});
  }
  rep.summary["target"] = kRatioTarget;
  rep.summary["per_eps"] = per_eps;
  rep.summary["elapsed_seconds"] = timer.lap();

  const LevelStats& coarse = levels.front();
  const LevelStats& fine = levels.back();
  const double med_c = median_of(coarse.corrected);
  const double med_f = median_of(fine.corrected);
  const auto ci_c = ci_of(coarse.corrected);
  const auto ci_f = ci_of(fine.corrected);
  const double half_c = (ci_c.second - ci_c.first) / 2;
  const double half_f = (ci_f.second - ci_f.first) / 2;

  bool too_degenerate = false;
  for (const auto& st : levels)
    too_degenerate = too_degenerate || nan_fraction(st.corrected) > 0.5;

  {
    GateResult g;
    g.name = "ratio_median_bracket";
    const bool in = med_f >= 0.60 && med_f <= 1.00;
    g.detail = "median at eps=" + fmt4(fine.eps) + " is " + fmt4(med_f) +
               ", bracket [0.60, 1.00]";
    g.status = too_degenerate ? 2 : (in ? 0 : 1);
    if (too_degenerate) g.detail += "; over half the replicas were degenerate";
    rep.gates.push_back(g);
  }
  {
    GateResult g;
    g.name = "ratio_trend";
    const double gap = std::abs(med_c - kRatioTarget) - std::abs(med_f - kRatioTarget);
    const double noise = std::sqrt(half_c * half_c + half_f * half_f);
    g.detail = "medians " + fmt4(med_c) + " -> " + fmt4(med_f) + " vs target " +
               fmt4(kRatioTarget) + "; gap " + fmt4(gap) + ", noise " + fmt4(noise);
    if (too_degenerate || std::isnan(gap)) {
      g.status = 2;
    } else if (gap > 0) {
      g.status = gap > noise ? 0 : 2;
    } else {
      g.status = -gap > noise ? 1 : 2;
    }
    rep.gates.push_back(g);
  }
  return rep;
}

ExperimentReport run_covariance_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "covariance" : config.name;
  rep.config = config_hash(config);
  const KernelSpec kernel = make_kernel(config);
  const MollifierSpec theta = make_mollifier(config);
  const std::vector<double> eps_list = config.eps_schedule();
  const std::vector<double> seps = {0.0, 0.05, 0.1, 0.2, 0.3, 0.5};

  auto pair_cov = [&](double ea, double eb, double r) {
    Eigen::VectorXd xa = Eigen::VectorXd::Zero(config.dimension);
    Eigen::VectorXd xb = Eigen::VectorXd::Zero(config.dimension);
    xb[0] = r;
    const FunctionalEnsemble ens = build_ensemble(
        kernel, {FunctionalDescriptor::convolution(theta, ea, xa, "a"),
                 FunctionalDescriptor::convolution(theta, eb, xb, "b")});
    return ens;
  };

  double dev_min = std::numeric_limits<double>::infinity();
  double dev_max = -dev_min;
  for (size_t i = 0; i < eps_list.size(); ++i)
    for (size_t j = i; j < eps_list.size(); ++j)
      for (double r : seps) {
        const auto ens = pair_cov(eps_list[i], eps_list[j], r);
        const double dev = ens.covariance(0, 1) -
                           std::log(1.0 / std::max({r, eps_list[i], eps_list[j]}));
        dev_min = std::min(dev_min, dev);
        dev_max = std::max(dev_max, dev);
      }
  const double range = dev_max - dev_min;
  rep.summary["deviation_min"] = dev_min;
  rep.summary["deviation_max"] = dev_max;
  rep.summary["deviation_range"] = range;
  // Deterministic given the kernel; 1.543 on the baseline grid, bound 1.6.
  rep.gates.push_back(gate("cov_deviation_range", range <= 1.6,
                           "deviation range " + fmt4(range) + " over the (eps, eps', r) grid, bound 1.6"));

  struct Probe {
    double ea, eb, r;
  };
  const std::vector<Probe> probes = {{eps_list.front(), eps_list.front(), 0.1},
                                     {eps_list[std::min<size_t>(1, eps_list.size() - 1)],
                                      eps_list[std::min<size_t>(2, eps_list.size() - 1)], 0.05},
                                     {eps_list.back(), eps_list.back(), 0.0}};
  bool emp_ok = true;
  std::string emp_detail;
  nlohmann::ordered_json emp = nlohmann::ordered_json::array();
  const long n_emp = std::max<long>(config.replicas, 1000);
  for (size_t pi = 0; pi < probes.size(); ++pi) {
    const auto ens = pair_cov(probes[pi].ea, probes[pi].eb, probes[pi].r);
    auto rng = CounterRng::keyed(config.master_seed, 0xC07, pi);
    RunningStat prod;
    for (long rI = 0; rI < n_emp; ++rI) {
      const Eigen::Vector2d z(rng.normal(), rng.normal());
      const Eigen::Vector2d v = ens.factor * z;
      prod.add(v[0] * v[1]);
      rep.records.push_back({rI, probes[pi].ea, "cov_product_" + std::to_string(pi), 0.0,
                             v[0] * v[1], kNan});
    }
    const double exact = ens.covariance(0, 1);
    const double se = std::sqrt((ens.covariance(0, 0) * ens.covariance(1, 1) + exact * exact) /
                                double(n_emp));
    const bool ok = std::abs(prod.mean - exact) <= 3.0 * se;
    emp_ok = emp_ok && ok;
    emp.push_back({{"eps", probes[pi].ea},
                   {"eps_prime", probes[pi].eb},
                   {"separation", probes[pi].r},
                   {"exact", exact},
                   {"empirical", prod.mean},
                   {"se", se}});
    if (!ok)
      emp_detail += " probe " + std::to_string(pi) + " off by " +
                    fmt4(std::abs(prod.mean - exact) / se) + " SE;";
  }
  rep.summary["empirical_probes"] = emp;
  rep.gates.push_back(gate("cov_empirical_match", emp_ok,
                           emp_ok ? "all probes within 3 SE of the exact covariance"
                                  : emp_detail));
  return rep;
}

ExperimentReport run_bessel_suite(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "bessel" : config.name;
  rep.config = config_hash(config);
  const std::uint64_t ms = config.master_seed;
  const long n_paths = std::max<long>(config.replicas, 1000);

  // Inverse moment with the quantified error budget.
  {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    bool ok = true;
    std::string detail;
    double max_elapsed = 0;
    const std::vector<double> ts = {25, 100, 400};
    for (size_t ti = 0; ti < ts.size(); ++ti) {
      Timer timer;
      const double t = ts[ti];
      Eigen::VectorXd grid(2);
      grid << 0.0, t;
      std::vector<Path> paths;
      paths.reserve(static_cast<size_t>(n_paths));
      for (long r = 0; r < n_paths; ++r)
        paths.push_back(sample_bessel3(grid, 1.0, derive_key(ms, 0x2801, ti, static_cast<std::uint64_t>(r))));
      const auto m = bessel_moment_suite(paths, t, {});
      const double target = std::sqrt(2.0 / (M_PI * t));
      const double budget = (2.0 / std::sqrt(t)) * (1.0 / t + 1.0 / std::sqrt(t)) + 3.0 * m.inverse.se;
      const double err = std::abs(m.inverse.estimate - target);
      ok = ok && err <= budget;
      const double elapsed = timer.lap();
      max_elapsed = std::max(max_elapsed, elapsed);
      rows.push_back({{"t", t}, {"estimate", m.inverse.estimate}, {"se", m.inverse.se},
                      {"target", target}, {"error", err}, {"budget", budget},
                      {"elapsed_seconds", elapsed}});
      detail += " t=" + fmt4(t) + ": err " + fmt4(err) + " budget " + fmt4(budget) + ";";
    }
    rep.summary["inverse_moment"] = rows;
    rep.summary["inverse_moment_max_elapsed"] = max_elapsed;
    rep.gates.push_back(gate("bessel_inverse_moment", ok, detail));
  }

  // Inverse square moment bound, uniform in the start.
  {
    Timer timer;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    bool ok = true;
    std::string detail;
    const std::vector<double> ts = {10, 100, 1000};
    const std::vector<double> x0s = {0.5, 1.0, 5.0};
    std::vector<double> fitted_c(2, 0.0);
    for (size_t ti = 0; ti < ts.size(); ++ti)
      for (size_t xi = 0; xi < x0s.size(); ++xi) {
        const double t = ts[ti], x0 = x0s[xi];
        Eigen::VectorXd grid(2);
        grid << 0.0, t;
        std::vector<Path> paths;
        paths.reserve(static_cast<size_t>(n_paths));
        for (long r = 0; r < n_paths; ++r)
          paths.push_back(sample_bessel3(
              grid, x0, derive_key(ms, 0x2802, ti * 8 + xi, static_cast<std::uint64_t>(r))));
        const auto m = bessel_moment_suite(paths, t, {});
        const bool here = m.inverse_square.estimate <= 2.1 / t;
        ok = ok && here;
        rows.push_back({{"t", t}, {"x0", x0},
                        {"estimate", m.inverse_square.estimate}, {"bound", 2.1 / t}});
        if (!here)
          detail += " t=" + fmt4(t) + " x0=" + fmt4(x0) + " exceeds 2.1/t;";
        if (x0 == 1.0 && ti < 2) fitted_c[ti] = 2.0 * t * m.small_ball.estimate;
      }
    rep.summary["inverse_square"] = rows;
    rep.summary["inverse_square_elapsed"] = timer.lap();
    rep.gates.push_back(gate("bessel_inverse_square", ok,
                             ok ? "all nine (t, x0) combinations below 2.1/t" : detail));

    // Small-ball constant: 2t E[(1/X_t) 1{X_t <= t^(1/4)}], one decade apart.
    const double c_ratio = fitted_c[1] / fitted_c[0];
    rep.summary["small_ball_constant"] = {{"t10", fitted_c[0]}, {"t100", fitted_c[1]},
                                          {"ratio", c_ratio}};
    rep.gates.push_back(gate("bessel_small_ball_scaling",
                             fitted_c[0] > 0 && c_ratio > 0.4 && c_ratio < 2.5,
                             "fitted constants " + fmt4(fitted_c[0]) + " at t=10, " +
                                 fmt4(fitted_c[1]) + " at t=100"));
  }

  // Envelope hit rates over a finite horizon.
  {
    const int pts = 160;
    Eigen::VectorXd grid(pts + 1);
    grid[0] = 0;
    for (int i = 1; i <= pts; ++i)
      grid[i] = 0.01 * std::pow(100.0 / 0.01, double(i - 1) / double(pts - 1));
    const long n_env = std::min<long>(n_paths, 20000);
    std::vector<Path> paths;
    paths.reserve(static_cast<size_t>(n_env));
    for (long r = 0; r < n_env; ++r)
      paths.push_back(sample_bessel3(grid, 1.0, derive_key(ms, 0x2803, 0, static_cast<std::uint64_t>(r))));
    const auto m = bessel_moment_suite(paths, grid[pts], {2, 4, 8});
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    bool mono = true;
    for (size_t i = 0; i < m.envelope_hit_rates.size(); ++i) {
      rows.push_back({{"R", m.envelope_hit_rates[i].first},
                      {"rate", m.envelope_hit_rates[i].second}});
      if (i > 0) mono = mono && m.envelope_hit_rates[i].second >= m.envelope_hit_rates[i - 1].second;
    }
    const double top = m.envelope_hit_rates.back().second;
    rep.summary["envelope_hit_rates"] = rows;
    rep.gates.push_back(gate("bessel_envelope_rates", mono && top >= 0.99,
                             "rates nondecreasing in R, top rate " + fmt4(top)));
  }

  // Martingale conservation with the exact bridge barrier.
  {
    TiltSpec tilt;
    tilt.gamma = 2;
    tilt.beta = 1;
    tilt.start = StartLaw::deterministic(0);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    bool ok = true, refine_ok = true;
    std::string detail;
    const std::vector<double> ts = {1, 4, 16};
    for (size_t ti = 0; ti < ts.size(); ++ti) {
      const double t = ts[ti];
      const long n_mart = std::max<long>(n_paths / 2, 1000);
      const auto est = martingale_conservation(tilt, t, 64, n_mart, derive_key(ms, 0x2703, ti));
      const bool here = std::abs(est.mean - 1.0) <= 3.0 * est.se;
      ok = ok && here;
      const auto refine = conservation_refinement(tilt, t, 64, n_mart, derive_key(ms, 0x2704, ti));
      const double comb = std::sqrt(refine.coarse.se * refine.coarse.se +
                                    refine.fine.se * refine.fine.se);
      const bool rhere = std::abs(refine.diff_mean) < 2.0 * comb;
      refine_ok = refine_ok && rhere;
      rows.push_back({{"t", t}, {"mean", est.mean}, {"se", est.se},
                      {"refine_shift", refine.diff_mean}, {"refine_budget", 2.0 * comb}});
      detail += " t=" + fmt4(t) + ": mean " + fmt4(est.mean) + " (se " + fmt4(est.se) + ");";
    }
    rep.summary["martingale_conservation"] = rows;
    rep.gates.push_back(gate("martingale_conservation", ok, detail));
    rep.gates.push_back(gate("martingale_grid_refinement", refine_ok,
                             "doubling the grid moves each mean within 2 combined SE"));
  }

  // Rooted sampler law and the importance-sampling cross-check.
  {
    const long n_ks = 10000;
    const std::vector<double> schedule = geometric_schedule(0.25, std::pow(2.0, -10), 8);
    const double horizon = std::log(schedule.front() / schedule.back());
    ComparisonCoefficients trivial;  // empty rho: no shift
    TiltSpec tilt;
    tilt.gamma = std::sqrt(2.0);
    tilt.beta = 1;
    tilt.start = StartLaw::deterministic(0);
    std::vector<double> rooted, direct;
    rooted.reserve(static_cast<size_t>(n_ks));
    direct.reserve(static_cast<size_t>(n_ks));
    Eigen::VectorXd grid(2);
    grid << 0.0, horizon;
    for (long r = 0; r < n_ks; ++r) {
      const Path p = rooted_radial_sampler(schedule, trivial, tilt, 1,
                                           derive_key(ms, 0x2809, static_cast<std::uint64_t>(r)));
      rooted.push_back(p.values[p.values.size() - 1]);
      const Path q = sample_bessel3(grid, tilt.beta,
                                    derive_key(ms, 0x280A, static_cast<std::uint64_t>(r)));
      direct.push_back(q.values[1]);
    }
    const double ks = ks_two_sample(rooted, direct);
    const double crit = ks_critical(0.01, rooted.size(), direct.size());
    rep.summary["rooted_ks"] = {{"ks", ks}, {"critical_1pct", crit}, {"horizon", horizon}};
    rep.gates.push_back(gate("rooted_sampler_ks", ks < crit,
                             "KS " + fmt4(ks) + " vs 1% critical " + fmt4(crit)));

    // E[1/X_T] from the rooted law vs plain paths weighted by the martingale.
    const double t_is = 4.0;
    const double gamma_is = 0.5;
    const int steps = 256;
    const double dt = t_is / steps;
    RunningStat is_stat;
    for (long r = 0; r < 2 * n_ks; ++r) {
      auto rng = CounterRng::keyed(ms, 0x280B, static_cast<std::uint64_t>(r));
      double w = 0, f_prev = tilt.beta, surv = 1;
      for (int k = 0; k < steps && surv > 0; ++k) {
        w += std::sqrt(dt) * rng.normal();
        // Drifted barrier: under the exp(gamma W) tilt the process
        // beta + gamma t - W is driftless, and its h-transform is the rooted law.
        const double f = tilt.beta + gamma_is * (k + 1) * dt - w;
        if (!(f > 0)) {
          surv = 0;
          break;
        }
        surv *= -std::expm1(-2.0 * f_prev * f / dt);
        f_prev = f;
      }
      const double tiltv = std::exp(gamma_is * w - 0.5 * gamma_is * gamma_is * t_is);
      is_stat.add(surv > 0 ? surv * tiltv / tilt.beta : 0.0);
    }
    std::vector<double> sched_is;
    for (int k = 0; k <= 64; ++k) sched_is.push_back(0.25 * std::exp(-t_is * k / 64.0));
    TiltSpec tilt_is = tilt;
    tilt_is.gamma = gamma_is;
    RunningStat rooted_stat;
    for (long r = 0; r < 2 * n_ks; ++r) {
      const Path p = rooted_radial_sampler(sched_is, trivial, tilt_is, 1,
                                           derive_key(ms, 0x280C, static_cast<std::uint64_t>(r)));
      rooted_stat.add(1.0 / p.values[p.values.size() - 1]);
    }
    const double comb = std::sqrt(is_stat.se() * is_stat.se() + rooted_stat.se() * rooted_stat.se());
    const double diff = std::abs(is_stat.mean - rooted_stat.mean);
    rep.summary["importance_sampling"] = {{"weighted", is_stat.mean}, {"weighted_se", is_stat.se()},
                                          {"rooted", rooted_stat.mean}, {"rooted_se", rooted_stat.se()}};
    rep.gates.push_back(gate("rooted_importance_sampling", diff <= 3.0 * comb,
                             "difference " + fmt4(diff) + " vs 3 combined SE " + fmt4(3.0 * comb)));
  }
  return rep;
}

ExperimentReport run_minparticle_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "min_particle" : config.name;
  rep.config = config_hash(config);

  const double depth_coarse = std::pow(2.0, -12);
  const double depth_fine = std::pow(2.0, -14);
  LatticeChaosOptions o;
  o.eps = depth_fine;
  o.per_octave = config.per_octave;
  o.eps0 = config.eps0;
  o.beta = config.beta;
  o.pairs = config.replicas / 2;
  o.master_seed = config.master_seed;
  o.stream = 0xD;
  o.threads = config.threads;
  o.window_lo = config.window_lo;
  o.window_hi = config.window_hi;
  o.seed_profile = config.seed_profile;
  o.min_depths = {depth_coarse, depth_fine};
  const LatticeChaosResult res = run_lattice_chaos(o);

  std::vector<double> m12, m14;
  for (size_t r = 0; r < res.replicas.size(); ++r) {
    m12.push_back(res.replicas[r].min_at_depth[0]);
    m14.push_back(res.replicas[r].min_at_depth[1]);
    rep.records.push_back({static_cast<long>(r), depth_coarse, "min_particle", config.beta,
                           res.replicas[r].min_at_depth[0], kNan});
    rep.records.push_back({static_cast<long>(r), depth_fine, "min_particle", config.beta,
                           res.replicas[r].min_at_depth[1], kNan});
  }

  nlohmann::ordered_json tail = nlohmann::ordered_json::array();
  bool mono = true;
  double prev = 1.0;
  for (double beta : {4.0, 8.0, 16.0}) {
    long below = 0;
    for (double v : m14) below += v < -(beta + 10.0);
    const double frac = double(below) / double(m14.size());
    tail.push_back({{"beta", beta}, {"complement_fraction", frac}});
    mono = mono && frac <= prev + 1e-12;
    prev = frac;
  }
  rep.summary["barrier_complement"] = tail;
  rep.gates.push_back(gate("cbeta_monotone", mono,
                           "complement fraction nonincreasing over beta in {4, 8, 16}"));

  const double med12 = median_of(m12);
  const double med14 = median_of(m14);
  const double shift = med12 - med14;
  rep.summary["depth_shift"] = {{"median_coarse", med12}, {"median_fine", med14},
                                {"shift", shift}};
  // Regression band recorded from the first baseline run (shift 0.0101 at
  // 200 seeds; the lower edge is exact since deeper minima dominate cell-wise).
  const double band_lo = 0.0, band_hi = 0.2;
  rep.gates.push_back(gate("depth_shift_band", shift >= band_lo && shift <= band_hi,
                           "median shift " + fmt4(shift) + " in band [" + fmt4(band_lo) +
                               ", " + fmt4(band_hi) + "]"));
  return rep;
}

ExperimentReport run_chaos_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "chaos" : config.name;
  rep.config = config_hash(config);
  const KernelSpec kernel = make_kernel(config);
  const MollifierSpec theta = make_mollifier(config);
  Timer timer;
  const double eps = std::pow(2.0, -10);
  const CellPartition part =
      CellPartition::uniform_interval(config.window_lo, config.window_hi, config.cells);

  std::vector<FunctionalDescriptor> ds;
  for (int i = 0; i < part.cells(); ++i)
    ds.push_back(FunctionalDescriptor::convolution(theta, eps, part.centers.col(i),
                                                   "c" + std::to_string(i)));
  const FunctionalEnsemble ens = build_ensemble(kernel, std::move(ds));
  const Eigen::VectorXd variances = ens.covariance.diagonal();
  const double window = part.window_volume();

  RunningStat mu_half, mu_one, deriv;
  Eigen::VectorXd first_values;
  for (long r = 0; r < config.replicas; ++r) {
    auto rng = CounterRng::keyed(config.master_seed, 0xC4A0, static_cast<std::uint64_t>(r));
    const Eigen::VectorXd v = ens.factor * rng.normal_vector(part.cells());
    if (r == 0) first_values = v;
    const double m_half = subcritical_measure(v, variances, 0.5, part, eps).total();
    const double m_one = subcritical_measure(v, variances, 1.0, part, eps).total();
    const double d_tot = critical_and_derivative(v, variances, 1, part, eps,
                                                 config.normalization == "log"
                                                     ? Normalization::LogEps
                                                     : Normalization::Variance)
                             .second.total();
    mu_half.add(m_half);
    mu_one.add(m_one);
    deriv.add(d_tot);
    rep.records.push_back({r, eps, "subcritical_g0.5", config.beta, m_half, kNan});
    rep.records.push_back({r, eps, "subcritical_g1", config.beta, m_one, kNan});
    rep.records.push_back({r, eps, "derivative", config.beta, d_tot, kNan});
  }
  rep.summary["mean_identities"] = {
      {"mu_gamma_half", {{"mean", mu_half.mean}, {"se", mu_half.se()}, {"window", window}}},
      {"mu_gamma_one", {{"mean", mu_one.mean}, {"se", mu_one.se()}, {"window", window}}},
      {"derivative", {{"mean", deriv.mean}, {"se", deriv.se()}}}};
  rep.gates.push_back(gate(
      "mean_identity_subcritical",
      std::abs(mu_half.mean - window) <= 3 * mu_half.se() &&
          std::abs(mu_one.mean - window) <= 3 * mu_one.se(),
      "gamma=0.5: " + fmt4(mu_half.mean) + " (se " + fmt4(mu_half.se()) + "), gamma=1: " +
          fmt4(mu_one.mean) + " (se " + fmt4(mu_one.se()) + "), window " + fmt4(window)));
  rep.gates.push_back(gate("mean_identity_derivative",
                           std::abs(deriv.mean) <= 3 * deriv.se(),
                           "mean " + fmt4(deriv.mean) + " vs 3 SE " + fmt4(3 * deriv.se())));

  const double fd_err = derivative_consistency(first_values, variances, 1, 1e-4, part, eps);
  rep.summary["derivative_consistency"] = fd_err;
  rep.summary["identities_elapsed"] = timer.lap();
  rep.gates.push_back(gate("derivative_consistency", fd_err <= 1e-6,
                           "max relative error " + fmt4(fd_err) + " at step 1e-4"));

  // Tilted normalization constant at two widely separated scales.
  {
    const double eps_a = std::pow(2.0, -8), eps_b = std::pow(2.0, -12);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(config.dimension);
    const auto za = z_ratio_estimate(kernel, theta, eps_a, config.beta, x, static_cast<int>(config.replicas),
                                     derive_key(config.master_seed, 0x5A01), config.eps0,
                                     config.per_octave, config.f_threshold);
    const auto zb = z_ratio_estimate(kernel, theta, eps_b, config.beta, x, static_cast<int>(config.replicas),
                                     derive_key(config.master_seed, 0x5A02), config.eps0,
                                     config.per_octave, config.f_threshold);
    const double comb = std::sqrt(za.z_tilde_se * za.z_tilde_se + zb.z_tilde_se * zb.z_tilde_se);
    const double diff = std::abs(za.z_tilde_hat - zb.z_tilde_hat);
    rep.summary["z_tilde"] = {
        {"eps_a", eps_a}, {"value_a", za.z_tilde_hat}, {"se_a", za.z_tilde_se},
        {"eps_b", eps_b}, {"value_b", zb.z_tilde_hat}, {"se_b", zb.z_tilde_se},
        {"ratio_a", za.ratio}, {"ratio_b", zb.ratio}};
    rep.records.push_back({0, eps_a, "z_tilde", config.beta, za.z_tilde_hat, za.ratio});
    rep.records.push_back({0, eps_b, "z_tilde", config.beta, zb.z_tilde_hat, zb.ratio});
    rep.gates.push_back(gate("ztilde_eps_independence", diff <= 3.0 * comb,
                             "difference " + fmt4(diff) + " vs 3 combined SE " + fmt4(3.0 * comb)));
  }

  // Critical mass medians must fall along the dyadic schedule.
  {
    const std::vector<double> eps_grid = {config.eps_base,
                                          config.eps_base * config.eps_ratio * config.eps_ratio,
                                          config.eps_base * std::pow(config.eps_ratio, 4)};
    std::vector<double> medians;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (size_t li = 0; li < eps_grid.size(); ++li) {
      LatticeChaosOptions o;
      o.eps = eps_grid[li];
      o.per_octave = config.per_octave;
      o.eps0 = config.eps0;
      o.beta = config.beta;
      o.pairs = 200;
      o.master_seed = config.master_seed;
      o.stream = 0xCE + li;
      o.threads = config.threads;
      o.window_lo = config.window_lo;
      o.window_hi = config.window_hi;
      o.seed_profile = config.seed_profile;
      const auto res = run_lattice_chaos(o);
      std::vector<double> mass;
      for (size_t r = 0; r < res.replicas.size(); ++r) {
        mass.push_back(res.replicas[r].plain_mass);
        rep.records.push_back({static_cast<long>(r), eps_grid[li], "critical_mass",
                               config.beta, res.replicas[r].plain_mass, kNan});
      }
      medians.push_back(median_of(mass));
      rows.push_back({{"eps", eps_grid[li]}, {"median_mass", medians.back()}});
    }
    rep.summary["critical_vanishing"] = rows;
    const bool dec = medians[0] > medians[1] && medians[1] > medians[2];
    rep.gates.push_back(gate("critical_vanishing", dec,
                             "medians " + fmt4(medians[0]) + " > " + fmt4(medians[1]) +
                                 " > " + fmt4(medians[2])));
  }
  return rep;
}

ExperimentReport run_field_experiment(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "field" : config.name;
  rep.config = config_hash(config);
  const std::vector<double> eps_list = config.eps_schedule();

  // Circle reference against itself: the comparison collapses exactly.
  {
    const KernelSpec kg = gff_disk();
    const MollifierSpec circle = make_uniform_circle(64);
    Eigen::Vector2d x(0.15, -0.1);
    double worst = 0;
    for (double eps : eps_list) {
      const auto cc = comparison_coefficients(kg, circle, eps,
                                              geometric_schedule(config.eps0, eps, config.per_octave), x);
      worst = std::max(worst, std::abs(cc.lambda_eps - 1.0));
      worst = std::max(worst, std::abs(cc.var_y));
      for (const auto& r : cc.rho) worst = std::max(worst, std::abs(r.second));
    }
    rep.summary["circle_worst_deviation"] = worst;
    rep.gates.push_back(gate("circle_comparison_exact", worst <= 1e-10,
                             "largest |lambda-1|, |var_Y|, |rho| = " + fmt4(worst)));
  }

  // Bump mollifier baselines: lambda drift and rho supremum stay bounded.
  {
    const SeedFunction seed = config.seed_profile == "triangle" ? triangle_seed() : cosine_seed();
    const KernelSpec ks = star_scale(seed, 1);
    const MollifierSpec bump = cosine_bump_mollifier(config.mollifier_step, 1);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1);
    double worst_drift = 0, worst_rho = 0, min_var_y = std::numeric_limits<double>::infinity();
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double eps : eps_list) {
      const auto cc = comparison_coefficients(ks, bump, eps,
                                              geometric_schedule(config.eps0, eps, config.per_octave), x0);
      const double drift = std::abs(cc.lambda_eps - 1.0) * std::log(1.0 / eps);
      double sup_rho = 0;
      for (const auto& r : cc.rho) sup_rho = std::max(sup_rho, std::abs(r.second));
      worst_drift = std::max(worst_drift, drift);
      worst_rho = std::max(worst_rho, sup_rho);
      min_var_y = std::min(min_var_y, cc.var_y);
      rows.push_back({{"eps", eps}, {"lambda", cc.lambda_eps}, {"lambda_drift", drift},
                      {"sup_rho", sup_rho}, {"var_y", cc.var_y}});
    }
    rep.summary["bump_star"] = rows;
    rep.gates.push_back(gate("bump_lambda_drift", worst_drift <= 0.40,
                             "sup |lambda-1| log(1/eps) = " + fmt4(worst_drift) + ", baseline 0.40"));
    rep.gates.push_back(gate("bump_rho_sup", worst_rho <= 0.60,
                             "sup |rho| = " + fmt4(worst_rho) + ", baseline 0.60"));
    rep.gates.push_back(gate("bump_var_y_nonnegative", min_var_y >= -1e-9,
                             "min var_Y = " + fmt4(min_var_y)));

    const double eps_r = eps_list.front();
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << eps_r / 2;
    pairs.emplace_back(a, b);
    a << 0.3;
    b << 0.3 + eps_r / 4;
    pairs.emplace_back(a, b);
    const double rough = increment_roughness(ks, bump, eps_r, pairs);
    rep.summary["increment_roughness"] = rough;
    rep.gates.push_back(gate("increment_roughness_bounded", rough <= 10.0,
                             "sqrt-scaled increment variance " + fmt4(rough)));
  }

  // Bump mollifier on the disk kernel, circle-average reference.
  {
    const KernelSpec kg = gff_disk();
    const MollifierSpec bump2 = cosine_bump_mollifier(config.mollifier_step, 2);
    Eigen::Vector2d x(0.15, -0.1);
    double worst_drift = 0, worst_rho = 0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double eps : eps_list) {
      const auto cc = comparison_coefficients(kg, bump2, eps,
                                              geometric_schedule(config.eps0, eps, config.per_octave), x);
      const double drift = std::abs(cc.lambda_eps - 1.0) * std::log(1.0 / eps);
      double sup_rho = 0;
      for (const auto& r : cc.rho) sup_rho = std::max(sup_rho, std::abs(r.second));
      worst_drift = std::max(worst_drift, drift);
      worst_rho = std::max(worst_rho, sup_rho);
      rows.push_back({{"eps", eps}, {"lambda", cc.lambda_eps}, {"lambda_drift", drift},
                      {"sup_rho", sup_rho}, {"var_y", cc.var_y}});
    }
    rep.summary["bump_disk"] = rows;
    rep.gates.push_back(gate("disk_bump_lambda_drift", worst_drift <= 1e-5,
                             "sup |lambda-1| log(1/eps) = " + fmt4(worst_drift) + ", baseline 1e-5"));
    rep.gates.push_back(gate("disk_bump_rho_sup", worst_rho <= 1e-3,
                             "sup |rho| = " + fmt4(worst_rho) + ", baseline 1e-3"));
  }
  return rep;
}

ExperimentReport run_kernel_check(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "kernel" : config.name;
  rep.config = config_hash(config);

  // Star kernel closed-form identities.
  {
    const SeedFunction seed = config.seed_profile == "triangle" ? triangle_seed() : cosine_seed();
    const KernelSpec ks = star_scale(seed, 1);
    const StarKernelTable& table = *ks.table;
    double worst = 0;
    for (double delta : {0.5, 0.1, 0.01})
      worst = std::max(worst, std::abs(table.cutoff(0.0, delta) - std::log(1.0 / delta)));
    for (double delta : {0.25, 0.03125})
      for (double r : {0.001, 0.01, 0.05, 0.2})
        worst = std::max(worst, std::abs(table.full(r) - table.cutoff(r, delta) -
                                         table.full(r / delta)));
    rep.summary["star_identity_error"] = worst;
    rep.gates.push_back(gate("star_kernel_identities", worst <= 1e-9,
                             "max defect " + fmt4(worst) +
                                 " over the cutoff and tail identities"));

    // The probe uses the cutoff kernel for every entry: the full kernel is a
    // covariance only away from the diagonal, so pairs closer than the cutoff
    // scale would make the mixed Gram indefinite by construction.
    KernelSpec kc = ks;
    kc.kind = KernelSpec::Kind::StarScaleCutoff;
    kc.eps = 0.01;
    Eigen::MatrixXd pts(1, 24);
    auto rng = CounterRng::keyed(config.master_seed, 0x6B);
    for (int i = 0; i < 24; ++i) pts(0, i) = 2.0 * rng.uniform() - 1.0;
    const double min_eig = check_positive_definite(kc, pts);
    rep.summary["star_gram_min_eigenvalue"] = min_eig;
    rep.gates.push_back(gate("star_positive_definite", min_eig >= -1e-8,
                             "smallest Gram eigenvalue " + fmt4(min_eig)));
  }

  // Disk Green function against a five-point Laplacian solve.
  {
    Timer timer;
    const double h = 1.0 / 128.0;
    const int m = 257;  // nodes per side on [-1, 1]
    auto coord = [&](int i) { return -1.0 + i * h; };
    Eigen::MatrixXi id(m, m);
    id.setConstant(-1);
    int unknowns = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double x = coord(i), y = coord(j);
        if (x * x + y * y < 1.0 - 1e-12) id(i, j) = unknowns++;
      }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(unknowns) * 5);
    const double inv_h2 = 1.0 / (h * h);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const int row = id(i, j);
        if (row < 0) continue;
        trip.emplace_back(row, row, 4.0 * inv_h2);
        const int ni[4] = {i - 1, i + 1, i, i};
        const int nj[4] = {j, j, j - 1, j + 1};
        for (int k = 0; k < 4; ++k) {
          if (ni[k] < 0 || ni[k] >= m || nj[k] < 0 || nj[k] >= m) continue;
          const int col = id(ni[k], nj[k]);
          if (col >= 0) trip.emplace_back(row, col, -inv_h2);
        }
      }
    Eigen::SparseMatrix<double> a(unknowns, unknowns);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("Laplacian factorization failed");

    // Sources and probes snapped to grid nodes, kept away from the rim.
    struct GridPoint {
      int i, j;
    };
    const std::vector<GridPoint> sources = {{128, 128}, {154, 128}, {128, 103},
                                            {110, 146}, {146, 146}};
    const std::vector<GridPoint> offsets = {{26, 0}, {-26, 0}, {0, 26}, {19, 19}};
    double worst_rel = 0;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    int checked = 0;
    for (const auto& s : sources) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
      rhs[id(s.i, s.j)] = 2.0 * M_PI * inv_h2;
      const Eigen::VectorXd u = solver.solve(rhs);
      const Eigen::Vector2d y(coord(s.i), coord(s.j));
      for (const auto& o : offsets) {
        const int pi = s.i + o.i, pj = s.j + o.j;
        const Eigen::Vector2d x(coord(pi), coord(pj));
        if (x.norm() > 0.7 || id(pi, pj) < 0) continue;
        const double exact = green_disk(x, y);
        const double approx = u[id(pi, pj)];
        const double rel = std::abs(approx - exact) / std::abs(exact);
        worst_rel = std::max(worst_rel, rel);
        ++checked;
        rows.push_back({{"x", {x[0], x[1]}}, {"y", {y[0], y[1]}},
                        {"exact", exact}, {"grid", approx}, {"rel_error", rel}});
      }
    }
    rep.summary["green_probes"] = rows;
    rep.summary["green_probe_count"] = checked;
    rep.summary["green_elapsed"] = timer.lap();
    rep.gates.push_back(gate("green_disk_oracle", checked >= 20 && worst_rel <= 0.02,
                             "max relative error " + fmt4(worst_rel) + " over " +
                                 std::to_string(checked) + " probes"));

    const double lg2 = green_disk(Eigen::Vector2d(0, 0), Eigen::Vector2d(0.5, 0));
    rep.gates.push_back(gate("green_center_value", std::abs(lg2 - std::log(2.0)) <= 1e-12,
                             "G(0, (0.5, 0)) = " + fmt17(lg2)));

    // Circle-average covariances are exact only for centers separated by two
    // averaging radii; resample any draw that crowds an earlier point.
    Eigen::MatrixXd pts(2, 16);
    auto rng = CounterRng::keyed(config.master_seed, 0x6C);
    for (int i = 0; i < 16;) {
      const double rr = 0.85 * std::sqrt(rng.uniform());
      const double th = 2.0 * M_PI * rng.uniform();
      pts(0, i) = rr * std::cos(th);
      pts(1, i) = rr * std::sin(th);
      bool spaced = true;
      for (int j = 0; j < i && spaced; ++j)
        spaced = (pts.col(i) - pts.col(j)).norm() >= 0.02;
      if (spaced) ++i;
    }
    const double min_eig = check_positive_definite(gff_disk(), pts);
    rep.summary["disk_gram_min_eigenvalue"] = min_eig;
    rep.gates.push_back(gate("disk_positive_definite", min_eig >= -1e-8,
                             "smallest Gram eigenvalue " + fmt4(min_eig)));
  }
  return rep;
}

ExperimentReport run_mollifier_check(const ExperimentConfig& config) {
  ExperimentReport rep;
  rep.name = config.name.empty() ? "mollifier" : config.name;
  rep.config = config_hash(config);
  struct Entry {
    std::string name;
    MollifierSpec spec;
  };
  const std::vector<Entry> entries = {
      {"uniform_circle", make_uniform_circle(config.circle_nodes)},
      {"cosine_bump_1d", cosine_bump_mollifier(config.mollifier_step, 1)},
      {"cosine_bump_2d", cosine_bump_mollifier(config.mollifier_step, 2)}};
  bool all_ok = true;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    const double sup = cond_theta_supremum(e.spec, 5.0, 0.1);
    const bool ok = mollifier_admissible(e.spec);
    all_ok = all_ok && ok;
    rows.push_back({{"mollifier", e.name},
                    {"condition_supremum", sup},
                    {"node_floor", e.spec.node_floor},
                    {"min_spacing", e.spec.min_spacing},
                    {"weight_sum", e.spec.weights.sum()},
                    {"admissible", ok}});
  }
  rep.summary["mollifiers"] = rows;
  rep.gates.push_back(gate("mollifier_admissible", all_ok,
                           "condition supremum below 100 for every mollifier"));
  return rep;
}

}  // namespace gmc
