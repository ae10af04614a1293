#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmc/chaos.hpp"
#include "gmc/fields.hpp"
#include "gmc/kernels.hpp"
#include "gmc/mollifier.hpp"

namespace gmc {

struct ExperimentConfig {
  std::string name = "experiment";
  std::string kernel = "star_scale";  // star_scale | gff_disk
  std::string seed_profile = "cosine";  // cosine | triangle
  int dimension = 1;
  std::string mollifier = "cosine_bump";  // cosine_bump | uniform_circle
  double mollifier_step = 0.1;
  int circle_nodes = 64;
  double window_lo = -1.0, window_hi = 1.0;
  int cells = 32;
  double eps_base = 0.015625;  // 2^-6
  double eps_ratio = 0.25;
  int eps_count = 5;
  int per_octave = 8;
  double eps0 = 0.25;
  double beta = 5.0;
  long replicas = 400;
  std::uint64_t master_seed = 20260814;
  std::string normalization = "variance";  // variance | log
  double f_threshold = 1.0;
  int threads = 1;

  std::vector<double> eps_schedule() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

std::uint64_t config_hash(const ExperimentConfig& config);

KernelSpec make_kernel(const ExperimentConfig& config);
MollifierSpec make_mollifier(const ExperimentConfig& config);

struct ReplicaRecord {
  long replica = 0;
  double eps = 0;
  std::string kind;
  double beta = 0;
  double total_mass = 0;
  double ratio_statistic = 0;  // NaN where not defined
};

struct GateResult {
  std::string name;
  int status = 0;  // 0 pass, 1 fail, 2 inconclusive
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  std::uint64_t config = 0;  // config_hash
  nlohmann::ordered_json summary;
  std::vector<ReplicaRecord> records;
  std::vector<GateResult> gates;
  int exit_status() const;
};

// CSV columns: replica, eps, kind, beta, total_mass, ratio_statistic.
// Output is byte-stable for a fixed config and seed.
void emit_report(const ExperimentReport& report, const std::string& format,
                 const std::string& path);

// Lattice pipeline for the d=1 star field with the two-atom mollifier:
// layered circulant sampling, barrier tracking along the way, cutoff and
// plain measures over the window, optional running minima at chosen depths.
struct LatticeChaosOptions {
  double eps = 0.000244140625;  // 2^-12
  int per_octave = 8;
  double eps0 = 0.25;
  double beta = 5.0;
  double f_threshold = 1.0;
  long pairs = 200;  // two replicas per pair
  std::uint64_t master_seed = 1;
  std::uint64_t stream = 0;
  int threads = 1;
  double window_lo = -1.0, window_hi = 1.0;
  std::vector<double> min_depths;
  std::string seed_profile = "cosine";
};

struct LatticeReplicaStats {
  double cutoff_mass = 0, cutoff_derivative = 0;
  double plain_mass = 0, plain_derivative = 0;
  std::vector<double> min_at_depth;
};

struct LatticeChaosResult {
  std::vector<LatticeReplicaStats> replicas;
  std::vector<double> deltas;
  double lambda = 0, var_conv = 0, clamped = 0, eps = 0;
};

LatticeChaosResult run_lattice_chaos(const LatticeChaosOptions& options);

ExperimentReport run_ratio_experiment(const ExperimentConfig& config);
ExperimentReport run_covariance_experiment(const ExperimentConfig& config);
ExperimentReport run_bessel_suite(const ExperimentConfig& config);
ExperimentReport run_minparticle_experiment(const ExperimentConfig& config);
ExperimentReport run_chaos_experiment(const ExperimentConfig& config);
ExperimentReport run_field_experiment(const ExperimentConfig& config);
ExperimentReport run_kernel_check(const ExperimentConfig& config);
ExperimentReport run_mollifier_check(const ExperimentConfig& config);

}  // namespace gmc
