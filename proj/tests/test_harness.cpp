#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gmc/harness.hpp"

using namespace gmc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("config json round trip and hashing") {
  ExperimentConfig c;
  c.name = "demo";
  c.beta = 6.5;
  c.replicas = 128;
  c.master_seed = 424242;
  const nlohmann::ordered_json j = c.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.name == c.name);
  CHECK(back.beta == c.beta);
  CHECK(back.replicas == c.replicas);
  CHECK(back.master_seed == c.master_seed);
  CHECK(back.kernel == c.kernel);
  CHECK(config_hash(back) == config_hash(c));

  ExperimentConfig other = c;
  other.beta = 7.0;
  CHECK(config_hash(other) != config_hash(c));

  nlohmann::json partial = {{"beta", 3.0}};
  const ExperimentConfig p = ExperimentConfig::from_json(partial);
  CHECK(p.beta == doctest::Approx(3.0));
  CHECK(p.cells == ExperimentConfig{}.cells);

  nlohmann::json bad = {{"replicas", 1}};
  CHECK_THROWS(ExperimentConfig::from_json(bad));
}

TEST_CASE("scale schedule from the config") {
  ExperimentConfig c;
  c.eps_base = 0.015625;
  c.eps_ratio = 0.25;
  c.eps_count = 5;
  const auto s = c.eps_schedule();
  REQUIRE(s.size() == 5);
  CHECK(s[0] == doctest::Approx(std::pow(2.0, -6)));
  CHECK(s[2] == doctest::Approx(std::pow(2.0, -10)));
  CHECK(s[4] == doctest::Approx(std::pow(2.0, -14)));
  c.eps_ratio = 1.5;
  CHECK_THROWS(c.eps_schedule());
}

TEST_CASE("kernel and mollifier dispatch") {
  ExperimentConfig c;
  CHECK(make_kernel(c).kind == KernelSpec::Kind::StarScale);
  c.kernel = "gff_disk";
  CHECK(make_kernel(c).kind == KernelSpec::Kind::GffDisk);
  c.kernel = "unknown";
  CHECK_THROWS(make_kernel(c));

  ExperimentConfig m;
  CHECK(make_mollifier(m).kind == MollifierSpec::Kind::Density);
  m.mollifier = "uniform_circle";
  CHECK(make_mollifier(m).kind == MollifierSpec::Kind::UniformCircle);
  m.mollifier = "unknown";
  CHECK_THROWS(make_mollifier(m));
}

TEST_CASE("report emission is byte stable and round trips") {
  ExperimentReport rep;
  rep.name = "emit";
  rep.config = 0xabcdef;
  rep.summary["note"] = 1.5;
  rep.gates.push_back({"g1", 0, "fine"});
  rep.records.push_back({0, 0.015625, "critical_mass", 5.0, 1.2345678901234567, 0.25});
  rep.records.push_back({1, 0.015625, "derivative", 5.0, -0.75,
                         std::numeric_limits<double>::quiet_NaN()});

  emit_report(rep, "csv", "emit_a.csv");
  emit_report(rep, "csv", "emit_b.csv");
  const std::string a = slurp("emit_a.csv");
  CHECK(a == slurp("emit_b.csv"));
  CHECK(a.rfind("replica,eps,kind,beta,total_mass,ratio_statistic\n", 0) == 0);
  CHECK(a.find("critical_mass") != std::string::npos);
  CHECK(a.find("nan") != std::string::npos);

  // %.17g preserves the double exactly through the text round trip.
  std::istringstream lines(a);
  std::string header, line;
  std::getline(lines, header);
  std::getline(lines, line);
  const auto last_comma = line.rfind(',');
  const auto prev_comma = line.rfind(',', last_comma - 1);
  const double mass = std::strtod(line.substr(prev_comma + 1, last_comma - prev_comma - 1).c_str(), nullptr);
  CHECK(mass == 1.2345678901234567);

  emit_report(rep, "json", "emit_a.json");
  emit_report(rep, "json", "emit_b.json");
  CHECK(slurp("emit_a.json") == slurp("emit_b.json"));
  const nlohmann::json j = nlohmann::json::parse(slurp("emit_a.json"));
  CHECK(j["name"] == "emit");
  CHECK(j["records"].size() == 2);
  CHECK(j["gates"][0]["status"] == 0);

  CHECK_THROWS(emit_report(rep, "xml", "emit.xml"));
  CHECK_THROWS(emit_report(rep, "csv", "/nonexistent-dir/emit.csv"));
}

TEST_CASE("report exit status ranks failures over inconclusive runs") {
  ExperimentReport rep;
  CHECK(rep.exit_status() == 0);
  rep.gates.push_back({"a", 0, ""});
  CHECK(rep.exit_status() == 0);
  rep.gates.push_back({"b", 2, ""});
  CHECK(rep.exit_status() == 2);
  rep.gates.push_back({"c", 1, ""});
  CHECK(rep.exit_status() == 1);
}

TEST_CASE("lattice chaos replicas satisfy the exact order relations") {
  LatticeChaosOptions o;
  o.eps = 0.03125;
  o.per_octave = 4;
  o.eps0 = 0.25;
  o.beta = 5.0;
  o.pairs = 25;
  o.master_seed = 777;
  o.stream = 3;
  o.threads = 1;
  o.min_depths = {0.0625, 0.03125};
  const LatticeChaosResult res = run_lattice_chaos(o);
  REQUIRE(res.replicas.size() == 50);
  CHECK(res.deltas.front() == doctest::Approx(1.0));
  CHECK(res.deltas.back() == doctest::Approx(o.eps));
  CHECK(res.lambda > 0.5);
  CHECK(res.lambda < 1.5);

  for (const auto& r : res.replicas) {
    CHECK(r.plain_mass > 0.0);
    CHECK(r.cutoff_mass >= 0.0);
    CHECK(r.cutoff_mass <= r.plain_mass + 1e-12);
    CHECK(r.cutoff_derivative >= r.cutoff_mass - 1e-12);
    REQUIRE(r.min_at_depth.size() == 2);
    CHECK(r.min_at_depth[1] <= r.min_at_depth[0] + 1e-12);
  }

  const LatticeChaosResult again = run_lattice_chaos(o);
  for (size_t i = 0; i < res.replicas.size(); ++i) {
    CHECK(again.replicas[i].cutoff_mass == res.replicas[i].cutoff_mass);
    CHECK(again.replicas[i].plain_derivative == res.replicas[i].plain_derivative);
    CHECK(again.replicas[i].min_at_depth == res.replicas[i].min_at_depth);
  }

  LatticeChaosOptions two = o;
  two.threads = 2;
  const LatticeChaosResult par = run_lattice_chaos(two);
  for (size_t i = 0; i < res.replicas.size(); ++i) {
    CHECK(par.replicas[i].cutoff_mass == res.replicas[i].cutoff_mass);
    CHECK(par.replicas[i].cutoff_derivative == res.replicas[i].cutoff_derivative);
    CHECK(par.replicas[i].plain_mass == res.replicas[i].plain_mass);
  }

  LatticeChaosOptions bad = o;
  bad.min_depths = {0.05};
  CHECK_THROWS(run_lattice_chaos(bad));
}

TEST_CASE("mollifier experiment passes its gates") {
  ExperimentConfig c;
  c.name = "moll";
  const ExperimentReport rep = run_mollifier_check(c);
  CHECK(rep.exit_status() == 0);
  REQUIRE(!rep.gates.empty());
  CHECK(rep.summary["mollifiers"].size() == 3);
}
