#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynlap/error.hpp"
#include "dynlap/experiment.hpp"

using namespace dynlap;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

double value_of(const CaseResult& r, const std::string& key) {
  for (const auto& [k, v] : r.values)
    if (k == key) return v;
  FAIL("missing value " << key);
  return 0.0;
}

fs::path scratch_dir(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("dynlap_test_" + leaf);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("every preset serializes and parses back to the same text") {
  const auto presets = list_presets();
  CHECK(presets.size() == 6);
  for (const auto& p : presets) {
    const ExperimentConfig c = make_preset(p.name);
    CHECK(c.name == p.name);
    const std::string text = serialize_config(c);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  CHECK_THROWS_AS(make_preset("no_such_preset"), Error);
}

TEST_CASE("config parsing reports the offending line") {
  try {
    parse_config("name = x\n# comment\nbogus.key = 3\n");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.module() == "cli");
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("transfer.Q = many\n"), Error);
  CHECK_THROWS_AS(parse_config("just words\n"), Error);
  CHECK_THROWS_AS(parse_config("eigen.convention = quarter\n"), Error);
  CHECK_THROWS_AS(parse_config("pipeline = other\n"), Error);
  const ExperimentConfig c = parse_config("grid.x1.count = 32\nmap.steps = T1, T2\nmollify.band = none\n");
  CHECK(c.domain.x1.count == 32);
  CHECK(c.maps == std::vector<std::string>{"T1", "T2"});
  CHECK_FALSE(c.mollify_band.has_value());
}

TEST_CASE("identity preset reproduces the dense static spectrum") {
  const ExperimentConfig c = make_preset("identity_uniform_16");
  const CaseResult r = run_case(c);
  REQUIRE(r.eigen);
  REQUIRE(r.ok());
  // dense oracle on the same static Laplacian: our lambda2 must be one of its
  // eigenvalues up to the half-cell sublattice stagger, and smooth
  const Eigen::MatrixXd A(r.op->matrix);
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  const double l2 = r.eigen->eigenvalues[1];
  const double gap = (es.eigenvalues().real().array() - l2).abs().minCoeff();
  CHECK(gap < 0.015 * std::abs(l2));
  CHECK(r.eigen->roughness[1] < 0.5);
  CHECK(r.eigen->eigenvalues[2] == doctest::Approx(l2).epsilon(1e-9));
  // identity dynamics: the two boundary terms coincide
  CHECK(value_of(r, "len_mu") == doctest::Approx(value_of(r, "len_nu")).epsilon(1e-12));
  CHECK(value_of(r, "H") <= 2.0 * std::sqrt(-l2));
}

TEST_CASE("fixture preset gives the closed-form boundary masses") {
  const CaseResult r = run_case(make_preset("static_fixture_2_1"));
  CHECK(value_of(r, "len_mu") == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(value_of(r, "len_nu") == doctest::Approx(std::sinh(2.0) / 8).epsilon(1e-4));
  CHECK(value_of(r, "H") == doctest::Approx(0.25 + std::sinh(2.0) / 8).epsilon(1e-4));
  CHECK(r.ok());
}

TEST_CASE("multistep mode averages over the steps") {
  ExperimentConfig c;
  c.domain = {{0.0, 4.0, 64, true}, {0.0, 1.0, 16, false}};
  c.density = "sinusoid_x1";
  c.maps = {"T1", "identity"};
  c.map_mode = "multistep";
  c.Q = 100;
  c.k = 3;
  const CaseResult r = run_case(c);
  REQUIRE(r.op);
  CHECK(r.op->steps == 3);
  CHECK(r.transfers.size() == 2);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(64 * 16);
  CHECK((r.op->matrix * ones).cwiseAbs().maxCoeff() < 1e-10 * r.op->norm_inf());
  REQUIRE(r.sweep);
  CHECK(r.sweep->best_lengths.size() == 3);
  CHECK(r.ok());

  // the second step is the identity, so the chained transfer equals the first
  CHECK(Eigen::MatrixXd(r.transfers[1].P) == Eigen::MatrixXd(r.transfers[0].P));
}

TEST_CASE("bundles are written and reproducible") {
  ExperimentConfig c = make_preset("identity_uniform_16");
  c.output_dir = scratch_dir("bundle").string();
  run_experiment(c);
  for (const char* f : {"manifest.txt", "eigenvalues.txt", "phi2.txt", "contour_mu.txt", "contour_nu.txt", "sweep.txt",
                        "checks.txt", "timings.txt"})
    CHECK(fs::exists(fs::path(c.output_dir) / f));
  const std::string manifest = slurp(fs::path(c.output_dir) / "manifest.txt");
  CHECK(manifest.find("seed = 20240607") != std::string::npos);
  CHECK(parse_config(manifest).name == "identity_uniform_16");

  std::vector<std::string> first;
  for (const char* f : {"manifest.txt", "eigenvalues.txt", "phi2.txt", "sweep.txt", "checks.txt"})
    first.push_back(slurp(fs::path(c.output_dir) / f));
  run_experiment(c);
  int i = 0;
  for (const char* f : {"manifest.txt", "eigenvalues.txt", "phi2.txt", "sweep.txt", "checks.txt"})
    CHECK(slurp(fs::path(c.output_dir) / f) == first[static_cast<std::size_t>(i++)]);
  fs::remove_all(c.output_dir);
}

TEST_CASE("configs load from files") {
  const fs::path dir = scratch_dir("load");
  fs::create_directories(dir);
  const fs::path file = dir / "run.cfg";
  std::ofstream(file) << serialize_config(make_preset("cylinder_T2"));
  CHECK(serialize_config(load_config(file.string())) == serialize_config(make_preset("cylinder_T2")));
  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), Error);
  fs::remove_all(dir);
}
