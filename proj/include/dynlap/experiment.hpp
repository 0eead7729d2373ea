#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynlap/isoperimetry.hpp"
#include "dynlap/laplacian.hpp"
#include "dynlap/mollify.hpp"
#include "dynlap/spectral.hpp"

namespace dynlap {

/// Everything needed to reproduce one run. Serialized as flat `key = value`
/// lines with dotted keys; lists are comma separated.
struct ExperimentConfig {
  std::string name = "custom";
  std::string pipeline = "spectral";  // spectral | fixture | mollify
  DomainSpec domain{{0.0, 1.0, 16, false}, {0.0, 1.0, 16, false}};
  std::string density = "uniform";
  int density_samples = 8;
  std::vector<std::string> maps;      // applied left to right; empty means identity
  std::string map_mode = "compose";   // compose: one map T = ...o T2 o T1; multistep: time average
  int Q = 400;
  int k = 6;
  Convention convention = Convention::with_half;
  double stabilization = 0.01;
  std::uint64_t seed = 20240607;
  int n_thresholds = 200;
  double tail = 0.01;
  std::string image_mode = "level_set";  // level_set | pointwise
  std::string h_nu = "field";            // field | analytic
  std::vector<std::string> checks{"cheeger"};  // cheeger, coarea, federer_fleming, mollify
  int coarea_levels = 200;
  int smoothing_cells = 4;
  std::vector<double> mollify_eps{0.2, 0.1};
  std::string kernel = "epanechnikov";
  std::optional<std::pair<double, double>> mollify_band;  // x2 range where defects are measured
  double mollify_max_ratio = 0.7;
  double correlation_cells = 4.0;  // eps in cells for the singular-vector correlation
  std::vector<double> fixture_lines{1.5, 3.5};
  std::string output_dir = "out";

  bool wants(const std::string& check) const;
};

std::string serialize_config(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> list_presets();
ExperimentConfig make_preset(const std::string& name);

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Single- or multi-step level-set sweep in a uniform shape.
struct SweepCurve {
  std::vector<double> thresholds;
  std::vector<double> ratios;
  Partition best;
  std::vector<double> best_lengths;  // mu(Gamma), then each image mass
  std::optional<Contour> contour_mu;
  std::optional<Contour> contour_nu;  // image after the last step
  double best_len_nu_pointwise = 0.0;
};

/// In-memory products of a run, in pipeline order.
struct CaseResult {
  ExperimentConfig config;
  std::optional<Grid> grid;
  std::optional<DensitySpec> density;
  MapSpec map;  // composite map over all steps
  std::optional<DensityField> u;
  std::vector<TransferMatrix> transfers;      // cumulative, one per step
  std::vector<DensityField> step_densities;   // pushforward density after each step
  std::vector<NormalizedTransfer> normalized;
  std::optional<DynOperator> op;
  double half_scale = 1.0;  // multiplies eigenvalues of op to the with_half scale
  std::optional<EigenSolution> eigen;
  std::optional<SweepCurve> sweep;
  std::vector<std::pair<std::string, double>> values;  // reported scalars, in order
  std::vector<CheckLine> checks;
  std::vector<DefectRow> defects;
  std::vector<std::pair<std::string, double>> timings;

  bool ok() const;
};

/// discretize -> Ulam -> assemble -> eigensolve -> sweep -> checks.
CaseResult run_case(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Writes manifest.txt, eigenvalues.txt, phi2.txt, contour_mu.txt,
/// contour_nu.txt, sweep.txt and checks.txt (whichever apply to the pipeline),
/// plus timings.txt, into config.output_dir.
void write_bundle(const CaseResult& result);

/// run_case followed by write_bundle.
CaseResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace dynlap
