#include "dynlap/experiment.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dynlap/error.hpp"
#include "dynlap/parallel.hpp"

namespace dynlap {

namespace {

constexpr const char* kVersion = "1.0.0";

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw Error("cli", "'" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw Error("cli", "'" + key + "' expects an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || *end != '\0')
    throw Error("cli", "'" + key + "' expects a nonnegative integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("cli", "'" + key + "' expects true or false, got '" + v + "'");
}

void require_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return;
    list += std::string(list.empty() ? "" : ", ") + a;
  }
  throw Error("cli", "'" + key + "' must be one of " + list + ", got '" + v + "'");
}

DensitySpec make_density(const std::string& name, const DomainSpec& d) {
  switch (density_kind_from_name(name)) {
    case DensityKind::uniform: return DensitySpec::uniform(d);
    case DensityKind::sinusoid_x1: return DensitySpec::sinusoid_x1(d);
    case DensityKind::sinusoid_x2_torus: return DensitySpec::sinusoid_x2_torus(d);
    default: throw Error("cli", "density '" + name + "' cannot be named in a config");
  }
}

MapKind resolve_map(const std::string& name) {
  const MapKind k = map_kind_from_name(name);
  if (k == MapKind::affine) throw Error("cli", "affine maps need coefficients and cannot be named in a config");
  return k;
}

// Cumulative maps: entry i is T_{i+1} o ... o T_1.
std::vector<MapSpec> cumulative_maps(const ExperimentConfig& c) {
  std::vector<MapSpec> out;
  MapSpec current = MapSpec::identity(c.domain);
  for (const auto& name : c.maps) {
    const MapKind k = resolve_map(name);
    current = MapSpec::compose(current, k == MapKind::identity ? MapSpec::identity(c.domain) : MapSpec::single(k, c.domain));
    out.push_back(current);
  }
  if (out.empty()) out.push_back(current);
  return out;
}

void validate(const ExperimentConfig& c) {
  require_one_of("pipeline", c.pipeline, {"spectral", "fixture", "mollify"});
  require_one_of("map.mode", c.map_mode, {"compose", "multistep"});
  require_one_of("sweep.image", c.image_mode, {"level_set", "pointwise"});
  require_one_of("sweep.h_nu", c.h_nu, {"field", "analytic"});
  for (const auto& ch : c.checks) require_one_of("checks", ch, {"cheeger", "coarea", "federer_fleming", "mollify"});
  (void)make_density(c.density, c.domain);
  for (const auto& m : c.maps) (void)resolve_map(m);
  (void)kernel_profile_from_name(c.kernel);
  if (c.Q < 1) throw Error("cli", "transfer.Q must be positive");
  if (c.k < 2) throw Error("cli", "eigen.k must be at least 2");
  if (c.n_thresholds < 1) throw Error("cli", "sweep.thresholds must be positive");
  if (!(c.tail >= 0.0 && c.tail < 0.5)) throw Error("cli", "sweep.tail must lie in [0, 0.5)");
  if (c.density_samples < 1) throw Error("cli", "density.samples must be positive");
  if (c.pipeline == "mollify" && c.mollify_eps.empty()) throw Error("cli", "mollify.eps needs at least one value");
  (void)Grid(c.domain);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << '\n';
}

WeightFunction nu_weight(const ExperimentConfig& c, const DensitySpec& spec, const MapSpec& map,
                         const DensityField& v) {
  if (c.h_nu == "analytic") {
    if (!has_inverse(map)) throw Error("cli", "sweep.h_nu = analytic needs an invertible map, got " + map.name());
    return density_weight(DensitySpec::pushforward(spec, map));
  }
  return density_weight(v);
}

double u_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& u) {
  return a.cwiseProduct(b).dot(u) / std::sqrt(a.cwiseAbs2().dot(u) * b.cwiseAbs2().dot(u));
}

void run_spectral(CaseResult& r, std::ostream* log) {
  const ExperimentConfig& c = r.config;
  const Grid& g = *r.grid;
  const DensitySpec& spec = *r.density;
  const std::vector<MapSpec> maps = c.map_mode == "multistep" ? cumulative_maps(c)
                                                              : std::vector<MapSpec>{cumulative_maps(c).back()};
  r.map = maps.back();

  auto t0 = Clock::now();
  // Multi-step: P^(i) = P_1 ... P_i from single-step estimates.
  std::vector<TransferMatrix> single;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (c.map_mode == "multistep") {
      const MapKind kind = resolve_map(c.maps[i]);
      single.push_back(estimate_transfer_matrix(
          g, g, kind == MapKind::identity ? MapSpec::identity(c.domain) : MapSpec::single(kind, c.domain), c.Q));
      r.transfers.push_back(chain_transfer(single));
    } else {
      r.transfers.push_back(estimate_transfer_matrix(g, g, maps[i], c.Q));
    }
    r.step_densities.push_back(pushforward_density(r.transfers.back(), *r.u));
    r.normalized.push_back(normalize_transfer(r.transfers.back(), *r.u, r.step_densities.back()));
  }
  r.timings.emplace_back("transfer", seconds_since(t0));
  say(log, "transfer: " + std::to_string(maps.size()) + " step(s), Q = " + std::to_string(c.Q));

  t0 = Clock::now();
  const DynOperator Lmu = assemble_weighted_laplacian(g, *r.u);
  const auto terms = static_cast<double>(maps.size() + 1);
  if (maps.size() == 1) {
    r.op = assemble_dynamic_laplacian(Lmu, assemble_weighted_laplacian(g, r.step_densities[0]), r.transfers[0],
                                      r.normalized[0], c.convention);
  } else {
    std::vector<StepTerm> st;
    st.push_back(StepTerm{identity_matrix(g.cell_count()), identity_matrix(g.cell_count()), Lmu});
    for (std::size_t i = 0; i < maps.size(); ++i)
      st.push_back(StepTerm{r.transfers[i].P, r.normalized[i].Pt, assemble_weighted_laplacian(g, r.step_densities[i])});
    r.op = assemble_multistep(st);
    if (c.convention == Convention::raw) {
      r.op->matrix *= terms;
      r.op->convention = Convention::raw;
    }
  }
  r.half_scale = c.convention == Convention::raw ? 1.0 / terms : 1.0;
  r.timings.emplace_back("assemble", seconds_since(t0));

  t0 = Clock::now();
  const SymmetrizedOperator sym = symmetrize(*r.op, *r.u);
  EigenOptions eo;
  eo.k = c.k;
  eo.stabilization = c.stabilization;
  eo.seed = c.seed;
  r.eigen = leading_eigenpairs(sym, g, eo);
  attach_operator_residuals(*r.eigen, *r.op);
  r.timings.emplace_back("eigensolve", seconds_since(t0));
  const EigenSolution& es = *r.eigen;
  say(log, "eigensolve: lambda2 = " + num(es.eigenvalues[1]) + " (" + convention_name(c.convention) + ")");

  t0 = Clock::now();
  const CellField phi(g, es.vectors.col(1));
  const WeightFunction h_mu = density_weight(spec);
  SweepCurve sc;
  if (maps.size() == 1) {
    SweepOptions so;
    so.n_thresholds = c.n_thresholds;
    so.tail = c.tail;
    if (c.image_mode == "level_set") so.image_field = CellField(g, push_forward(r.normalized[0], phi.values));
    const SweepResult sw = sweep_level_sets(phi, r.map, *r.u, h_mu, nu_weight(c, spec, r.map, r.step_densities[0]), g, so);
    sc.thresholds = sw.thresholds;
    sc.ratios = sw.ratios;
    sc.best = sw.best;
    sc.best_lengths = {sw.best.len_mu, sw.best.len_nu};
    sc.contour_mu = sw.best_contour;
    sc.contour_nu = sw.best_image;
    sc.best_len_nu_pointwise = sw.best_len_nu_pointwise;
  } else {
    std::vector<NodeField> images;
    std::vector<WeightFunction> weights;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      images.push_back(cell_to_node(CellField(g, push_forward(r.normalized[i], phi.values))));
      weights.push_back(nu_weight(c, spec, maps[i], r.step_densities[i]));
    }
    const NodeField nf = cell_to_node(phi);
    sc.thresholds = quantile_thresholds(phi.values, c.n_thresholds, c.tail);
    const std::size_t n = sc.thresholds.size();
    sc.ratios.assign(n, std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> lengths(n);
    std::vector<Partition> parts(n);
    parallel_for(n, [&](std::size_t j) {
      const double t = sc.thresholds[j];
      Partition& p = parts[j];
      p.t = t;
      std::tie(p.m1, p.m2) = region_masses(phi, t, *r.u);
      const Contour cont = extract_level_set(nf, t);
      if (cont.empty() || std::min(p.m1, p.m2) <= 0.0) return;
      std::vector<double>& len = lengths[j];
      len.push_back(hypersurface_mass(cont, h_mu));
      for (std::size_t i = 0; i < maps.size(); ++i)
        len.push_back(c.image_mode == "level_set" ? hypersurface_mass(extract_level_set(images[i], t), weights[i])
                                                  : image_hypersurface_mass(cont, maps[i], weights[i], g));
      p.len_mu = len.front();
      p.len_nu = len.back();
      p.ratio = cheeger_ratio_multistep(len, p.m1, p.m2);
      sc.ratios[j] = p.ratio;
    });
    const auto best = static_cast<std::size_t>(std::min_element(sc.ratios.begin(), sc.ratios.end()) - sc.ratios.begin());
    if (!std::isfinite(sc.ratios[best])) throw Error("isoperimetry", "every threshold produced an empty level set");
    sc.best = parts[best];
    sc.best_lengths = lengths[best];
    sc.contour_mu = extract_level_set(nf, sc.best.t);
    sc.contour_nu = c.image_mode == "level_set" ? extract_level_set(images.back(), sc.best.t)
                                                : map_contour(*sc.contour_mu, maps.back(), g);
    sc.best_len_nu_pointwise = image_hypersurface_mass(*sc.contour_mu, maps.back(), weights.back(), g);
  }
  r.sweep = sc;
  r.timings.emplace_back("sweep", seconds_since(t0));
  say(log, "sweep: H = " + num(sc.best.ratio) + " at t = " + num(sc.best.t));

  const Eigen::VectorXd& lam = es.eigenvalues;
  for (Eigen::Index i = 0; i < lam.size(); ++i) r.values.emplace_back("lambda" + std::to_string(i + 1), lam[i]);
  r.values.emplace_back("lambda2_with_half", lam[1] * r.half_scale);
  if (lam.size() > 2) r.values.emplace_back("ratio_lambda3_lambda2", lam[2] / lam[1]);
  if (lam.size() > 3) r.values.emplace_back("ratio_lambda4_lambda2", lam[3] / lam[1]);
  r.values.emplace_back("t0", sc.best.t);
  r.values.emplace_back("m1", sc.best.m1);
  r.values.emplace_back("m2", sc.best.m2);
  r.values.emplace_back("len_mu", sc.best.len_mu);
  r.values.emplace_back("len_nu", sc.best.len_nu);
  r.values.emplace_back("H", sc.best.ratio);
  r.values.emplace_back("len_nu_pointwise", sc.best_len_nu_pointwise);
  r.values.emplace_back("skew_norm", sym.skew_norm);
  r.values.emplace_back("kernel_residual", es.kernel_residual);
  r.values.emplace_back("stabilization_weight", es.stabilization_weight);

  t0 = Clock::now();
  if (c.wants("cheeger")) {
    const CheegerReport cr = check_cheeger(sc.best.ratio, lam[1] * r.half_scale);
    r.checks.push_back({"cheeger", cr.holds, "H = " + num(cr.h_estimate) + " bound = " + num(cr.bound) + " margin = " + num(cr.margin)});
  }
  if (c.wants("coarea")) {
    const CoareaReport co = coarea_check(phi, *r.u, c.coarea_levels);
    r.checks.push_back({"coarea", co.relative_error < 0.02,
                        "lhs = " + num(co.lhs) + " rhs = " + num(co.rhs) + " relative_error = " + num(co.relative_error)});
  }
  if (c.wants("federer_fleming")) {
    if (maps.size() != 1) {
      r.checks.push_back({"federer_fleming", true, "skipped: the quotient is defined for a single step"});
    } else {
      Eigen::VectorXd ind(g.cell_count());
      for (int i = 0; i < g.cell_count(); ++i) ind[i] = phi.values[i] <= sc.best.t ? 1.0 : 0.0;
      const CellField smooth(g, smooth_field(g, ind, c.smoothing_cells));
      const double s = sobolev_quotient(smooth, r.normalized[0], *r.u, r.step_densities[0]);
      const double rel = std::abs(s - sc.best.ratio) / sc.best.ratio;
      r.checks.push_back({"federer_fleming", rel < 0.15,
                          "sobolev = " + num(s) + " H = " + num(sc.best.ratio) + " relative_gap = " + num(rel)});
    }
  }
  if (c.wants("mollify")) {
    const Kernel k = make_kernel(kernel_profile_from_name(c.kernel));
    const DiffusionMatrix D = build_diffusion_matrix(g, k, c.correlation_cells * std::max(g.b1(), g.b2()));
    const MollifiedOperator mo = mollified_operator(D, D, r.transfers.back(), *r.u);
    const SingularPairs sp = leading_singular_pairs(mo, *r.u, 2);
    const double dev = (sp.right.col(0).array() - 1.0).abs().maxCoeff();
    const double cosine = std::abs(u_cosine(sp.right.col(1), phi.values, r.u->u));
    r.checks.push_back({"mollify_correlation", cosine > 0.95 && std::abs(sp.sigma[0] - 1.0) < 1e-6 && dev < 1e-6,
                        "eps = " + num(D.eps) + " sigma1 = " + num(sp.sigma[0]) + " sigma2 = " + num(sp.sigma[1]) +
                            " one_deviation = " + num(dev) + " cos = " + num(cosine)});
  }
  r.timings.emplace_back("checks", seconds_since(t0));
}

void run_fixture(CaseResult& r, std::ostream* log) {
  const ExperimentConfig& c = r.config;
  const Grid& g = *r.grid;
  const DensitySpec& spec = *r.density;
  r.map = cumulative_maps(c).back();
  if (c.fixture_lines.size() != 2) throw Error("cli", "fixture.lines needs exactly two x1 positions");

  auto t0 = Clock::now();
  std::vector<Polyline> lines;
  for (double x : c.fixture_lines)
    lines.push_back(Polyline{{Point{x, g.axis2().lo}, Point{x, g.axis2().hi}}, false});
  const Contour gamma = make_contour(g, lines);
  const double mu = hypersurface_mass(gamma, density_weight(spec));
  const MapSpec& map = r.map;
  if (!has_inverse(map)) throw Error("cli", "the fixture needs an invertible map, got " + map.name());
  const DensitySpec nu_spec = DensitySpec::pushforward(spec, map);
  const Contour image = map_contour(gamma, map, g);
  const double nu = hypersurface_mass(image, density_weight(nu_spec));

  const double lo = std::min(c.fixture_lines[0], c.fixture_lines[1]);
  const double hi = std::max(c.fixture_lines[0], c.fixture_lines[1]);
  double m1 = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < g.cell_count(); ++i) {
    const double x = g.center(i).x1;
    (x > lo && x < hi ? m1 : m2) += r.u->u[i];
  }
  const double H = cheeger_ratio(mu, nu, m1, m2);
  const double mu_field = hypersurface_mass(gamma, density_weight(*r.u));
  r.timings.emplace_back("fixture", seconds_since(t0));

  t0 = Clock::now();
  r.transfers.push_back(estimate_transfer_matrix(g, g, map, c.Q));
  r.step_densities.push_back(pushforward_density(r.transfers.back(), *r.u));
  const double nu_field = hypersurface_mass(image, density_weight(r.step_densities.back()));
  r.timings.emplace_back("transfer", seconds_since(t0));

  SweepCurve sc;
  sc.best = Partition{0.0, m1, m2, mu, nu, H};
  sc.best_lengths = {mu, nu};
  sc.contour_mu = gamma;
  sc.contour_nu = image;
  r.sweep = sc;
  r.values = {{"len_mu", mu}, {"len_nu", nu}, {"m1", m1}, {"m2", m2}, {"H", H},
              {"len_mu_field", mu_field}, {"len_nu_field", nu_field}, {"euclidean_length", euclidean_length(gamma)},
              {"image_euclidean_length", euclidean_length(image)}};
  r.checks.push_back({"fixture_field_consistency", std::abs(mu_field - mu) < 5e-3,
                      "analytic = " + num(mu) + " field = " + num(mu_field)});
  say(log, "fixture: mu = " + num(mu) + " nu = " + num(nu) + " H = " + num(H));
}

void run_mollify(CaseResult& r, std::ostream* log) {
  const ExperimentConfig& c = r.config;
  const Grid& g = *r.grid;
  r.map = cumulative_maps(c).back();

  auto t0 = Clock::now();
  r.transfers.push_back(estimate_transfer_matrix(g, g, r.map, c.Q));
  r.step_densities.push_back(pushforward_density(r.transfers.back(), *r.u));
  r.normalized.push_back(normalize_transfer(r.transfers.back(), *r.u, r.step_densities.back()));
  r.op = assemble_dynamic_laplacian(assemble_weighted_laplacian(g, *r.u),
                                    assemble_weighted_laplacian(g, r.step_densities.back()), r.transfers.back(),
                                    r.normalized.back(), Convention::with_half);
  r.timings.emplace_back("assemble", seconds_since(t0));

  t0 = Clock::now();
  const Kernel k = make_kernel(kernel_profile_from_name(c.kernel));
  std::vector<MollifiedOperator> ops;
  for (double eps : c.mollify_eps) {
    const DiffusionMatrix D = build_diffusion_matrix(g, k, eps);
    ops.push_back(mollified_operator(D, D, r.transfers.back(), *r.u));
  }
  Eigen::VectorXd f(g.cell_count());
  for (int i = 0; i < g.cell_count(); ++i)
    f[i] = std::sin(2.0 * std::numbers::pi * (g.center(i).x1 - g.axis1().lo) / g.length1());
  const double eps_max = *std::max_element(c.mollify_eps.begin(), c.mollify_eps.end());
  const CellMask mask = c.mollify_band ? x2_band_mask(g, c.mollify_band->first, c.mollify_band->second)
                                       : interior_mask(g, eps_max);
  r.defects = convergence_defect(f, ops, *r.op, expansion_constant(k), mask);
  r.timings.emplace_back("defects", seconds_since(t0));

  r.values.emplace_back("kernel_c", k.c);
  r.values.emplace_back("expansion_constant", expansion_constant(k));
  for (const auto& d : r.defects) r.values.emplace_back("defect_eps_" + num(d.eps), d.defect);

  double worst_one = 0.0;
  for (const auto& op : ops) {
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(g.cell_count());
    worst_one = std::max(worst_one, (op.L * one - one).cwiseAbs().maxCoeff());
    worst_one = std::max(worst_one, (op.Lstar * one - one).cwiseAbs().maxCoeff());
  }
  r.checks.push_back({"mollify_constants", worst_one < 1e-8, "max |L 1 - 1|, |L* 1 - 1| = " + num(worst_one)});

  if (r.defects.size() >= 2) {
    auto by_eps = r.defects;
    std::sort(by_eps.begin(), by_eps.end(), [](const DefectRow& a, const DefectRow& b) { return a.eps < b.eps; });
    const double ratio = by_eps.front().defect / by_eps.back().defect;
    r.values.emplace_back("defect_ratio", ratio);
    r.checks.push_back({"mollify_defect", ratio < c.mollify_max_ratio,
                        "E(" + num(by_eps.front().eps) + ")/E(" + num(by_eps.back().eps) + ") = " + num(ratio)});
  }

  t0 = Clock::now();
  const SingularPairs sp = leading_singular_pairs(ops.back(), *r.u, 2);
  const double dev = (sp.right.col(0).array() - 1.0).abs().maxCoeff();
  r.values.emplace_back("sigma1", sp.sigma[0]);
  r.values.emplace_back("sigma2", sp.sigma[1]);
  r.checks.push_back({"mollify_singular", std::abs(sp.sigma[0] - 1.0) < 1e-6 && dev < 1e-6,
                      "sigma1 = " + num(sp.sigma[0]) + " one_deviation = " + num(dev)});
  r.timings.emplace_back("singular", seconds_since(t0));
  say(log, "mollify: " + std::to_string(r.defects.size()) + " defect(s) evaluated");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cli", "cannot write " + p.string());
  os << text;
  if (!os) throw Error("cli", "failed while writing " + p.string());
}

}  // namespace

bool ExperimentConfig::wants(const std::string& check) const {
  return std::find(checks.begin(), checks.end(), check) != checks.end();
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto axis = [&](const char* prefix, const AxisSpec& a) {
    os << prefix << ".lo = " << num(a.lo) << '\n';
    os << prefix << ".hi = " << num(a.hi) << '\n';
    os << prefix << ".count = " << a.count << '\n';
    os << prefix << ".periodic = " << (a.periodic ? "true" : "false") << '\n';
  };
  os << "name = " << c.name << '\n';
  os << "pipeline = " << c.pipeline << '\n';
  axis("grid.x1", c.domain.x1);
  axis("grid.x2", c.domain.x2);
  os << "density = " << c.density << '\n';
  os << "density.samples = " << c.density_samples << '\n';
  os << "map.steps = " << join(c.maps) << '\n';
  os << "map.mode = " << c.map_mode << '\n';
  os << "transfer.Q = " << c.Q << '\n';
  os << "eigen.k = " << c.k << '\n';
  os << "eigen.convention = " << convention_name(c.convention) << '\n';
  os << "eigen.stabilization = " << num(c.stabilization) << '\n';
  os << "seed = " << c.seed << '\n';
  os << "sweep.thresholds = " << c.n_thresholds << '\n';
  os << "sweep.tail = " << num(c.tail) << '\n';
  os << "sweep.image = " << c.image_mode << '\n';
  os << "sweep.h_nu = " << c.h_nu << '\n';
  os << "checks = " << join(c.checks) << '\n';
  os << "coarea.levels = " << c.coarea_levels << '\n';
  os << "federer_fleming.smoothing = " << c.smoothing_cells << '\n';
  os << "mollify.eps = " << join(c.mollify_eps) << '\n';
  os << "mollify.kernel = " << c.kernel << '\n';
  os << "mollify.band = " << (c.mollify_band ? num(c.mollify_band->first) + "," + num(c.mollify_band->second) : "none")
     << '\n';
  os << "mollify.max_ratio = " << num(c.mollify_max_ratio) << '\n';
  os << "mollify.correlation_cells = " << num(c.correlation_cells) << '\n';
  os << "fixture.lines = " << join(c.fixture_lines) << '\n';
  os << "output.dir = " << c.output_dir << '\n';
  return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto axis = [&](AxisSpec& a, const std::string& prefix, std::map<std::string, Setter>& m) {
    m[prefix + ".lo"] = [&a](const std::string& k, const std::string& v) { a.lo = to_double(k, v); };
    m[prefix + ".hi"] = [&a](const std::string& k, const std::string& v) { a.hi = to_double(k, v); };
    m[prefix + ".count"] = [&a](const std::string& k, const std::string& v) { a.count = static_cast<int>(to_int(k, v)); };
    m[prefix + ".periodic"] = [&a](const std::string& k, const std::string& v) { a.periodic = to_bool(k, v); };
  };
  std::map<std::string, Setter> set;
  axis(c.domain.x1, "grid.x1", set);
  axis(c.domain.x2, "grid.x2", set);
  auto str = [&](std::string& field) { return [&field](const std::string&, const std::string& v) { field = v; }; };
  auto integer = [&](int& field) {
    return [&field](const std::string& k, const std::string& v) { field = static_cast<int>(to_int(k, v)); };
  };
  auto real = [&](double& field) { return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); }; };
  auto reals = [&](std::vector<double>& field) {
    return [&field](const std::string& k, const std::string& v) {
      field.clear();
      for (const auto& item : split_list(v)) field.push_back(to_double(k, item));
    };
  };
  set["name"] = str(c.name);
  set["pipeline"] = str(c.pipeline);
  set["density"] = str(c.density);
  set["density.samples"] = integer(c.density_samples);
  set["map.steps"] = [&](const std::string&, const std::string& v) { c.maps = split_list(v); };
  set["map.mode"] = str(c.map_mode);
  set["transfer.Q"] = integer(c.Q);
  set["eigen.k"] = integer(c.k);
  set["eigen.convention"] = [&](const std::string&, const std::string& v) { c.convention = convention_from_name(v); };
  set["eigen.stabilization"] = real(c.stabilization);
  set["seed"] = [&](const std::string& k, const std::string& v) { c.seed = to_uint(k, v); };
  set["sweep.thresholds"] = integer(c.n_thresholds);
  set["sweep.tail"] = real(c.tail);
  set["sweep.image"] = str(c.image_mode);
  set["sweep.h_nu"] = str(c.h_nu);
  set["checks"] = [&](const std::string&, const std::string& v) { c.checks = split_list(v); };
  set["coarea.levels"] = integer(c.coarea_levels);
  set["federer_fleming.smoothing"] = integer(c.smoothing_cells);
  set["mollify.eps"] = reals(c.mollify_eps);
  set["mollify.kernel"] = str(c.kernel);
  set["mollify.band"] = [&](const std::string& k, const std::string& v) {
    if (v == "none") {
      c.mollify_band.reset();
      return;
    }
    const auto items = split_list(v);
    if (items.size() != 2) throw Error("cli", "'" + k + "' expects 'lo,hi' or 'none'");
    c.mollify_band = std::make_pair(to_double(k, items[0]), to_double(k, items[1]));
  };
  set["mollify.max_ratio"] = real(c.mollify_max_ratio);
  set["mollify.correlation_cells"] = real(c.correlation_cells);
  set["fixture.lines"] = reals(c.fixture_lines);
  set["output.dir"] = str(c.output_dir);

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("cli", "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = set.find(key);
    if (it == set.end()) throw Error("cli", "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second(key, value);
    } catch (const Error& e) {
      throw Error("cli", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cli", "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<PresetInfo> list_presets() {
  return {
      {"cylinder_T1", "sheared cylinder [0,4)x[0,1], 256x64, sinusoidal density, map T1"},
      {"cylinder_T2", "cylinder [0,4)x[0,1], 256x64, uniform density, map T2"},
      {"torus_T4T3", "torus [0,2pi)^2, 128x128, map T4 o T3"},
      {"static_fixture_2_1", "vertical curves x1 = 1.5, 3.5 on the T1 cylinder, analytic boundary masses"},
      {"mollify_demo", "mollified transfer operator for T1 on the reflected torus [0,4)x[-1,1), eps 0.2 and 0.1"},
      {"identity_uniform_16", "identity dynamics on the unit square, 16x16, uniform density"},
  };
}

ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.output_dir = "out/" + name;
  const DomainSpec cylinder{{0.0, 4.0, 256, true}, {0.0, 1.0, 64, false}};
  if (name == "cylinder_T1") {
    c.domain = cylinder;
    c.density = "sinusoid_x1";
    c.maps = {"T1"};
    c.checks = {"cheeger", "coarea", "federer_fleming"};
  } else if (name == "cylinder_T2") {
    c.domain = cylinder;
    c.density = "uniform";
    c.maps = {"T2"};
    c.checks = {"cheeger", "coarea"};
  } else if (name == "torus_T4T3") {
    const double p = 2.0 * std::numbers::pi;
    c.domain = {{0.0, p, 128, true}, {0.0, p, 128, true}};
    c.density = "sinusoid_x2_torus";
    c.maps = {"T3", "T4"};
    c.checks = {"cheeger"};
  } else if (name == "static_fixture_2_1") {
    c.pipeline = "fixture";
    c.domain = cylinder;
    c.density = "sinusoid_x1";
    c.maps = {"T1"};
    c.h_nu = "analytic";
    c.checks = {};
  } else if (name == "mollify_demo") {
    c.pipeline = "mollify";
    c.domain = {{0.0, 4.0, 128, true}, {-1.0, 1.0, 64, true}};
    c.density = "sinusoid_x1";
    c.maps = {"T1"};
    c.Q = 100;
    c.checks = {"mollify"};
    c.mollify_eps = {0.2, 0.1};
    // T1 is smooth away from x2 = +-1; the composite operator reaches 4 eps.
    c.mollify_band = std::make_pair(-0.2, 0.2);
  } else if (name == "identity_uniform_16") {
    c.domain = {{0.0, 1.0, 16, false}, {0.0, 1.0, 16, false}};
    c.density = "uniform";
    c.maps = {};
    c.Q = 16;
    c.k = 4;
    c.checks = {"cheeger"};
  } else {
    std::string names;
    for (const auto& p : list_presets()) names += (names.empty() ? "" : ", ") + p.name;
    throw Error("cli", "unknown preset '" + name + "' (available: " + names + ")");
  }
  validate(c);
  return c;
}

bool CaseResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& l) { return l.pass; });
}

CaseResult run_case(const ExperimentConfig& config, std::ostream* log) {
  validate(config);
  CaseResult r;
  r.config = config;
  r.map = MapSpec::identity(config.domain);
  const auto t0 = Clock::now();
  r.grid = Grid(config.domain);
  r.density = make_density(config.density, config.domain);
  r.u = discretize_density(*r.grid, *r.density, config.density_samples);
  r.timings.emplace_back("density", seconds_since(t0));
  say(log, "grid " + r.grid->describe() + ", density " + r.density->name());
  if (config.pipeline == "fixture") run_fixture(r, log);
  else if (config.pipeline == "mollify") run_mollify(r, log);
  else run_spectral(r, log);
  r.timings.emplace_back("total", seconds_since(t0));
  return r;
}

void write_bundle(const CaseResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir(r.config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cli", "cannot create output directory " + dir.string() + ": " + ec.message());

  std::ostringstream manifest;
  manifest << "# dynlap " << kVersion << "\n# eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
           << EIGEN_MINOR_VERSION << "\n# timings are kept in timings.txt\n"
           << serialize_config(r.config);
  write_file(dir / "manifest.txt", manifest.str());

  if (r.eigen) {
    std::ostringstream os;
    os << "# index lambda lambda_with_half residual roughness\n";
    for (Eigen::Index i = 0; i < r.eigen->eigenvalues.size(); ++i)
      os << i + 1 << ' ' << num(r.eigen->eigenvalues[i]) << ' ' << num(r.eigen->eigenvalues[i] * r.half_scale) << ' '
         << num(r.eigen->residuals[i]) << ' ' << num(r.eigen->roughness[i]) << '\n';
    write_file(dir / "eigenvalues.txt", os.str());

    std::ostringstream ps;
    for (int i = 0; i < r.grid->cell_count(); ++i) {
      const Point p = r.grid->center(i);
      ps << num(p.x1) << ' ' << num(p.x2) << ' ' << num(r.eigen->vectors(i, 1)) << '\n';
    }
    write_file(dir / "phi2.txt", ps.str());
  }
  if (r.sweep) {
    if (r.sweep->contour_mu) {
      std::ostringstream os;
      write_contour(os, *r.sweep->contour_mu);
      write_file(dir / "contour_mu.txt", os.str());
    }
    if (r.sweep->contour_nu) {
      std::ostringstream os;
      write_contour(os, *r.sweep->contour_nu);
      write_file(dir / "contour_nu.txt", os.str());
    }
    if (!r.sweep->thresholds.empty()) {
      std::ostringstream os;
      for (std::size_t j = 0; j < r.sweep->thresholds.size(); ++j)
        os << num(r.sweep->thresholds[j]) << ' ' << num(r.sweep->ratios[j]) << '\n';
      write_file(dir / "sweep.txt", os.str());
    }
  }
  if (!r.defects.empty()) {
    std::ostringstream os;
    for (const auto& d : r.defects) os << num(d.eps) << ' ' << num(d.defect) << '\n';
    write_file(dir / "defects.txt", os.str());
  }

  std::ostringstream cs;
  cs << "pipeline = " << r.config.pipeline << '\n';
  if (r.op) cs << "convention = " << convention_name(r.op->convention) << '\n';
  for (const auto& [k, v] : r.values) cs << k << " = " << num(v) << '\n';
  for (const auto& l : r.checks) cs << "check." << l.name << " = " << (l.pass ? "PASS" : "FAIL") << " " << l.detail << '\n';
  cs << "status = " << (r.ok() ? "PASS" : "FAIL") << '\n';
  write_file(dir / "checks.txt", cs.str());

  std::ostringstream ts;
  ts << "threads " << thread_count() << '\n';
  for (const auto& [k, v] : r.timings) ts << k << ' ' << num(v) << '\n';
  write_file(dir / "timings.txt", ts.str());
}

CaseResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  CaseResult r = run_case(config, log);
  write_bundle(r);
  return r;
}

}  // namespace dynlap
