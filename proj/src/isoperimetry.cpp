#include "dynlap/isoperimetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dynlap/error.hpp"
#include "dynlap/laplacian.hpp"
#include "dynlap/parallel.hpp"

namespace dynlap {

std::pair<double, double> region_masses(const CellField& cf, double t, const DensityField& u) {
  if (cf.values.size() != u.u.size()) throw Error("isoperimetry", "field and density lengths differ");
  double m1 = 0.0;
  double m2 = 0.0;
  for (Eigen::Index i = 0; i < u.u.size(); ++i) (cf.values[i] <= t ? m1 : m2) += u.u[i];
  return {m1, m2};
}

double cheeger_ratio(double len_mu, double len_nu, double m1, double m2) {
  const double m = std::min(m1, m2);
  if (!(m > 0.0)) throw Error("isoperimetry", "Cheeger ratio undefined: one side has zero mass");
  return (len_mu + len_nu) / (2.0 * m);
}

double cheeger_ratio_multistep(const std::vector<double>& lengths, double m1, double m2) {
  if (lengths.empty()) throw Error("isoperimetry", "multi-step ratio needs at least one boundary mass");
  const double m = std::min(m1, m2);
  if (!(m > 0.0)) throw Error("isoperimetry", "Cheeger ratio undefined: one side has zero mass");
  const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
  return mean / m;
}

std::vector<double> multistep_lengths(const Contour& c, const std::vector<MapSpec>& maps,
                                      const std::vector<WeightFunction>& weights, const Grid& target) {
  if (weights.size() != maps.size() + 1) throw Error("isoperimetry", "need one weight per step plus the initial one");
  std::vector<double> out{hypersurface_mass(c, weights[0])};
  for (std::size_t i = 0; i < maps.size(); ++i)
    out.push_back(image_hypersurface_mass(c, maps[i], weights[i + 1], target));
  return out;
}

std::vector<double> quantile_thresholds(const Eigen::VectorXd& values, int n, double tail) {
  if (n < 1) throw Error("isoperimetry", "need at least one threshold");
  if (values.size() == 0) throw Error("isoperimetry", "no values to place thresholds on");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double q = n == 1 ? 0.5 : tail + (1.0 - 2.0 * tail) * j / (n - 1);
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    out[static_cast<std::size_t>(j)] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  return out;
}

SweepResult sweep_level_sets(const CellField& phi, const MapSpec& map, const DensityField& u,
                             const WeightFunction& h_mu, const WeightFunction& h_nu, const Grid& target,
                             const SweepOptions& options) {
  if (options.n_thresholds < 1) throw Error("isoperimetry", "need at least one threshold");
  if (phi.values.minCoeff() == phi.values.maxCoeff()) throw Error("isoperimetry", "cannot sweep a constant field");
  const NodeField nf = cell_to_node(phi);
  std::optional<NodeField> image_nf;
  if (options.image_field) {
    if (!(options.image_field->grid == target)) throw Error("isoperimetry", "image field must live on the target grid");
    image_nf = cell_to_node(*options.image_field);
  }
  auto image_of = [&](const Contour& c, double t) {
    return image_nf ? extract_level_set(*image_nf, t) : map_contour(c, map, target);
  };

  const int n = options.n_thresholds;
  SweepResult r;
  r.thresholds = quantile_thresholds(phi.values, n, options.tail);
  r.ratios.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  r.partitions.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    Partition& p = r.partitions[j];
    p.t = r.thresholds[j];
    std::tie(p.m1, p.m2) = region_masses(phi, p.t, u);
    const Contour c = extract_level_set(nf, p.t);
    if (c.empty() || std::min(p.m1, p.m2) <= 0.0) {
      p.ratio = std::numeric_limits<double>::infinity();
      return;
    }
    p.len_mu = hypersurface_mass(c, h_mu);
    p.len_nu = hypersurface_mass(image_of(c, p.t), h_nu);
    p.ratio = cheeger_ratio(p.len_mu, p.len_nu, p.m1, p.m2);
    r.ratios[j] = p.ratio;
  });
  const auto best = std::min_element(r.ratios.begin(), r.ratios.end());
  if (!std::isfinite(*best)) throw Error("isoperimetry", "every threshold produced an empty level set");
  r.best = r.partitions[static_cast<std::size_t>(best - r.ratios.begin())];
  r.best_contour = extract_level_set(nf, r.best.t);
  r.best_image = image_of(*r.best_contour, r.best.t);
  r.best_len_nu_pointwise = image_hypersurface_mass(*r.best_contour, map, h_nu, target);
  return r;
}

Eigen::VectorXd gradient_magnitude(const Grid& g, const Eigen::VectorXd& f) {
  if (f.size() != g.cell_count()) throw Error("isoperimetry", "field length does not match grid");
  Eigen::VectorXd out(f.size());
  for (int l = 0; l < g.L(); ++l)
    for (int k = 0; k < g.K(); ++k) {
      const int kp = stencil_index(k + 1, g.K(), g.periodic1());
      const int km = stencil_index(k - 1, g.K(), g.periodic1());
      const int lp = stencil_index(l + 1, g.L(), g.periodic2());
      const int lm = stencil_index(l - 1, g.L(), g.periodic2());
      const double d1 = (f[g.index(kp, l)] - f[g.index(km, l)]) / (2.0 * g.b1());
      const double d2 = (f[g.index(k, lp)] - f[g.index(k, lm)]) / (2.0 * g.b2());
      out[g.index(k, l)] = std::hypot(d1, d2);
    }
  return out;
}

double weighted_median(const Eigen::VectorXd& f, const Eigen::VectorXd& u) {
  std::vector<int> order(static_cast<std::size_t>(f.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  const double half = 0.5 * u.sum();
  double acc = 0.0;
  for (int i : order) {
    acc += u[i];
    if (acc >= half) return f[i];
  }
  return f[order.back()];
}

double sobolev_quotient(const CellField& f, const NormalizedTransfer& Pt, const DensityField& u,
                        const DensityField& v) {
  const Eigen::VectorXd pushed = push_forward(Pt, f.values);
  const double num = gradient_magnitude(u.grid, f.values).dot(u.u) + gradient_magnitude(v.grid, pushed).dot(v.u);
  const double alpha = weighted_median(f.values, u.u);
  const double den = 2.0 * (f.values.array() - alpha).abs().matrix().dot(u.u);
  if (!(den > 0.0)) throw Error("isoperimetry", "Sobolev quotient undefined for a constant field");
  return num / den;
}

Eigen::VectorXd smooth_field(const Grid& g, const Eigen::VectorXd& f, int width) {
  if (width < 1) return f;
  auto pass = [&](const Eigen::VectorXd& in, bool along1) {
    Eigen::VectorXd out(in.size());
    const int n = along1 ? g.K() : g.L();
    const bool periodic = along1 ? g.periodic1() : g.periodic2();
    for (int l = 0; l < g.L(); ++l)
      for (int k = 0; k < g.K(); ++k) {
        const int i = along1 ? k : l;
        double sum = 0.0;
        double wsum = 0.0;
        for (int d = -(width - 1); d <= width - 1; ++d) {
          int j = i + d;
          if (periodic) {
            j = ((j % n) + n) % n;
          } else if (j < 0 || j >= n) {
            continue;
          }
          const double w = width - std::abs(d);
          sum += w * (along1 ? in[g.index(j, l)] : in[g.index(k, j)]);
          wsum += w;
        }
        out[g.index(k, l)] = sum / wsum;
      }
    return out;
  };
  return pass(pass(f, true), false);
}

CheegerReport check_cheeger(double h_estimate, double lambda2) {
  if (!(lambda2 < 0.0)) throw Error("isoperimetry", "Cheeger check needs a negative second eigenvalue");
  CheegerReport r;
  r.h_estimate = h_estimate;
  r.bound = 2.0 * std::sqrt(-lambda2);
  r.margin = r.bound - h_estimate;
  r.holds = h_estimate <= r.bound * (1.0 + 1e-6);
  return r;
}

CoareaReport coarea_check(const CellField& f, const DensityField& u, int n_levels, const WeightFunction& h) {
  if (n_levels < 2) throw Error("isoperimetry", "co-area check needs at least two levels");
  CoareaReport r;
  r.lhs = gradient_magnitude(f.grid, f.values).dot(u.u);
  const NodeField nf = cell_to_node(f);
  const double lo = nf.values.minCoeff();
  const double hi = nf.values.maxCoeff();
  if (hi > lo) {
    std::vector<double> mass(static_cast<std::size_t>(n_levels), 0.0);
    const double dt = (hi - lo) / (n_levels - 1);
    parallel_for(static_cast<std::size_t>(n_levels), [&](std::size_t j) {
      mass[j] = hypersurface_mass(extract_level_set(nf, lo + dt * static_cast<double>(j)), h);
    });
    for (int j = 0; j + 1 < n_levels; ++j)
      r.rhs += 0.5 * dt * (mass[static_cast<std::size_t>(j)] + mass[static_cast<std::size_t>(j) + 1]);
  }
  r.relative_error = r.lhs > 0.0 ? std::abs(r.lhs - r.rhs) / r.lhs : std::abs(r.rhs);
  return r;
}

CoareaReport coarea_check(const CellField& f, const DensityField& u, int n_levels) {
  return coarea_check(f, u, n_levels, density_weight(u));
}

}  // namespace dynlap
