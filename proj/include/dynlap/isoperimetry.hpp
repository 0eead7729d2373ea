#pragma once

#include <optional>
#include <vector>

#include "dynlap/contour.hpp"
#include "dynlap/transfer.hpp"

namespace dynlap {

struct Partition {
  double t = 0.0;
  double m1 = 0.0;  // mass of cells with value <= t
  double m2 = 0.0;
  double len_mu = 0.0;
  double len_nu = 0.0;
  double ratio = 0.0;
};

/// Cells with value exactly t count towards m1.
std::pair<double, double> region_masses(const CellField& cf, double t, const DensityField& u);

/// (len_mu + len_nu) / (2 min(m1, m2)).
double cheeger_ratio(double len_mu, double len_nu, double m1, double m2);

/// Multi-step ratio: mean of the boundary masses of the successive images
/// (the first entry is the untransformed contour) over min(m1, m2).
double cheeger_ratio_multistep(const std::vector<double>& lengths, double m1, double m2);

/// Boundary masses mu(Gamma), nu_1(T1 Gamma), nu_2(T2 T1 Gamma), ...
/// `maps[i]` is the cumulative map to step i+1 and `weights[i+1]` its density.
std::vector<double> multistep_lengths(const Contour& c, const std::vector<MapSpec>& maps,
                                      const std::vector<WeightFunction>& weights, const Grid& target);

struct SweepOptions {
  int n_thresholds = 200;
  double tail = 0.01;  // excluded quantile mass at each end
  /// When set (normally P~^T phi on the target grid), the image T(Gamma_t) is
  /// taken as the t-level set of this field, since L phi = phi o T^{-1}.
  /// Otherwise Gamma_t is mapped pointwise through T.
  std::optional<CellField> image_field;
};

struct SweepResult {
  std::vector<double> thresholds;
  std::vector<double> ratios;  // +inf where the contour is empty or a side has no mass
  std::vector<Partition> partitions;
  Partition best;
  std::optional<Contour> best_contour;
  std::optional<Contour> best_image;
  double best_len_nu_pointwise = 0.0;  // nu-mass of the pointwise image of the optimal contour
};

/// n values at equally spaced quantiles of `values` between tail and 1 - tail
/// (linear interpolation between order statistics).
std::vector<double> quantile_thresholds(const Eigen::VectorXd& values, int n, double tail);

/// Evaluates the dynamic Cheeger ratio of the level sets of phi at quantile
/// thresholds and returns the minimizer. h_mu weights the contour itself and
/// h_nu its image under `map` on the target grid.
SweepResult sweep_level_sets(const CellField& phi, const MapSpec& map, const DensityField& u,
                             const WeightFunction& h_mu, const WeightFunction& h_nu, const Grid& target,
                             const SweepOptions& options = {});

/// Central differences, periodic or reflected as in the Laplacian; returns
/// |grad f| per cell.
Eigen::VectorXd gradient_magnitude(const Grid& grid, const Eigen::VectorXd& f);

/// u-weighted median: minimizes sum_i u_i |f_i - alpha|.
double weighted_median(const Eigen::VectorXd& f, const Eigen::VectorXd& u);

/// [sum |grad f| u + sum |grad (P~^T f)| v] / (2 sum u |f - alpha|).
double sobolev_quotient(const CellField& f, const NormalizedTransfer& Pt, const DensityField& u,
                        const DensityField& v);

/// Separable triangle smoothing with the given half-width in cells.
Eigen::VectorXd smooth_field(const Grid& grid, const Eigen::VectorXd& f, int width_cells);

struct CheegerReport {
  double h_estimate = 0.0;
  double bound = 0.0;  // 2 sqrt(-lambda2)
  double margin = 0.0;
  bool holds = false;
};

CheegerReport check_cheeger(double h_estimate, double lambda2_with_half);

struct CoareaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;
};

/// lhs = sum |grad f| u; rhs = trapezoid rule over n_levels equally spaced
/// thresholds of the weighted length of each level set, with weight h.
CoareaReport coarea_check(const CellField& f, const DensityField& u, int n_levels, const WeightFunction& h);
CoareaReport coarea_check(const CellField& f, const DensityField& u, int n_levels);

}  // namespace dynlap
