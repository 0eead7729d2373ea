#pragma once

#include <Eigen/Sparse>
#include <iosfwd>
#include <vector>

#include "dynlap/dynamics.hpp"
#include "dynlap/grid.hpp"

namespace dynlap {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Per-cell probability masses u_i of a density.
struct DensityField {
  Grid grid;
  Eigen::VectorXd u;
  std::vector<int> zero_cells;  // cells with u_i == 0, see pushforward_density

  DensityField(Grid g, Eigen::VectorXd masses);

  /// Mass divided by cell area, i.e. the piecewise-constant density value.
  Eigen::VectorXd density_values() const { return u / grid.cell_area(); }
  CellField as_cell_field() const { return CellField(grid, u); }
};

/// Ulam estimate of the Perron-Frobenius operator, rows = source cells.
struct TransferMatrix {
  SparseMatrix P;
  int Q = 0;
  Grid source;
  Grid target;
};

/// P~_ij = P_ij u_i / v_j. Its transpose acting on a cell vector is the
/// discrete push-forward f -> f o T^{-1}.
struct NormalizedTransfer {
  SparseMatrix Pt;
};

/// Midpoint-lattice quadrature with samples_per_cell^2 points per cell,
/// rescaled to total mass 1.
DensityField discretize_density(const Grid& grid, const DensitySpec& spec, int samples_per_cell = 8);

/// Q test points per cell on a regular sqrt(Q) x sqrt(Q) interior lattice.
TransferMatrix estimate_transfer_matrix(const Grid& src, const Grid& dst, const MapSpec& map, int Q);

/// v = P^T u.
DensityField pushforward_density(const TransferMatrix& P, const DensityField& u);

NormalizedTransfer normalize_transfer(const TransferMatrix& P, const DensityField& u, const DensityField& v);

/// Discrete push-forward of an observable: P~^T f.
Eigen::VectorXd push_forward(const NormalizedTransfer& Pt, const Eigen::VectorXd& f);

/// Discrete pull-back (Koopman) of an observable: P g.
Eigen::VectorXd pull_back(const TransferMatrix& P, const Eigen::VectorXd& g);

/// Product P1 * P2 * ... for multi-step transfer (first map first).
TransferMatrix chain_transfer(const std::vector<TransferMatrix>& steps);

SparseMatrix identity_matrix(int n);

/// "row col value" per nonzero, 0-based, 17 significant digits.
void write_triplets(std::ostream& os, const SparseMatrix& m);
SparseMatrix read_triplets(std::istream& is, int rows, int cols);

}  // namespace dynlap
