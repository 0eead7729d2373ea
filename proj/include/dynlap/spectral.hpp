#pragma once

#include <complex>
#include <cstdint>

#include "dynlap/laplacian.hpp"
#include "dynlap/lanczos.hpp"

namespace dynlap {

/// S = (A + A^T)/2 with A = D_u^{1/2} L D_u^{-1/2}. Eigenvectors y of S map
/// back to cell fields by phi = D_u^{-1/2} y.
struct SymmetrizedOperator {
  SparseMatrix S;
  Eigen::VectorXd sqrt_u;
  Eigen::VectorXd inv_sqrt_u;  // the back-transform
  double skew_norm = 0.0;      // ||(A - A^T)/2||_inf
  double norm = 0.0;           // ||S||_inf
  Convention convention = Convention::with_half;
};

SymmetrizedOperator symmetrize(const DynOperator& op, const DensityField& u);

/// G^T G with G = D_u^{1/2} (I - N) D_u^{-1/2}, N the four-neighbour average
/// (wrapped on periodic axes, clamped to the cell itself at other edges).
///
/// The two-cell stencil only couples cells of equal parity, so S alone admits
/// checkerboard-like eigenvectors whose Rayleigh quotients sit among the smooth
/// ones. Subtracting a multiple of this penalty pushes those to the bottom of
/// the spectrum while moving smooth modes by O(b^4).
SparseMatrix roughness_penalty(const Grid& grid, const Eigen::VectorXd& sqrt_u);

/// ||(I - N) f|| / ||f||, zero for constants.
double roughness(const Grid& grid, const Eigen::VectorXd& f);

struct EigenOptions {
  int k = 6;
  double tol = 1e-12;            // residual bound relative to ||S||_inf
  int basis = 0;                 // 0 picks a size from k
  double stabilization = 0.01;   // penalty weight as a fraction of ||S||_inf; 0 disables
  std::uint64_t seed = 20240607;
  int max_passes = 4;            // deflated re-runs to catch repeated eigenvalues
  double roughness_limit = 0.5;  // returned vectors rougher than this raise the penalty
  int max_escalations = 6;       // each multiplies the penalty weight by four
};

struct EigenSolution {
  Eigen::VectorXd eigenvalues;       // Rayleigh quotients of S, descending by stabilized value
  Eigen::MatrixXd vectors;           // columns phi_k, orthonormal in the u-weighted inner product
  Eigen::VectorXd residuals;         // ||S_stab y - theta y||_2
  Eigen::VectorXd operator_residuals;  // ||L phi - lambda phi||_2 against the unstabilized operator
  Eigen::VectorXd stabilized_values;   // theta_k
  Eigen::VectorXd roughness;
  bool symmetrized = true;
  double stabilization_weight = 0.0;
  double kernel_residual = 0.0;  // ||S sqrt(u)|| / ||S||_inf
  int matvecs = 0;
  int passes = 0;
};

EigenSolution leading_eigenpairs(const SymmetrizedOperator& sym, const Grid& grid, const EigenOptions& options);

/// Fills operator_residuals of a solution against the nonsymmetric matrix.
void attach_operator_residuals(EigenSolution& sol, const DynOperator& op);

/// Diagnostic: rightmost eigenvalues of the nonsymmetric operator itself.
NonsymmetricResult nonsymmetric_eigenvalues(const DynOperator& op, int nev, std::uint64_t seed = 7);

}  // namespace dynlap
