#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynlap/laplacian.hpp"
#include "dynlap/transfer.hpp"

namespace dynlap {

enum class KernelProfile { epanechnikov, biweight };

/// Radial kernel Q(|x|) supported in the open unit disk and normalized so its
/// integral over the disk is 1.
struct Kernel {
  KernelProfile profile = KernelProfile::epanechnikov;
  double a = 0.0;  // normalization constant
  double c = 0.0;  // second moment of x1^2 Q(|x|)

  double operator()(double s) const;
};

Kernel make_kernel(KernelProfile profile = KernelProfile::epanechnikov);
KernelProfile kernel_profile_from_name(const std::string& name);
std::string kernel_profile_name(KernelProfile p);

struct KernelMoments {
  double mass = 0.0;   // integral of Q over the disk
  double xx = 0.0;     // integral of x1^2 Q
  double xy = 0.0;     // integral of x1 x2 Q
  double yy = 0.0;
};

/// Polar Gauss-Legendre quadrature of the kernel moments, scaled to radius eps.
KernelMoments kernel_moments(const Kernel& k, double eps = 1.0, int radial_nodes = 32, int angular_nodes = 64);
double kernel_second_moment(const Kernel& k);

struct DiffusionMatrix {
  SparseMatrix D;
  double eps = 0.0;
};

/// Entry (i,j) = Q_eps(dist(center_i, center_j)) * cell_area, with periodic
/// distances. Rows are then rescaled to sum to one; on grids where the kernel
/// is clipped by a non-periodic edge a symmetric Sinkhorn scaling is used so
/// the matrix stays symmetric and doubly stochastic.
DiffusionMatrix build_diffusion_matrix(const Grid& grid, const Kernel& k, double eps);

/// L_eps f = diag(1/v_eps) D_after P^T D_before (u .* f), v_eps = D_after P^T D_before u,
/// and its adjoint L*_eps g = D_before P D_after g.
struct MollifiedOperator {
  SparseMatrix L;
  SparseMatrix Lstar;
  Eigen::VectorXd v_eps;
  double eps = 0.0;
};

MollifiedOperator mollified_operator(const DiffusionMatrix& after, const DiffusionMatrix& before,
                                     const TransferMatrix& P, const DensityField& u);

/// Leading singular pairs of L_eps between L2(u) and L2(v_eps), from the
/// eigenpairs of L*_eps L_eps. Singular vectors are u-normalized.
struct SingularPairs {
  Eigen::VectorXd sigma;
  Eigen::MatrixXd right;  // columns in the source space
};
SingularPairs leading_singular_pairs(const MollifiedOperator& op, const DensityField& u, int count = 2);

/// Cells where the defect is measured.
using CellMask = std::function<bool(int cell)>;

/// Cells farther than `margin` from every non-periodic edge.
CellMask interior_mask(const Grid& grid, double margin);

/// Cells whose center has lo < x2 < hi.
CellMask x2_band_mask(const Grid& grid, double lo, double hi);

struct DefectRow {
  double eps = 0.0;
  double defect = 0.0;
};

/// E(eps) = max over masked cells of |(L*_eps L_eps - I) f / eps^2 - c * (Delta^D f)|.
std::vector<DefectRow> convergence_defect(const Eigen::VectorXd& f, const std::vector<MollifiedOperator>& ops,
                                          const DynOperator& delta_with_half, double c, const CellMask& mask);

/// Expansion constant for the four-fold mollification: each smoothing step
/// contributes c/2 eps^2 times a Laplacian, so the product gives 2c times Delta^D.
double expansion_constant(const Kernel& k);

}  // namespace dynlap
