#pragma once

#include <string>
#include <vector>

#include "dynlap/transfer.hpp"

namespace dynlap {

/// raw: L_mu + P L_nu P~^T.  with_half: half of that.
enum class Convention { raw, with_half };

enum class Boundary { periodic, neumann_reflect };

struct DynOperator {
  SparseMatrix matrix;
  Convention convention = Convention::with_half;
  Boundary boundary_x1 = Boundary::periodic;
  Boundary boundary_x2 = Boundary::periodic;
  int steps = 1;

  double norm_inf() const;
};

Convention convention_from_name(const std::string& name);
std::string convention_name(Convention c);

/// Weighted finite-difference Laplacian with the two-cell-reach stencil.
///
/// Row (k,l) carries u_{k+-1,l} / (4 b1^2 u_{k,l}) on f_{k+-2,l}, the analogous
/// x2 terms, and minus their sum on the diagonal. Out-of-range indices on a
/// non-periodic axis are reflected, f_{-1} = f_1 and f_{-2} = f_0 (0-based),
/// for both f and u.
DynOperator assemble_weighted_laplacian(const Grid& grid, const DensityField& u);

DynOperator assemble_dynamic_laplacian(const DynOperator& Lmu, const DynOperator& Lnu, const TransferMatrix& P,
                                       const NormalizedTransfer& Pt, Convention convention);

/// One term P^(i) L_{mu,i+1} P~^(i)T of the time average.
struct StepTerm {
  SparseMatrix P;   // cumulative transfer from time 0 to step i
  SparseMatrix Pt;  // its normalized companion
  DynOperator L;    // weighted Laplacian for the density at step i
};

/// (1/k) sum_i P^(i) L_{mu,i+1} P~^(i)T over k terms; the first term is
/// expected to use identity transfers.
DynOperator assemble_multistep(const std::vector<StepTerm>& terms);

/// Reflected index for a non-periodic axis of n cells, or the wrapped index
/// for a periodic one. Valid for offsets down to -2 and up to n+1.
int stencil_index(int i, int n, bool periodic);

}  // namespace dynlap
