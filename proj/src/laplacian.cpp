#include "dynlap/laplacian.hpp"

#include <array>
#include <cmath>

#include "dynlap/error.hpp"
#include "dynlap/parallel.hpp"

namespace dynlap {

double DynOperator::norm_inf() const {
  double best = 0.0;
  for (int i = 0; i < matrix.outerSize(); ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(matrix, i); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

Convention convention_from_name(const std::string& name) {
  if (name == "raw") return Convention::raw;
  if (name == "with_half") return Convention::with_half;
  throw Error("laplacian", "unknown convention '" + name + "' (expected raw or with_half)");
}

std::string convention_name(Convention c) { return c == Convention::raw ? "raw" : "with_half"; }

int stencil_index(int i, int n, bool periodic) {
  if (periodic) return ((i % n) + n) % n;
  if (i == -1) return 1;
  if (i == -2) return 0;
  if (i == n) return n - 2;
  if (i == n + 1) return n - 1;
  if (i < -2 || i > n + 1) throw Error("laplacian", "stencil offset out of reflection range");
  return i;
}

DynOperator assemble_weighted_laplacian(const Grid& grid, const DensityField& u) {
  if (!(grid == u.grid)) throw Error("laplacian", "density lives on a different grid");
  for (int i = 0; i < grid.cell_count(); ++i) {
    if (!(u.u[i] > 0.0)) throw Error("laplacian", "density must be strictly positive (cell " + std::to_string(i) + ")");
  }
  const int K = grid.K();
  const int L = grid.L();
  const int n = grid.cell_count();
  const double w1 = 1.0 / (4.0 * grid.b1() * grid.b1());
  const double w2 = 1.0 / (4.0 * grid.b2() * grid.b2());
  std::vector<std::array<std::pair<int, double>, 5>> rows(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
    const CellIndex c = grid.cell(static_cast<int>(r));
    const double ur = u.u[static_cast<Eigen::Index>(r)];
    auto& row = rows[r];
    double diag = 0.0;
    int slot = 1;
    auto add = [&](int uidx, int fidx, double w) {
      if (fidx == static_cast<int>(r)) {
        row[slot++] = {fidx, 0.0};  // reflected onto itself: the term vanishes
        return;
      }
      const double coef = u.u[uidx] * w / ur;
      row[slot++] = {fidx, coef};
      diag -= coef;
    };
    for (int s : {1, -1}) {
      const int uk = stencil_index(c.k + s, K, grid.periodic1());
      const int fk = stencil_index(c.k + 2 * s, K, grid.periodic1());
      add(grid.index(uk, c.l), grid.index(fk, c.l), w1);
    }
    for (int s : {1, -1}) {
      const int ul = stencil_index(c.l + s, L, grid.periodic2());
      const int fl = stencil_index(c.l + 2 * s, L, grid.periodic2());
      add(grid.index(c.k, ul), grid.index(c.k, fl), w2);
    }
    row[0] = {static_cast<int>(r), diag};
  });
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  for (int r = 0; r < n; ++r)
    for (const auto& [col, val] : rows[static_cast<std::size_t>(r)])
      if (val != 0.0) trip.emplace_back(r, col, val);
  DynOperator op;
  op.matrix = SparseMatrix(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.convention = Convention::with_half;
  op.boundary_x1 = grid.periodic1() ? Boundary::periodic : Boundary::neumann_reflect;
  op.boundary_x2 = grid.periodic2() ? Boundary::periodic : Boundary::neumann_reflect;
  op.steps = 1;
  return op;
}

DynOperator assemble_dynamic_laplacian(const DynOperator& Lmu, const DynOperator& Lnu, const TransferMatrix& P,
                                       const NormalizedTransfer& Pt, Convention convention) {
  const auto n = Lmu.matrix.rows();
  if (P.P.rows() != n || P.P.cols() != Lnu.matrix.rows() || Pt.Pt.rows() != P.P.rows() ||
      Pt.Pt.cols() != P.P.cols() || Lmu.matrix.cols() != n)
    throw Error("laplacian", "dimension mismatch in dynamic Laplacian assembly");
  SparseMatrix pulled = (P.P * Lnu.matrix).pruned();
  SparseMatrix PtT = Pt.Pt.transpose();
  SparseMatrix term = (pulled * PtT).pruned();
  DynOperator op = Lmu;
  op.matrix = Lmu.matrix + term;
  if (convention == Convention::with_half) op.matrix *= 0.5;
  op.matrix.makeCompressed();
  op.convention = convention;
  op.steps = 1;
  return op;
}

DynOperator assemble_multistep(const std::vector<StepTerm>& terms) {
  if (terms.empty()) throw Error("laplacian", "multistep average needs at least one term");
  const auto n = terms.front().P.rows();
  SparseMatrix sum(n, n);
  for (const auto& t : terms) {
    if (t.P.rows() != n || t.P.cols() != t.L.matrix.rows() || t.Pt.rows() != t.P.rows() ||
        t.Pt.cols() != t.P.cols())
      throw Error("laplacian", "dimension mismatch in multistep term");
    SparseMatrix PtT = t.Pt.transpose();
    SparseMatrix left = (t.P * t.L.matrix).pruned();
    SparseMatrix term = (left * PtT).pruned();
    sum += term;
  }
  DynOperator op = terms.front().L;
  op.matrix = sum * (1.0 / static_cast<double>(terms.size()));
  op.matrix.makeCompressed();
  op.convention = Convention::with_half;
  op.steps = static_cast<int>(terms.size());
  return op;
}

}  // namespace dynlap
