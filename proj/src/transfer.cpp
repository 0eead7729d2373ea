#include "dynlap/transfer.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

#include "dynlap/error.hpp"
#include "dynlap/parallel.hpp"

namespace dynlap {

DensityField::DensityField(Grid g, Eigen::VectorXd masses) : grid(std::move(g)), u(std::move(masses)) {
  if (u.size() != grid.cell_count()) throw Error("transfer", "density field length does not match grid");
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || u[i] < 0.0) throw Error("transfer", "density mass must be finite and nonnegative");
    if (u[i] == 0.0) zero_cells.push_back(static_cast<int>(i));
  }
}

DensityField discretize_density(const Grid& grid, const DensitySpec& spec, int samples_per_cell) {
  if (samples_per_cell < 1) throw Error("transfer", "samples_per_cell must be at least 1");
  const int n = samples_per_cell;
  Eigen::VectorXd u(grid.cell_count());
  parallel_for(static_cast<std::size_t>(grid.cell_count()), [&](std::size_t i) {
    const CellIndex c = grid.cell(static_cast<int>(i));
    double sum = 0.0;
    for (int b = 0; b < n; ++b) {
      const double y = grid.axis2().lo + (c.l + (b + 0.5) / n) * grid.b2();
      for (int a = 0; a < n; ++a) {
        const double x = grid.axis1().lo + (c.k + (a + 0.5) / n) * grid.b1();
        sum += evaluate_density(spec, {x, y});
      }
    }
    u[static_cast<Eigen::Index>(i)] = sum / (n * n) * grid.cell_area();
  });
  for (int i = 0; i < grid.cell_count(); ++i) {
    if (!(u[i] > 0.0)) throw Error("transfer", "cell " + std::to_string(i) + " has nonpositive mass");
  }
  u /= u.sum();
  return DensityField(grid, std::move(u));
}

TransferMatrix estimate_transfer_matrix(const Grid& src, const Grid& dst, const MapSpec& map, int Q) {
  const int q = static_cast<int>(std::lround(std::sqrt(static_cast<double>(Q))));
  if (Q < 1 || q * q != Q) throw Error("transfer", "Q must be a positive perfect square, got " + std::to_string(Q));
  const int n = src.cell_count();
  std::vector<std::vector<std::pair<int, int>>> rows(static_cast<std::size_t>(n));
  std::vector<int> escaped(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const CellIndex c = src.cell(static_cast<int>(i));
    std::map<int, int> counts;
    for (int b = 0; b < q; ++b) {
      const double y = src.axis2().lo + (c.l + (b + 0.5) / q) * src.b2();
      for (int a = 0; a < q; ++a) {
        const double x = src.axis1().lo + (c.k + (a + 0.5) / q) * src.b1();
        const auto j = dst.cell_of(evaluate_map(map, {x, y}));
        if (!j) {
          escaped[i] = 1;
          return;
        }
        ++counts[*j];
      }
    }
    rows[i].assign(counts.begin(), counts.end());
  });
  for (int i = 0; i < n; ++i) {
    if (escaped[static_cast<std::size_t>(i)])
      throw Error("transfer", "test point escaped target grid from cell " + std::to_string(i));
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (auto [j, cnt] : rows[static_cast<std::size_t>(i)])
      trip.emplace_back(i, j, static_cast<double>(cnt) / Q);
  TransferMatrix t{SparseMatrix(n, dst.cell_count()), Q, src, dst};
  t.P.setFromTriplets(trip.begin(), trip.end());
  t.P.makeCompressed();
  return t;
}

DensityField pushforward_density(const TransferMatrix& P, const DensityField& u) {
  if (P.P.rows() != u.u.size()) throw Error("transfer", "density length does not match transfer matrix rows");
  Eigen::VectorXd v = P.P.transpose() * u.u;
  return DensityField(P.target, std::move(v));
}

NormalizedTransfer normalize_transfer(const TransferMatrix& P, const DensityField& u, const DensityField& v) {
  if (P.P.rows() != u.u.size() || P.P.cols() != v.u.size())
    throw Error("transfer", "dimension mismatch in normalize_transfer");
  for (Eigen::Index j = 0; j < v.u.size(); ++j) {
    if (!(v.u[j] > 0.0))
      throw Error("transfer", "target cell " + std::to_string(j) + " has zero pushed-forward mass");
  }
  const Eigen::VectorXd pv = P.P.transpose() * u.u;
  const double gap = (pv - v.u).cwiseAbs().maxCoeff();
  if (gap > 1e-10) throw Error("transfer", "v is not P^T u (max deviation " + std::to_string(gap) + ")");
  SparseMatrix Pt = P.P;
  for (int i = 0; i < Pt.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(Pt, i); it; ++it) it.valueRef() *= u.u[i] / v.u[it.col()];
  return NormalizedTransfer{std::move(Pt)};
}

Eigen::VectorXd push_forward(const NormalizedTransfer& Pt, const Eigen::VectorXd& f) {
  return Pt.Pt.transpose() * f;
}

Eigen::VectorXd pull_back(const TransferMatrix& P, const Eigen::VectorXd& g) { return P.P * g; }

TransferMatrix chain_transfer(const std::vector<TransferMatrix>& steps) {
  if (steps.empty()) throw Error("transfer", "empty transfer chain");
  TransferMatrix out = steps.front();
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i].P.rows() != out.P.cols()) throw Error("transfer", "transfer chain dimension mismatch");
    out.P = (out.P * steps[i].P).pruned();
    out.target = steps[i].target;
  }
  return out;
}

SparseMatrix identity_matrix(int n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

void write_triplets(std::ostream& os, const SparseMatrix& m) {
  char buf[96];
  for (int i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, static_cast<int>(it.col()), it.value());
      os << buf;
    }
}

SparseMatrix read_triplets(std::istream& is, int rows, int cols) {
  std::vector<Eigen::Triplet<double>> trip;
  int i = 0;
  int j = 0;
  double v = 0.0;
  while (is >> i >> j >> v) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) throw Error("transfer", "triplet index out of range");
    trip.emplace_back(i, j, v);
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace dynlap
