#include "dynlap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dynlap/error.hpp"

namespace dynlap {

namespace {

double row_abs_max(const SparseMatrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.outerSize(); ++i) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

SparseMatrix neighbour_average(const Grid& grid) {
  const int K = grid.K();
  const int L = grid.L();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(grid.cell_count()) * 4);
  auto step = [](int i, int d, int n, bool periodic) {
    const int j = i + d;
    if (periodic) return (j + n) % n;
    return (j < 0 || j >= n) ? i : j;
  };
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const int r = grid.index(k, l);
      trip.emplace_back(r, grid.index(step(k, 1, K, grid.periodic1()), l), 0.25);
      trip.emplace_back(r, grid.index(step(k, -1, K, grid.periodic1()), l), 0.25);
      trip.emplace_back(r, grid.index(k, step(l, 1, L, grid.periodic2())), 0.25);
      trip.emplace_back(r, grid.index(k, step(l, -1, L, grid.periodic2())), 0.25);
    }
  SparseMatrix N(grid.cell_count(), grid.cell_count());
  N.setFromTriplets(trip.begin(), trip.end());
  return N;
}

}  // namespace

SymmetrizedOperator symmetrize(const DynOperator& op, const DensityField& u) {
  const auto n = op.matrix.rows();
  if (u.u.size() != n) throw Error("spectral", "density length does not match operator");
  if ((u.u.array() <= 0.0).any()) throw Error("spectral", "symmetrization needs a strictly positive density");
  SymmetrizedOperator out;
  out.sqrt_u = u.u.cwiseSqrt();
  out.inv_sqrt_u = out.sqrt_u.cwiseInverse();
  SparseMatrix A = out.sqrt_u.asDiagonal() * op.matrix * out.inv_sqrt_u.asDiagonal();
  SparseMatrix At = A.transpose();
  out.S = (0.5 * (A + At)).pruned();
  out.S.makeCompressed();
  SparseMatrix skew = 0.5 * (A - At);
  out.skew_norm = row_abs_max(skew);
  out.norm = row_abs_max(out.S);
  out.convention = op.convention;
  return out;
}

SparseMatrix roughness_penalty(const Grid& grid, const Eigen::VectorXd& sqrt_u) {
  const int n = grid.cell_count();
  if (sqrt_u.size() != n) throw Error("spectral", "weight length does not match grid");
  SparseMatrix I(n, n);
  I.setIdentity();
  SparseMatrix G = sqrt_u.asDiagonal() * (I - neighbour_average(grid)) * sqrt_u.cwiseInverse().asDiagonal();
  SparseMatrix Gt = G.transpose();
  SparseMatrix B = (Gt * G).pruned();
  B.makeCompressed();
  return B;
}

double roughness(const Grid& grid, const Eigen::VectorXd& f) {
  const double nf = f.norm();
  if (nf == 0.0) return 0.0;
  const SparseMatrix N = neighbour_average(grid);
  return (f - N * f).norm() / nf;
}

namespace {

EigenSolution solve_stabilized(const SymmetrizedOperator& sym, const Grid& grid, const EigenOptions& options,
                               double weight) {
  const auto n = sym.S.rows();
  const int k = options.k;
  EigenSolution sol;
  sol.stabilization_weight = weight;
  SparseMatrix Sst = sym.S;
  if (sol.stabilization_weight > 0.0) Sst = (sym.S - sol.stabilization_weight * roughness_penalty(grid, sym.sqrt_u)).pruned();
  const double shift = row_abs_max(Sst);
  const double scale = std::max(sym.norm, 1e-300);
  const double tol_abs = options.tol * scale;

  const Eigen::VectorXd q0 = sym.sqrt_u / sym.sqrt_u.norm();
  sol.kernel_residual = (sym.S * q0).norm() / scale;
  const bool lock_kernel = sol.kernel_residual <= 1e-9;

  Eigen::MatrixXd locked(n, lock_kernel ? 1 : 0);
  if (lock_kernel) locked.col(0) = q0;
  const int nev = lock_kernel ? k - 1 : k;

  LanczosOptions lo;
  lo.nev = nev;
  lo.basis = options.basis > 0 ? options.basis : std::max(60, 4 * k + 20);
  lo.tol = tol_abs;
  const LinearMap apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.noalias() = Sst * x;
    y += shift * x;
  };

  Eigen::VectorXd found_vals;
  Eigen::MatrixXd found_vecs(n, 0);
  for (int pass = 0; pass < std::max(1, options.max_passes); ++pass) {
    Eigen::MatrixXd lock(n, locked.cols() + found_vecs.cols());
    lock << locked, found_vecs;
    if (lock.cols() + nev > n) break;
    const Eigen::VectorXd start =
        seeded_uniform(n, options.seed + static_cast<std::uint64_t>(pass)).array() - 0.5;
    const LanczosResult r = lanczos_largest(apply, start, lock, lo);
    sol.matvecs += r.matvecs;
    sol.passes = pass + 1;
    if (!r.converged) {
      std::ostringstream os;
      os << "Lanczos did not converge after " << r.restarts << " restarts; residual estimates:";
      for (Eigen::Index i = 0; i < r.residual_estimates.size(); ++i) os << " " << r.residual_estimates[i];
      os << " (bound " << tol_abs << ")";
      throw Error("spectral", os.str());
    }
    const Eigen::VectorXd vals = r.values.array() - shift;
    if (pass == 0) {
      found_vals = vals;
      found_vecs = r.vectors;
      continue;
    }
    // Anything above the current cut-off is a missed copy of a repeated eigenvalue.
    const double cutoff = found_vals.minCoeff() + tol_abs;
    std::vector<int> entering;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      if (vals[i] > cutoff) entering.push_back(static_cast<int>(i));
    if (entering.empty()) break;
    const Eigen::Index total = found_vals.size() + static_cast<Eigen::Index>(entering.size());
    Eigen::VectorXd all_vals(total);
    Eigen::MatrixXd all_vecs(n, total);
    all_vals.head(found_vals.size()) = found_vals;
    all_vecs.leftCols(found_vecs.cols()) = found_vecs;
    for (std::size_t e = 0; e < entering.size(); ++e) {
      all_vals[found_vals.size() + static_cast<Eigen::Index>(e)] = vals[entering[e]];
      all_vecs.col(found_vecs.cols() + static_cast<Eigen::Index>(e)) = r.vectors.col(entering[e]);
    }
    std::vector<int> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return all_vals[a] > all_vals[b]; });
    found_vals.resize(nev);
    found_vecs.resize(n, nev);
    for (int i = 0; i < nev; ++i) {
      found_vals[i] = all_vals[order[static_cast<std::size_t>(i)]];
      found_vecs.col(i) = all_vecs.col(order[static_cast<std::size_t>(i)]);
    }
  }

  Eigen::MatrixXd Y(n, k);
  if (lock_kernel) {
    Y.col(0) = q0;
    Y.rightCols(nev) = found_vecs;
  } else {
    Y = found_vecs;
  }
  // Final clean-up: orthonormalize in order, then order by stabilized value.
  for (int i = 0; i < k; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) Y.col(i) -= Y.col(j).dot(Y.col(i)) * Y.col(j);
    Y.col(i).normalize();
  }
  Eigen::VectorXd theta(k);
  for (int i = 0; i < k; ++i) theta[i] = Y.col(i).dot(Sst * Y.col(i));
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin() + (lock_kernel ? 1 : 0), order.end(),
                   [&](int a, int b) { return theta[a] > theta[b]; });

  sol.eigenvalues.resize(k);
  sol.stabilized_values.resize(k);
  sol.residuals.resize(k);
  sol.roughness.resize(k);
  sol.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd y = Y.col(order[static_cast<std::size_t>(i)]);
    Eigen::Index imax = 0;
    y.cwiseAbs().maxCoeff(&imax);
    if (y[imax] < 0) y = -y;
    const Eigen::VectorXd Sy = Sst * y;
    sol.stabilized_values[i] = y.dot(Sy);
    sol.residuals[i] = (Sy - sol.stabilized_values[i] * y).norm();
    sol.eigenvalues[i] = y.dot(sym.S * y);
    sol.vectors.col(i) = sym.inv_sqrt_u.cwiseProduct(y);
    sol.roughness[i] = roughness(grid, sol.vectors.col(i));
  }
  sol.operator_residuals = Eigen::VectorXd::Constant(k, std::nan(""));
  return sol;
}

}  // namespace

EigenSolution leading_eigenpairs(const SymmetrizedOperator& sym, const Grid& grid, const EigenOptions& options) {
  const auto n = sym.S.rows();
  if (options.k < 2) throw Error("spectral", "need k >= 2 eigenpairs");
  if (options.k > n) throw Error("spectral", "k exceeds matrix dimension");
  if (grid.cell_count() != n) throw Error("spectral", "grid does not match operator");

  // On coarse grids the wanted smooth eigenvalues are not small next to ||S||,
  // so a fixed penalty can leave checkerboard modes on top. Raise it until
  // every returned vector is smooth.
  double weight = options.stabilization * sym.norm;
  EigenSolution sol;
  for (int attempt = 0;; ++attempt) {
    sol = solve_stabilized(sym, grid, options, weight);
    const bool rough = sol.roughness.tail(options.k - 1).maxCoeff() > options.roughness_limit;
    if (!rough || weight <= 0.0 || attempt >= options.max_escalations) break;
    weight *= 4.0;
  }
  return sol;
}

void attach_operator_residuals(EigenSolution& sol, const DynOperator& op) {
  const auto k = sol.vectors.cols();
  sol.operator_residuals.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd phi = sol.vectors.col(i);
    sol.operator_residuals[i] = (op.matrix * phi - sol.eigenvalues[i] * phi).norm();
  }
}

NonsymmetricResult nonsymmetric_eigenvalues(const DynOperator& op, int nev, std::uint64_t seed) {
  double lower = 0.0;
  double upper = 0.0;
  for (int i = 0; i < op.matrix.outerSize(); ++i) {
    double diag = 0.0;
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(op.matrix, i); it; ++it) {
      if (it.col() == i)
        diag += it.value();
      else
        off += std::abs(it.value());
    }
    lower = std::min(lower, diag - off);
    upper = std::max(upper, diag + off);
  }
  NonsymmetricOptions o;
  o.nev = nev;
  o.seed = seed;
  o.block = std::max(12, 3 * nev);
  const LinearMap apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y.noalias() = op.matrix * x; };
  return nonsymmetric_rightmost(apply, op.matrix.rows(), lower, upper, o);
}

}  // namespace dynlap
