#include "dynlap/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dynlap/error.hpp"

namespace dynlap {

namespace {

void project_out(const Eigen::MatrixXd& basis, Eigen::VectorXd& w) {
  if (basis.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) w.noalias() -= basis * (basis.transpose() * w);
}

}  // namespace

Eigen::VectorXd seeded_uniform(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return v;
}

LanczosResult lanczos_largest(const LinearMap& apply, const Eigen::VectorXd& start, const Eigen::MatrixXd& locked,
                              const LanczosOptions& options) {
  const Eigen::Index n = start.size();
  const Eigen::Index free_dim = n - locked.cols();
  const int nev = options.nev;
  if (nev < 1) throw Error("spectral", "Lanczos needs at least one wanted eigenpair");
  if (nev > free_dim) throw Error("spectral", "more eigenpairs requested than the matrix dimension allows");
  const int m = static_cast<int>(std::min<Eigen::Index>(std::max(options.basis, nev + 8), free_dim));

  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd w(n);
  LanczosResult result;

  Eigen::VectorXd v = start;
  project_out(locked, v);
  if (v.norm() == 0.0) throw Error("spectral", "Lanczos start vector lies in the locked subspace");
  V.col(0) = v / v.norm();

  std::uint64_t refill_seed = 0x5eed;
  int kept = 0;
  double beta = 0.0;
  Eigen::VectorXd theta;
  Eigen::MatrixXd Y;
  for (;;) {
    for (int j = kept; j < m; ++j) {
      apply(V.col(j), w);
      ++result.matvecs;
      auto Vj = V.leftCols(j + 1);
      Eigen::VectorXd h = Vj.transpose() * w;
      w.noalias() -= Vj * h;
      const Eigen::VectorXd h2 = Vj.transpose() * w;
      w.noalias() -= Vj * h2;
      h += h2;
      project_out(locked, w);
      H.col(j).head(j + 1) = h;
      H.row(j).head(j + 1) = h.transpose();
      beta = w.norm();
      if (beta <= 1e-14 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
        // Invariant subspace: continue with a fresh direction, decoupled from the basis.
        w = seeded_uniform(n, refill_seed++).array() - 0.5;
        project_out(locked, w);
        for (int pass = 0; pass < 2; ++pass) w.noalias() -= Vj * (Vj.transpose() * w);
        beta = 0.0;
        V.col(j + 1) = w / w.norm();
      } else {
        V.col(j + 1) = w / beta;
      }
      if (j + 1 < m) {
        H(j + 1, j) = beta;
        H(j, j + 1) = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    // ascending -> descending
    theta = es.eigenvalues().reverse();
    Y = es.eigenvectors().rowwise().reverse();
    Eigen::VectorXd res = (beta * Y.row(m - 1).transpose()).cwiseAbs();

    bool done = true;
    for (int i = 0; i < nev; ++i)
      if (res[i] > options.tol) done = false;
    if (done || result.restarts >= options.max_restarts || m == free_dim) {
      result.converged = done || m == free_dim;
      result.values = theta.head(nev);
      result.vectors = V.leftCols(m) * Y.leftCols(nev);
      result.residual_estimates = res.head(nev);
      return result;
    }

    kept = std::min(m - 1, nev + std::max(1, (m - nev) / 2));
    const Eigen::MatrixXd rotated = V.leftCols(m) * Y.leftCols(kept);
    V.leftCols(kept) = rotated;
    V.col(kept) = V.col(m);
    H.setZero();
    for (int i = 0; i < kept; ++i) H(i, i) = theta[i];
    ++result.restarts;
  }
}

NonsymmetricResult nonsymmetric_rightmost(const LinearMap& apply, Eigen::Index n, double lower, double upper,
                                          const NonsymmetricOptions& options) {
  const int p = std::max(options.block, options.nev + 2);
  if (p > n) throw Error("spectral", "block size exceeds matrix dimension");
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < p; ++i) X.col(i) = seeded_uniform(n, options.seed + static_cast<std::uint64_t>(i)).array() - 0.5;

  Eigen::VectorXd tmp(n);
  auto apply_block = [&](const Eigen::MatrixXd& in, Eigen::MatrixXd& out) {
    out.resize(n, in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      apply(in.col(c), tmp);
      out.col(c) = tmp;
    }
  };
  auto orthonormal = [&](const Eigen::MatrixXd& in) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(in);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(n, in.cols()));
  };
  auto ritz = [&](const Eigen::MatrixXd& Q) {
    Eigen::MatrixXd AQ;
    apply_block(Q, AQ);
    const Eigen::MatrixXd Hs = Q.transpose() * AQ;
    Eigen::EigenSolver<Eigen::MatrixXd> es(Hs, false);
    Eigen::VectorXcd vals = es.eigenvalues();
    std::vector<std::complex<double>> sorted(vals.data(), vals.data() + vals.size());
    std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) {
      if (a.real() != b.real()) return a.real() > b.real();
      return a.imag() > b.imag();
    });
    return Eigen::VectorXcd(Eigen::Map<Eigen::VectorXcd>(sorted.data(), static_cast<Eigen::Index>(sorted.size())));
  };

  NonsymmetricResult result;
  X = orthonormal(X);
  Eigen::VectorXcd prev = ritz(X);
  const double width = upper - lower;
  Eigen::MatrixXd Y0, Y1, Y2, AY;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const double cut = std::max(lower + 1e-3 * width, std::min(prev[p - 1].real(), upper - 1e-3 * width));
    const double e = (cut - lower) / 2.0;
    const double c = (cut + lower) / 2.0;
    Y0 = X;
    apply_block(Y0, AY);
    Y1 = (AY - c * Y0) / e;
    for (int d = 2; d <= options.degree; ++d) {
      apply_block(Y1, AY);
      Y2 = 2.0 * (AY - c * Y1) / e - Y0;
      Y0 = std::move(Y1);
      Y1 = std::move(Y2);
    }
    X = orthonormal(Y1);
    const Eigen::VectorXcd now = ritz(X);
    result.sweeps = sweep;
    double change = 0.0;
    for (int i = 0; i < options.nev; ++i) change = std::max(change, std::abs(now[i] - prev[i]));
    prev = now;
    if (change <= options.tol * width) {
      result.converged = true;
      break;
    }
  }
  result.values = prev.head(options.nev);
  return result;
}

}  // namespace dynlap
