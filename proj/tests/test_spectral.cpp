#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "dynlap/error.hpp"
#include "dynlap/spectral.hpp"

using namespace dynlap;

namespace {

constexpr double pi = std::numbers::pi;

struct Case {
  Grid grid;
  DensityField u;
  DynOperator op;
};

Case dynamic_case(const DomainSpec& d, const DensitySpec& density, MapKind map, Convention conv, int Q = 400) {
  const Grid g(d);
  const DensityField u = discretize_density(g, density);
  const TransferMatrix P = estimate_transfer_matrix(g, g, MapSpec::single(map, d), Q);
  const DensityField v = pushforward_density(P, u);
  const NormalizedTransfer Pt = normalize_transfer(P, u, v);
  return {g, u,
          assemble_dynamic_laplacian(assemble_weighted_laplacian(g, u), assemble_weighted_laplacian(g, v), P, Pt,
                                     conv)};
}

DomainSpec cylinder(int K = 256, int L = 64) { return {{0.0, 4.0, K, true}, {0.0, 1.0, L, false}}; }

}  // namespace

TEST_CASE("periodic uniform case matches the dense spectrum and the discrete Fourier modes") {
  const DomainSpec d{{0.0, 1.0, 64, true}, {0.0, 0.125, 8, true}};
  const Case c = dynamic_case(d, DensitySpec::uniform(d), MapKind::identity, Convention::with_half, 4);
  const SymmetrizedOperator sym = symmetrize(c.op, c.u);
  EigenOptions opt;
  opt.k = 5;
  const EigenSolution sol = leading_eigenpairs(sym, c.grid, opt);

  const Eigen::MatrixXd S(sym.S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(0.5 * (S + S.transpose()));
  const double norm = sym.norm;
  for (int j = 0; j < 5; ++j) {
    const double gap = (dense.eigenvalues().array() - sol.eigenvalues[j]).abs().minCoeff();
    CHECK(gap < 1e-8 * norm);
  }
  // two-cell difference of exp(i w x): -(sin(w b)/b)^2
  const double b = c.grid.b1();
  const double first = -std::pow(std::sin(2 * pi * b) / b, 2);
  const double second = -std::pow(std::sin(4 * pi * b) / b, 2);
  CHECK(sol.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-10).scale(norm));
  CHECK(sol.eigenvalues[1] == doctest::Approx(first).epsilon(1e-9));
  CHECK(sol.eigenvalues[2] == doctest::Approx(first).epsilon(1e-9));
  CHECK(sol.eigenvalues[3] == doctest::Approx(second).epsilon(1e-9));
  CHECK(sol.eigenvalues[4] == doctest::Approx(second).epsilon(1e-9));
}

TEST_CASE("symmetrization of a u-self-adjoint operator keeps its spectrum") {
  const DomainSpec d{{0.0, 1.0, 8, true}, {0.0, 1.0, 8, true}};
  const Grid g(d);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  Eigen::VectorXd m(64);
  for (int i = 0; i < 64; ++i) m[i] = w(rng);
  const DensityField u(g, m / m.sum());
  const DynOperator L = assemble_weighted_laplacian(g, u);
  const SymmetrizedOperator sym = symmetrize(L, u);
  CHECK(sym.skew_norm < 1e-12 * sym.norm);

  const Eigen::MatrixXd S(sym.S);
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() < 1e-10 * sym.norm);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::EigenSolver<Eigen::MatrixXd> direct{Eigen::MatrixXd(L.matrix)};
  Eigen::VectorXd re = direct.eigenvalues().real();
  std::sort(re.data(), re.data() + re.size());
  CHECK(direct.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-8 * sym.norm);
  CHECK((re - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10 * sym.norm);
}

TEST_CASE("T1 eigenpairs: constant kernel, u-orthonormal, consistent Rayleigh quotients") {
  const DomainSpec d = cylinder();
  const Case c = dynamic_case(d, DensitySpec::sinusoid_x1(d), MapKind::shear_T1, Convention::with_half);
  const SymmetrizedOperator sym = symmetrize(c.op, c.u);
  const EigenSolution sol = leading_eigenpairs(sym, c.grid, EigenOptions{});
  REQUIRE(sol.eigenvalues.size() == 6);
  const double l2 = sol.eigenvalues[1];
  CHECK(l2 < 0.0);
  CHECK(std::abs(sol.eigenvalues[0]) < 1e-8 * std::abs(l2));
  const Eigen::VectorXd phi1 = sol.vectors.col(0);
  CHECK((phi1.array() - phi1.mean()).abs().maxCoeff() < 1e-8 * std::abs(phi1.mean()));

  const Eigen::MatrixXd gram = sol.vectors.transpose() * c.u.u.asDiagonal() * sol.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);

  for (int j = 0; j < 6; ++j) {
    const Eigen::VectorXd f = sol.vectors.col(j);
    const Eigen::VectorXd Lf = c.op.matrix * f;
    const double rq = f.dot(c.u.u.cwiseProduct(Lf)) / f.dot(c.u.u.cwiseProduct(f));
    CHECK(rq == doctest::Approx(sol.eigenvalues[j]).epsilon(1e-6).scale(std::abs(l2)));
    CHECK(sol.residuals[j] < 1e-6 * sym.norm);
  }
  for (int j = 1; j < 6; ++j) CHECK(sol.eigenvalues[j] <= sol.eigenvalues[j - 1] + 1e-9 * std::abs(l2));
  CHECK(sol.eigenvalues[2] / l2 == doctest::Approx(2.272).epsilon(0.03));
  CHECK(sol.eigenvalues[3] / l2 == doctest::Approx(3.841).epsilon(0.03));
}

TEST_CASE("raw eigenvalues are twice the with_half ones with the same eigenvectors") {
  const DomainSpec d = cylinder(128, 32);
  const Case h = dynamic_case(d, DensitySpec::sinusoid_x1(d), MapKind::shear_T1, Convention::with_half, 100);
  const Case r = dynamic_case(d, DensitySpec::sinusoid_x1(d), MapKind::shear_T1, Convention::raw, 100);
  EigenOptions opt;
  opt.k = 3;
  const EigenSolution sh = leading_eigenpairs(symmetrize(h.op, h.u), h.grid, opt);
  const EigenSolution sr = leading_eigenpairs(symmetrize(r.op, r.u), r.grid, opt);
  for (int j = 1; j < 3; ++j) {
    CHECK(sr.eigenvalues[j] / sh.eigenvalues[j] == doctest::Approx(2.0).epsilon(1e-8));
    const double overlap = std::abs(sh.vectors.col(j).dot(h.u.u.cwiseProduct(sr.vectors.col(j))));
    CHECK(overlap == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("nonsymmetric diagnostic agrees with the symmetrized lambda2 on T2") {
  const DomainSpec d = cylinder();
  const Case c = dynamic_case(d, DensitySpec::uniform(d), MapKind::shear_T2, Convention::with_half);
  EigenOptions opt;
  opt.k = 3;
  const EigenSolution sol = leading_eigenpairs(symmetrize(c.op, c.u), c.grid, opt);
  const NonsymmetricResult ns = nonsymmetric_eigenvalues(c.op, 4);
  REQUIRE(ns.converged);
  REQUIRE(ns.values.size() >= 2);
  CHECK(std::abs(ns.values[0].real()) < 1e-6 * std::abs(sol.eigenvalues[1]));
  CHECK(std::abs(ns.values[1].real() - sol.eigenvalues[1]) < 0.05 * std::abs(sol.eigenvalues[1]));
}

TEST_CASE("bad requests are rejected") {
  const DomainSpec d{{0.0, 1.0, 4, true}, {0.0, 1.0, 4, true}};
  const Case c = dynamic_case(d, DensitySpec::uniform(d), MapKind::identity, Convention::with_half, 1);
  const SymmetrizedOperator sym = symmetrize(c.op, c.u);
  EigenOptions opt;
  opt.k = 1;
  CHECK_THROWS_AS(leading_eigenpairs(sym, c.grid, opt), Error);
  opt.k = 17;
  CHECK_THROWS_AS(leading_eigenpairs(sym, c.grid, opt), Error);
}

TEST_CASE("coarse grids still return smooth modes rather than checkerboards") {
  const DomainSpec d{{0.0, 1.0, 16, false}, {0.0, 1.0, 16, false}};
  const Case c = dynamic_case(d, DensitySpec::uniform(d), MapKind::identity, Convention::with_half, 16);
  const SymmetrizedOperator sym = symmetrize(c.op, c.u);
  EigenOptions opt;
  opt.k = 4;
  const EigenSolution sol = leading_eigenpairs(sym, c.grid, opt);
  CHECK(sol.roughness.maxCoeff() < 0.5);

  // Each parity sublattice is an 8-node path with weight 1/(4b^2), whose first
  // nonzero eigenvalue is -sin^2(pi/16)/b^2; the four copies make it fourfold
  // in the dense spectrum. The smooth combination staggers the sublattices by
  // half a cell, so at this resolution it is an eigenvector only approximately.
  const double b = c.grid.b1();
  const double path = -std::pow(std::sin(pi / 16) / b, 2);
  const Eigen::MatrixXd S(sym.S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  int copies = 0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (std::abs(es.eigenvalues()[j] - path) < 1e-9 * sym.norm) ++copies;
  CHECK(copies == 8);  // x1 and x2 directions, four sublattices each
  CHECK(sol.eigenvalues[1] == doctest::Approx(path).epsilon(0.015));
  CHECK(sol.eigenvalues[2] == doctest::Approx(path).epsilon(0.015));
  CHECK(sol.stabilization_weight > opt.stabilization * sym.norm);
}
