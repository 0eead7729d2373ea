#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "dynlap/error.hpp"
#include "dynlap/laplacian.hpp"

using namespace dynlap;

namespace {

DomainSpec cylinder(int K, int L) { return {{0.0, 4.0, K, true}, {0.0, 1.0, L, false}}; }

Eigen::VectorXd random_positive(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v / v.sum();
}

// Ghost-cell oracle: pad each axis by two mirrored cells (0-based f[-1] = f[1],
// f[-2] = f[0]) or wrap, then apply the two-cell difference formula.
Eigen::VectorXd ghost_cell_apply(const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& f) {
  const int K = g.K();
  const int L = g.L();
  auto ghost = [&](int i, int n, bool periodic) {
    if (periodic) return ((i % n) + n) % n;
    if (i == -1) return 1;
    if (i == -2) return 0;
    if (i == n) return n - 2;
    if (i == n + 1) return n - 1;
    return i;
  };
  const double w1 = 1.0 / (4 * g.b1() * g.b1());
  const double w2 = 1.0 / (4 * g.b2() * g.b2());
  Eigen::VectorXd out(g.cell_count());
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const int c = k + K * l;
      double s = 0.0;
      for (int d : {1, -1}) {
        const int uk = ghost(k + d, K, g.periodic1());
        const int fk = ghost(k + 2 * d, K, g.periodic1());
        s += u[uk + K * l] * w1 / u[c] * (f[fk + K * l] - f[c]);
        const int ul = ghost(l + d, L, g.periodic2());
        const int fl = ghost(l + 2 * d, L, g.periodic2());
        s += u[k + K * ul] * w2 / u[c] * (f[k + K * fl] - f[c]);
      }
      out[c] = s;
    }
  return out;
}

}  // namespace

TEST_CASE("stencil_index wraps or reflects") {
  CHECK(stencil_index(-1, 8, true) == 7);
  CHECK(stencil_index(9, 8, true) == 1);
  CHECK(stencil_index(-1, 8, false) == 1);
  CHECK(stencil_index(-2, 8, false) == 0);
  CHECK(stencil_index(8, 8, false) == 6);
  CHECK(stencil_index(9, 8, false) == 7);
  CHECK(stencil_index(3, 8, false) == 3);
}

TEST_CASE("uniform periodic stencil has 1/(4b^2) off-diagonals and zero row sums") {
  const Grid g({{0.0, 1.0, 8, true}, {0.0, 2.0, 8, true}});
  const DensityField u(g, Eigen::VectorXd::Constant(64, 1.0 / 64));
  const DynOperator L = assemble_weighted_laplacian(g, u);
  const double w1 = 1.0 / (4 * g.b1() * g.b1());
  const double w2 = 1.0 / (4 * g.b2() * g.b2());
  CHECK(L.matrix.coeff(g.index(3, 3), g.index(5, 3)) == doctest::Approx(w1));
  CHECK(L.matrix.coeff(g.index(3, 3), g.index(1, 3)) == doctest::Approx(w1));
  CHECK(L.matrix.coeff(g.index(3, 3), g.index(3, 5)) == doctest::Approx(w2));
  CHECK(L.matrix.coeff(g.index(3, 3), g.index(3, 3)) == doctest::Approx(-2 * w1 - 2 * w2));
  CHECK(L.matrix.coeff(g.index(3, 3), g.index(4, 3)) == 0.0);
  CHECK((L.matrix * Eigen::VectorXd::Ones(64)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("uniform reflecting stencil is symmetric and negative semidefinite") {
  const Grid g({{0.0, 1.0, 8, false}, {0.0, 1.0, 8, false}});
  const DensityField u(g, Eigen::VectorXd::Constant(64, 1.0 / 64));
  const DynOperator L = assemble_weighted_laplacian(g, u);
  const Eigen::MatrixXd A(L.matrix);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  CHECK(es.eigenvalues().maxCoeff() < 1e-10);
  CHECK((A * Eigen::VectorXd::Ones(64)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("assembled stencil matches a ghost-cell direct loop") {
  for (bool p1 : {false, true})
    for (bool p2 : {false, true}) {
      const Grid g({{0.0, 1.0, 8, p1}, {0.0, 1.5, 8, p2}});
      const DensityField u(g, random_positive(64, 17));
      const DynOperator L = assemble_weighted_laplacian(g, u);
      const Eigen::VectorXd f = random_positive(64, 29) * 64.0;
      const Eigen::VectorXd direct = ghost_cell_apply(g, u.u, f);
      CHECK((L.matrix * f - direct).cwiseAbs().maxCoeff() < 1e-13 * direct.cwiseAbs().maxCoeff() + 1e-13);
    }
}

TEST_CASE("non-positive densities are rejected") {
  const Grid g({{0.0, 1.0, 4, false}, {0.0, 1.0, 4, false}});
  Eigen::VectorXd u = Eigen::VectorXd::Constant(16, 1.0 / 16);
  u[3] = 0.0;
  CHECK_THROWS_AS(assemble_weighted_laplacian(g, DensityField(g, u)), Error);
}

TEST_CASE("identity dynamics reduce to the static weighted Laplacian") {
  const Grid g(cylinder(64, 16));
  const DensityField u = discretize_density(g, DensitySpec::sinusoid_x1(g.spec()));
  const TransferMatrix P = estimate_transfer_matrix(g, g, MapSpec::identity(g.spec()), 4);
  const DensityField v = pushforward_density(P, u);
  const NormalizedTransfer Pt = normalize_transfer(P, u, v);
  const DynOperator Lmu = assemble_weighted_laplacian(g, u);
  const DynOperator Lnu = assemble_weighted_laplacian(g, v);
  const DynOperator half = assemble_dynamic_laplacian(Lmu, Lnu, P, Pt, Convention::with_half);
  const DynOperator raw = assemble_dynamic_laplacian(Lmu, Lnu, P, Pt, Convention::raw);
  const double scale = Lmu.norm_inf();
  CHECK(SparseMatrix(half.matrix - Lmu.matrix).norm() / scale < 1e-12);
  CHECK(SparseMatrix(raw.matrix - 2.0 * Lmu.matrix).norm() / scale < 1e-12);
  CHECK(half.convention == Convention::with_half);
  CHECK(raw.convention == Convention::raw);
}

TEST_CASE("T1 dynamic Laplacian annihilates constants and is nearly u-self-adjoint") {
  const Grid g(cylinder(256, 64));
  const DensityField u = discretize_density(g, DensitySpec::sinusoid_x1(g.spec()));
  const TransferMatrix P = estimate_transfer_matrix(g, g, MapSpec::single(MapKind::shear_T1, g.spec()), 400);
  const DensityField v = pushforward_density(P, u);
  const NormalizedTransfer Pt = normalize_transfer(P, u, v);
  const DynOperator L = assemble_dynamic_laplacian(assemble_weighted_laplacian(g, u),
                                                   assemble_weighted_laplacian(g, v), P, Pt, Convention::with_half);
  const double norm = L.norm_inf();
  CHECK((L.matrix * Eigen::VectorXd::Ones(g.cell_count())).cwiseAbs().maxCoeff() < 1e-10 * norm);
  const SparseMatrix A = u.u.asDiagonal() * L.matrix;
  const SparseMatrix At = A.transpose();
  const SparseMatrix skew = 0.5 * (A - At);
  double skew_inf = 0.0;
  double a_inf = 0.0;
  for (int i = 0; i < A.outerSize(); ++i) {
    double s = 0.0;
    double t = 0.0;
    for (SparseMatrix::InnerIterator it(skew, i); it; ++it) s += std::abs(it.value());
    for (SparseMatrix::InnerIterator it(A, i); it; ++it) t += std::abs(it.value());
    skew_inf = std::max(skew_inf, s);
    a_inf = std::max(a_inf, t);
  }
  CHECK(skew_inf / a_inf < 0.05);
}

TEST_CASE("multistep averages reduce to known operators") {
  const Grid g(cylinder(32, 8));
  const DensityField u = discretize_density(g, DensitySpec::sinusoid_x1(g.spec()));
  const DynOperator Lmu = assemble_weighted_laplacian(g, u);
  const int n = g.cell_count();
  const StepTerm first{identity_matrix(n), identity_matrix(n), Lmu};

  SUBCASE("one term is the static Laplacian") {
    const DynOperator M = assemble_multistep({first});
    CHECK(SparseMatrix(M.matrix - Lmu.matrix).norm() == 0.0);
  }
  SUBCASE("two terms give the with_half one-step operator") {
    const TransferMatrix P = estimate_transfer_matrix(g, g, MapSpec::single(MapKind::shear_T1, g.spec()), 100);
    const DensityField v = pushforward_density(P, u);
    const NormalizedTransfer Pt = normalize_transfer(P, u, v);
    const DynOperator Lnu = assemble_weighted_laplacian(g, v);
    const DynOperator M = assemble_multistep({first, StepTerm{P.P, Pt.Pt, Lnu}});
    const DynOperator H = assemble_dynamic_laplacian(Lmu, Lnu, P, Pt, Convention::with_half);
    CHECK(SparseMatrix(M.matrix - H.matrix).norm() / H.norm_inf() < 1e-13);
    CHECK(M.steps == 2);
  }
  SUBCASE("three identity steps give the static Laplacian") {
    const DynOperator M = assemble_multistep({first, first, first});
    CHECK(SparseMatrix(M.matrix - Lmu.matrix).norm() / Lmu.norm_inf() < 1e-14);
  }
  CHECK_THROWS_AS(assemble_multistep({}), Error);
}

TEST_CASE("convention names") {
  CHECK(convention_from_name("raw") == Convention::raw);
  CHECK(convention_name(Convention::with_half) == "with_half");
  CHECK_THROWS_AS(convention_from_name("half"), Error);
}
