#include "dynlap/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dynlap/error.hpp"
#include "dynlap/lanczos.hpp"
#include "dynlap/parallel.hpp"

namespace dynlap {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace

double Kernel::operator()(double s) const {
  if (!(s >= 0.0) || s >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return profile == KernelProfile::biweight ? a * q * q : a * q;
}

Kernel make_kernel(KernelProfile profile) {
  Kernel k;
  k.profile = profile;
  // 2 pi a int_0^1 r (1-r^2)^p dr = 1
  k.a = profile == KernelProfile::biweight ? 3.0 / kPi : 2.0 / kPi;
  k.c = kernel_second_moment(k);
  return k;
}

KernelProfile kernel_profile_from_name(const std::string& name) {
  if (name == "epanechnikov") return KernelProfile::epanechnikov;
  if (name == "biweight") return KernelProfile::biweight;
  throw Error("mollify", "unknown kernel profile '" + name + "' (expected epanechnikov or biweight)");
}

std::string kernel_profile_name(KernelProfile p) {
  return p == KernelProfile::biweight ? "biweight" : "epanechnikov";
}

KernelMoments kernel_moments(const Kernel& k, double eps, int radial_nodes, int angular_nodes) {
  std::vector<double> r;
  std::vector<double> wr;
  gauss_legendre(radial_nodes, r, wr);
  KernelMoments m;
  const double dth = 2.0 * kPi / angular_nodes;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double rho = eps * r[i];
    // Q_eps(rho) = Q(rho/eps)/eps^2, area element rho drho dtheta with drho = eps dr
    const double radial = wr[i] * eps * rho * k(r[i]) / (eps * eps);
    for (int j = 0; j < angular_nodes; ++j) {
      const double th = (j + 0.5) * dth;
      const double x = rho * std::cos(th);
      const double y = rho * std::sin(th);
      const double w = radial * dth;
      m.mass += w;
      m.xx += w * x * x;
      m.xy += w * x * y;
      m.yy += w * y * y;
    }
  }
  return m;
}

double kernel_second_moment(const Kernel& k) { return kernel_moments(k).xx; }

double expansion_constant(const Kernel& k) { return 2.0 * k.c; }

DiffusionMatrix build_diffusion_matrix(const Grid& g, const Kernel& k, double eps) {
  const double floor = 2.0 * std::max(g.b1(), g.b2());
  if (!(eps >= floor * (1.0 - 1e-12)))
    throw Error("mollify", "eps = " + std::to_string(eps) + " is below two cell sides (" + std::to_string(floor) +
                               "); refine the grid or use a larger eps");
  if ((g.periodic1() && !(eps < 0.5 * g.length1())) || (g.periodic2() && !(eps < 0.5 * g.length2())))
    throw Error("mollify", "eps must stay below half of every periodic length");

  const int r1 = static_cast<int>(std::ceil(eps / g.b1()));
  const int r2 = static_cast<int>(std::ceil(eps / g.b2()));
  const int n = g.cell_count();
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const CellIndex c = g.cell(static_cast<int>(i));
    auto& row = rows[i];
    for (int dl = -r2; dl <= r2; ++dl) {
      int l = c.l + dl;
      if (g.periodic2()) l = ((l % g.L()) + g.L()) % g.L();
      else if (l < 0 || l >= g.L()) continue;
      for (int dk = -r1; dk <= r1; ++dk) {
        int kk = c.k + dk;
        if (g.periodic1()) kk = ((kk % g.K()) + g.K()) % g.K();
        else if (kk < 0 || kk >= g.K()) continue;
        const double w = k(std::hypot(dk * g.b1(), dl * g.b2()) / eps) / (eps * eps) * g.cell_area();
        if (w > 0.0) row.emplace_back(g.index(kk, l), w);
      }
    }
  });

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  if (g.periodic1() && g.periodic2()) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& e : rows[static_cast<std::size_t>(i)]) s += e.second;
      scale[i] = 1.0 / s;
    }
  } else {
    // Symmetric Sinkhorn: find d > 0 with d_i sum_j K_ij d_j = 1.
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd kd(n);
    for (int it = 0; it < 20000; ++it) {
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& e : rows[static_cast<std::size_t>(i)]) s += e.second * d[e.first];
        kd[i] = s;
      }
      const double dev = (d.array() * kd.array() - 1.0).abs().maxCoeff();
      if (dev < 1e-14) break;
      d = (d.array() / kd.array()).sqrt();
    }
    scale = d;
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (const auto& e : rows[static_cast<std::size_t>(i)]) {
      const double w = (g.periodic1() && g.periodic2()) ? e.second * scale[i] : scale[i] * e.second * scale[e.first];
      trip.emplace_back(i, e.first, w);
    }
  DiffusionMatrix out;
  out.D.resize(n, n);
  out.D.setFromTriplets(trip.begin(), trip.end());
  out.D.makeCompressed();
  out.eps = eps;
  return out;
}

MollifiedOperator mollified_operator(const DiffusionMatrix& after, const DiffusionMatrix& before,
                                     const TransferMatrix& P, const DensityField& u) {
  const Eigen::Index ns = P.P.rows();
  const Eigen::Index nt = P.P.cols();
  if (before.D.rows() != ns || after.D.rows() != nt || u.u.size() != ns)
    throw Error("mollify", "diffusion, transfer and density sizes are inconsistent");

  const SparseMatrix PT = P.P.transpose();
  const SparseMatrix Du = before.D * u.u.asDiagonal();
  const SparseMatrix inner = PT * Du;
  const SparseMatrix forward = after.D * inner;  // P_eps(. u)
  Eigen::VectorXd v = forward * Eigen::VectorXd::Ones(ns);
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (!(v[j] > 0.0)) throw Error("mollify", "P_eps u vanishes at target cell " + std::to_string(j));

  MollifiedOperator out;
  out.eps = after.eps;
  out.v_eps = v;
  out.L = v.cwiseInverse().asDiagonal() * forward;
  const SparseMatrix back = P.P * after.D;
  out.Lstar = before.D * back;
  out.L.makeCompressed();
  out.Lstar.makeCompressed();
  return out;
}

SingularPairs leading_singular_pairs(const MollifiedOperator& op, const DensityField& u, int count) {
  const Eigen::VectorXd s = u.u.cwiseSqrt();
  const Eigen::VectorXd is = s.cwiseInverse();
  LinearMap apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const Eigen::VectorXd f = is.cwiseProduct(x);
    const Eigen::VectorXd g = op.L * f;
    y = s.cwiseProduct(op.Lstar * g);
  };
  LanczosOptions lo;
  lo.nev = count;
  lo.basis = std::max(40, 4 * count + 20);
  lo.tol = 1e-13;
  const LanczosResult r = lanczos_largest(apply, seeded_uniform(s.size(), 20240607), Eigen::MatrixXd(s.size(), 0), lo);
  if (!r.converged) throw Error("mollify", "singular value iteration did not converge");
  SingularPairs out;
  out.sigma = r.values.cwiseMax(0.0).cwiseSqrt();
  out.right.resize(s.size(), r.values.size());
  for (Eigen::Index j = 0; j < r.values.size(); ++j) {
    Eigen::VectorXd f = is.cwiseProduct(r.vectors.col(j));
    f /= std::sqrt(f.cwiseAbs2().dot(u.u));
    Eigen::Index imax = 0;
    f.cwiseAbs().maxCoeff(&imax);
    if (f[imax] < 0.0) f = -f;
    out.right.col(j) = f;
  }
  return out;
}

CellMask interior_mask(const Grid& g, double margin) {
  return [g, margin](int cell) {
    const Point p = g.center(cell);
    if (!g.periodic1() && (p.x1 - g.axis1().lo <= margin || g.axis1().hi - p.x1 <= margin)) return false;
    if (!g.periodic2() && (p.x2 - g.axis2().lo <= margin || g.axis2().hi - p.x2 <= margin)) return false;
    return true;
  };
}

CellMask x2_band_mask(const Grid& g, double lo, double hi) {
  return [g, lo, hi](int cell) {
    const double x2 = g.center(cell).x2;
    return x2 > lo && x2 < hi;
  };
}

std::vector<DefectRow> convergence_defect(const Eigen::VectorXd& f, const std::vector<MollifiedOperator>& ops,
                                          const DynOperator& delta, double c, const CellMask& mask) {
  if (delta.convention != Convention::with_half) throw Error("mollify", "defect expects the with_half operator");
  const Eigen::VectorXd target = c * (delta.matrix * f);
  std::vector<DefectRow> out(ops.size());
  parallel_for(ops.size(), [&](std::size_t i) {
    const MollifiedOperator& op = ops[i];
    const Eigen::VectorXd g = op.L * f;
    const Eigen::VectorXd r = (op.Lstar * g - f) / (op.eps * op.eps) - target;
    double e = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j)
      if (mask(static_cast<int>(j))) e = std::max(e, std::abs(r[j]));
    out[i] = DefectRow{op.eps, e};
  });
  return out;
}

}  // namespace dynlap
