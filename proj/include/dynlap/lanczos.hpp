#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>

namespace dynlap {

using LinearMap = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

struct LanczosOptions {
  int nev = 4;           // wanted eigenpairs
  int basis = 80;        // Krylov subspace size before a restart
  double tol = 1e-10;    // absolute residual bound ||M x - theta x||
  int max_restarts = 5000;
};

struct LanczosResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns
  Eigen::VectorXd residual_estimates;
  int matvecs = 0;
  int restarts = 0;
  bool converged = false;
};

/// Thick-restart Lanczos with full reorthogonalization for the algebraically
/// largest eigenpairs of a symmetric operator, restricted to the orthogonal
/// complement of the columns of `locked` (assumed orthonormal).
LanczosResult lanczos_largest(const LinearMap& apply, const Eigen::VectorXd& start, const Eigen::MatrixXd& locked,
                              const LanczosOptions& options);

/// Uniform doubles in [0,1) from a fixed mt19937_64 stream; identical on every
/// platform, unlike std::uniform_real_distribution.
Eigen::VectorXd seeded_uniform(Eigen::Index n, std::uint64_t seed);

struct NonsymmetricOptions {
  int nev = 4;
  int block = 12;
  int degree = 24;
  double tol = 1e-9;  // relative change of wanted Ritz values between sweeps
  int max_sweeps = 4000;
  std::uint64_t seed = 7;
};

struct NonsymmetricResult {
  Eigen::VectorXcd values;  // sorted by descending real part
  int sweeps = 0;
  bool converged = false;
};

/// Eigenvalues of largest real part of a general real operator whose spectrum
/// lies near the real segment [lower, upper], by Chebyshev-filtered subspace
/// iteration with Rayleigh-Ritz projection.
NonsymmetricResult nonsymmetric_rightmost(const LinearMap& apply, Eigen::Index n, double lower, double upper,
                                          const NonsymmetricOptions& options);

}  // namespace dynlap
