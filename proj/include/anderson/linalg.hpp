#pragma once

// Matrix-free Krylov machinery on R^N with the Euclidean inner product.
// Operators are symmetric unless stated otherwise.

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace anderson::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using LinearMap = std::function<Vector(const Vector&)>;

struct IterativeOptions {
  double rel_tol = 1e-12;
  std::size_t max_iter = 5000;
};

struct SolveStats {
  std::size_t iterations = 0;
  /// ||A x - b|| / ||b||.
  double rel_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for SPD A with SPD preconditioner M ~ A^{-1}.
SolveStats pcg(const LinearMap& apply_a, const LinearMap& precond, const Vector& b, Vector& x,
               const IterativeOptions& opt);

/// Preconditioned MINRES for symmetric (possibly indefinite) A and SPD M ~ |A|^{-1}.
/// Starts from x = 0.
SolveStats minres(const LinearMap& apply_a, const LinearMap& precond, const Vector& b, Vector& x,
                  const IterativeOptions& opt);

/// Generalized symmetric eigenproblem A x = theta B x, B SPD, restricted to
/// the Euclidean orthogonal complement of `constraints` (orthonormal columns).
struct EigenProblem {
  LinearMap apply_a;
  LinearMap apply_b;      // identity if empty
  LinearMap precondition; // identity if empty
  Matrix constraints;     // N x c, may have zero columns
  std::size_t dimension = 0;
};

struct EigenOptions {
  double tol = 1e-10;
  std::size_t max_iter = 3000;
  std::size_t guard_vectors = 4;
  std::uint64_t seed = 20240607;
};

struct EigenPairs {
  Vector values;   // ascending
  Matrix vectors;  // B-orthonormal columns
  Vector residuals;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lowest `nev` eigenpairs by locally optimal block preconditioned CG.
EigenPairs lobpcg(const EigenProblem& problem, std::size_t nev, const EigenOptions& opt);

/// exp(-t S) v for SPD S by Lanczos with full reorthogonalisation; splits t
/// into substeps until each Krylov approximation converges.
Vector expm_krylov(const LinearMap& apply_s, double t, const Vector& v, double rel_tol = 1e-12,
                   std::size_t max_basis = 120);

/// Dense matrix whose columns are apply(e_k).
Matrix assemble_dense(const LinearMap& apply, std::size_t dimension);

}  // namespace anderson::linalg
