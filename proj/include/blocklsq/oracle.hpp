#pragma once

#include "blocklsq/dense.hpp"
#include "blocklsq/problem.hpp"

namespace blocklsq {

// Centralized least-squares ground truth for the assembled system.
struct LsqSolution {
  Vector z_star;        // minimum-norm minimizer of 0.5*||Hz-h||^2
  double psi_opt = 0.0; // 0.5*||H z_star - h||^2
  std::size_t rank = 0;
  bool unique = false;  // rank == cols
  Matrix null_basis;    // cols x (cols-rank), orthonormal kernel basis
};

// Solves A x = b for symmetric positive definite A via Cholesky.
// Throws on a non-positive pivot.
Vector spd_solve(const Matrix& a, const Vector& b);

// Minimum-norm least squares via Householder QR with column pivoting
// followed by a complete orthogonal (RZ) reduction of the trapezoid.
// Rank decisions use the tolerance 1e-10 * ||H|| * max(m, n) with ||H||
// taken as the largest column norm.
LsqSolution min_norm_lstsq(const Matrix& h_mat, const Vector& h_vec);

// Optimal cost of the assembled problem, 0.5*||H z* - h||^2.
double psi_opt_of(const BlockProblem& p);

}  // namespace blocklsq
