#include "blocklsq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace blocklsq {

Vector spd_solve(const Matrix& a, const Vector& b) {
  auto fact = cholesky(a);
  if (!fact.ok)
    throw std::runtime_error("spd_solve: matrix is not positive definite (pivot " +
                             std::to_string(fact.pivot_index) + ")");
  return cholesky_solve(fact, b);
}

namespace {

// Householder reflector for v[0..n): returns (beta, tau) and overwrites v
// with the reflector vector (v[0] = 1 implied). beta is the resulting
// leading entry. tau == 0 means "skip, already zero".
struct Reflector {
  double beta = 0.0;
  double tau = 0.0;
};

Reflector make_reflector(double* v, std::size_t n) {
  Reflector h;
  double tail_sq = 0.0;
  for (std::size_t i = 1; i < n; ++i) tail_sq += v[i] * v[i];
  const double alpha = v[0];
  if (tail_sq == 0.0) {
    h.beta = alpha;
    h.tau = 0.0;
    return h;
  }
  const double norm = std::sqrt(alpha * alpha + tail_sq);
  h.beta = alpha >= 0.0 ? -norm : norm;
  const double v0 = alpha - h.beta;
  for (std::size_t i = 1; i < n; ++i) v[i] /= v0;
  h.tau = (h.beta - alpha) / h.beta;  // = -v0/beta, in (0, 2]
  return h;
}

}  // namespace

LsqSolution min_norm_lstsq(const Matrix& h_in, const Vector& rhs) {
  const std::size_t m = h_in.rows();
  const std::size_t n = h_in.cols();
  if (rhs.size() != m) throw std::invalid_argument("min_norm_lstsq: rhs length mismatch");

  Matrix a = h_in;      // reduced in place
  Vector c = rhs;       // carries Q^T h
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  double max_col_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    max_col_norm = std::max(max_col_norm, std::sqrt(s));
  }
  const double rank_tol =
      1e-10 * max_col_norm * static_cast<double>(std::max<std::size_t>(1, std::max(m, n)));

  // Left phase: column-pivoted Householder QR, A P = Q [R11 R12; 0 0].
  const std::size_t steps = std::min(m, n);
  std::size_t rank = 0;
  Vector hv(m);
  for (std::size_t t = 0; t < steps; ++t) {
    // pivot on the largest remaining column norm, recomputed for robustness
    std::size_t best = t;
    double best_norm = -1.0;
    for (std::size_t j = t; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = t; i < m; ++i) s += a(i, j) * a(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    best_norm = std::sqrt(std::max(0.0, best_norm));
    if (best_norm <= rank_tol) break;
    if (best != t) {
      for (std::size_t i = 0; i < m; ++i) std::swap(a(i, t), a(i, best));
      std::swap(perm[t], perm[best]);
    }

    const std::size_t len = m - t;
    for (std::size_t i = 0; i < len; ++i) hv[i] = a(t + i, t);
    Reflector refl = make_reflector(hv.data(), len);
    a(t, t) = refl.beta;
    for (std::size_t i = 1; i < len; ++i) a(t + i, t) = 0.0;
    if (refl.tau != 0.0) {
      for (std::size_t j = t + 1; j < n; ++j) {
        double s = a(t, j);
        for (std::size_t i = 1; i < len; ++i) s += hv[i] * a(t + i, j);
        s *= refl.tau;
        a(t, j) -= s;
        for (std::size_t i = 1; i < len; ++i) a(t + i, j) -= s * hv[i];
      }
      double s = c[t];
      for (std::size_t i = 1; i < len; ++i) s += hv[i] * c[t + i];
      s *= refl.tau;
      c[t] -= s;
      for (std::size_t i = 1; i < len; ++i) c[t + i] -= s * hv[i];
    }
    ++rank;
  }

  LsqSolution sol;
  sol.rank = rank;
  sol.unique = (rank == n);
  sol.z_star.assign(n, 0.0);

  // Right phase (rank-deficient only): annihilate R12 with reflectors acting
  // on column i and the tail block [rank, n), giving [R11 R12] = [T 0] Z.
  const std::size_t tail = n - rank;
  std::vector<Vector> z_reflectors;   // each: 1 + tail entries (v0 implied 1)
  std::vector<double> z_taus;
  if (rank > 0 && tail > 0) {
    z_reflectors.reserve(rank);
    z_taus.reserve(rank);
    Vector w(1 + tail);
    for (std::size_t ii = rank; ii-- > 0;) {
      w[0] = a(ii, ii);
      for (std::size_t j = 0; j < tail; ++j) w[1 + j] = a(ii, rank + j);
      Reflector refl = make_reflector(w.data(), 1 + tail);
      a(ii, ii) = refl.beta;
      for (std::size_t j = 0; j < tail; ++j) a(ii, rank + j) = 0.0;
      if (refl.tau != 0.0) {
        for (std::size_t r = 0; r < ii; ++r) {
          double s = a(r, ii);
          for (std::size_t j = 0; j < tail; ++j) s += w[1 + j] * a(r, rank + j);
          s *= refl.tau;
          a(r, ii) -= s;
          for (std::size_t j = 0; j < tail; ++j) a(r, rank + j) -= s * w[1 + j];
        }
      }
      z_reflectors.push_back(w);
      z_taus.push_back(refl.tau);
    }
    std::reverse(z_reflectors.begin(), z_reflectors.end());
    std::reverse(z_taus.begin(), z_taus.end());
  }

  // w1 = T^{-1} c1 by back substitution on the triangular T = a[0:r,0:r].
  Vector w_full(n, 0.0);
  for (std::size_t ii = rank; ii-- > 0;) {
    double s = c[ii];
    for (std::size_t j = ii + 1; j < rank; ++j) s -= a(ii, j) * w_full[j];
    w_full[ii] = s / a(ii, ii);
  }

  // Apply Z^T = G_{r-1} ... G_0 acting right-to-left: u = G_0 u first.
  auto apply_g = [&](Vector& u, std::size_t i) {
    if (z_taus.empty() || z_taus[i] == 0.0) return;
    const Vector& w = z_reflectors[i];
    double s = u[i];
    for (std::size_t j = 0; j < tail; ++j) s += w[1 + j] * u[rank + j];
    s *= z_taus[i];
    u[i] -= s;
    for (std::size_t j = 0; j < tail; ++j) u[rank + j] -= s * w[1 + j];
  };
  if (tail > 0) {
    for (std::size_t i = 0; i < rank; ++i) apply_g(w_full, i);
  }
  for (std::size_t j = 0; j < n; ++j) sol.z_star[perm[j]] = w_full[j];

  // orthonormal kernel basis: columns P Z^T e_{rank+k}
  sol.null_basis = Matrix(n, tail);
  for (std::size_t kcol = 0; kcol < tail; ++kcol) {
    Vector u(n, 0.0);
    u[rank + kcol] = 1.0;
    for (std::size_t i = 0; i < rank; ++i) apply_g(u, i);
    for (std::size_t j = 0; j < n; ++j) sol.null_basis(perm[j], kcol) = u[j];
  }

  // psi from the original data, not the transformed copies
  Vector resid = matvec(h_in, sol.z_star);
  for (std::size_t i = 0; i < m; ++i) resid[i] -= rhs[i];
  sol.psi_opt = 0.5 * dot(resid, resid);
  return sol;
}

double psi_opt_of(const BlockProblem& p) {
  auto [h_mat, h_vec] = assemble_dense(p);
  return min_norm_lstsq(h_mat, h_vec).psi_opt;
}

}  // namespace blocklsq
