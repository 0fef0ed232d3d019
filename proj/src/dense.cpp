#include "blocklsq/dense.hpp"

#include <cmath>
#include <stdexcept>

namespace blocklsq {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(const Vector& x, const Vector& y) {
  return kernels::ops().dot(x.data(), y.data(), x.size());
}

double inf_norm(const Vector& x) {
  return kernels::ops().inf_norm(x.data(), x.size());
}

double inf_norm_diff(const Vector& x, const Vector& y) {
  return kernels::ops().inf_norm_diff(x.data(), y.data(), x.size());
}

void axpy(double a, const Vector& x, Vector& y) {
  kernels::ops().axpy(a, x.data(), y.data(), x.size());
}

Vector matvec(const Matrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  if (a.rows() > 0 && a.cols() > 0)
    kernels::ops().gemv(a.data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

void matvec_t_acc(const Matrix& a, const Vector& x, Vector& y) {
  if (a.rows() > 0 && a.cols() > 0)
    kernels::ops().gemv_t_acc(a.data(), a.rows(), a.cols(), x.data(), y.data());
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  Vector y(a.cols(), 0.0);
  matvec_t_acc(a, x, y);
  return y;
}

namespace {

void gram_acc_unit(Matrix& c, const Matrix& a) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* arow = a.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      if (arow[i] != 0.0) kernels::ops().axpy(arow[i], arow, c.row(i), a.cols());
    }
  }
}

}  // namespace

void gram_acc(Matrix& c, const Matrix& a, double w) {
  if (a.rows() == 0 || a.cols() == 0) return;
  if (w == 1.0) {
    gram_acc_unit(c, a);
    return;
  }
  // accumulate the unweighted Gram matrix first: fl(a_ri * a_rj) is
  // commutative, so the sum is bitwise symmetric, and the weight is
  // applied uniformly afterwards
  Matrix gram(a.cols(), a.cols());
  gram_acc_unit(gram, a);
  for (std::size_t i = 0; i < a.cols(); ++i)
    kernels::ops().axpy(w, gram.row(i), c.row(i), a.cols());
}

double compensated_sum(const double* x, std::size_t n) {
  double s = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s + x[i];
    if (std::fabs(s) >= std::fabs(x[i]))
      comp += (s - t) + x[i];
    else
      comp += (x[i] - t) + s;
    s = t;
  }
  return s + comp;
}

CholeskyResult cholesky(const Matrix& a, double rel_pivot_tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("cholesky: matrix not square");

  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::fabs(a(i, i)));
  if (diag_scale == 0.0) diag_scale = 1.0;
  const double tol = rel_pivot_tol * diag_scale;

  CholeskyResult res;
  res.lower = Matrix(n, n);
  Matrix& l = res.lower;
  const auto& k = kernels::ops();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double s = a(i, j) - k.dot(l.row(i), l.row(j), j);
      l(i, j) = s / l(j, j);
    }
    const double d = a(i, i) - k.dot(l.row(i), l.row(i), i);
    if (!(d > tol)) {
      res.ok = false;
      res.pivot_index = i;
      return res;
    }
    l(i, i) = std::sqrt(d);
  }
  res.ok = true;
  res.upper = l.transposed();
  return res;
}

Vector cholesky_solve(const CholeskyResult& f, const Vector& b) {
  if (!f.ok) throw std::logic_error("cholesky_solve on failed factorization");
  const std::size_t n = f.lower.rows();
  const auto& k = kernels::ops();

  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (b[i] - k.dot(f.lower.row(i), y.data(), i)) / f.lower(i, i);
  }
  Vector x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    const double s = k.dot(f.upper.row(ii) + ii + 1, x.data() + ii + 1, n - ii - 1);
    x[ii] = (y[ii] - s) / f.upper(ii, ii);
  }
  return x;
}

}  // namespace blocklsq
