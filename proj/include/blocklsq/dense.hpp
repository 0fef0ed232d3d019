#pragma once

#include <cstddef>
#include <vector>

#include "blocklsq/kernels.hpp"

namespace blocklsq {

using Vector = std::vector<double>;

// Row-major dense matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool operator==(const Matrix& other) const = default;

  Matrix transposed() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(const Vector& x, const Vector& y);
double inf_norm(const Vector& x);
double inf_norm_diff(const Vector& x, const Vector& y);
// y += a*x
void axpy(double a, const Vector& x, Vector& y);

Vector matvec(const Matrix& a, const Vector& x);
// y += A^T x
void matvec_t_acc(const Matrix& a, const Vector& x, Vector& y);
Vector matvec_t(const Matrix& a, const Vector& x);

// c += w * a^T a   (c is cols x cols, symmetric accumulation done densely)
void gram_acc(Matrix& c, const Matrix& a, double w);

// Exact sum of a list of doubles via Neumaier compensation, rounded once.
double compensated_sum(const double* x, std::size_t n);

// Cholesky factorization A = L L^T of a symmetric matrix. Fails (ok=false,
// pivot_index set) when a pivot drops at or below rel_pivot_tol times the
// largest diagonal entry of A. The transposed factor is kept alongside so
// both triangular solves run on contiguous rows.
struct CholeskyResult {
  bool ok = false;
  std::size_t pivot_index = 0;
  Matrix lower;
  Matrix upper;
};

CholeskyResult cholesky(const Matrix& a, double rel_pivot_tol = 1e-12);
Vector cholesky_solve(const CholeskyResult& f, const Vector& b);

}  // namespace blocklsq
