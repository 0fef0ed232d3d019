#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blocklsq/kernels.hpp"
#include "blocklsq/rng.hpp"

using namespace blocklsq;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.next_pm1();
  return v;
}

long double dot_reference(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += static_cast<long double>(x[i]) * static_cast<long double>(y[i]);
  return s;
}

double abs_sum_products(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] * y[i]);
  return s;
}

}  // namespace

TEST_CASE("scalar kernels match a long-double reference") {
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 64u, 65u, 257u}) {
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);
    const double got = kernels::scalar_ops.dot(x.data(), y.data(), n);
    const double ref = static_cast<double>(dot_reference(x, y));
    CHECK(std::fabs(got - ref) <= 1e-13 * (1.0 + abs_sum_products(x, y)));
  }
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::cpu_has_avx2()) return;
  Rng rng(12);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 33u, 64u, 100u, 257u}) {
    const auto x = random_vec(rng, n, 3.0);
    const auto y = random_vec(rng, n, 2.0);

    const double tol = 1e-13 * (1.0 + abs_sum_products(x, y));
    CHECK(std::fabs(kernels::avx2_ops.dot(x.data(), y.data(), n) -
                    kernels::scalar_ops.dot(x.data(), y.data(), n)) <= tol);

    // max of absolute values is computed exactly by both paths
    CHECK(kernels::avx2_ops.inf_norm(x.data(), n) == kernels::scalar_ops.inf_norm(x.data(), n));
    CHECK(kernels::avx2_ops.inf_norm_diff(x.data(), y.data(), n) ==
          kernels::scalar_ops.inf_norm_diff(x.data(), y.data(), n));

    auto ys = y;
    auto yv = y;
    kernels::scalar_ops.axpy(0.7, x.data(), ys.data(), n);
    kernels::avx2_ops.axpy(0.7, x.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(ys[i] - yv[i]) <= 1e-15 * (1.0 + std::fabs(ys[i])));
  }
}

TEST_CASE("avx2 gemv agrees with the scalar reference") {
  if (!kernels::cpu_has_avx2()) return;
  Rng rng(13);
  for (std::size_t rows : {1u, 2u, 5u, 16u, 33u}) {
    for (std::size_t cols : {1u, 3u, 4u, 17u, 40u}) {
      const auto a = random_vec(rng, rows * cols);
      const auto x = random_vec(rng, cols);
      const auto xt = random_vec(rng, rows);

      std::vector<double> ys(rows), yv(rows);
      kernels::scalar_ops.gemv(a.data(), rows, cols, x.data(), ys.data());
      kernels::avx2_ops.gemv(a.data(), rows, cols, x.data(), yv.data());
      for (std::size_t r = 0; r < rows; ++r)
        CHECK(std::fabs(ys[r] - yv[r]) <= 1e-13 * (1.0 + static_cast<double>(cols)));

      std::vector<double> zs(cols, 0.5), zv(cols, 0.5);
      kernels::scalar_ops.gemv_t_acc(a.data(), rows, cols, xt.data(), zs.data());
      kernels::avx2_ops.gemv_t_acc(a.data(), rows, cols, xt.data(), zv.data());
      for (std::size_t c = 0; c < cols; ++c)
        CHECK(std::fabs(zs[c] - zv[c]) <= 1e-13 * (1.0 + static_cast<double>(rows)));
    }
  }
}
#endif

TEST_CASE("isa selection honors explicit overrides") {
  kernels::select_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  CHECK(kernels::isa_name(kernels::active_isa()) == "scalar");
  if (kernels::cpu_has_avx2()) {
    kernels::select_isa(kernels::Isa::avx2);
    CHECK(kernels::active_isa() == kernels::Isa::avx2);
  }
  kernels::select_auto();
}
