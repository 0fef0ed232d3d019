#pragma once

#include <cstddef>
#include <string_view>

namespace blocklsq::kernels {

// Dense row-major primitives behind every inner loop (agent updates,
// factorizations, residual norms). Two implementations share this table:
// a scalar reference and an AVX2/FMA variant picked at runtime.
struct Ops {
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = A*x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y += A^T*x, A row-major rows x cols, y has length cols
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols,
                     const double* x, double* y);
  // max_i |x[i]|
  double (*inf_norm)(const double* x, std::size_t n);
  // max_i |x[i]-y[i]|
  double (*inf_norm_diff)(const double* x, const double* y, std::size_t n);
};

enum class Isa { scalar, avx2 };

extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops avx2_ops;
#endif

bool cpu_has_avx2();

// Active table. Defaults to the best supported ISA; the BLOCKLSQ_SIMD
// environment variable ("scalar", "avx2", "auto") overrides the choice.
const Ops& ops();
Isa active_isa();
std::string_view isa_name(Isa isa);

// Explicit selection, used by equivalence tests. Throws if unsupported.
void select_isa(Isa isa);
void select_auto();

}  // namespace blocklsq::kernels
