#include "blocklsq/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace blocklsq::kernels {

namespace {

Isa g_isa = Isa::scalar;
const Ops* g_ops = &scalar_ops;
bool g_initialized = false;

Isa best_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2()) return Isa::avx2;
#endif
  return Isa::scalar;
}

void apply(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      g_ops = &scalar_ops;
      break;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      if (!cpu_has_avx2()) throw std::runtime_error("avx2 kernels not supported on this cpu");
      g_ops = &avx2_ops;
      break;
#else
      throw std::runtime_error("avx2 kernels not available in this build");
#endif
  }
  g_isa = isa;
  g_initialized = true;
}

void init_from_env() {
  Isa isa = best_supported();
  if (const char* env = std::getenv("BLOCKLSQ_SIMD")) {
    std::string v(env);
    if (v == "scalar") {
      isa = Isa::scalar;
    } else if (v == "avx2") {
      isa = Isa::avx2;
    } else if (v != "auto" && !v.empty()) {
      throw std::runtime_error("BLOCKLSQ_SIMD must be scalar, avx2 or auto, got: " + v);
    }
  }
  apply(isa);
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& ops() {
  if (!g_initialized) init_from_env();
  return *g_ops;
}

Isa active_isa() {
  if (!g_initialized) init_from_env();
  return g_isa;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

void select_isa(Isa isa) { apply(isa); }

void select_auto() { init_from_env(); }

}  // namespace blocklsq::kernels
