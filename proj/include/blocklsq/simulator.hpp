#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include "blocklsq/admm.hpp"
#include "blocklsq/reformulation.hpp"

namespace blocklsq {

struct RoundMetrics {
  int iter = 0;
  double primal_inf = 0.0;
  double consensus_inf = 0.0;
  double delta_w = 0.0;
  double cost = 0.0;
  double cost_gap = std::numeric_limits<double>::quiet_NaN();
  double err_x = std::numeric_limits<double>::quiet_NaN();
  long messages = 0;
  double elapsed_ms = 0.0;
  double delta_w_sq = 0.0;  // squared 2-norm of the state step (not serialized)
};

enum class Termination { converged, max_iters, diverged };
const char* termination_name(Termination t);

struct OracleInfo {
  bool attached = false;
  double psi_opt = 0.0;
  bool unique = false;
  Vector z_star;  // full unknown vector when unique
};

struct RunOptions {
  int metrics_decimation = 1;
  bool check_protocol = false;
  OracleInfo oracle;

  enum class Init { zero, random };
  Init init = Init::zero;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;

  // 0 = resolve from BLOCKLSQ_THREADS (default 1 worker).
  int workers = 0;
  double divergence_guard = 1e12;
};

struct RunResult {
  Termination reason = Termination::max_iters;
  int rounds = 0;
  std::vector<RoundMetrics> metrics;
  std::vector<AgentState> final_states;
  RoundMetrics last;
  double max_agent_compute_seconds = 0.0;
  long protocol_violations = 0;
};

// Synchronous execution of the per-agent iteration: all local solves, a
// barrier, message delivery, a barrier, all edge-variable updates. The
// metric stream is bitwise identical for any worker count.
RunResult run(const CompiledProblem& compiled, const AdmmParams& params, const RunOptions& opts);

// ----- affine round-map diagnostics -----

std::size_t state_dimension(const CompiledProblem& compiled);
Vector pack_state(const CompiledProblem& compiled, const std::vector<AgentState>& states);
std::vector<AgentState> unpack_state(const CompiledProblem& compiled, const Vector& w);

// One synchronous round as a pure function of the packed state.
Vector apply_round(const CompiledProblem& compiled, const AdmmParams& params, const Vector& w);

struct IterationLinearization {
  std::size_t dim = 0;
  Matrix m;       // round map w -> M w + m_vec
  Vector m_vec;
  std::vector<std::complex<double>> eigenvalues;
};

// Materializes the affine round map by probing (constant = map(0), columns
// from unit states) and computes its spectrum. Refuses dimensions above cap.
IterationLinearization linearize_iteration(const CompiledProblem& compiled,
                                           const AdmmParams& params, std::size_t dim_cap = 400);

// ----- convergence-rate estimation -----

struct FitResult {
  double rate = 1.0;
  double correlation = 0.0;
  std::size_t points = 0;
  bool stalled = true;
};

// Geometric rate from the tail of the recorded delta_w sequence: ordinary
// least squares of log(delta_w) against the iteration index over the last
// half of the rounds above `floor`. Throws when fewer than 50 qualify.
FitResult fit_rate(const std::vector<RoundMetrics>& metrics, double floor = 1e-14);

// ----- feasibility helpers -----

double consensus_inf_of(const CompiledProblem& compiled, const std::vector<AgentState>& states);
double v_antisymmetry_inf(const CompiledProblem& compiled, const std::vector<AgentState>& states);
double cost_of(const CompiledProblem& compiled, const std::vector<AgentState>& states);
double err_x_of(const CompiledProblem& compiled, const std::vector<AgentState>& states,
                const Vector& z_star);

}  // namespace blocklsq
