#pragma once

#include <map>
#include <vector>

#include "blocklsq/dense.hpp"
#include "blocklsq/reformulation.hpp"

namespace blocklsq {

struct AdmmParams {
  enum class GPolicy { zero, eps_shift, explicit_diag };

  double rho = 1.0;
  GPolicy g_policy = GPolicy::zero;
  double eps_shift = 1e-8;
  std::map<int, Vector> g_diag;  // explicit policy: agent -> diagonal
  int max_iters = 20000;
  double tol_primal = 1e-10;
  double tol_delta = 1e-12;

  void check() const;
};

// Round-invariant factorization of Qhat = Q + G + rho * sum_j E'E.
struct FactorizedQhat {
  CholeskyResult fact;
  Vector g_diag;        // chosen proximal diagonal (empty means zero)
  bool shifted = false; // true when the epsilon-shift fallback fired
};

struct AgentState {
  Vector x;
  Vector x_prev;
  // Parallel to program.couplings. Empty couplings keep empty vectors.
  std::vector<Vector> y;
  std::vector<Vector> lambda;
  std::vector<Vector> y_prev;
  std::vector<Vector> lambda_prev;
  std::vector<Vector> m_val;    // E x(s+1) - e per coupling
  std::vector<Vector> payload;  // m_val - lambda(s)/rho
  int round = 0;
};

struct Message {
  int from = 0;
  int to = 0;
  int round = 0;
  Vector payload;
};

FactorizedQhat precompute(const AgentProgram& prog, const AdmmParams& params);

AgentState make_zero_state(const AgentProgram& prog);

// x(s+1) from the agent's own state and last round's edge variables.
Vector x_update(const AgentState& state, const AgentProgram& prog, const FactorizedQhat& fact,
                const AdmmParams& params);

// Fills state.m_val/payload for the new x and emits one message per
// neighbor whose coupling is nonempty.
std::vector<Message> make_messages(AgentState& state, const AgentProgram& prog,
                                   const AdmmParams& params);

Vector y_update(const Vector& own_payload, const Vector& peer_payload);

Vector lambda_update(const Vector& lambda_old, double rho, const Vector& m_val,
                     const Vector& y_new);

struct LocalResiduals {
  double primal_inf = 0.0;
  double delta_x = 0.0;
};

LocalResiduals local_residuals(const AgentState& state, const AgentProgram& prog);

}  // namespace blocklsq
