#include "blocklsq/admm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blocklsq {

void AdmmParams::check() const {
  if (!(rho > 0.0)) throw std::invalid_argument("admm: rho must be positive");
  if (!(eps_shift > 0.0)) throw std::invalid_argument("admm: eps_shift must be positive");
  if (max_iters < 1) throw std::invalid_argument("admm: max_iters must be at least 1");
}

namespace {

Matrix build_qhat(const AgentProgram& prog, const AdmmParams& params) {
  Matrix qhat = prog.Q;
  for (const auto& coupling : prog.couplings) {
    if (coupling.rows() > 0) gram_acc(qhat, coupling.E, params.rho);
  }
  return qhat;
}

void add_diag(Matrix& m, const Vector& d) {
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) += d[i];
}

}  // namespace

FactorizedQhat precompute(const AgentProgram& prog, const AdmmParams& params) {
  params.check();
  FactorizedQhat out;
  Matrix qhat = build_qhat(prog, params);

  auto shift_magnitude = [&qhat]() {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < qhat.rows(); ++i) max_diag = std::max(max_diag, qhat(i, i));
    return 1.0 + max_diag;
  };

  switch (params.g_policy) {
    case AdmmParams::GPolicy::zero: {
      out.fact = cholesky(qhat);
      if (out.fact.ok) return out;
      const double shift = params.eps_shift * shift_magnitude();
      out.g_diag.assign(qhat.rows(), shift);
      out.shifted = true;
      add_diag(qhat, out.g_diag);
      out.fact = cholesky(qhat);
      break;
    }
    case AdmmParams::GPolicy::eps_shift: {
      const double shift = params.eps_shift * shift_magnitude();
      out.g_diag.assign(qhat.rows(), shift);
      out.shifted = true;
      add_diag(qhat, out.g_diag);
      out.fact = cholesky(qhat);
      break;
    }
    case AdmmParams::GPolicy::explicit_diag: {
      auto it = params.g_diag.find(prog.layout.agent);
      if (it == params.g_diag.end() || it->second.size() != prog.layout.x_dim)
        throw std::invalid_argument("admm: explicit G diagonal missing or mis-sized for agent " +
                                    std::to_string(prog.layout.agent));
      for (double d : it->second)
        if (d < 0.0)
          throw std::invalid_argument("admm: explicit G diagonal must be nonnegative");
      out.g_diag = it->second;
      add_diag(qhat, out.g_diag);
      out.fact = cholesky(qhat);
      break;
    }
  }
  if (!out.fact.ok)
    throw std::runtime_error("admm: Qhat of agent " + std::to_string(prog.layout.agent) +
                             " is not positive definite even after the proximal shift");
  return out;
}

AgentState make_zero_state(const AgentProgram& prog) {
  AgentState state;
  state.x.assign(prog.layout.x_dim, 0.0);
  state.x_prev = state.x;
  const std::size_t deg = prog.couplings.size();
  state.y.resize(deg);
  state.lambda.resize(deg);
  state.y_prev.resize(deg);
  state.lambda_prev.resize(deg);
  state.m_val.resize(deg);
  state.payload.resize(deg);
  for (std::size_t c = 0; c < deg; ++c) {
    const std::size_t rows = prog.couplings[c].rows();
    state.y[c].assign(rows, 0.0);
    state.lambda[c].assign(rows, 0.0);
    state.y_prev[c].assign(rows, 0.0);
    state.lambda_prev[c].assign(rows, 0.0);
    state.m_val[c].assign(rows, 0.0);
    state.payload[c].assign(rows, 0.0);
  }
  return state;
}

Vector x_update(const AgentState& state, const AgentProgram& prog, const FactorizedQhat& fact,
                const AdmmParams& params) {
  // solve Qhat x = -q + G x(s) + sum_j E' (rho (y + e) + lambda)
  Vector rhs(prog.layout.x_dim);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -prog.q[i];
  if (!fact.g_diag.empty()) {
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += fact.g_diag[i] * state.x[i];
  }
  Vector tmp;
  for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
    const EdgeCoupling& coupling = prog.couplings[c];
    if (coupling.rows() == 0) continue;
    tmp = coupling.e;
    axpy(1.0, state.y[c], tmp);
    for (double& v : tmp) v *= params.rho;
    axpy(1.0, state.lambda[c], tmp);
    matvec_t_acc(coupling.E, tmp, rhs);
  }
  return cholesky_solve(fact.fact, rhs);
}

std::vector<Message> make_messages(AgentState& state, const AgentProgram& prog,
                                   const AdmmParams& params) {
  std::vector<Message> out;
  const double inv_rho = 1.0 / params.rho;
  for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
    const EdgeCoupling& coupling = prog.couplings[c];
    if (coupling.rows() == 0) continue;
    Vector m = matvec(coupling.E, state.x);
    axpy(-1.0, coupling.e, m);
    Vector payload = m;
    axpy(-inv_rho, state.lambda[c], payload);
    state.m_val[c] = std::move(m);
    state.payload[c] = payload;
    out.push_back({prog.layout.agent, coupling.peer, state.round, std::move(payload)});
  }
  return out;
}

Vector y_update(const Vector& own_payload, const Vector& peer_payload) {
  if (own_payload.size() != peer_payload.size())
    throw std::logic_error("y_update: payload length mismatch");
  Vector y(own_payload.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * (own_payload[i] + peer_payload[i]);
  return y;
}

Vector lambda_update(const Vector& lambda_old, double rho, const Vector& m_val,
                     const Vector& y_new) {
  Vector lambda = lambda_old;
  for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] -= rho * (m_val[i] - y_new[i]);
  return lambda;
}

LocalResiduals local_residuals(const AgentState& state, const AgentProgram& prog) {
  LocalResiduals res;
  for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
    if (prog.couplings[c].rows() == 0) continue;
    res.primal_inf = std::max(res.primal_inf, inf_norm_diff(state.m_val[c], state.y[c]));
  }
  res.delta_x = inf_norm_diff(state.x, state.x_prev);
  return res;
}

}  // namespace blocklsq
