#include "blocklsq/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <thread>

#include "blocklsq/rng.hpp"

namespace blocklsq {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

struct ActiveEdge {
  int i = 0;
  int j = 0;
  std::size_t ci = 0;  // index of the coupling in agent i's list
  std::size_t cj = 0;
  std::size_t rows = 0;
};

// Round-invariant context shared by the simulator and the round-map probe.
struct Engine {
  const CompiledProblem* compiled = nullptr;
  AdmmParams params;
  std::vector<FactorizedQhat> facts;
  // [i-1][c] = index of the reverse coupling in the peer's list
  std::vector<std::vector<std::size_t>> reverse_idx;
  std::vector<ActiveEdge> active_edges;

  const AgentProgram& prog(int i) const { return compiled->agent(i); }
  int agent_count() const { return compiled->problem.N; }
};

Engine make_engine(const CompiledProblem& compiled, const AdmmParams& params) {
  params.check();
  Engine eng;
  eng.compiled = &compiled;
  eng.params = params;
  const int n = compiled.problem.N;
  eng.facts.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) eng.facts.push_back(precompute(compiled.agent(i), params));

  eng.reverse_idx.resize(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const auto& couplings = compiled.agent(i).couplings;
    auto& rev = eng.reverse_idx[static_cast<std::size_t>(i - 1)];
    rev.resize(couplings.size());
    for (std::size_t c = 0; c < couplings.size(); ++c) {
      const int peer = couplings[c].peer;
      const auto& peer_neighbors = compiled.graph.neighbors(peer);
      const auto it = std::lower_bound(peer_neighbors.begin(), peer_neighbors.end(), i);
      rev[c] = static_cast<std::size_t>(it - peer_neighbors.begin());
    }
  }

  for (auto [i, j] : compiled.graph.edges()) {
    const auto& couplings = compiled.agent(i).couplings;
    for (std::size_t c = 0; c < couplings.size(); ++c) {
      if (couplings[c].peer != j || couplings[c].rows() == 0) continue;
      eng.active_edges.push_back(
          {i, j, c, eng.reverse_idx[static_cast<std::size_t>(i - 1)][c], couplings[c].rows()});
    }
  }
  return eng;
}

long phase_a(const Engine& eng, std::vector<AgentState>& states, int i) {
  AgentState& state = states[static_cast<std::size_t>(i - 1)];
  const AgentProgram& prog = eng.prog(i);
  state.x_prev = state.x;
  state.x = x_update(state, prog, eng.facts[static_cast<std::size_t>(i - 1)], eng.params);
  return static_cast<long>(make_messages(state, prog, eng.params).size());
}

void phase_b(const Engine& eng, std::vector<AgentState>& states, int i) {
  AgentState& state = states[static_cast<std::size_t>(i - 1)];
  const AgentProgram& prog = eng.prog(i);
  for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
    if (prog.couplings[c].rows() == 0) continue;
    const int peer = prog.couplings[c].peer;
    const std::size_t rc = eng.reverse_idx[static_cast<std::size_t>(i - 1)][c];
    const Vector& peer_payload = states[static_cast<std::size_t>(peer - 1)].payload[rc];
    state.y_prev[c] = state.y[c];
    state.lambda_prev[c] = state.lambda[c];
    state.y[c] = y_update(state.payload[c], peer_payload);
    state.lambda[c] = lambda_update(state.lambda_prev[c], eng.params.rho, state.m_val[c], state.y[c]);
  }
  state.round += 1;
}

double sq_diff(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct AgentReduction {
  double primal_inf = 0.0;
  double delta_inf = 0.0;
  double delta_sq = 0.0;
  double cost = 0.0;
  long messages = 0;
};

std::vector<AgentState> make_initial_states(const CompiledProblem& compiled,
                                            const RunOptions& opts) {
  std::vector<AgentState> states;
  states.reserve(static_cast<std::size_t>(compiled.problem.N));
  for (int i = 1; i <= compiled.problem.N; ++i) states.push_back(make_zero_state(compiled.agent(i)));
  if (opts.init == RunOptions::Init::random) {
    Rng rng(opts.init_seed);
    for (auto& state : states) {
      for (double& v : state.x) v = opts.init_scale * rng.next_pm1();
      state.x_prev = state.x;
      for (auto& y : state.y)
        for (double& v : y) v = opts.init_scale * rng.next_pm1();
      for (auto& lam : state.lambda)
        for (double& v : lam) v = opts.init_scale * rng.next_pm1();
    }
  }
  return states;
}

int resolve_workers(const RunOptions& opts, int agents) {
  int workers = 0;
  if (opts.workers > 0) {
    workers = opts.workers;
  } else {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (const char* env = std::getenv("BLOCKLSQ_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1) workers = std::min(workers, cap);
    }
  }
  return std::max(1, std::min(workers, agents));
}

}  // namespace

RunResult run(const CompiledProblem& compiled, const AdmmParams& params, const RunOptions& opts) {
  if (opts.metrics_decimation < 1)
    throw std::invalid_argument("run: metrics decimation must be >= 1");
  const Engine eng = make_engine(compiled, params);
  const int n_agents = compiled.problem.N;
  const int workers = resolve_workers(opts, n_agents);

  std::vector<AgentState> states = make_initial_states(compiled, opts);

  // per-agent targets for the error metric
  std::vector<Vector> z_targets;
  if (opts.oracle.attached && opts.oracle.unique) {
    const auto z_parts = split_z(compiled.problem, opts.oracle.z_star);
    z_targets.resize(static_cast<std::size_t>(n_agents));
    for (int i = 1; i <= n_agents; ++i) {
      Vector target(compiled.agent(i).layout.z_dim, 0.0);
      for (const auto& slot : compiled.agent(i).layout.owned_cols) {
        const Vector& part = z_parts[static_cast<std::size_t>(slot.l)];
        std::copy(part.begin(), part.end(),
                  target.begin() + static_cast<std::ptrdiff_t>(slot.offset));
      }
      z_targets[static_cast<std::size_t>(i - 1)] = std::move(target);
    }
  }

  RunResult result;
  std::vector<AgentReduction> reductions(static_cast<std::size_t>(n_agents));
  std::vector<double> agent_seconds(static_cast<std::size_t>(n_agents), 0.0);

  const auto t_start = std::chrono::steady_clock::now();
  std::atomic<bool> stop{false};
  int round = 0;
  Termination reason = Termination::max_iters;

  auto agent_range = [&](int worker) {
    const int lo = worker * n_agents / workers;
    const int hi = (worker + 1) * n_agents / workers;
    return std::pair<int, int>(lo + 1, hi + 1);
  };

  auto record_metrics = [&](int iter, double primal, double delta, double delta_sq, double cost,
                            long messages) {
    RoundMetrics m;
    m.iter = iter;
    m.primal_inf = primal;
    m.consensus_inf = 0.0;
    for (const auto& edge : eng.active_edges) {
      const auto& mi = states[static_cast<std::size_t>(edge.i - 1)].m_val[edge.ci];
      const auto& mj = states[static_cast<std::size_t>(edge.j - 1)].m_val[edge.cj];
      const std::size_t shared = compiled.agent(edge.i).couplings[edge.ci].shared_rows;
      if (shared > 0)
        m.consensus_inf =
            std::max(m.consensus_inf,
                     kernels::ops().inf_norm_diff(mi.data(), mj.data(), shared));
    }
    m.delta_w = delta;
    m.delta_w_sq = delta_sq;
    m.cost = cost;
    if (opts.oracle.attached) m.cost_gap = std::fabs(cost - opts.oracle.psi_opt);
    if (!z_targets.empty()) {
      double err = 0.0;
      for (int i = 1; i <= n_agents; ++i) {
        const auto& state = states[static_cast<std::size_t>(i - 1)];
        const auto& target = z_targets[static_cast<std::size_t>(i - 1)];
        err = std::max(err, kernels::ops().inf_norm_diff(state.x.data(), target.data(),
                                                         target.size()));
      }
      m.err_x = err;
    }
    m.messages = messages;
    m.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t_start)
                       .count();
    result.metrics.push_back(m);
    result.last = m;
  };

  auto on_round_complete = [&]() noexcept {
    double primal = 0.0, delta = 0.0, delta_sq = 0.0, cost = 0.0;
    long messages = 0;
    for (const auto& red : reductions) {
      primal = std::max(primal, red.primal_inf);
      delta = std::max(delta, red.delta_inf);
      delta_sq += red.delta_sq;
      cost += red.cost;
      messages += red.messages;
    }
    round += 1;

    if (opts.check_protocol) {
      for (const auto& edge : eng.active_edges) {
        const auto& si = states[static_cast<std::size_t>(edge.i - 1)];
        const auto& sj = states[static_cast<std::size_t>(edge.j - 1)];
        if (std::memcmp(si.y[edge.ci].data(), sj.y[edge.cj].data(),
                        edge.rows * sizeof(double)) != 0)
          result.protocol_violations += 1;
        double lam_mag = std::max(inf_norm(si.lambda[edge.ci]), inf_norm(sj.lambda[edge.cj]));
        double lam_sum = 0.0;
        for (std::size_t r = 0; r < edge.rows; ++r)
          lam_sum = std::max(lam_sum,
                             std::fabs(si.lambda[edge.ci][r] + sj.lambda[edge.cj][r]));
        if (lam_sum > 1e-10 * (1.0 + lam_mag)) result.protocol_violations += 1;
      }
      if (messages != 2 * static_cast<long>(eng.active_edges.size()))
        result.protocol_violations += 1;
    }

    const bool diverging = !std::isfinite(delta) || delta > opts.divergence_guard;
    const bool converged = primal <= params.tol_primal && delta <= params.tol_delta;
    const bool out_of_rounds = round >= params.max_iters;
    const bool final_round = diverging || converged || out_of_rounds;

    if (final_round || round % opts.metrics_decimation == 0)
      record_metrics(round, primal, delta, delta_sq, cost, messages);

    if (final_round) {
      reason = diverging ? Termination::diverged
                         : (converged ? Termination::converged : Termination::max_iters);
      stop.store(true, std::memory_order_relaxed);
    }
  };

  std::barrier phase_a_done(workers);
  std::barrier phase_b_done(workers, on_round_complete);

  auto worker_loop = [&](int worker) {
    const auto [lo, hi] = agent_range(worker);
    while (!stop.load(std::memory_order_relaxed)) {
      for (int i = lo; i < hi; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        reductions[static_cast<std::size_t>(i - 1)].messages = phase_a(eng, states, i);
        agent_seconds[static_cast<std::size_t>(i - 1)] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      phase_a_done.arrive_and_wait();
      for (int i = lo; i < hi; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        phase_b(eng, states, i);
        auto& red = reductions[static_cast<std::size_t>(i - 1)];
        const auto& state = states[static_cast<std::size_t>(i - 1)];
        const auto residuals = local_residuals(state, eng.prog(i));
        red.primal_inf = residuals.primal_inf;
        red.delta_inf = residuals.delta_x;
        red.delta_sq = sq_diff(state.x, state.x_prev);
        for (std::size_t c = 0; c < state.y.size(); ++c) {
          red.delta_inf = std::max(red.delta_inf, inf_norm_diff(state.y[c], state.y_prev[c]));
          red.delta_inf =
              std::max(red.delta_inf, inf_norm_diff(state.lambda[c], state.lambda_prev[c]));
          red.delta_sq += sq_diff(state.y[c], state.y_prev[c]);
          red.delta_sq += sq_diff(state.lambda[c], state.lambda_prev[c]);
        }
        red.cost = eng.prog(i).psi(state.x);
        agent_seconds[static_cast<std::size_t>(i - 1)] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
      phase_b_done.arrive_and_wait();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker_loop, w);
  worker_loop(0);
  for (auto& t : pool) t.join();

  result.reason = reason;
  result.rounds = round;
  result.final_states = std::move(states);
  result.max_agent_compute_seconds =
      *std::max_element(agent_seconds.begin(), agent_seconds.end());
  return result;
}

// ----- packed-state round map -----

std::size_t state_dimension(const CompiledProblem& compiled) {
  std::size_t dim = 0;
  for (const auto& prog : compiled.agents) dim += prog.layout.x_dim;
  for (auto [i, j] : compiled.graph.edges()) {
    const auto& coupling = compiled.agent(i).coupling_to(j);
    dim += 4 * coupling.rows();
  }
  return dim;
}

Vector pack_state(const CompiledProblem& compiled, const std::vector<AgentState>& states) {
  Vector w;
  w.reserve(state_dimension(compiled));
  for (const auto& state : states) w.insert(w.end(), state.x.begin(), state.x.end());
  for (auto [i, j] : compiled.graph.edges()) {
    const auto& prog_i = compiled.agent(i);
    for (std::size_t c = 0; c < prog_i.couplings.size(); ++c) {
      if (prog_i.couplings[c].peer != j || prog_i.couplings[c].rows() == 0) continue;
      const auto& neighbors_j = compiled.graph.neighbors(j);
      const std::size_t cj = static_cast<std::size_t>(
          std::lower_bound(neighbors_j.begin(), neighbors_j.end(), i) - neighbors_j.begin());
      const auto& si = states[static_cast<std::size_t>(i - 1)];
      const auto& sj = states[static_cast<std::size_t>(j - 1)];
      w.insert(w.end(), si.y[c].begin(), si.y[c].end());
      w.insert(w.end(), si.lambda[c].begin(), si.lambda[c].end());
      w.insert(w.end(), sj.y[cj].begin(), sj.y[cj].end());
      w.insert(w.end(), sj.lambda[cj].begin(), sj.lambda[cj].end());
    }
  }
  return w;
}

std::vector<AgentState> unpack_state(const CompiledProblem& compiled, const Vector& w) {
  if (w.size() != state_dimension(compiled))
    throw std::invalid_argument("unpack_state: wrong state dimension");
  std::vector<AgentState> states;
  states.reserve(compiled.agents.size());
  for (int i = 1; i <= compiled.problem.N; ++i) states.push_back(make_zero_state(compiled.agent(i)));

  std::size_t off = 0;
  for (auto& state : states) {
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(off),
              w.begin() + static_cast<std::ptrdiff_t>(off + state.x.size()), state.x.begin());
    state.x_prev = state.x;
    off += state.x.size();
  }
  for (auto [i, j] : compiled.graph.edges()) {
    const auto& prog_i = compiled.agent(i);
    for (std::size_t c = 0; c < prog_i.couplings.size(); ++c) {
      if (prog_i.couplings[c].peer != j || prog_i.couplings[c].rows() == 0) continue;
      const auto& neighbors_j = compiled.graph.neighbors(j);
      const std::size_t cj = static_cast<std::size_t>(
          std::lower_bound(neighbors_j.begin(), neighbors_j.end(), i) - neighbors_j.begin());
      auto& si = states[static_cast<std::size_t>(i - 1)];
      auto& sj = states[static_cast<std::size_t>(j - 1)];
      const std::size_t rows = prog_i.couplings[c].rows();
      auto take = [&](Vector& dst) {
        std::copy(w.begin() + static_cast<std::ptrdiff_t>(off),
                  w.begin() + static_cast<std::ptrdiff_t>(off + rows), dst.begin());
        off += rows;
      };
      take(si.y[c]);
      take(si.lambda[c]);
      take(sj.y[cj]);
      take(sj.lambda[cj]);
    }
  }
  return states;
}

Vector apply_round(const CompiledProblem& compiled, const AdmmParams& params, const Vector& w) {
  const Engine eng = make_engine(compiled, params);
  std::vector<AgentState> states = unpack_state(compiled, w);
  for (int i = 1; i <= compiled.problem.N; ++i) phase_a(eng, states, i);
  for (int i = 1; i <= compiled.problem.N; ++i) phase_b(eng, states, i);
  return pack_state(compiled, states);
}

IterationLinearization linearize_iteration(const CompiledProblem& compiled,
                                           const AdmmParams& params, std::size_t dim_cap) {
  IterationLinearization lin;
  lin.dim = state_dimension(compiled);
  if (lin.dim > dim_cap)
    throw std::invalid_argument("linearize_iteration: state dimension " +
                                std::to_string(lin.dim) + " exceeds cap " +
                                std::to_string(dim_cap));

  const Engine eng = make_engine(compiled, params);
  auto map = [&](const Vector& w) {
    std::vector<AgentState> states = unpack_state(compiled, w);
    for (int i = 1; i <= compiled.problem.N; ++i) phase_a(eng, states, i);
    for (int i = 1; i <= compiled.problem.N; ++i) phase_b(eng, states, i);
    return pack_state(compiled, states);
  };

  lin.m_vec = map(Vector(lin.dim, 0.0));
  lin.m = Matrix(lin.dim, lin.dim);
  Vector basis(lin.dim, 0.0);
  for (std::size_t c = 0; c < lin.dim; ++c) {
    basis[c] = 1.0;
    const Vector col = map(basis);
    basis[c] = 0.0;
    for (std::size_t r = 0; r < lin.dim; ++r) lin.m(r, c) = col[r] - lin.m_vec[r];
  }

  Eigen::MatrixXd m_eig(static_cast<Eigen::Index>(lin.dim), static_cast<Eigen::Index>(lin.dim));
  for (std::size_t r = 0; r < lin.dim; ++r)
    for (std::size_t c = 0; c < lin.dim; ++c)
      m_eig(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = lin.m(r, c);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m_eig, false);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("linearize_iteration: eigensolver failed");
  lin.eigenvalues.resize(lin.dim);
  for (std::size_t k = 0; k < lin.dim; ++k)
    lin.eigenvalues[k] = solver.eigenvalues()(static_cast<Eigen::Index>(k));
  return lin;
}

FitResult fit_rate(const std::vector<RoundMetrics>& metrics, double floor) {
  std::vector<std::pair<double, double>> points;
  for (const auto& m : metrics)
    if (m.delta_w > floor) points.emplace_back(static_cast<double>(m.iter), std::log(m.delta_w));
  if (points.size() < 50)
    throw std::runtime_error("fit_rate: need at least 50 recorded rounds above the floor, got " +
                             std::to_string(points.size()));

  const std::size_t start = points.size() / 2;
  const std::size_t n = points.size() - start;
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = start; k < points.size(); ++k) {
    sx += points[k].first;
    sy += points[k].second;
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = start; k < points.size(); ++k) {
    const double dx = points[k].first - mx;
    const double dy = points[k].second - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }

  FitResult fit;
  fit.points = n;
  if (sxx == 0.0) return fit;
  const double slope = sxy / sxx;
  fit.rate = std::exp(slope);
  fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  fit.stalled = !(fit.rate < 1.0 && fit.correlation <= -0.9);
  return fit;
}

double consensus_inf_of(const CompiledProblem& compiled, const std::vector<AgentState>& states) {
  double worst = 0.0;
  for (auto [i, j] : compiled.graph.edges()) {
    const auto& prog_i = compiled.agent(i);
    const auto& prog_j = compiled.agent(j);
    const auto& coupling = prog_i.coupling_to(j);
    if (coupling.shared_rows == 0) continue;
    const Vector zi = matvec(coupling.E, states[static_cast<std::size_t>(i - 1)].x);
    const Vector zj = matvec(prog_j.coupling_to(i).E, states[static_cast<std::size_t>(j - 1)].x);
    worst = std::max(worst, kernels::ops().inf_norm_diff(zi.data(), zj.data(),
                                                         coupling.shared_rows));
  }
  return worst;
}

double v_antisymmetry_inf(const CompiledProblem& compiled, const std::vector<AgentState>& states) {
  double worst = 0.0;
  for (auto [i, j] : compiled.graph.edges()) {
    const auto& li = compiled.agent(i).layout;
    const auto& lj = compiled.agent(j).layout;
    for (const auto& slot : li.v_slots) {
      if (slot.peer != j) continue;
      const VSlot* peer_slot = lj.find_v(slot.eps, i);
      const auto& xi = states[static_cast<std::size_t>(i - 1)].x;
      const auto& xj = states[static_cast<std::size_t>(j - 1)].x;
      for (std::size_t t = 0; t < slot.len; ++t)
        worst = std::max(worst,
                         std::fabs(xi[slot.offset + t] + xj[peer_slot->offset + t]));
    }
  }
  return worst;
}

double cost_of(const CompiledProblem& compiled, const std::vector<AgentState>& states) {
  double cost = 0.0;
  for (int i = 1; i <= compiled.problem.N; ++i)
    cost += compiled.agent(i).psi(states[static_cast<std::size_t>(i - 1)].x);
  return cost;
}

double err_x_of(const CompiledProblem& compiled, const std::vector<AgentState>& states,
                const Vector& z_star) {
  const auto z_parts = split_z(compiled.problem, z_star);
  double err = 0.0;
  for (int i = 1; i <= compiled.problem.N; ++i) {
    const auto& layout = compiled.agent(i).layout;
    const auto& x = states[static_cast<std::size_t>(i - 1)].x;
    for (const auto& slot : layout.owned_cols) {
      const Vector& part = z_parts[static_cast<std::size_t>(slot.l)];
      for (std::size_t t = 0; t < slot.len; ++t)
        err = std::max(err, std::fabs(x[slot.offset + t] - part[t]));
    }
  }
  return err;
}

}  // namespace blocklsq
