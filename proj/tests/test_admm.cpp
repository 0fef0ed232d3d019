#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "blocklsq/admm.hpp"
#include "blocklsq/generators.hpp"
#include "blocklsq/oracle.hpp"
#include "blocklsq/rng.hpp"

using namespace blocklsq;

namespace {

// one agent solely owning a well-conditioned square system
GeneratedProblem single_agent_instance(double rhs_scale) {
  BlockProblem p;
  p.K = p.L = p.N = 1;
  p.row_dims = {4};
  p.col_dims = {4};
  Rng rng(3);
  Matrix block = Matrix::identity(4);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) block(r, c) += 0.2 * rng.next_pm1();
  p.blocks[{1, 1}] = block;
  p.owner[{1, 1}] = 1;
  p.h_parts[1] = {rhs_scale * 1.0, rhs_scale * -2.0, rhs_scale * 0.5, rhs_scale * 3.0};
  return {p, Graph(1, {})};
}

// shared scalar unknown, two measurement rows: z* = 1
GeneratedProblem two_agent_toy() {
  BlockProblem p;
  p.K = 2;
  p.L = 1;
  p.N = 2;
  p.row_dims = {1, 1};
  p.col_dims = {1};
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  p.blocks[{1, 1}] = one;
  p.owner[{1, 1}] = 1;
  p.blocks[{2, 1}] = one;
  p.owner[{2, 1}] = 2;
  p.h_parts[1] = {0.0};
  p.h_parts[2] = {2.0};
  return {p, Graph(2, {{1, 2}})};
}

}  // namespace

TEST_CASE("admm parameter validation") {
  AdmmParams params;
  params.rho = 0.0;
  CHECK_THROWS(params.check());
  params.rho = 1.0;
  params.eps_shift = -1.0;
  CHECK_THROWS(params.check());
}

TEST_CASE("precompute succeeds without a shift on a PD local system") {
  const auto [p, g] = single_agent_instance(1.0);
  const CompiledProblem compiled = compile(p, g);
  const AdmmParams params;
  const FactorizedQhat fact = precompute(compiled.agent(1), params);
  CHECK_FALSE(fact.shifted);
  CHECK(fact.g_diag.empty());
}

TEST_CASE("a variable untouched by any term triggers the shift fallback") {
  // a present-but-zero block gives the owner a variable that appears in no
  // residual and no coupling
  BlockProblem p;
  p.K = 1;
  p.L = 2;
  p.N = 1;
  p.row_dims = {1};
  p.col_dims = {1, 1};
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  p.blocks[{1, 1}] = one;
  p.owner[{1, 1}] = 1;
  p.blocks[{1, 2}] = Matrix(1, 1);  // explicit zero block, still owned
  p.owner[{1, 2}] = 1;
  p.h_parts[1] = {2.0};
  const Graph g(1, {});
  const CompiledProblem compiled = compile(p, g);

  AdmmParams params;
  const FactorizedQhat fact = precompute(compiled.agent(1), params);
  CHECK(fact.shifted);
  CHECK(fact.g_diag.size() == 2);

  // the always-shift policy also works
  params.g_policy = AdmmParams::GPolicy::eps_shift;
  CHECK(precompute(compiled.agent(1), params).shifted);
}

TEST_CASE("explicit proximal diagonals are validated") {
  const auto [p, g] = single_agent_instance(1.0);
  const CompiledProblem compiled = compile(p, g);
  AdmmParams params;
  params.g_policy = AdmmParams::GPolicy::explicit_diag;
  CHECK_THROWS(precompute(compiled.agent(1), params));  // missing diagonal
  params.g_diag[1] = Vector(4, -1.0);
  CHECK_THROWS(precompute(compiled.agent(1), params));  // negative entries
  params.g_diag[1] = Vector(4, 0.5);
  const FactorizedQhat fact = precompute(compiled.agent(1), params);
  CHECK(fact.g_diag == Vector(4, 0.5));
}

TEST_CASE("grid benchmark instance factorizes without a shift for every agent") {
  const auto [p, g] = gen_grid({4, 6, 20, 5, 0, 7});
  const CompiledProblem compiled = compile(p, g);
  const AdmmParams params;  // rho = 1
  for (int i = 1; i <= 24; ++i) {
    const FactorizedQhat fact = precompute(compiled.agent(i), params);
    CHECK_FALSE(fact.shifted);
  }
}

TEST_CASE("isolated agent lands on its least-squares solution in one step") {
  const auto [p, g] = single_agent_instance(1.0);
  const CompiledProblem compiled = compile(p, g);
  const AdmmParams params;
  const AgentProgram& prog = compiled.agent(1);
  const FactorizedQhat fact = precompute(prog, params);

  AgentState state = make_zero_state(prog);
  const Vector x1 = x_update(state, prog, fact, params);

  const auto [h_mat, h_vec] = assemble_dense(p);
  const LsqSolution oracle = min_norm_lstsq(h_mat, h_vec);
  REQUIRE(oracle.unique);
  CHECK(inf_norm_diff(x1, oracle.z_star) <= 1e-9 * (1.0 + inf_norm(oracle.z_star)));

  // homogeneous data keeps the iterate at the origin
  const auto [p0, g0] = single_agent_instance(0.0);
  const CompiledProblem compiled0 = compile(p0, g0);
  AgentState zero_state = make_zero_state(compiled0.agent(1));
  const Vector x0 = x_update(zero_state, compiled0.agent(1), precompute(compiled0.agent(1), params),
                             params);
  CHECK(inf_norm(x0) == 0.0);
}

TEST_CASE("two-agent consensus toy converges to the shared solution") {
  const auto [p, g] = two_agent_toy();
  const CompiledProblem compiled = compile(p, g);
  AdmmParams params;
  params.rho = 1.0;

  const AgentProgram& a1 = compiled.agent(1);
  const AgentProgram& a2 = compiled.agent(2);
  const FactorizedQhat f1 = precompute(a1, params);
  const FactorizedQhat f2 = precompute(a2, params);

  AgentState s1 = make_zero_state(a1);
  AgentState s2 = make_zero_state(a2);

  double prev_primal = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 200; ++round) {
    s1.x_prev = s1.x;
    s2.x_prev = s2.x;
    s1.x = x_update(s1, a1, f1, params);
    s2.x = x_update(s2, a2, f2, params);
    const auto msgs1 = make_messages(s1, a1, params);
    const auto msgs2 = make_messages(s2, a2, params);
    REQUIRE(msgs1.size() == 1);
    REQUIRE(msgs2.size() == 1);
    CHECK(msgs1[0].to == 2);
    CHECK(msgs2[0].to == 1);

    const Vector y1 = y_update(s1.payload[0], msgs2[0].payload);
    const Vector y2 = y_update(s2.payload[0], msgs1[0].payload);
    // both endpoints average the same two payloads: bitwise equal
    CHECK(y1 == y2);

    s1.y_prev[0] = s1.y[0];
    s2.y_prev[0] = s2.y[0];
    s1.y[0] = y1;
    s2.y[0] = y2;
    s1.lambda[0] = lambda_update(s1.lambda[0], params.rho, s1.m_val[0], s1.y[0]);
    s2.lambda[0] = lambda_update(s2.lambda[0], params.rho, s2.m_val[0], s2.y[0]);

    // dual antisymmetry holds at every round from zero initialization
    const double lam_mag = std::max(std::fabs(s1.lambda[0][0]), std::fabs(s2.lambda[0][0]));
    CHECK(std::fabs(s1.lambda[0][0] + s2.lambda[0][0]) <= 1e-10 * (1.0 + lam_mag));

    if (round == 1) {
      const double primal = local_residuals(s1, a1).primal_inf;
      CHECK(primal > 0.0);
      CHECK(primal < prev_primal);
    }
    if (round == 0) prev_primal = local_residuals(s1, a1).primal_inf;
  }
  CHECK(std::fabs(s1.x[0] - 1.0) <= 1e-6);
  CHECK(std::fabs(s2.x[0] - 1.0) <= 1e-6);

  const LocalResiduals res = local_residuals(s1, a1);
  CHECK(res.primal_inf <= 1e-6);
}

TEST_CASE("edge update algebra on a scalar edge") {
  // own constraint value 2, peer value 0, duals zero, rho 1
  const Vector own_m = {2.0};
  const Vector peer_m = {0.0};
  const Vector lambda0 = {0.0};

  const Vector y = y_update(own_m, peer_m);  // payloads equal m when lambda = 0
  CHECK(y == Vector{1.0});

  // consensus already reached: y reproduces the common value
  CHECK(y_update({2.5, -1.0}, {2.5, -1.0}) == Vector{2.5, -1.0});
  CHECK(lambda_update(lambda0, 1.0, own_m, y) == Vector{-1.0});
  CHECK(lambda_update(lambda0, 1.0, peer_m, y) == Vector{1.0});

  // symmetric cancellation
  CHECK(y_update({1.0}, {-1.0}) == Vector{0.0});

  // a feasible edge leaves the dual untouched
  const Vector lambda1 = {0.75};
  CHECK(lambda_update(lambda1, 2.0, {3.0}, {3.0}) == Vector{0.75});

  CHECK_THROWS(y_update({1.0, 2.0}, {1.0}));
}

TEST_CASE("the local solve minimizes the proximal augmented Lagrangian") {
  const auto [p, g] = gen_appendix_a({2, 1, 3, 2, 1, 2}, {2, 1, 2, 3}, 21);
  const CompiledProblem compiled = compile(p, g);
  AdmmParams params;
  params.rho = 1.7;
  params.g_policy = AdmmParams::GPolicy::eps_shift;
  params.eps_shift = 0.05;
  Rng rng(61);

  for (int i = 1; i <= 5; ++i) {
    const AgentProgram& prog = compiled.agent(i);
    const FactorizedQhat fact = precompute(prog, params);

    AgentState state = make_zero_state(prog);
    for (double& v : state.x) v = rng.next_pm1();
    for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
      for (double& v : state.y[c]) v = rng.next_pm1();
      for (double& v : state.lambda[c]) v = rng.next_pm1();
    }

    auto lagrangian = [&](const Vector& x) {
      double val = prog.psi(x);
      for (std::size_t c = 0; c < prog.couplings.size(); ++c) {
        const EdgeCoupling& coupling = prog.couplings[c];
        if (coupling.rows() == 0) continue;
        Vector r = matvec(coupling.E, x);
        axpy(-1.0, coupling.e, r);
        axpy(-1.0, state.y[c], r);
        axpy(-1.0 / params.rho, state.lambda[c], r);
        val += 0.5 * params.rho * dot(r, r);
      }
      if (!fact.g_diag.empty()) {
        for (std::size_t t = 0; t < x.size(); ++t) {
          const double d = x[t] - state.x[t];
          val += 0.5 * fact.g_diag[t] * d * d;
        }
      }
      return val;
    };

    const Vector x_new = x_update(state, prog, fact, params);
    const double best = lagrangian(x_new);
    for (int trial = 0; trial < 20; ++trial) {
      Vector probe = x_new;
      for (double& v : probe) v += 1e-4 * rng.next_pm1();
      CHECK(lagrangian(probe) >= best - 1e-12 * (1.0 + std::fabs(best)));
    }
  }
}

TEST_CASE("worked-example agent 2 messages all three neighbors") {
  const auto [p, g] = gen_appendix_a({2, 1, 3, 2, 1, 2}, {2, 1, 2, 3}, 5);
  const CompiledProblem compiled = compile(p, g);
  const AgentProgram& a2 = compiled.agent(2);
  AdmmParams params;
  AgentState s2 = make_zero_state(a2);
  s2.x = x_update(s2, a2, precompute(a2, params), params);
  const auto msgs = make_messages(s2, a2, params);
  REQUIRE(msgs.size() == 3);
  CHECK(msgs[0].to == 1);
  CHECK(msgs[1].to == 4);
  CHECK(msgs[2].to == 5);
}

TEST_CASE("message payloads bundle the dual variable") {
  const auto [p, g] = two_agent_toy();
  const CompiledProblem compiled = compile(p, g);
  AdmmParams params;
  params.rho = 2.0;
  const AgentProgram& a1 = compiled.agent(1);
  AgentState s1 = make_zero_state(a1);
  s1.x = {3.0};
  s1.lambda[0] = {4.0};
  const auto msgs = make_messages(s1, a1, params);
  REQUIRE(msgs.size() == 1);
  // E x - e - lambda/rho = 3 - 0 - 2
  CHECK(msgs[0].payload == Vector{1.0});
  CHECK(s1.m_val[0] == Vector{3.0});

  // with zero dual and offset the payload is exactly E x
  AgentState s0 = make_zero_state(a1);
  s0.x = {3.0};
  CHECK(make_messages(s0, a1, params)[0].payload == Vector{3.0});
}
