#pragma once

#include <map>
#include <utility>
#include <vector>

#include "blocklsq/dense.hpp"
#include "blocklsq/graph.hpp"
#include "blocklsq/problem.hpp"

namespace blocklsq {

// One owned column partition inside the agent's stacked unknown vector.
struct ColSlot {
  int l = 0;
  std::size_t offset = 0;
  std::size_t len = 0;
};

// One virtual-flow variable: the agent's share of the coupled residual
// exchanged with `peer` for coupled row partition `eps`.
struct VSlot {
  int eps = 0;
  int peer = 0;
  std::size_t offset = 0;
  std::size_t len = 0;
};

// Variable layout of one agent: x_i = [ owned column copies | v slots ].
// Column slots ascend by partition id; v slots ascend by (eps, peer).
struct AgentLayout {
  int agent = 0;
  std::vector<ColSlot> owned_cols;
  std::vector<VSlot> v_slots;
  std::size_t z_dim = 0;
  std::size_t x_dim = 0;

  const ColSlot* find_col(int l) const;
  const VSlot* find_v(int eps, int peer) const;
};

// Local data of one coupled row partition: the agent's blocks stacked over
// its column layout, its piece of the right-hand side, and the residual
// weight (the number of agents sharing the row).
struct CoupledRowData {
  int eps = 0;
  double weight = 0.0;
  Matrix B;  // m_eps x z_dim
  Vector b;
  std::vector<int> neighbors;  // N_i ∩ S(R_eps), ascending
};

// Affine map whose equality across an edge encodes all coupling
// constraints: shared-column consensus rows first, then per coupled row
// partition a residual-share row block followed by a signed v block.
struct EdgeCoupling {
  int peer = 0;
  std::size_t shared_rows = 0;
  Matrix E;  // rows x x_dim
  Vector e;
  std::size_t rows() const { return E.rows(); }
};

struct AgentProgram {
  AgentLayout layout;
  Matrix A;  // stacked sole-owner rows over z (may have zero rows)
  Vector a;
  std::vector<CoupledRowData> coupled;   // ascending eps
  std::vector<EdgeCoupling> couplings;   // one per graph neighbor, ascending
  Matrix Q;
  Vector q;
  double cost_const = 0.0;

  // Local cost 0.5*x'Qx + q'x + cost_const.
  double psi(const Vector& x) const;
  Vector z_part(const Vector& x) const;
  const EdgeCoupling& coupling_to(int peer) const;
};

struct CompiledProblem {
  BlockProblem problem;
  Graph graph;
  PartitionIndex idx;
  std::map<std::pair<int, int>, Vector> h_pieces;  // (k, agent) -> part
  std::vector<AgentProgram> agents;                // [i-1] for agent i

  const AgentProgram& agent(int i) const { return agents[static_cast<std::size_t>(i - 1)]; }
};

std::vector<AgentLayout> build_layouts(const BlockProblem& p, const PartitionIndex& idx,
                                       const Graph& g);

// Selector P with P * zbar_i = stacked copies of the column partitions
// shared between agents i and j (ascending partition id).
Matrix build_selector(const PartitionIndex& idx, const AgentLayout& layout, int j);

struct RowData {
  Matrix A;
  Vector a;
  std::vector<CoupledRowData> coupled;
};

RowData build_row_data(const BlockProblem& p, const PartitionIndex& idx,
                       const std::map<std::pair<int, int>, Vector>& h_pieces, const Graph& g,
                       const AgentLayout& layout);

// Residual-share row map R with R*x_i = B*zbar_i + sum_j v_{ij} for one
// coupled row partition, widened to the full local variable vector.
Matrix coupled_row_map(const AgentLayout& layout, const CoupledRowData& row);

// Fills Q, q and cost_const from the stacked row data.
void build_quadratic(AgentProgram& prog);

EdgeCoupling build_coupling(const PartitionIndex& idx, const AgentLayout& layout,
                            const std::vector<CoupledRowData>& coupled, int i, int j);

// Full compilation pipeline; requires a passing validation.
CompiledProblem compile(const BlockProblem& p, const Graph& g);

// Feasible virtual flows for coupled row partition eps given one global z:
// antisymmetric per-edge vectors routed along the spanning tree of the
// induced subgraph so that every agent's residual share equals u_eps/|S|.
// Keyed by ordered pair (i, j); non-tree edges carry zero.
std::map<std::pair<int, int>, Vector> balance_virtual_flows(
    const BlockProblem& p, const PartitionIndex& idx, const Graph& g, int eps,
    const Vector& z_full, const std::map<std::pair<int, int>, Vector>& h_pieces);

// Splits a global unknown vector into per-partition pieces (1-based).
std::vector<Vector> split_z(const BlockProblem& p, const Vector& z_full);

// Assembles the feasible local vector x_i for one agent from equal copies
// of z and balanced flows; used by the decomposition-identity checks.
Vector feasible_local_x(const AgentLayout& layout, const BlockProblem& p, const Vector& z_full,
                        const std::map<int, std::map<std::pair<int, int>, Vector>>& flows_by_eps);

}  // namespace blocklsq
