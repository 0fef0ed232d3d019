#include "blocklsq/reformulation.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace blocklsq {

const ColSlot* AgentLayout::find_col(int l) const {
  for (const auto& slot : owned_cols)
    if (slot.l == l) return &slot;
  return nullptr;
}

const VSlot* AgentLayout::find_v(int eps, int peer) const {
  for (const auto& slot : v_slots)
    if (slot.eps == eps && slot.peer == peer) return &slot;
  return nullptr;
}

double AgentProgram::psi(const Vector& x) const {
  const Vector qx = matvec(Q, x);
  return 0.5 * dot(x, qx) + dot(q, x) + cost_const;
}

Vector AgentProgram::z_part(const Vector& x) const {
  return Vector(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(layout.z_dim));
}

const EdgeCoupling& AgentProgram::coupling_to(int peer) const {
  for (const auto& c : couplings)
    if (c.peer == peer) return c;
  throw std::out_of_range("agent " + std::to_string(layout.agent) + " has no coupling to " +
                          std::to_string(peer));
}

std::vector<AgentLayout> build_layouts(const BlockProblem& p, const PartitionIndex& idx,
                                       const Graph& g) {
  std::vector<AgentLayout> layouts(static_cast<std::size_t>(p.N));
  for (int i = 1; i <= p.N; ++i) {
    AgentLayout& layout = layouts[static_cast<std::size_t>(i - 1)];
    layout.agent = i;

    std::size_t off = 0;
    for (int l = 1; l <= p.L; ++l) {
      const auto& sc = idx.SC[static_cast<std::size_t>(l)];
      if (!std::binary_search(sc.begin(), sc.end(), i)) continue;
      const auto len = static_cast<std::size_t>(p.col_dim(l));
      layout.owned_cols.push_back({l, off, len});
      off += len;
    }
    layout.z_dim = off;
    if (layout.z_dim == 0)
      throw std::invalid_argument("agent " + std::to_string(i) +
                                  " owns no blocks and has no variables; the setup is ill-posed");

    for (int eps : idx.coupled_of[static_cast<std::size_t>(i)]) {
      const auto& owners = idx.SR[static_cast<std::size_t>(eps)];
      const auto len = static_cast<std::size_t>(p.row_dim(eps));
      for (int j : g.neighbors(i)) {
        if (!std::binary_search(owners.begin(), owners.end(), j)) continue;
        layout.v_slots.push_back({eps, j, off, len});
        off += len;
      }
    }
    layout.x_dim = off;
  }
  return layouts;
}

Matrix build_selector(const PartitionIndex& idx, const AgentLayout& layout, int j) {
  std::size_t rows = 0;
  for (const auto& slot : layout.owned_cols) {
    const auto& sc = idx.SC[static_cast<std::size_t>(slot.l)];
    if (std::binary_search(sc.begin(), sc.end(), j)) rows += slot.len;
  }
  Matrix p_sel(rows, layout.z_dim);
  std::size_t r = 0;
  for (const auto& slot : layout.owned_cols) {
    const auto& sc = idx.SC[static_cast<std::size_t>(slot.l)];
    if (!std::binary_search(sc.begin(), sc.end(), j)) continue;
    for (std::size_t t = 0; t < slot.len; ++t) p_sel(r + t, slot.offset + t) = 1.0;
    r += slot.len;
  }
  return p_sel;
}

RowData build_row_data(const BlockProblem& p, const PartitionIndex& idx,
                       const std::map<std::pair<int, int>, Vector>& h_pieces, const Graph& g,
                       const AgentLayout& layout) {
  const int i = layout.agent;
  RowData data;

  std::vector<int> sole_rows;
  std::size_t sole_height = 0;
  for (int k = 1; k <= p.K; ++k) {
    if (idx.sole_owner(k) == i) {
      sole_rows.push_back(k);
      sole_height += static_cast<std::size_t>(p.row_dim(k));
    }
  }
  data.A = Matrix(sole_height, layout.z_dim);
  data.a.assign(sole_height, 0.0);
  std::size_t row_off = 0;
  for (int k : sole_rows) {
    for (int l : idx.blocks_of.at({k, i})) {
      const Matrix& block = p.blocks.at({k, l});
      const ColSlot* slot = layout.find_col(l);
      for (std::size_t r = 0; r < block.rows(); ++r)
        for (std::size_t c = 0; c < block.cols(); ++c)
          data.A(row_off + r, slot->offset + c) = block(r, c);
    }
    const Vector& piece = h_pieces.at({k, i});
    std::copy(piece.begin(), piece.end(),
              data.a.begin() + static_cast<std::ptrdiff_t>(row_off));
    row_off += static_cast<std::size_t>(p.row_dim(k));
  }

  for (int eps : idx.coupled_of[static_cast<std::size_t>(i)]) {
    CoupledRowData row;
    row.eps = eps;
    const auto& owners = idx.SR[static_cast<std::size_t>(eps)];
    row.weight = static_cast<double>(owners.size());
    row.B = Matrix(static_cast<std::size_t>(p.row_dim(eps)), layout.z_dim);
    if (auto it = idx.blocks_of.find({eps, i}); it != idx.blocks_of.end()) {
      for (int l : it->second) {
        const Matrix& block = p.blocks.at({eps, l});
        const ColSlot* slot = layout.find_col(l);
        for (std::size_t r = 0; r < block.rows(); ++r)
          for (std::size_t c = 0; c < block.cols(); ++c) row.B(r, slot->offset + c) = block(r, c);
      }
    }
    row.b = h_pieces.at({eps, i});
    for (int j : g.neighbors(i))
      if (std::binary_search(owners.begin(), owners.end(), j)) row.neighbors.push_back(j);
    data.coupled.push_back(std::move(row));
  }
  return data;
}

Matrix coupled_row_map(const AgentLayout& layout, const CoupledRowData& row) {
  Matrix r_map(row.B.rows(), layout.x_dim);
  for (std::size_t r = 0; r < row.B.rows(); ++r)
    for (std::size_t c = 0; c < row.B.cols(); ++c) r_map(r, c) = row.B(r, c);
  for (int j : row.neighbors) {
    const VSlot* slot = layout.find_v(row.eps, j);
    for (std::size_t t = 0; t < slot->len; ++t) r_map(t, slot->offset + t) = 1.0;
  }
  return r_map;
}

void build_quadratic(AgentProgram& prog) {
  const std::size_t xd = prog.layout.x_dim;
  prog.Q = Matrix(xd, xd);
  prog.q.assign(xd, 0.0);
  prog.cost_const = 0.0;

  if (prog.A.rows() > 0) {
    Matrix a_full(prog.A.rows(), xd);
    for (std::size_t r = 0; r < prog.A.rows(); ++r)
      for (std::size_t c = 0; c < prog.A.cols(); ++c) a_full(r, c) = prog.A(r, c);
    gram_acc(prog.Q, a_full, 1.0);
    Vector at_a = matvec_t(a_full, prog.a);
    axpy(-1.0, at_a, prog.q);
    prog.cost_const += 0.5 * dot(prog.a, prog.a);
  }
  for (const auto& row : prog.coupled) {
    const Matrix r_map = coupled_row_map(prog.layout, row);
    gram_acc(prog.Q, r_map, row.weight);
    Vector rt_b = matvec_t(r_map, row.b);
    axpy(-row.weight, rt_b, prog.q);
    prog.cost_const += 0.5 * row.weight * dot(row.b, row.b);
  }
}

EdgeCoupling build_coupling(const PartitionIndex& idx, const AgentLayout& layout,
                            const std::vector<CoupledRowData>& coupled, int i, int j) {
  EdgeCoupling coupling;
  coupling.peer = j;

  const Matrix p_sel = build_selector(idx, layout, j);
  coupling.shared_rows = p_sel.rows();

  std::vector<const CoupledRowData*> shared_rows_data;
  for (const auto& row : coupled) {
    const auto& mj = idx.coupled_of[static_cast<std::size_t>(j)];
    if (std::binary_search(mj.begin(), mj.end(), row.eps)) shared_rows_data.push_back(&row);
  }

  std::size_t rows = p_sel.rows();
  for (const auto* row : shared_rows_data) rows += 2 * row->B.rows();

  coupling.E = Matrix(rows, layout.x_dim);
  coupling.e.assign(rows, 0.0);

  for (std::size_t r = 0; r < p_sel.rows(); ++r)
    for (std::size_t c = 0; c < p_sel.cols(); ++c) coupling.E(r, c) = p_sel(r, c);

  std::size_t off = p_sel.rows();
  for (const auto* row : shared_rows_data) {
    const Matrix r_map = coupled_row_map(layout, *row);
    for (std::size_t r = 0; r < r_map.rows(); ++r)
      for (std::size_t c = 0; c < r_map.cols(); ++c) coupling.E(off + r, c) = r_map(r, c);
    std::copy(row->b.begin(), row->b.end(),
              coupling.e.begin() + static_cast<std::ptrdiff_t>(off));
    off += r_map.rows();

    // sign agreed without negotiation: +I at the smaller id
    const double sign = i < j ? 1.0 : -1.0;
    const VSlot* slot = layout.find_v(row->eps, j);
    for (std::size_t t = 0; t < slot->len; ++t) coupling.E(off + t, slot->offset + t) = sign;
    off += slot->len;
  }
  return coupling;
}

CompiledProblem compile(const BlockProblem& p, const Graph& g) {
  ValidationReport report = validate(p, g);
  if (!report.pass)
    throw std::invalid_argument("compile: validation failed: " + report.summary());

  CompiledProblem compiled;
  compiled.problem = p;
  compiled.graph = g;
  compiled.idx = build_index(p);
  compiled.h_pieces = split_h(p, compiled.idx);

  auto layouts = build_layouts(p, compiled.idx, g);
  compiled.agents.resize(static_cast<std::size_t>(p.N));
  for (int i = 1; i <= p.N; ++i) {
    AgentProgram& prog = compiled.agents[static_cast<std::size_t>(i - 1)];
    prog.layout = layouts[static_cast<std::size_t>(i - 1)];
    RowData data = build_row_data(p, compiled.idx, compiled.h_pieces, g, prog.layout);
    prog.A = std::move(data.A);
    prog.a = std::move(data.a);
    prog.coupled = std::move(data.coupled);
    for (int j : g.neighbors(i))
      prog.couplings.push_back(build_coupling(compiled.idx, prog.layout, prog.coupled, i, j));
    build_quadratic(prog);
  }
  return compiled;
}

std::vector<Vector> split_z(const BlockProblem& p, const Vector& z_full) {
  if (static_cast<int>(z_full.size()) != p.total_cols())
    throw std::invalid_argument("split_z: length mismatch");
  std::vector<Vector> parts(static_cast<std::size_t>(p.L) + 1);
  std::size_t off = 0;
  for (int l = 1; l <= p.L; ++l) {
    const auto len = static_cast<std::size_t>(p.col_dim(l));
    parts[static_cast<std::size_t>(l)] =
        Vector(z_full.begin() + static_cast<std::ptrdiff_t>(off),
               z_full.begin() + static_cast<std::ptrdiff_t>(off + len));
    off += len;
  }
  return parts;
}

std::map<std::pair<int, int>, Vector> balance_virtual_flows(
    const BlockProblem& p, const PartitionIndex& idx, const Graph& g, int eps,
    const Vector& z_full, const std::map<std::pair<int, int>, Vector>& h_pieces) {
  if (!idx.is_coupled(eps))
    throw std::invalid_argument("balance_virtual_flows: row partition " + std::to_string(eps) +
                                " is not coupled");
  const auto& owners = idx.SR[static_cast<std::size_t>(eps)];
  std::set<int> nodes(owners.begin(), owners.end());
  if (!g.is_connected(nodes))
    throw std::invalid_argument("balance_virtual_flows: induced subgraph of row partition " +
                                std::to_string(eps) + " is disconnected");

  const auto z_parts = split_z(p, z_full);
  const auto m_eps = static_cast<std::size_t>(p.row_dim(eps));

  // residual share of each owner and the equal target u/|S|
  std::map<int, Vector> share;
  Vector target(m_eps, 0.0);
  for (int i : owners) {
    Vector d(m_eps, 0.0);
    if (auto it = idx.blocks_of.find({eps, i}); it != idx.blocks_of.end()) {
      for (int l : it->second) {
        const Vector bz = matvec(p.blocks.at({eps, l}), z_parts[static_cast<std::size_t>(l)]);
        axpy(1.0, bz, d);
      }
    }
    axpy(-1.0, h_pieces.at({eps, i}), d);
    axpy(1.0, d, target);
    share[i] = std::move(d);
  }
  const double inv = 1.0 / static_cast<double>(owners.size());
  for (double& t : target) t *= inv;

  // deficits routed leaf-to-root along the BFS spanning tree
  std::map<int, Vector> carry;
  for (int i : owners) {
    Vector deficit = target;
    axpy(-1.0, share[i], deficit);
    carry[i] = std::move(deficit);
  }

  const auto tree = g.bfs_tree(nodes);
  std::map<int, int> parent_of;
  for (auto [node, parent] : tree.parent) parent_of[node] = parent;

  std::map<std::pair<int, int>, Vector> flows;
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    const int node = *it;
    const int parent = parent_of[node];
    if (parent == 0) continue;
    flows[{node, parent}] = carry[node];
    Vector neg = carry[node];
    for (double& v : neg) v = -v;
    flows[{parent, node}] = std::move(neg);
    axpy(1.0, flows[{node, parent}], carry[parent]);
  }

  // zero flows on non-tree edges of the induced subgraph
  for (int i : owners)
    for (int j : g.neighbors(i)) {
      if (!nodes.count(j)) continue;
      if (!flows.count({i, j})) flows[{i, j}] = Vector(m_eps, 0.0);
    }
  return flows;
}

Vector feasible_local_x(const AgentLayout& layout, const BlockProblem& p, const Vector& z_full,
                        const std::map<int, std::map<std::pair<int, int>, Vector>>& flows_by_eps) {
  const auto z_parts = split_z(p, z_full);
  Vector x(layout.x_dim, 0.0);
  for (const auto& slot : layout.owned_cols) {
    const Vector& part = z_parts[static_cast<std::size_t>(slot.l)];
    std::copy(part.begin(), part.end(), x.begin() + static_cast<std::ptrdiff_t>(slot.offset));
  }
  for (const auto& slot : layout.v_slots) {
    const Vector& flow = flows_by_eps.at(slot.eps).at({layout.agent, slot.peer});
    std::copy(flow.begin(), flow.end(), x.begin() + static_cast<std::ptrdiff_t>(slot.offset));
  }
  return x;
}

}  // namespace blocklsq
