#include "blocklsq/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace blocklsq {

namespace {

std::string block_name(int k, int l) {
  return "(" + std::to_string(k) + "," + std::to_string(l) + ")";
}

}  // namespace

int BlockProblem::total_rows() const {
  return std::accumulate(row_dims.begin(), row_dims.end(), 0);
}

int BlockProblem::total_cols() const {
  return std::accumulate(col_dims.begin(), col_dims.end(), 0);
}

void BlockProblem::check_structure() const {
  if (K <= 0 || L <= 0 || N <= 0)
    throw std::invalid_argument("problem: K, L and N must be positive");
  if (static_cast<int>(row_dims.size()) != K || static_cast<int>(col_dims.size()) != L)
    throw std::invalid_argument("problem: row_dims/col_dims length mismatch");
  for (int k = 1; k <= K; ++k)
    if (row_dim(k) <= 0)
      throw std::invalid_argument("problem: row_dims[" + std::to_string(k) + "] must be positive");
  for (int l = 1; l <= L; ++l)
    if (col_dim(l) <= 0)
      throw std::invalid_argument("problem: col_dims[" + std::to_string(l) + "] must be positive");

  for (const auto& [kl, block] : blocks) {
    const auto [k, l] = kl;
    if (k < 1 || k > K || l < 1 || l > L)
      throw std::invalid_argument("problem: block " + block_name(k, l) + " out of grid");
    if (block.rows() != static_cast<std::size_t>(row_dim(k)) ||
        block.cols() != static_cast<std::size_t>(col_dim(l)))
      throw std::invalid_argument("problem: block " + block_name(k, l) + " has shape " +
                                  std::to_string(block.rows()) + "x" + std::to_string(block.cols()) +
                                  ", expected " + std::to_string(row_dim(k)) + "x" +
                                  std::to_string(col_dim(l)));
    if (!block.all_finite())
      throw std::invalid_argument("problem: block " + block_name(k, l) + " has non-finite entries");
    auto it = owner.find(kl);
    if (it == owner.end())
      throw std::invalid_argument("problem: block " + block_name(k, l) + " has no owner");
    if (it->second < 1 || it->second > N)
      throw std::invalid_argument("problem: owner of block " + block_name(k, l) + " is " +
                                  std::to_string(it->second) + ", outside 1.." + std::to_string(N));
  }
  for (const auto& [kl, who] : owner) {
    if (!blocks.count(kl))
      throw std::invalid_argument("problem: owner " + std::to_string(who) + " declared for absent block " +
                                  block_name(kl.first, kl.second));
  }
  for (int k = 1; k <= K; ++k) {
    auto it = h_parts.find(k);
    if (it == h_parts.end())
      throw std::invalid_argument("problem: missing h for row partition " + std::to_string(k));
    if (static_cast<int>(it->second.size()) != row_dim(k))
      throw std::invalid_argument("problem: h for row partition " + std::to_string(k) +
                                  " has length " + std::to_string(it->second.size()) + ", expected " +
                                  std::to_string(row_dim(k)));
    for (double v : it->second)
      if (!std::isfinite(v))
        throw std::invalid_argument("problem: h for row partition " + std::to_string(k) +
                                    " has non-finite entries");
  }
}

bool PartitionIndex::is_coupled(int k) const {
  return std::binary_search(coupled.begin(), coupled.end(), k);
}

int PartitionIndex::sole_owner(int k) const {
  const auto& s = SR[static_cast<std::size_t>(k)];
  return s.size() == 1 ? s.front() : 0;
}

PartitionIndex build_index(const BlockProblem& p) {
  p.check_structure();

  PartitionIndex idx;
  idx.R.assign(static_cast<std::size_t>(p.K) + 1, {});
  idx.C.assign(static_cast<std::size_t>(p.L) + 1, {});
  idx.SR.assign(static_cast<std::size_t>(p.K) + 1, {});
  idx.SC.assign(static_cast<std::size_t>(p.L) + 1, {});
  idx.coupled_of.assign(static_cast<std::size_t>(p.N) + 1, {});

  for (int k = 1; k <= p.K; ++k) idx.R[k].assign(static_cast<std::size_t>(p.L), 0);
  for (int l = 1; l <= p.L; ++l) idx.C[l].assign(static_cast<std::size_t>(p.K), 0);

  for (const auto& [kl, who] : p.owner) {
    const auto [k, l] = kl;
    idx.R[k][static_cast<std::size_t>(l - 1)] = who;
    idx.C[l][static_cast<std::size_t>(k - 1)] = who;
    idx.blocks_of[{k, who}].push_back(l);
  }
  for (auto& [ki, cols] : idx.blocks_of) std::sort(cols.begin(), cols.end());

  auto dedupe = [](const std::vector<int>& list) {
    std::set<int> s(list.begin(), list.end());
    s.erase(0);
    return std::vector<int>(s.begin(), s.end());
  };
  for (int k = 1; k <= p.K; ++k) idx.SR[k] = dedupe(idx.R[k]);
  for (int l = 1; l <= p.L; ++l) idx.SC[l] = dedupe(idx.C[l]);

  for (int k = 1; k <= p.K; ++k) {
    if (idx.SR[k].size() >= 2) {
      idx.coupled.push_back(k);
      for (int i : idx.SR[k]) idx.coupled_of[static_cast<std::size_t>(i)].push_back(k);
    }
  }
  return idx;
}

std::map<std::pair<int, int>, Vector> split_h(const BlockProblem& p, const PartitionIndex& idx) {
  std::map<std::pair<int, int>, Vector> out;
  for (int k = 1; k <= p.K; ++k) {
    const auto& agents = idx.SR[static_cast<std::size_t>(k)];
    if (agents.empty()) continue;  // empty row partition carries no data
    const Vector& hk = p.h_parts.at(k);
    const int m = p.row_dim(k);

    HSplit split;
    if (auto it = p.h_split.find(k); it != p.h_split.end()) split = it->second;

    if (agents.size() == 1) {
      // sole owner knows the whole vector regardless of policy
      out[{k, agents.front()}] = hk;
      continue;
    }

    switch (split.mode) {
      case SplitMode::owner: {
        out[{k, agents.front()}] = hk;
        for (std::size_t a = 1; a < agents.size(); ++a)
          out[{k, agents[a]}] = Vector(static_cast<std::size_t>(m), 0.0);
        break;
      }
      case SplitMode::equal: {
        // share q for everyone, with the division residual folded into the
        // lowest-indexed agent so the parts add back to h_k exactly
        const double count = static_cast<double>(agents.size());
        Vector q(hk.size());
        Vector first(hk.size());
        for (std::size_t c = 0; c < hk.size(); ++c) {
          q[c] = hk[c] / count;
          const double nm1q_hi = (count - 1.0) * q[c];
          const double nm1q_lo = std::fma(count - 1.0, q[c], -nm1q_hi);
          first[c] = (hk[c] - nm1q_hi) - nm1q_lo;
        }
        out[{k, agents.front()}] = first;
        for (std::size_t a = 1; a < agents.size(); ++a) out[{k, agents[a]}] = q;
        break;
      }
      case SplitMode::explicit_parts: {
        for (const auto& [agent, part] : split.parts) {
          if (!std::binary_search(agents.begin(), agents.end(), agent))
            throw std::invalid_argument("split_h: explicit part for agent " + std::to_string(agent) +
                                        " which is not in S(R_" + std::to_string(k) + ")");
        }
        for (int agent : agents) {
          auto it = split.parts.find(agent);
          if (it == split.parts.end())
            throw std::invalid_argument("split_h: row partition " + std::to_string(k) +
                                        " is missing an explicit part for agent " +
                                        std::to_string(agent));
          if (static_cast<int>(it->second.size()) != m)
            throw std::invalid_argument("split_h: explicit part for agent " + std::to_string(agent) +
                                        " in row partition " + std::to_string(k) + " has wrong length");
          out[{k, agent}] = it->second;
        }
        break;
      }
    }

    // exact-sum check, compensated
    Vector terms(agents.size());
    for (std::size_t c = 0; c < hk.size(); ++c) {
      for (std::size_t a = 0; a < agents.size(); ++a) terms[a] = out[{k, agents[a]}][c];
      if (compensated_sum(terms.data(), terms.size()) != hk[c])
        throw std::invalid_argument("split_h: parts of row partition " + std::to_string(k) +
                                    " do not sum to h exactly at component " + std::to_string(c));
    }
  }
  return out;
}

std::pair<Matrix, Vector> assemble_dense(const BlockProblem& p) {
  p.check_structure();
  const int m = p.total_rows();
  const int n = p.total_cols();
  Matrix h_mat(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
  Vector h_vec(static_cast<std::size_t>(m), 0.0);

  std::vector<int> row_off(static_cast<std::size_t>(p.K) + 1, 0);
  std::vector<int> col_off(static_cast<std::size_t>(p.L) + 1, 0);
  for (int k = 1; k <= p.K; ++k) row_off[k] = row_off[k - 1] + p.row_dim(k);
  for (int l = 1; l <= p.L; ++l) col_off[l] = col_off[l - 1] + p.col_dim(l);

  for (const auto& [kl, block] : p.blocks) {
    const auto [k, l] = kl;
    const int r0 = row_off[k - 1];
    const int c0 = col_off[l - 1];
    for (std::size_t r = 0; r < block.rows(); ++r)
      for (std::size_t c = 0; c < block.cols(); ++c)
        h_mat(static_cast<std::size_t>(r0) + r, static_cast<std::size_t>(c0) + c) = block(r, c);
  }
  for (int k = 1; k <= p.K; ++k) {
    const Vector& hk = p.h_parts.at(k);
    std::copy(hk.begin(), hk.end(), h_vec.begin() + row_off[k - 1]);
  }
  return {std::move(h_mat), std::move(h_vec)};
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (pass ? "pass" : "fail");
  for (const auto& issue : issues)
    os << "\n  " << (issue.fatal ? "error: " : "warning: ") << issue.message;
  return os.str();
}

ValidationReport validate(const BlockProblem& p, const Graph& g) {
  ValidationReport report;
  auto add = [&report](ValidationIssue::Kind kind, int partition, bool fatal, std::string msg) {
    report.issues.push_back({kind, partition, fatal, std::move(msg)});
    if (fatal) report.pass = false;
  };

  PartitionIndex idx;
  try {
    idx = build_index(p);
  } catch (const std::exception& e) {
    add(ValidationIssue::Kind::whole_graph, 0, true, e.what());
    return report;
  }
  if (g.node_count() != p.N) {
    add(ValidationIssue::Kind::whole_graph, 0, true,
        "graph has " + std::to_string(g.node_count()) + " nodes, problem expects " +
            std::to_string(p.N));
    return report;
  }

  {
    std::set<int> all;
    for (int i = 1; i <= p.N; ++i) all.insert(i);
    if (!g.is_connected(all))
      add(ValidationIssue::Kind::whole_graph, 0, true, "communication graph is disconnected");
  }

  for (int l = 1; l <= p.L; ++l) {
    const auto& sc = idx.SC[static_cast<std::size_t>(l)];
    if (sc.empty()) {
      add(ValidationIssue::Kind::col_subgraph, l, true,
          "column partition " + std::to_string(l) + " has no blocks; the unknown part is untouched");
      continue;
    }
    std::set<int> nodes(sc.begin(), sc.end());
    if (!g.is_connected(nodes))
      add(ValidationIssue::Kind::col_subgraph, l, true,
          "induced subgraph of column partition " + std::to_string(l) + " is disconnected");
  }
  for (int k = 1; k <= p.K; ++k) {
    const auto& sr = idx.SR[static_cast<std::size_t>(k)];
    if (sr.empty()) {
      add(ValidationIssue::Kind::row_subgraph, k, true,
          "row partition " + std::to_string(k) + " has no blocks; its equations are unreachable");
      continue;
    }
    std::set<int> nodes(sr.begin(), sr.end());
    if (!g.is_connected(nodes))
      add(ValidationIssue::Kind::row_subgraph, k, true,
          "induced subgraph of row partition " + std::to_string(k) + " is disconnected");
  }

  try {
    split_h(p, idx);
  } catch (const std::exception& e) {
    add(ValidationIssue::Kind::split, 0, true, e.what());
  }

  for (int k = 1; k <= p.K; ++k)
    for (int k2 = k + 1; k2 <= p.K; ++k2)
      if (!idx.R[static_cast<std::size_t>(k)].empty() &&
          idx.R[static_cast<std::size_t>(k)] == idx.R[static_cast<std::size_t>(k2)])
        add(ValidationIssue::Kind::duplicate_row_list, k, false,
            "row partitions " + std::to_string(k) + " and " + std::to_string(k2) +
                " have identical agent lists; they are kept separate");

  return report;
}

}  // namespace blocklsq
