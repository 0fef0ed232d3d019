#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "blocklsq/dense.hpp"
#include "blocklsq/graph.hpp"

namespace blocklsq {

// How the right-hand-side part of a shared row partition is divided among
// the agents that own blocks in it. The sum of the parts must reproduce the
// row's vector exactly.
enum class SplitMode { owner, equal, explicit_parts };

struct HSplit {
  SplitMode mode = SplitMode::owner;
  std::map<int, Vector> parts;  // agent -> part, explicit mode only
};

// A block-partitioned linear system: K x L grid of blocks, each present
// block owned by exactly one agent. Absent blocks are the zero blocks.
// Agents and partitions are 1-based; owner 0 means "no owner".
struct BlockProblem {
  int K = 0;
  int L = 0;
  int N = 0;
  std::vector<int> row_dims;  // row_dims[k-1] = m_k
  std::vector<int> col_dims;  // col_dims[l-1] = n_l
  std::map<std::pair<int, int>, Matrix> blocks;
  std::map<std::pair<int, int>, int> owner;
  std::map<int, Vector> h_parts;  // k -> h_k
  std::map<int, HSplit> h_split;  // k -> policy (default owner)

  int row_dim(int k) const { return row_dims[static_cast<std::size_t>(k - 1)]; }
  int col_dim(int l) const { return col_dims[static_cast<std::size_t>(l - 1)]; }
  int total_rows() const;
  int total_cols() const;

  // Throws with a message naming the offending block/field if any shape,
  // ownership or right-hand-side invariant is broken.
  void check_structure() const;
};

// Index combinatorics of the ownership grid. All vectors are 1-based
// (slot 0 unused) and deterministically ordered ascending.
struct PartitionIndex {
  std::vector<std::vector<int>> R;    // R[k][l-1] = owner of block (k,l), 0 if absent
  std::vector<std::vector<int>> C;    // C[l][k-1] = owner of block (k,l)
  std::vector<std::vector<int>> SR;   // SR[k] = sorted agent set of row k
  std::vector<std::vector<int>> SC;   // SC[l] = sorted agent set of column l
  std::map<std::pair<int, int>, std::vector<int>> blocks_of;  // (k,i) -> column ids owned by i in row k
  std::vector<int> coupled;           // M: rows with >= 2 owners, ascending
  std::vector<std::vector<int>> coupled_of;  // Mi[i] = coupled rows containing agent i

  bool is_coupled(int k) const;
  // Sole owner of row k, or 0 when the row is coupled.
  int sole_owner(int k) const;
};

PartitionIndex build_index(const BlockProblem& p);

// Splits every h_k among the agents of S(R_k) per the row's policy.
// Postcondition: for each k the parts sum back to h_k exactly under
// compensated summation. Throws on unresolvable explicit splits.
std::map<std::pair<int, int>, Vector> split_h(const BlockProblem& p, const PartitionIndex& idx);

// Dense assembly of H and h with blocks placed at their partition offsets.
std::pair<Matrix, Vector> assemble_dense(const BlockProblem& p);

struct ValidationIssue {
  enum class Kind { row_subgraph, col_subgraph, whole_graph, split, duplicate_row_list };
  Kind kind;
  int partition = 0;  // k or l when applicable
  bool fatal = true;
  std::string message;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationIssue> issues;
  std::string summary() const;
};

// Checks structural validity, connectivity of every induced subgraph the
// method relies on, and resolvability of the h splits. Collects findings
// instead of aborting; duplicate row agent-lists are warnings.
ValidationReport validate(const BlockProblem& p, const Graph& g);

}  // namespace blocklsq
