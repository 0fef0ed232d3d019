#pragma once

#include <set>
#include <utility>
#include <vector>

namespace blocklsq {

// Undirected communication graph on agents 1..N. No self-loops, no
// duplicate edges; immutable after construction.
class Graph {
 public:
  Graph() = default;
  Graph(int node_count, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return node_count_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  bool has_edge(int i, int j) const;

  // Ascending neighbor set N_i.
  const std::vector<int>& neighbors(int i) const;

  Graph induced_subgraph(const std::set<int>& nodes) const;
  bool is_connected(const std::set<int>& nodes) const;

  // Deterministic spanning tree of the subgraph induced by `nodes`:
  // breadth-first from the smallest node id, neighbors visited ascending.
  // Edges come back normalized as (min,max) in discovery order.
  std::vector<std::pair<int, int>> spanning_tree(const std::set<int>& nodes) const;

  // BFS tree of the induced subgraph with parent links and visit order;
  // used by the virtual-flow construction. parent[root] = 0.
  struct BfsTree {
    std::vector<int> order;
    std::vector<std::pair<int, int>> parent;  // (node, parent)
  };
  BfsTree bfs_tree(const std::set<int>& nodes) const;

 private:
  void check_node(int i) const;

  int node_count_ = 0;
  std::vector<std::pair<int, int>> edges_;           // normalized (i<j), sorted
  std::vector<std::vector<int>> adjacency_;          // 1-based, ascending
};

}  // namespace blocklsq
