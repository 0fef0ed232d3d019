#include "blocklsq/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace blocklsq {

Graph::Graph(int node_count, const std::vector<std::pair<int, int>>& edges)
    : node_count_(node_count) {
  if (node_count < 0) throw std::invalid_argument("graph: negative node count");
  adjacency_.assign(static_cast<std::size_t>(node_count) + 1, {});
  std::set<std::pair<int, int>> seen;
  for (auto [i, j] : edges) {
    if (i < 1 || i > node_count || j < 1 || j > node_count)
      throw std::invalid_argument("graph: edge (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") out of range");
    if (i == j)
      throw std::invalid_argument("graph: self-loop at node " + std::to_string(i));
    auto e = std::minmax(i, j);
    if (!seen.insert({e.first, e.second}).second) continue;
    adjacency_[i].push_back(j);
    adjacency_[j].push_back(i);
  }
  edges_.assign(seen.begin(), seen.end());
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

void Graph::check_node(int i) const {
  if (i < 1 || i > node_count_)
    throw std::out_of_range("graph: node " + std::to_string(i) + " out of range 1.." +
                            std::to_string(node_count_));
}

bool Graph::has_edge(int i, int j) const {
  check_node(i);
  check_node(j);
  const auto& adj = adjacency_[i];
  return std::binary_search(adj.begin(), adj.end(), j);
}

const std::vector<int>& Graph::neighbors(int i) const {
  check_node(i);
  return adjacency_[i];
}

Graph Graph::induced_subgraph(const std::set<int>& nodes) const {
  std::vector<std::pair<int, int>> kept;
  for (int i : nodes) {
    check_node(i);
    for (int j : adjacency_[i])
      if (i < j && nodes.count(j)) kept.emplace_back(i, j);
  }
  return Graph(node_count_, kept);
}

bool Graph::is_connected(const std::set<int>& nodes) const {
  if (nodes.empty()) throw std::invalid_argument("is_connected: empty node set");
  return bfs_tree(nodes).order.size() == nodes.size();
}

Graph::BfsTree Graph::bfs_tree(const std::set<int>& nodes) const {
  BfsTree tree;
  if (nodes.empty()) return tree;
  for (int i : nodes) check_node(i);

  std::set<int> visited;
  std::vector<int> queue;
  const int root = *nodes.begin();
  visited.insert(root);
  queue.push_back(root);
  tree.parent.emplace_back(root, 0);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    tree.order.push_back(u);
    for (int v : adjacency_[u]) {
      if (!nodes.count(v) || visited.count(v)) continue;
      visited.insert(v);
      queue.push_back(v);
      tree.parent.emplace_back(v, u);
    }
  }
  return tree;
}

std::vector<std::pair<int, int>> Graph::spanning_tree(const std::set<int>& nodes) const {
  if (!is_connected(nodes))
    throw std::invalid_argument("spanning_tree: induced subgraph is disconnected");
  std::vector<std::pair<int, int>> edges;
  for (auto [node, parent] : bfs_tree(nodes).parent) {
    if (parent != 0) edges.push_back(std::minmax(node, parent));
  }
  return edges;
}

}  // namespace blocklsq
