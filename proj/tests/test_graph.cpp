#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "blocklsq/graph.hpp"
#include "blocklsq/rng.hpp"

using namespace blocklsq;

namespace {

Graph five_agent_graph() {
  return Graph(5, {{1, 2}, {1, 3}, {2, 4}, {3, 4}, {2, 5}, {3, 5}});
}

// independent reachability oracle
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n) + 1) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

TEST_CASE("neighbor sets of the five-agent graph") {
  const Graph g = five_agent_graph();
  CHECK(g.neighbors(1) == std::vector<int>{2, 3});
  CHECK(g.neighbors(4) == std::vector<int>{2, 3});
  CHECK(g.neighbors(5) == std::vector<int>{2, 3});
  CHECK_THROWS(g.neighbors(0));
  CHECK_THROWS(g.neighbors(6));

  const Graph edgeless(3, {});
  CHECK(edgeless.neighbors(2).empty());
}

TEST_CASE("graph construction rejects bad edges") {
  CHECK_THROWS(Graph(3, {{1, 1}}));
  CHECK_THROWS(Graph(3, {{0, 2}}));
  CHECK_THROWS(Graph(3, {{1, 4}}));
  const Graph g(3, {{1, 2}, {2, 1}});  // duplicates collapse
  CHECK(g.edges().size() == 1);
}

TEST_CASE("induced subgraphs") {
  const Graph g = five_agent_graph();
  const Graph sub = g.induced_subgraph({2, 3, 4});
  CHECK(sub.edges() == std::vector<std::pair<int, int>>{{2, 4}, {3, 4}});
  const Graph pair = g.induced_subgraph({2, 4});
  CHECK(pair.edges() == std::vector<std::pair<int, int>>{{2, 4}});
  CHECK(g.induced_subgraph({3}).edges().empty());
  CHECK(g.induced_subgraph({1, 2, 3, 4, 5}).edges() == g.edges());
  CHECK_THROWS(g.induced_subgraph({1, 9}));
}

TEST_CASE("connectivity checks") {
  const Graph g = five_agent_graph();
  CHECK(g.is_connected({1, 2, 3, 4, 5}));
  CHECK_FALSE(g.is_connected({1, 4}));
  CHECK(g.is_connected({3}));
  CHECK_THROWS(g.is_connected({}));
}

TEST_CASE("spanning trees are deterministic breadth-first") {
  const Graph g = five_agent_graph();
  CHECK(g.spanning_tree({2, 3, 4}) == std::vector<std::pair<int, int>>{{2, 4}, {3, 4}});

  const Graph path(3, {{1, 2}, {2, 3}});
  CHECK(path.spanning_tree({1, 2, 3}) == std::vector<std::pair<int, int>>{{1, 2}, {2, 3}});
  CHECK(path.spanning_tree({2}).empty());
  CHECK_THROWS(g.spanning_tree({1, 4}));
}

TEST_CASE("is_connected agrees with a union-find oracle on random graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 11);  // up to 12 nodes
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (rng.next_unit() < 0.25) edges.emplace_back(i, j);
    const Graph g(n, edges);

    std::set<int> nodes;
    for (int i = 1; i <= n; ++i)
      if (rng.next_unit() < 0.7) nodes.insert(i);
    if (nodes.empty()) nodes.insert(1);

    UnionFind uf(n);
    for (auto [i, j] : edges)
      if (nodes.count(i) && nodes.count(j)) uf.unite(i, j);
    std::set<int> roots;
    for (int i : nodes) roots.insert(uf.find(i));

    CHECK(g.is_connected(nodes) == (roots.size() == 1));

    if (roots.size() == 1) {
      const auto tree = g.spanning_tree(nodes);
      CHECK(tree.size() == nodes.size() - 1);
      // tree edges are induced edges and connect the node set
      UnionFind check(n);
      for (auto [i, j] : tree) {
        CHECK(g.has_edge(i, j));
        CHECK(nodes.count(i));
        CHECK(nodes.count(j));
        CHECK(check.find(i) != check.find(j));  // acyclic
        check.unite(i, j);
      }
      std::set<int> tree_roots;
      for (int i : nodes) tree_roots.insert(check.find(i));
      CHECK(tree_roots.size() == 1);
    }
  }
}
