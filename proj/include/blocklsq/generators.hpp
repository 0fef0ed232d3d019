#pragma once

#include <cstdint>
#include <vector>

#include "blocklsq/graph.hpp"
#include "blocklsq/problem.hpp"

namespace blocklsq {

struct GeneratedProblem {
  BlockProblem problem;
  Graph graph;
};

// Grid-of-agents instance: every agent solely owns an n_local x n_local
// random row partition over its variables, the leading n_shared variables
// are common to all agents, and one coupled row partition of height
// m_coupled spans the whole network hitting the trailing m_coupled local
// variables of every agent. rows=4, cols=6, n_local=20, m_coupled=5
// reproduces the 24-agent benchmark layout.
struct GridSpec {
  int rows = 4;
  int cols = 6;
  int n_local = 20;
  int m_coupled = 5;
  int n_shared = 0;  // 0: same as m_coupled
  std::uint64_t seed = 1;
};

GeneratedProblem gen_grid(const GridSpec& spec);

// Five-agent single-unknown-partition comparison instance; `which` picks
// the full-column-rank system (1) or the rank-deficient one (2).
GeneratedProblem gen_fig3(int which);

// The five-agent, 6x4-block worked example with its fixed ownership
// pattern and random block values; coupled rows get random explicit
// right-hand-side parts.
GeneratedProblem gen_appendix_a(const std::vector<int>& row_dims,
                                const std::vector<int>& col_dims, std::uint64_t seed);

}  // namespace blocklsq
