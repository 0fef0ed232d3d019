#include "blocklsq/generators.hpp"

#include <stdexcept>
#include <string>

#include "blocklsq/dense.hpp"
#include "blocklsq/rng.hpp"

namespace blocklsq {

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.next_pm1();
  return m;
}

Vector random_vector(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.next_pm1();
  return v;
}

const std::vector<std::pair<int, int>> kFiveAgentEdges = {{1, 2}, {1, 3}, {2, 4},
                                                          {3, 4}, {2, 5}, {3, 5}};

}  // namespace

GeneratedProblem gen_grid(const GridSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw std::invalid_argument("gen_grid: rows and cols must be >= 1");
  const int n_shared = spec.n_shared > 0 ? spec.n_shared : spec.m_coupled;
  const int n_private = spec.n_local - n_shared;
  if (n_shared < 1 || spec.m_coupled < 1 || n_private < spec.m_coupled)
    throw std::invalid_argument(
        "gen_grid: need n_shared >= 1 and n_local - n_shared >= m_coupled >= 1");

  const int n_agents = spec.rows * spec.cols;
  auto node_id = [&](int r, int c) { return r * spec.cols + c + 1; };
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      if (c + 1 < spec.cols) edges.emplace_back(node_id(r, c), node_id(r, c + 1));
      if (r + 1 < spec.rows) edges.emplace_back(node_id(r, c), node_id(r + 1, c));
    }

  GeneratedProblem out;
  out.graph = Graph(n_agents, edges);
  BlockProblem& p = out.problem;
  p.N = n_agents;
  p.K = n_agents + 1;
  p.L = n_agents + 1;
  p.row_dims.assign(static_cast<std::size_t>(n_agents), spec.n_local);
  p.row_dims.push_back(spec.m_coupled);
  p.col_dims.assign(1, n_shared);
  for (int i = 0; i < n_agents; ++i) p.col_dims.push_back(n_private);

  Rng rng(spec.seed);
  for (int i = 1; i <= n_agents; ++i) {
    const Matrix local = random_matrix(rng, static_cast<std::size_t>(spec.n_local),
                                       static_cast<std::size_t>(spec.n_local));
    Matrix shared_block(local.rows(), static_cast<std::size_t>(n_shared));
    Matrix private_block(local.rows(), static_cast<std::size_t>(n_private));
    for (std::size_t r = 0; r < local.rows(); ++r) {
      for (int c = 0; c < n_shared; ++c)
        shared_block(r, static_cast<std::size_t>(c)) = local(r, static_cast<std::size_t>(c));
      for (int c = 0; c < n_private; ++c)
        private_block(r, static_cast<std::size_t>(c)) =
            local(r, static_cast<std::size_t>(n_shared + c));
    }
    p.blocks[{i, 1}] = std::move(shared_block);
    p.owner[{i, 1}] = i;
    p.blocks[{i, 1 + i}] = std::move(private_block);
    p.owner[{i, 1 + i}] = i;
    p.h_parts[i] = random_vector(rng, static_cast<std::size_t>(spec.n_local));
    p.h_split[i] = {SplitMode::owner, {}};
  }

  // coupled row partition over the whole network: [0 I] on the trailing
  // local variables of every agent
  const int k_coupled = n_agents + 1;
  HSplit split;
  split.mode = SplitMode::explicit_parts;
  for (int i = 1; i <= n_agents; ++i) {
    Matrix b(static_cast<std::size_t>(spec.m_coupled), static_cast<std::size_t>(n_private));
    for (int t = 0; t < spec.m_coupled; ++t)
      b(static_cast<std::size_t>(t), static_cast<std::size_t>(n_private - spec.m_coupled + t)) =
          1.0;
    p.blocks[{k_coupled, 1 + i}] = std::move(b);
    p.owner[{k_coupled, 1 + i}] = i;
    split.parts[i] = random_vector(rng, static_cast<std::size_t>(spec.m_coupled));
  }
  Vector h_coupled(static_cast<std::size_t>(spec.m_coupled), 0.0);
  Vector terms(static_cast<std::size_t>(n_agents));
  for (int c = 0; c < spec.m_coupled; ++c) {
    for (int i = 1; i <= n_agents; ++i)
      terms[static_cast<std::size_t>(i - 1)] = split.parts[i][static_cast<std::size_t>(c)];
    h_coupled[static_cast<std::size_t>(c)] = compensated_sum(terms.data(), terms.size());
  }
  p.h_parts[k_coupled] = std::move(h_coupled);
  p.h_split[k_coupled] = std::move(split);
  return out;
}

GeneratedProblem gen_fig3(int which) {
  if (which != 1 && which != 2) throw std::invalid_argument("gen_fig3: which must be 1 or 2");

  static const double a1[5][4] = {{1, 2, 1, 1},
                                  {2, -1, -1, 1},
                                  {1, -2, 4, -1},
                                  {-1, -0.6, 0.4, 1.8},
                                  {2, 2, -2, 1}};
  static const double a2[5][4] = {{1, 2, 1, 1},
                                  {1, 1.4, -1.6, 2.8},
                                  {3, 3.0, -3.6, 3.8},
                                  {-1, -0.6, 0.4, 1.8},
                                  {2, 2, -2, 1}};
  static const double b[5] = {10, 20, 15, 17, 11};

  GeneratedProblem out;
  out.graph = Graph(5, kFiveAgentEdges);
  BlockProblem& p = out.problem;
  p.N = 5;
  p.K = 5;
  p.L = 1;
  p.row_dims.assign(5, 1);
  p.col_dims.assign(1, 4);
  for (int i = 1; i <= 5; ++i) {
    Matrix row(1, 4);
    for (int c = 0; c < 4; ++c)
      row(0, static_cast<std::size_t>(c)) =
          which == 1 ? a1[i - 1][c] : a2[i - 1][c];
    p.blocks[{i, 1}] = std::move(row);
    p.owner[{i, 1}] = i;
    p.h_parts[i] = {b[i - 1]};
    p.h_split[i] = {SplitMode::owner, {}};
  }
  return out;
}

GeneratedProblem gen_appendix_a(const std::vector<int>& row_dims,
                                const std::vector<int>& col_dims, std::uint64_t seed) {
  if (row_dims.size() != 6 || col_dims.size() != 4)
    throw std::invalid_argument("gen_appendix_a: expects 6 row dims and 4 column dims");
  for (int d : row_dims)
    if (d < 1) throw std::invalid_argument("gen_appendix_a: row dims must be >= 1");
  for (int d : col_dims)
    if (d < 1) throw std::invalid_argument("gen_appendix_a: column dims must be >= 1");

  static const std::vector<std::pair<std::pair<int, int>, int>> ownership = {
      {{1, 1}, 1}, {{1, 3}, 1}, {{2, 1}, 2}, {{2, 4}, 4}, {{3, 2}, 3},
      {{3, 3}, 3}, {{4, 1}, 2}, {{4, 3}, 3}, {{4, 4}, 4}, {{5, 1}, 5},
      {{5, 3}, 5}, {{6, 1}, 5}, {{6, 2}, 5}};

  GeneratedProblem out;
  out.graph = Graph(5, kFiveAgentEdges);
  BlockProblem& p = out.problem;
  p.N = 5;
  p.K = 6;
  p.L = 4;
  p.row_dims = row_dims;
  p.col_dims = col_dims;

  Rng rng(seed);
  for (const auto& [kl, who] : ownership) {
    const auto [k, l] = kl;
    p.blocks[kl] = random_matrix(rng, static_cast<std::size_t>(row_dims[static_cast<std::size_t>(k - 1)]),
                                 static_cast<std::size_t>(col_dims[static_cast<std::size_t>(l - 1)]));
    p.owner[kl] = who;
  }

  // rows 2 and 4 are shared; each owner draws its explicit part and the
  // row vector is their compensated sum
  const std::vector<std::vector<int>> row_owners = {{}, {1}, {2, 4}, {3}, {2, 3, 4}, {5}, {5}};
  for (int k = 1; k <= 6; ++k) {
    const auto m = static_cast<std::size_t>(row_dims[static_cast<std::size_t>(k - 1)]);
    const auto& owners = row_owners[static_cast<std::size_t>(k)];
    if (owners.size() == 1) {
      p.h_parts[k] = random_vector(rng, m);
      p.h_split[k] = {SplitMode::owner, {}};
      continue;
    }
    HSplit split;
    split.mode = SplitMode::explicit_parts;
    for (int i : owners) split.parts[i] = random_vector(rng, m);
    Vector hk(m, 0.0);
    Vector terms(owners.size());
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t a = 0; a < owners.size(); ++a)
        terms[a] = split.parts[owners[a]][c];
      hk[c] = compensated_sum(terms.data(), terms.size());
    }
    p.h_parts[k] = std::move(hk);
    p.h_split[k] = std::move(split);
  }
  return out;
}

}  // namespace blocklsq
