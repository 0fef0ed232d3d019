#pragma once

#include <string>

#include "blocklsq/generators.hpp"
#include "blocklsq/graph.hpp"
#include "blocklsq/problem.hpp"

namespace blocklsq {

// JSON problem-file format (UTF-8):
//   row_dims, col_dims : arrays of positive ints
//   agents             : agent count
//   blocks             : [{row, col, owner, values: row-major nested arrays}]
//   h                  : [{row, values, split: {mode, parts?}}]
//   graph              : {edges: [[i, j], ...]}
// Unknown fields are rejected. Values survive a save/load round trip
// bit-exactly.
GeneratedProblem load_problem(const std::string& path);
GeneratedProblem parse_problem(const std::string& text);

void save_problem(const std::string& path, const BlockProblem& p, const Graph& g);
std::string serialize_problem(const BlockProblem& p, const Graph& g);

}  // namespace blocklsq
