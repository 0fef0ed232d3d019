#include "blocklsq/problem_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace blocklsq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("problem file: " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail("unknown field '" + it.key() + "' in " + where);
}

std::vector<int> parse_dims(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) fail(name + " must be a non-empty array");
  std::vector<int> dims;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 1) fail(name + " entries must be positive integers");
    dims.push_back(v.get<int>());
  }
  return dims;
}

Vector parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) fail(where + " must contain only numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

GeneratedProblem parse_problem(const std::string& text) {
  json root = json::parse(text, nullptr, true);
  if (!root.is_object()) fail("top level must be an object");
  reject_unknown(root, {"row_dims", "col_dims", "agents", "blocks", "h", "graph"}, "top level");
  for (const char* field : {"row_dims", "col_dims", "agents", "blocks", "h", "graph"})
    if (!root.contains(field)) fail(std::string("missing field '") + field + "'");

  GeneratedProblem out;
  BlockProblem& p = out.problem;
  p.row_dims = parse_dims(root["row_dims"], "row_dims");
  p.col_dims = parse_dims(root["col_dims"], "col_dims");
  p.K = static_cast<int>(p.row_dims.size());
  p.L = static_cast<int>(p.col_dims.size());
  if (!root["agents"].is_number_integer() || root["agents"].get<int>() < 1)
    fail("agents must be a positive integer");
  p.N = root["agents"].get<int>();

  if (!root["blocks"].is_array()) fail("blocks must be an array");
  std::size_t block_index = 0;
  for (const auto& jb : root["blocks"]) {
    const std::string where = "blocks[" + std::to_string(block_index++) + "]";
    if (!jb.is_object()) fail(where + " must be an object");
    reject_unknown(jb, {"row", "col", "owner", "values"}, where);
    for (const char* field : {"row", "col", "owner", "values"})
      if (!jb.contains(field)) fail(where + " is missing '" + field + "'");
    const int k = jb["row"].get<int>();
    const int l = jb["col"].get<int>();
    if (k < 1 || k > p.K) fail(where + ".row out of range");
    if (l < 1 || l > p.L) fail(where + ".col out of range");
    if (p.blocks.count({k, l})) fail(where + " duplicates block (" + std::to_string(k) + "," +
                                     std::to_string(l) + ")");
    const auto& jv = jb["values"];
    const auto m = static_cast<std::size_t>(p.row_dim(k));
    const auto n = static_cast<std::size_t>(p.col_dim(l));
    if (!jv.is_array() || jv.size() != m) fail(where + ".values must have " + std::to_string(m) + " rows");
    Matrix block(m, n);
    for (std::size_t r = 0; r < m; ++r) {
      const Vector row = parse_vector(jv[r], where + ".values row " + std::to_string(r));
      if (row.size() != n)
        fail(where + ".values row " + std::to_string(r) + " has length " +
             std::to_string(row.size()) + ", expected " + std::to_string(n));
      for (std::size_t c = 0; c < n; ++c) block(r, c) = row[c];
    }
    p.blocks[{k, l}] = std::move(block);
    p.owner[{k, l}] = jb["owner"].get<int>();
  }

  if (!root["h"].is_array()) fail("h must be an array");
  std::size_t h_index = 0;
  for (const auto& jh : root["h"]) {
    const std::string where = "h[" + std::to_string(h_index++) + "]";
    if (!jh.is_object()) fail(where + " must be an object");
    reject_unknown(jh, {"row", "values", "split"}, where);
    for (const char* field : {"row", "values", "split"})
      if (!jh.contains(field)) fail(where + " is missing '" + field + "'");
    const int k = jh["row"].get<int>();
    if (k < 1 || k > p.K) fail(where + ".row out of range");
    if (p.h_parts.count(k)) fail(where + " duplicates h for row " + std::to_string(k));
    p.h_parts[k] = parse_vector(jh["values"], where + ".values");

    const auto& js = jh["split"];
    if (!js.is_object()) fail(where + ".split must be an object");
    reject_unknown(js, {"mode", "parts"}, where + ".split");
    if (!js.contains("mode") || !js["mode"].is_string()) fail(where + ".split.mode must be a string");
    const std::string mode = js["mode"].get<std::string>();
    HSplit split;
    if (mode == "owner") {
      split.mode = SplitMode::owner;
    } else if (mode == "equal") {
      split.mode = SplitMode::equal;
    } else if (mode == "explicit") {
      split.mode = SplitMode::explicit_parts;
      if (!js.contains("parts") || !js["parts"].is_array())
        fail(where + ".split.parts required for explicit mode");
      std::size_t part_index = 0;
      for (const auto& jp : js["parts"]) {
        const std::string pw = where + ".split.parts[" + std::to_string(part_index++) + "]";
        if (!jp.is_object()) fail(pw + " must be an object");
        reject_unknown(jp, {"agent", "values"}, pw);
        if (!jp.contains("agent") || !jp.contains("values")) fail(pw + " needs 'agent' and 'values'");
        const int agent = jp["agent"].get<int>();
        if (split.parts.count(agent)) fail(pw + " duplicates agent " + std::to_string(agent));
        split.parts[agent] = parse_vector(jp["values"], pw + ".values");
      }
    } else {
      fail(where + ".split.mode must be owner, equal or explicit");
    }
    if (split.mode != SplitMode::explicit_parts && js.contains("parts"))
      fail(where + ".split.parts only allowed for explicit mode");
    p.h_split[k] = std::move(split);
  }

  const auto& jg = root["graph"];
  if (!jg.is_object()) fail("graph must be an object");
  reject_unknown(jg, {"edges"}, "graph");
  if (!jg.contains("edges") || !jg["edges"].is_array()) fail("graph.edges must be an array");
  std::vector<std::pair<int, int>> edges;
  std::size_t edge_index = 0;
  for (const auto& je : jg["edges"]) {
    const std::string where = "graph.edges[" + std::to_string(edge_index++) + "]";
    if (!je.is_array() || je.size() != 2) fail(where + " must be a pair [i, j]");
    edges.emplace_back(je[0].get<int>(), je[1].get<int>());
  }
  try {
    out.graph = Graph(p.N, edges);
  } catch (const std::exception& e) {
    fail(std::string("graph: ") + e.what());
  }

  try {
    p.check_structure();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return out;
}

GeneratedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("problem file: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string serialize_problem(const BlockProblem& p, const Graph& g) {
  json root;
  root["row_dims"] = p.row_dims;
  root["col_dims"] = p.col_dims;
  root["agents"] = p.N;

  json blocks = json::array();
  for (const auto& [kl, block] : p.blocks) {
    json jb;
    jb["row"] = kl.first;
    jb["col"] = kl.second;
    jb["owner"] = p.owner.at(kl);
    json rows = json::array();
    for (std::size_t r = 0; r < block.rows(); ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < block.cols(); ++c) row.push_back(block(r, c));
      rows.push_back(std::move(row));
    }
    jb["values"] = std::move(rows);
    blocks.push_back(std::move(jb));
  }
  root["blocks"] = std::move(blocks);

  json h = json::array();
  for (const auto& [k, values] : p.h_parts) {
    json jh;
    jh["row"] = k;
    jh["values"] = values;
    json split;
    HSplit policy;
    if (auto it = p.h_split.find(k); it != p.h_split.end()) policy = it->second;
    switch (policy.mode) {
      case SplitMode::owner: split["mode"] = "owner"; break;
      case SplitMode::equal: split["mode"] = "equal"; break;
      case SplitMode::explicit_parts: {
        split["mode"] = "explicit";
        json parts = json::array();
        for (const auto& [agent, part] : policy.parts) {
          json jp;
          jp["agent"] = agent;
          jp["values"] = part;
          parts.push_back(std::move(jp));
        }
        split["parts"] = std::move(parts);
        break;
      }
    }
    jh["split"] = std::move(split);
    h.push_back(std::move(jh));
  }
  root["h"] = std::move(h);

  json edges = json::array();
  for (auto [i, j] : g.edges()) edges.push_back(json::array({i, j}));
  root["graph"] = json{{"edges", std::move(edges)}};
  return root.dump(2) + "\n";
}

void save_problem(const std::string& path, const BlockProblem& p, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write problem file '" + path + "'");
  out << serialize_problem(p, g);
}

}  // namespace blocklsq
