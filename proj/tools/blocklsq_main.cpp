#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "blocklsq/generators.hpp"
#include "blocklsq/oracle.hpp"
#include "blocklsq/problem_io.hpp"
#include "blocklsq/simulator.hpp"

namespace {

using namespace blocklsq;

constexpr int kExitConverged = 0;
constexpr int kExitMaxIters = 2;
constexpr int kExitValidation = 3;
constexpr int kExitDivergence = 4;

// Everything one experiment needs: where the problem comes from, solver
// parameters and output destinations.
struct RunConfig {
  std::string problem_path;
  std::string generator;
  GridSpec grid;
  int fig3_which = 1;
  std::vector<int> appendix_row_dims = {1, 1, 1, 1, 1, 1};
  std::vector<int> appendix_col_dims = {1, 1, 1, 1};
  std::uint64_t seed = 1;

  AdmmParams admm;
  std::string g_policy = "zero";
  std::string metrics_path;
  std::string summary_path;
  int decimation = 1;
  bool use_oracle = true;
  bool diagnostics = false;
  std::size_t dim_cap = 400;
  std::string init = "zero";
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;
};

void add_source_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--problem", cfg.problem_path, "problem JSON file");
  cmd->add_option("--generator", cfg.generator, "instance generator: grid, fig3, appendixA")
      ->check(CLI::IsMember({"grid", "fig3", "appendixA"}));
  cmd->add_option("--rows", cfg.grid.rows, "grid rows");
  cmd->add_option("--cols", cfg.grid.cols, "grid cols");
  cmd->add_option("--n-local", cfg.grid.n_local, "local variables per grid agent");
  cmd->add_option("--m-coupled", cfg.grid.m_coupled, "height of the grid's coupled row partition");
  cmd->add_option("--n-shared", cfg.grid.n_shared, "shared variables (default: m-coupled)");
  cmd->add_option("--which", cfg.fig3_which, "fig3 system: 1 (unique) or 2 (rank-deficient)");
  cmd->add_option("--row-dims", cfg.appendix_row_dims, "appendixA row partition dims (6)");
  cmd->add_option("--col-dims", cfg.appendix_col_dims, "appendixA column partition dims (4)");
  cmd->add_option("--seed", cfg.seed, "generator seed");
}

GeneratedProblem make_problem(const RunConfig& cfg) {
  const bool has_file = !cfg.problem_path.empty();
  const bool has_gen = !cfg.generator.empty();
  if (has_file == has_gen)
    throw std::invalid_argument("exactly one of --problem and --generator is required");
  if (has_file) return load_problem(cfg.problem_path);
  if (cfg.generator == "grid") {
    GridSpec spec = cfg.grid;
    spec.seed = cfg.seed;
    return gen_grid(spec);
  }
  if (cfg.generator == "fig3") return gen_fig3(cfg.fig3_which);
  return gen_appendix_a(cfg.appendix_row_dims, cfg.appendix_col_dims, cfg.seed);
}

void write_metrics_csv(const std::string& path, const std::vector<RoundMetrics>& metrics) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write metrics file '" + path + "'");
  std::fputs("iter,primal_inf,consensus_inf,delta_w,cost,cost_gap,err_x,messages,elapsed_ms\n", f);
  for (const auto& m : metrics) {
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%.17g\n", m.iter, m.primal_inf,
                 m.consensus_inf, m.delta_w, m.cost, m.cost_gap, m.err_x, m.messages,
                 m.elapsed_ms);
  }
  std::fclose(f);
}

nlohmann::json spectrum_json(const IterationLinearization& lin) {
  double radius = 0.0;
  double second = 0.0;
  std::size_t near_one = 0;
  for (const auto& ev : lin.eigenvalues) {
    const double mag = std::abs(ev);
    radius = std::max(radius, mag);
    if (std::abs(ev - std::complex<double>(1.0, 0.0)) <= 1e-8)
      ++near_one;
    else
      second = std::max(second, mag);
  }
  nlohmann::json j;
  j["dim"] = lin.dim;
  j["spectral_radius"] = radius;
  j["eigenvalues_at_one"] = near_one;
  j["largest_contracting_magnitude"] = second;
  return j;
}

int cmd_solve(RunConfig& cfg) {
  GeneratedProblem gp;
  try {
    gp = make_problem(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  const ValidationReport report = validate(gp.problem, gp.graph);
  if (!report.pass) {
    std::cerr << "validation failed: " << report.summary() << "\n";
    return kExitValidation;
  }
  for (const auto& issue : report.issues)
    if (!issue.fatal) std::cerr << "warning: " << issue.message << "\n";

  if (cfg.g_policy == "zero")
    cfg.admm.g_policy = AdmmParams::GPolicy::zero;
  else
    cfg.admm.g_policy = AdmmParams::GPolicy::eps_shift;

  CompiledProblem compiled = compile(gp.problem, gp.graph);

  RunOptions opts;
  opts.metrics_decimation = cfg.decimation;
  if (cfg.init == "random") {
    opts.init = RunOptions::Init::random;
    opts.init_seed = cfg.init_seed;
    opts.init_scale = cfg.init_scale;
  }
  std::optional<LsqSolution> oracle;
  if (cfg.use_oracle) {
    auto [h_mat, h_vec] = assemble_dense(gp.problem);
    oracle = min_norm_lstsq(h_mat, h_vec);
    opts.oracle.attached = true;
    opts.oracle.psi_opt = oracle->psi_opt;
    opts.oracle.unique = oracle->unique;
    if (oracle->unique) opts.oracle.z_star = oracle->z_star;
  }

  const RunResult result = run(compiled, cfg.admm, opts);

  if (!cfg.metrics_path.empty()) write_metrics_csv(cfg.metrics_path, result.metrics);

  nlohmann::json summary;
  summary["termination"] = termination_name(result.reason);
  summary["rounds"] = result.rounds;
  summary["final"] = {
      {"primal_inf", result.last.primal_inf}, {"consensus_inf", result.last.consensus_inf},
      {"delta_w", result.last.delta_w},       {"cost", result.last.cost},
      {"cost_gap", result.last.cost_gap},     {"err_x", result.last.err_x},
  };
  summary["messages_per_round"] = result.last.messages;
  summary["max_agent_compute_seconds"] = result.max_agent_compute_seconds;
  summary["simd"] = std::string(kernels::isa_name(kernels::active_isa()));
  if (oracle) {
    summary["psi_opt"] = oracle->psi_opt;
    summary["unique_solution"] = oracle->unique;
  }
  try {
    const FitResult fit = fit_rate(result.metrics);
    summary["fit"] = {{"rate", fit.rate},
                      {"correlation", fit.correlation},
                      {"points", fit.points},
                      {"stalled", fit.stalled}};
  } catch (const std::exception&) {
    // not enough recorded rounds for a rate estimate
  }
  if (cfg.diagnostics) {
    try {
      summary["spectrum"] = spectrum_json(linearize_iteration(compiled, cfg.admm, cfg.dim_cap));
    } catch (const std::exception& e) {
      summary["spectrum"] = {{"error", e.what()}};
    }
  }

  if (!cfg.summary_path.empty()) {
    std::ofstream out(cfg.summary_path);
    out << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";

  switch (result.reason) {
    case Termination::converged: return kExitConverged;
    case Termination::max_iters: return kExitMaxIters;
    case Termination::diverged: return kExitDivergence;
  }
  return kExitMaxIters;
}

int cmd_validate(RunConfig& cfg) {
  GeneratedProblem gp;
  try {
    gp = make_problem(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  const ValidationReport report = validate(gp.problem, gp.graph);
  std::cout << report.summary() << "\n";
  return report.pass ? 0 : kExitValidation;
}

int cmd_generate(RunConfig& cfg, const std::string& out_path) {
  GeneratedProblem gp = make_problem(cfg);
  save_problem(out_path, gp.problem, gp.graph);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_spectrum(RunConfig& cfg) {
  GeneratedProblem gp;
  try {
    gp = make_problem(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  const ValidationReport report = validate(gp.problem, gp.graph);
  if (!report.pass) {
    std::cerr << "validation failed: " << report.summary() << "\n";
    return kExitValidation;
  }
  if (cfg.g_policy == "shift") cfg.admm.g_policy = AdmmParams::GPolicy::eps_shift;
  const CompiledProblem compiled = compile(gp.problem, gp.graph);
  const auto lin = linearize_iteration(compiled, cfg.admm, cfg.dim_cap);
  nlohmann::json j = spectrum_json(lin);
  if (!cfg.summary_path.empty()) {
    std::ofstream out(cfg.summary_path);
    out << j.dump(2) << "\n";
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_oracle(RunConfig& cfg) {
  GeneratedProblem gp;
  try {
    gp = make_problem(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  auto [h_mat, h_vec] = assemble_dense(gp.problem);
  const LsqSolution sol = min_norm_lstsq(h_mat, h_vec);
  nlohmann::json j;
  j["psi_opt"] = sol.psi_opt;
  j["rank"] = sol.rank;
  j["unique"] = sol.unique;
  j["z_star"] = sol.z_star;
  if (!cfg.summary_path.empty()) {
    std::ofstream out(cfg.summary_path);
    out << j.dump(2) << "\n";
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed block-partitioned least-squares solver"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string generate_out;

  CLI::App* solve = app.add_subcommand("solve", "run the distributed solver");
  add_source_options(solve, cfg);
  solve->add_option("--rho", cfg.admm.rho, "penalty parameter (default 1.0)");
  solve->add_option("--max-iters", cfg.admm.max_iters, "round limit");
  solve->add_option("--tol-primal", cfg.admm.tol_primal, "edge residual tolerance");
  solve->add_option("--tol-delta", cfg.admm.tol_delta, "state step tolerance");
  solve->add_option("--g-policy", cfg.g_policy, "proximal term: zero or shift")
      ->check(CLI::IsMember({"zero", "shift"}));
  solve->add_option("--eps-shift", cfg.admm.eps_shift, "relative proximal shift");
  solve->add_option("--metrics", cfg.metrics_path, "per-round metrics CSV path");
  solve->add_option("--summary", cfg.summary_path, "summary JSON path");
  solve->add_option("--decimate", cfg.decimation, "record every n-th round")
      ->check(CLI::PositiveNumber);
  solve->add_flag("--oracle,!--no-oracle", cfg.use_oracle, "attach the centralized oracle");
  solve->add_flag("--diagnostics", cfg.diagnostics, "include the round-map spectrum in the summary");
  solve->add_option("--init", cfg.init, "initial state: zero or random")
      ->check(CLI::IsMember({"zero", "random"}));
  solve->add_option("--init-seed", cfg.init_seed, "seed for random initialization");
  solve->add_option("--init-scale", cfg.init_scale, "magnitude of random initialization");

  CLI::App* validate_cmd = app.add_subcommand("validate", "check a problem against its graph");
  add_source_options(validate_cmd, cfg);

  CLI::App* generate = app.add_subcommand("generate", "write a generated instance to a file");
  add_source_options(generate, cfg);
  generate->add_option("-o,--out", generate_out, "output problem JSON")->required();

  CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalues of the affine round map");
  add_source_options(spectrum, cfg);
  spectrum->add_option("--rho", cfg.admm.rho, "penalty parameter");
  spectrum->add_option("--dim-cap", cfg.dim_cap, "maximum state dimension");
  spectrum->add_option("--summary", cfg.summary_path, "summary JSON path");

  CLI::App* oracle = app.add_subcommand("oracle", "centralized minimum-norm solution");
  add_source_options(oracle, cfg);
  oracle->add_option("--summary", cfg.summary_path, "summary JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(cfg);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
    if (generate->parsed()) return cmd_generate(cfg, generate_out);
    if (spectrum->parsed()) return cmd_spectrum(cfg);
    if (oracle->parsed()) return cmd_oracle(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 1;
}
