#include <CLI11.hpp>

#include <iostream>

#include "cli.hpp"

using namespace roofbench::cli;

int main(int argc, char** argv) {
  CLI::App app{"roofbench: convex and concave roofs over real algebraic varieties"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  std::uint64_t seed = 0;
  int restarts = 0;
  double tol = 0.0;
  std::string out_dir;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* restarts_opt = app.add_option("--restarts", restarts, "solver restarts")->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out_dir, "output directory (quantum: output file)");

  std::string config, certificate;
  auto* run = app.add_subcommand("run", "evaluate the roof or the quantum task described by a config");
  run->add_option("config", config, "config file")->required();

  auto* cert = app.add_subcommand("certify", "verify tangency certificates against a config");
  cert->add_option("config", config, "config file")->required();
  cert->add_option("certificate", certificate, "certificate JSON")->required();

  int resolution = 0;
  auto* graph_cmd = app.add_subcommand("graph", "sample the graph of f over V as CSV");
  graph_cmd->add_option("config", config, "config file")->required();
  auto* res_opt = graph_cmd->add_option("--resolution", resolution, "number of samples")->check(CLI::PositiveNumber);

  QuantumRequest req;
  std::vector<int> dims;
  int dim = 0;
  std::string state, density, coeffs;
  auto* q = app.add_subcommand("quantum", "quantum-state operations");
  q->add_option("operation", req.operation, "embed | purity | measure | eof")
      ->required()
      ->check(CLI::IsMember({"embed", "purity", "measure", "eof"}));
  auto* dim_opt = q->add_option("--dim", dim, "Hilbert space dimension")->check(CLI::PositiveNumber);
  auto* dims_opt = q->add_option("--dims", dims, "subsystem dimensions dA dB")->expected(2);
  q->add_option("--basis", req.basis, "gellmann | tensor")->check(CLI::IsMember({"gellmann", "tensor"}));
  q->add_option("--convention", req.convention, "scaled | plain")->check(CLI::IsMember({"scaled", "plain"}));
  auto* state_opt = q->add_option("--state", state, "pure state as JSON [[re, im], ...]");
  auto* density_opt = q->add_option("--density", density, "density matrix as row-major JSON [[re, im], ...]");
  auto* coeffs_opt = q->add_option("--coeffs", coeffs, "coefficient vector as JSON");
  q->add_option("--a", req.a, "Tsallis order")->check(CLI::Range(2, 64));
  q->add_option("--strategy", req.strategy, "unitary_search | poincare_roof")
      ->check(CLI::IsMember({"unitary_search", "poincare_roof"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (*seed_opt) ov.seed = seed;
  if (*restarts_opt) ov.restarts = restarts;
  if (*tol_opt) ov.tol = tol;
  if (*out_opt) ov.out = out_dir;

  if (*run) return roofbench::cli::run(config, ov, std::cout, std::cerr);
  if (*cert) return roofbench::cli::certify(config, certificate, ov, std::cout, std::cerr);
  if (*graph_cmd)
    return roofbench::cli::graph(config, *res_opt ? std::optional<int>(resolution) : std::nullopt, ov, std::cout,
                                 std::cerr);
  if (*dim_opt) req.dim = dim;
  if (*dims_opt) req.dims = dims;
  if (*state_opt) req.state = state;
  if (*density_opt) req.density = density;
  if (*coeffs_opt) req.coefficients = coeffs;
  return roofbench::cli::quantum(req, ov, std::cout, std::cerr);
}
