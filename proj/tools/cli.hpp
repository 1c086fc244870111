#ifndef ROOFBENCH_TOOLS_CLI_HPP
#define ROOFBENCH_TOOLS_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roofbench/quantum.hpp"
#include "roofbench/tangency.hpp"

namespace roofbench::cli {

enum ExitCode : int { kSuccess = 0, kCertificateFailure = 1, kInfeasible = 2, kConfigError = 3 };

/// Command-line values that replace the corresponding config entries.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<double> tol;
  std::optional<std::string> out;  // output directory
};

/// `roofbench run <cfg>`: 0 success, 1 certificate failure, 2 infeasible
/// target, 3 config error.
int run(const std::string& config_path, const Overrides& ov, std::ostream& out, std::ostream& err);

/// `roofbench certify <cfg> <certificate.json>`: 0 pass, 1 fail, 2 no
/// solution, 3 config error.
int certify(const std::string& config_path, const std::string& certificate_path, const Overrides& ov,
            std::ostream& out, std::ostream& err);

/// `roofbench graph <cfg>`: samples of gr f as CSV.
int graph(const std::string& config_path, std::optional<int> resolution, const Overrides& ov, std::ostream& out,
          std::ostream& err);

struct QuantumRequest {
  std::string operation;              // embed | purity | measure | eof
  std::optional<int> dim;             // D, or dA * dB
  std::optional<std::vector<int>> dims;  // {dA, dB} for bipartite operations
  std::string basis = "gellmann";     // gellmann | tensor
  std::string convention = "scaled";
  std::optional<std::string> state;    // JSON list of [re, im]
  std::optional<std::string> density;  // JSON row-major list of [re, im]
  std::optional<std::string> coefficients;  // JSON list of reals
  int a = 2;
  std::string strategy = "unitary_search";
};

/// `roofbench quantum <operation> ...`: prints a JSON result.
int quantum(const QuantumRequest& req, const Overrides& ov, std::ostream& out, std::ostream& err);

/// Samples of V lifted onto gr f: a sweep of `resolution` directions around
/// the centre of V, each projected onto V. V must have dimension 1 or 2.
std::vector<Eigen::VectorXd> emit_graph_data(const RoofProblem& problem, int resolution);

/// %.17g.
std::string format_double(double v);

}  // namespace roofbench::cli

#endif  // ROOFBENCH_TOOLS_CLI_HPP
