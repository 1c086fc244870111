#ifndef ROOFBENCH_ROOF_HPP
#define ROOFBENCH_ROOF_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roofbench/variety.hpp"

namespace roofbench {

enum class Sense { convex, concave };

const char* to_string(Sense s);
Sense parse_sense(const std::string& s);

/// Polynomial tangent vector fields on V with cleared denominators: each entry
/// is a length-n vector of polynomials tangent to V at every point of V.
using TangentField = std::vector<std::vector<Poly>>;

/// A function f on a variety V, to be roofed from below (convex) or above
/// (concave).
struct RoofProblem {
  RoofProblem(Variety variety, Poly f, Sense sense, std::optional<TangentField> tangent_field = std::nullopt);

  Variety variety;
  Poly f;
  Sense sense;
  std::optional<TangentField> tangent_field;
};

/// r = sum_j p_j x_j with p on the simplex and x_j on V.
struct Decomposition {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> points;

  int size() const { return static_cast<int>(points.size()); }
  Eigen::VectorXd barycenter() const;
  /// Points sorted lexicographically by coordinates rounded to 1e-9, weights
  /// carried along.
  Decomposition canonical() const;
};

/// Throws ArgumentError if weights or points break the Decomposition
/// invariants for this variety.
void validate_decomposition(const Variety& v, const Decomposition& dec, double weight_tol = 1e-10,
                            double member_tol = 1e-8);

enum class RoofStatus { oracle, certified };

struct RoofValue {
  double value = 0.0;
  Decomposition decomposition;
  Eigen::VectorXd target;
  RoofStatus status = RoofStatus::oracle;
};

/// sum_j p_j f(x_j): an upper bound on conv f and a lower bound on conc f at
/// the barycenter.
double decomposition_value(const RoofProblem& problem, const Decomposition& dec);

struct OracleOptions {
  int m_max = 0;  // 0: dim(conv V) + 1
  int restarts = 64;
  std::uint64_t seed = 0;
  double tol = 1e-10;  // constraint tolerance of the local solves
};

/// Multi-start constrained minimization (maximization for concave roofs) of
/// sum_j p_j f(x_j) over decompositions of r with m = 1..m_max terms.
/// Deterministic for fixed (seed, restarts). Throws InfeasibleError when no
/// decomposition reproduces r to 1e-6.
RoofValue roof_eval_oracle(const RoofProblem& problem, const Eigen::VectorXd& r, const OracleOptions& opt = {});

/// Same search at a single term count m; nullopt if infeasible at that m.
std::optional<RoofValue> roof_eval_fixed_m(const RoofProblem& problem, const Eigen::VectorXd& r, int m,
                                           const OracleOptions& opt);

/// Local solve at fixed m from a given starting decomposition.
std::optional<RoofValue> refine_decomposition(const RoofProblem& problem, const Eigen::VectorXd& r,
                                              const Decomposition& start, double tol = 1e-10);

struct GridEntry {
  Eigen::VectorXd target;
  std::optional<RoofValue> value;
  std::string error;  // non-empty when infeasible
};

/// Oracle over a list of targets. Results are indexed like `grid` and do not
/// depend on `workers`.
std::vector<GridEntry> roof_grid(const RoofProblem& problem, const std::vector<Eigen::VectorXd>& grid,
                                 const OracleOptions& opt, int workers = 0);

/// Samples random convex recombinations q of the decomposition's points and
/// checks that the oracle roof at sum q_j x_j equals sum q_j f(x_j).
bool check_affine_on_polytope(const RoofProblem& problem, const Decomposition& dec, int samples, double tol,
                              const OracleOptions& opt = {});

/// True when a is better than b for the sense, using the tie-breaking rule
/// (value, then fewer terms, then lexicographic canonical points).
bool better_decomposition(Sense sense, double value_a, const Decomposition& a, double value_b,
                          const Decomposition& b, double tie_tol = 1e-9);

}  // namespace roofbench

#endif  // ROOFBENCH_ROOF_HPP
