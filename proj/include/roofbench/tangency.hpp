#ifndef ROOFBENCH_TANGENCY_HPP
#define ROOFBENCH_TANGENCY_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roofbench/roof.hpp"

namespace roofbench {

/// {y : normal . y = offset} in the graph space R^{n+1}, with a unit normal.
struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;

  double signed_distance(const Eigen::VectorXd& y) const { return normal.dot(y) - offset; }
};

struct RowLabel {
  enum class Kind { tangent, difference } kind;
  int contact;  // owning contact (for differences: the first of the pair)
  int index;    // tangent vector index, or the second contact of the pair
};

/// Tangent-frame rows at each contact followed by contact differences.
/// Differences are cyclic (x_j - x_{j+1}, x_m - x_1) for m >= 3; for m = 2
/// the single difference x_1 - x_2 is kept, for m = 1 there is none.
struct RMatrix {
  Eigen::MatrixXd rows;
  std::vector<RowLabel> labels;
};

struct TangencyResidual {
  std::optional<double> minor_residual;  // max |det| over N x N row subsets, if <= 5000 of them
  double sv_residual = 0.0;              // N-th largest singular value (0 if fewer rows)
};

/// gr f = Z(l_0, ..., l_a, z - f(x)) in R^{n+1}; z is the last coordinate.
Variety graph_variety(const RoofProblem& problem);

/// Lifts a point of V onto the graph.
Eigen::VectorXd lift(const RoofProblem& problem, const Eigen::VectorXd& x);

RMatrix build_r_matrix(const Variety& graph, const std::vector<Eigen::VectorXd>& contacts, double tol = 1e-8);

TangencyResidual tangency_residual(const RMatrix& R);

/// Polynomial form of the optimal-decomposition conditions for m contacts.
///
/// Unknowns, in order: contact k occupies variables [k(n+1), (k+1)(n+1)) as
/// (x_k, z_k), followed by p_1..p_m.
struct OptimalitySystem {
  int n = 0;  // dimension of V's ambient space
  int m = 0;
  int nvars = 0;
  std::vector<Poly> membership;     // l_j(x_k) and z_k - f(x_k)
  std::vector<Poly> minors;         // Delta_alpha; empty when numeric
  std::vector<Poly> barycenter;     // sum_k p_k x_k - r  (n equations)
  std::vector<Poly> normalization;  // sum_k p_k - 1
  bool minors_numeric = false;      // true: the minors group is replaced by sv_residual at solve time

  int x_var(int k, int i) const { return k * (n + 1) + i; }
  int z_var(int k) const { return k * (n + 1) + n; }
  int p_var(int k) const { return m * (n + 1) + k; }

  std::vector<Poly> all_equations() const;
};

/// Builds the system. The minors group is polynomial when the problem carries
/// a tangent field and the number of N x N row subsets is at most 5000.
OptimalitySystem assemble_system(const RoofProblem& problem, const Eigen::VectorXd& r, int m);

/// Substitutes z_k = f(x_k) and p_m = 1 - sum_{k<m} p_k, dropping equations
/// that become identically zero. Remaining unknowns: x_1..x_m (n each) then
/// p_1..p_{m-1}.
std::vector<Poly> eliminate_graph_and_normalization(const RoofProblem& problem, const OptimalitySystem& sys);

struct CertificateResiduals {
  double membership = 0.0;
  double minors = 0.0;  // sv_residual of R
  double barycenter = 0.0;
  double normalization = 0.0;
  double hyperplane = 0.0;  // max_j |normal . (x_j, f(x_j)) - offset|
};

struct SolverMetadata {
  std::uint64_t seed = 0;
  int restarts = 0;
  int iterations = 0;
  int m = 0;
  bool warm_start = false;
};

struct TangencyCertificate {
  Decomposition decomposition;
  Hyperplane hyperplane;
  double value = 0.0;
  CertificateResiduals residuals;
  std::optional<double> minor_residual;
  double sv_residual = 0.0;
  SolverMetadata solver;
};

struct CertifyOptions {
  std::uint64_t seed = 0;
  int restarts = 32;
  double tol = 1e-8;           // certificate group tolerance
  double converge_tol = 1e-9;  // system residual for "converged"
  std::optional<Decomposition> warm_start;
};

/// Newton-type (Levenberg-Marquardt) solve of the optimality conditions from
/// multi-start initial guesses; returns the best verified certificate, or
/// nullopt if no converged solution has p in [0, 1]^m.
std::optional<TangencyCertificate> solve_certificate(const RoofProblem& problem, const Eigen::VectorXd& r, int m,
                                                     const CertifyOptions& opt = {});

struct GroupCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CertificateReport {
  std::vector<GroupCheck> groups;
  double value = 0.0;
  bool passed() const;
  const GroupCheck* group(const std::string& name) const;
};

/// Recomputes every residual group from scratch (fresh tangent frames, fresh
/// minors).
CertificateReport verify_certificate(const RoofProblem& problem, const Eigen::VectorXd& r,
                                     const TangencyCertificate& cert, double tol = 1e-8);

}  // namespace roofbench

#endif  // ROOFBENCH_TANGENCY_HPP
