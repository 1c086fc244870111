#ifndef ROOFBENCH_VARIETY_HPP
#define ROOFBENCH_VARIETY_HPP

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <vector>

#include "roofbench/poly.hpp"

namespace roofbench {

/// Affine variety V = Z(l_0, ..., l_a) in R^n.
///
/// V is assumed compact and nonsingular; compactness is the caller's
/// obligation, nonsingularity is checked wherever a tangent frame or a
/// dimension estimate is computed.
class Variety {
 public:
  Variety(int ambient_dim, std::vector<Poly> generators, std::optional<int> expected_dim = std::nullopt);

  int ambient_dim() const { return ambient_dim_; }
  const std::vector<Poly>& generators() const { return generators_; }
  std::optional<int> expected_dim() const { return expected_dim_; }
  /// gradients()[j][k] = ∂l_j/∂x_k.
  const std::vector<std::vector<Poly>>& gradients() const { return gradients_; }

  /// (l_0(x), ..., l_a(x)).
  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const;

 private:
  int ambient_dim_;
  std::vector<Poly> generators_;
  std::optional<int> expected_dim_;
  std::vector<std::vector<Poly>> gradients_;
};

/// Point x with an orthonormal basis (columns) of the Zariski tangent space.
struct TangentFrame {
  Eigen::VectorXd base_point;
  Eigen::MatrixXd basis;

  int dim() const { return static_cast<int>(basis.cols()); }
};

constexpr double kDefaultRankTol = 1e-8;

bool membership(const Variety& v, const Eigen::VectorXd& x, double tol);

/// Row j is grad l_j at x.
Eigen::MatrixXd jacobian_at(const Variety& v, const Eigen::VectorXd& x);

/// Numerical rank of the Jacobian at x: singular values <= rank_tol * sigma_max
/// count as zero.
int jacobian_rank(const Variety& v, const Eigen::VectorXd& x, double rank_tol = kDefaultRankTol);

/// Null space of the Jacobian at a member point. `tol` is used both for the
/// membership precondition and as the relative singular-value cutoff.
TangentFrame tangent_frame(const Variety& v, const Eigen::VectorXd& x, double tol = kDefaultRankTol);

/// n - rank(J), which must agree over all samples.
int dimension_estimate(const Variety& v, const std::vector<Eigen::VectorXd>& samples,
                       double tol = kDefaultRankTol);

/// Gauss-Newton projection onto V with minimum-norm steps. Returns nullopt
/// when the iteration does not reach max |l_j| <= tol.
std::optional<Eigen::VectorXd> project_to_variety(const Variety& v, const Eigen::VectorXd& start,
                                                  double tol = 1e-13, int max_iter = 100);

/// Random points on V: Gaussian samples around `center` with spread `scale`,
/// projected onto V. Throws InfeasibleError if projections keep failing.
std::vector<Eigen::VectorXd> sample_points(const Variety& v, int count, std::mt19937_64& rng,
                                           const Eigen::VectorXd& center, double scale);

/// Dimension of the affine hull of V (= dim conv V), estimated from
/// deterministic random samples.
int affine_hull_dimension(const Variety& v, double tol = 1e-8);

}  // namespace roofbench

#endif  // ROOFBENCH_VARIETY_HPP
