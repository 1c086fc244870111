#include "roofbench/variety.hpp"

#include <string>

namespace roofbench {

Variety::Variety(int ambient_dim, std::vector<Poly> generators, std::optional<int> expected_dim)
    : ambient_dim_(ambient_dim), generators_(std::move(generators)), expected_dim_(expected_dim) {
  if (ambient_dim_ < 1) throw ArgumentError("Variety: ambient dimension must be positive");
  if (expected_dim_ && (*expected_dim_ < 0 || *expected_dim_ > ambient_dim_))
    throw ArgumentError("Variety: expected dimension out of range");
  gradients_.reserve(generators_.size());
  for (const auto& g : generators_) {
    if (g.nvars() != ambient_dim_)
      throw ArgumentError("Variety: generator has " + std::to_string(g.nvars()) +
                          " variables, ambient dimension is " + std::to_string(ambient_dim_));
    gradients_.push_back(grad(g));
  }
}

Eigen::VectorXd Variety::residuals(const Eigen::VectorXd& x) const {
  if (x.size() != ambient_dim_) throw ArgumentError("Variety: point has wrong dimension");
  Eigen::VectorXd r(generators_.size());
  for (std::size_t j = 0; j < generators_.size(); ++j) r(j) = generators_[j](x);
  return r;
}

bool membership(const Variety& v, const Eigen::VectorXd& x, double tol) {
  if (!(tol > 0)) throw ArgumentError("membership: tol must be positive");
  const Eigen::VectorXd r = v.residuals(x);
  return r.size() == 0 || r.cwiseAbs().maxCoeff() <= tol;
}

Eigen::MatrixXd jacobian_at(const Variety& v, const Eigen::VectorXd& x) {
  if (x.size() != v.ambient_dim()) throw ArgumentError("jacobian_at: point has wrong dimension");
  const auto& g = v.gradients();
  Eigen::MatrixXd J(g.size(), v.ambient_dim());
  for (std::size_t j = 0; j < g.size(); ++j)
    for (int k = 0; k < v.ambient_dim(); ++k) J(j, k) = g[j][k](x);
  return J;
}

namespace {

struct NullSpace {
  int rank;
  Eigen::MatrixXd basis;
};

NullSpace null_space(const Eigen::MatrixXd& J, int n, double rank_tol) {
  if (J.rows() == 0) return {0, Eigen::MatrixXd::Identity(n, n)};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * smax && s(i) > 0.0) ++rank;
  return {rank, svd.matrixV().rightCols(n - rank)};
}

}  // namespace

int jacobian_rank(const Variety& v, const Eigen::VectorXd& x, double rank_tol) {
  return null_space(jacobian_at(v, x), v.ambient_dim(), rank_tol).rank;
}

TangentFrame tangent_frame(const Variety& v, const Eigen::VectorXd& x, double tol) {
  if (!membership(v, x, tol))
    throw PreconditionError("tangent_frame: point is not on the variety (max residual " +
                            std::to_string(v.residuals(x).cwiseAbs().maxCoeff()) + ")");
  auto ns = null_space(jacobian_at(v, x), v.ambient_dim(), tol);
  const int dim = v.ambient_dim() - ns.rank;
  if (v.expected_dim() && dim != *v.expected_dim())
    throw SingularityError("tangent_frame: tangent dimension " + std::to_string(dim) +
                           " differs from expected dimension " + std::to_string(*v.expected_dim()));
  return {x, std::move(ns.basis)};
}

int dimension_estimate(const Variety& v, const std::vector<Eigen::VectorXd>& samples, double tol) {
  if (samples.empty()) throw ArgumentError("dimension_estimate: no samples");
  std::optional<int> dim;
  for (const auto& x : samples) {
    if (!membership(v, x, tol)) throw PreconditionError("dimension_estimate: sample not on the variety");
    int d = v.ambient_dim() - jacobian_rank(v, x, tol);
    if (dim && *dim != d)
      throw SingularityError("dimension_estimate: Jacobian rank varies across samples (" +
                             std::to_string(*dim) + " vs " + std::to_string(d) + ")");
    dim = d;
  }
  if (v.expected_dim() && *dim != *v.expected_dim())
    throw SingularityError("dimension_estimate: estimated dimension " + std::to_string(*dim) +
                           " differs from expected " + std::to_string(*v.expected_dim()));
  return *dim;
}

std::optional<Eigen::VectorXd> project_to_variety(const Variety& v, const Eigen::VectorXd& start,
                                                  double tol, int max_iter) {
  Eigen::VectorXd x = start;
  if (v.generators().empty()) return x;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd r = v.residuals(x);
    if (!r.allFinite()) return std::nullopt;
    if (r.cwiseAbs().maxCoeff() <= tol) return x;
    Eigen::MatrixXd J = jacobian_at(v, x);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
    cod.setThreshold(1e-12);
    Eigen::VectorXd step = cod.solve(r);
    // Halve the step while it does not reduce the residual.
    double rn = r.norm();
    double t = 1.0;
    Eigen::VectorXd trial = x - step;
    for (int k = 0; k < 30; ++k) {
      trial = x - t * step;
      if (v.residuals(trial).norm() < rn) break;
      t *= 0.5;
    }
    x = trial;
  }
  Eigen::VectorXd r = v.residuals(x);
  if (r.allFinite() && r.cwiseAbs().maxCoeff() <= tol) return x;
  return std::nullopt;
}

std::vector<Eigen::VectorXd> sample_points(const Variety& v, int count, std::mt19937_64& rng,
                                           const Eigen::VectorXd& center, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  int failures = 0;
  const int n = v.ambient_dim();
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = center(i) + scale * normal(rng);
    if (auto x = project_to_variety(v, y, 1e-12)) {
      out.push_back(*x);
    } else if (++failures > 100 * (count + 1)) {
      throw InfeasibleError("sample_points: could not project random points onto the variety");
    }
  }
  return out;
}

int affine_hull_dimension(const Variety& v, double tol) {
  const int n = v.ambient_dim();
  std::mt19937_64 rng(0x5eed);
  const int count = 2 * n + 4;
  auto pts = sample_points(v, count, rng, Eigen::VectorXd::Zero(n), 1.0);
  Eigen::MatrixXd diffs(n, count - 1);
  for (int j = 1; j < count; ++j) diffs.col(j - 1) = pts[j] - pts[0];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++rank;
  return rank;
}

}  // namespace roofbench
