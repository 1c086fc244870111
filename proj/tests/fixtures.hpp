#ifndef ROOFBENCH_TESTS_FIXTURES_HPP
#define ROOFBENCH_TESTS_FIXTURES_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "roofbench/roof.hpp"

namespace fixtures {

using roofbench::Poly;

inline roofbench::Variety circle() {
  return roofbench::Variety(2, {roofbench::parse_polynomial("1*x1^2 + 1*x2^2 - 1", 2)}, 1);
}

inline Poly x_cubed() { return roofbench::parse_polynomial("1*x1^3", 2); }

/// Tangent field (-y, x) of the circle.
inline roofbench::TangentField circle_field() {
  return {{-Poly::variable(2, 1), Poly::variable(2, 0)}};
}

inline roofbench::RoofProblem circle_x3(roofbench::Sense s = roofbench::Sense::convex, bool with_field = false) {
  if (with_field) return roofbench::RoofProblem(circle(), x_cubed(), s, circle_field());
  return roofbench::RoofProblem(circle(), x_cubed(), s);
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

/// Analytic tritangent decomposition of the origin, canonical order.
inline roofbench::Decomposition tritangent() {
  roofbench::Decomposition d;
  d.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const double s = std::sqrt(3.0) / 2.0;
  d.points = {vec({-1.0, 0.0}), vec({0.5, -s}), vec({0.5, s})};
  return d;
}

/// Squared two-qubit concurrence from the spin-flip spectrum:
/// C = max(0, mu1 - mu2 - mu3 - mu4), mu the square roots of the eigenvalues
/// of rho (sy x sy) conj(rho) (sy x sy) in decreasing order.
inline double concurrence_squared(const Eigen::MatrixXcd& rho) {
  using C = std::complex<double>;
  Eigen::Matrix2cd sy;
  sy << C(0), C(0, -1), C(0, 1), C(0);
  const Eigen::MatrixXcd yy = Eigen::kroneckerProduct(sy, sy).eval();
  const Eigen::MatrixXcd flip = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(rho * flip, false);
  std::vector<double> mu;
  for (int i = 0; i < 4; ++i) mu.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
  std::sort(mu.rbegin(), mu.rend());
  const double c = std::max(0.0, mu[0] - mu[1] - mu[2] - mu[3]);
  return c * c;
}

}  // namespace fixtures

#endif  // ROOFBENCH_TESTS_FIXTURES_HPP
