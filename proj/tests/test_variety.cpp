#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "roofbench/quantum.hpp"
#include "roofbench/variety.hpp"

using namespace roofbench;
using fixtures::vec;

namespace {

Variety sphere6() { return Variety(3, {parse_polynomial("1*x1^2 + 1*x2^2 + 1*x3^2 - 6", 3)}, 2); }

Variety planar_circle() {
  return Variety(3, {parse_polynomial("1*x1^2 + 1*x2^2 - 1", 3), parse_polynomial("1*x3^1", 3)}, 1);
}

void check_frame(const Variety& v, const TangentFrame& fr) {
  const Eigen::MatrixXd J = jacobian_at(v, fr.base_point);
  for (int j = 0; j < J.rows(); ++j)
    for (int i = 0; i < fr.dim(); ++i)
      CHECK(std::abs(J.row(j).dot(fr.basis.col(i))) <= 1e-9 * (J.row(j).norm() + 1));
  const Eigen::MatrixXd G = fr.basis.transpose() * fr.basis;
  CHECK((G - Eigen::MatrixXd::Identity(fr.dim(), fr.dim())).cwiseAbs().maxCoeff() <= 1e-12);
}

}  // namespace

TEST_CASE("membership") {
  const Variety c = fixtures::circle();
  CHECK(membership(c, vec({1, 0}), 1e-10));
  CHECK_FALSE(membership(c, vec({0, 0}), 1e-10));
  CHECK(membership(c, vec({std::cos(0.3), std::sin(0.3)}), 1e-10));
  CHECK_THROWS_AS(membership(c, vec({1, 0, 0}), 1e-10), ArgumentError);
}

TEST_CASE("membership does not depend on generator order") {
  const Poly a = parse_polynomial("1*x1^2 + 1*x2^2 - 1", 3), b = parse_polynomial("1*x3^1 - 0.5*x1^1", 3);
  const Variety v1(3, {a, b}), v2(3, {b, a});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd x(3);
    x << n(rng), n(rng), n(rng);
    if (k % 2 == 0) x = *project_to_variety(v1, x);
    CHECK(membership(v1, x, 1e-10) == membership(v2, x, 1e-10));
  }
}

TEST_CASE("jacobian rows are generator gradients") {
  const Variety c = fixtures::circle();
  CHECK(jacobian_at(c, vec({1, 0})).isApprox((Eigen::MatrixXd(1, 2) << 2, 0).finished()));
  CHECK(jacobian_at(c, vec({0, 1})).isApprox((Eigen::MatrixXd(1, 2) << 0, 2).finished()));
  const Eigen::MatrixXd J = jacobian_at(sphere6(), vec({std::sqrt(6.0), 0, 0}));
  REQUIRE(J.rows() == 1);
  CHECK(J(0, 0) == doctest::Approx(2 * std::sqrt(6.0)));
  CHECK(J(0, 1) == 0.0);
  CHECK(J(0, 2) == 0.0);
}

TEST_CASE("tangent frames of the circle") {
  const Variety c = fixtures::circle();
  const TangentFrame f0 = tangent_frame(c, vec({1, 0}));
  REQUIRE(f0.dim() == 1);
  CHECK(std::abs(f0.basis(0, 0)) <= 1e-15);
  CHECK(std::abs(f0.basis(1, 0)) == doctest::Approx(1.0));

  const double s = std::sqrt(3.0) / 2;
  const TangentFrame f1 = tangent_frame(c, vec({0.5, s}));
  const Eigen::Vector2d expected(-s, 0.5);
  CHECK(std::abs(std::abs(f1.basis.col(0).dot(expected)) - 1.0) <= 1e-12);

  for (double t = 0.1; t < 6.2; t += 0.37) {
    const Eigen::VectorXd x = vec({std::cos(t), std::sin(t)});
    const TangentFrame fr = tangent_frame(c, x);
    CHECK(std::abs(std::abs(fr.basis.col(0).dot(Eigen::Vector2d(-x(1), x(0)))) - 1.0) <= 1e-12);
    check_frame(c, fr);
  }
}

TEST_CASE("tangent_frame preconditions") {
  CHECK_THROWS_AS(tangent_frame(fixtures::circle(), vec({0, 0})), PreconditionError);
  // Expected dimension 0 contradicts the curve.
  const Variety wrong(2, {parse_polynomial("1*x1^2 + 1*x2^2 - 1", 2)}, 0);
  CHECK_THROWS_AS(tangent_frame(wrong, vec({1, 0})), SingularityError);
  // The node of y^2 = x^2 (x + 1) is singular.
  const Variety nodal(2, {parse_polynomial("1*x2^2 - 1*x1^3 - 1*x1^2", 2)}, 1);
  CHECK_THROWS_AS(tangent_frame(nodal, vec({0, 0})), SingularityError);
}

TEST_CASE("dimension estimates") {
  std::vector<Eigen::VectorXd> pts;
  for (int k = 0; k < 8; ++k) pts.push_back(vec({std::cos(0.7 * k), std::sin(0.7 * k)}));
  CHECK(dimension_estimate(fixtures::circle(), pts) == 1);

  std::vector<Eigen::VectorXd> pc;
  for (int k = 0; k < 8; ++k) pc.push_back(vec({std::cos(0.7 * k), std::sin(0.7 * k), 0}));
  CHECK(dimension_estimate(planar_circle(), pc) == 1);

  const auto basis = quantum::gellmann_basis(2);
  const Variety bloch = quantum::pure_state_variety(*basis);
  std::mt19937_64 rng(1);
  std::vector<Eigen::VectorXd> ps;
  for (int k = 0; k < 8; ++k)
    ps.push_back(quantum::embed(quantum::DensityMatrix::pure(quantum::random_pure_state(2, rng)), basis).c);
  CHECK(dimension_estimate(bloch, ps) == 2);
}

TEST_CASE("frame dimension matches the dimension estimate") {
  std::mt19937_64 rng(2);
  for (const Variety& v : {fixtures::circle(), sphere6(), planar_circle()}) {
    const auto pts = sample_points(v, 10, rng, Eigen::VectorXd::Zero(v.ambient_dim()), 2.0);
    const int d = dimension_estimate(v, pts);
    for (const auto& x : pts) {
      const TangentFrame fr = tangent_frame(v, x);
      CHECK(fr.dim() == d);
      check_frame(v, fr);
    }
  }
}

TEST_CASE("projection lands on the variety") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x(3);
    x << n(rng), n(rng), n(rng);
    const auto p = project_to_variety(sphere6(), x);
    REQUIRE(p.has_value());
    CHECK(membership(sphere6(), *p, 1e-12));
  }
}

TEST_CASE("affine hull dimension") {
  CHECK(affine_hull_dimension(fixtures::circle()) == 2);
  CHECK(affine_hull_dimension(planar_circle()) == 2);
  CHECK(affine_hull_dimension(sphere6()) == 3);
}
