#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "roofbench/quantum.hpp"

using namespace roofbench;
using namespace roofbench::quantum;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXcd ket(std::initializer_list<Complex> v) {
  Eigen::VectorXcd k(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (auto c : v) k(i++) = c;
  return k;
}

Eigen::VectorXcd bell() { return ket({1, 0, 0, 1}) / std::sqrt(2.0); }

CoefficientVector random_coeffs(const BasisPtr& b, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  CoefficientVector c{Eigen::VectorXd(b->coordinate_count()), b};
  for (int i = 0; i < c.c.size(); ++i) c.c(i) = n(rng);
  return c;
}

}  // namespace

TEST_CASE("qubit Gell-Mann basis is the Pauli basis") {
  const auto b = gellmann_basis(2);
  REQUIRE(b->size() == 4);
  const double h = 1 / std::sqrt(2.0);
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, Complex(0, -1), Complex(0, 1), 0;
  sz << 1, 0, 0, -1;
  CHECK(max_abs(b->elements()[0] - Eigen::Matrix2cd::Identity() * h) <= 1e-15);
  CHECK(max_abs(b->elements()[1] - sx * h) <= 1e-15);
  CHECK(max_abs(b->elements()[2] - sy * h) <= 1e-15);
  CHECK(max_abs(b->elements()[3] - sz * h) <= 1e-15);
  const auto& d = b->tensors().d;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) CHECK(std::abs(d(i, j, k)) <= 1e-15);
}

TEST_CASE("bases are orthonormal with D^2 - 1 traceless generators") {
  for (int D = 2; D <= 5; ++D) {
    const auto b = gellmann_basis(D);
    CHECK(b->size() == D * D);
    CHECK((b->gram() - Eigen::MatrixXd::Identity(D * D, D * D)).cwiseAbs().maxCoeff() <= 1e-12);
    for (int j = 1; j < b->size(); ++j) CHECK(std::abs(b->elements()[j].trace()) <= 1e-14);
  }
  CHECK_THROWS_AS(gellmann_basis(1), ArgumentError);
}

TEST_CASE("structure tensors are symmetric / antisymmetric and rebuild products") {
  for (int D = 2; D <= 4; ++D) {
    const auto b = gellmann_basis(D);
    const auto& T = b->tensors();
    const int K = D * D - 1;
    double sym = 0, anti = 0, rebuild = 0;
    for (int j = 0; j < K; ++j)
      for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
          sym = std::max({sym, std::abs(T.d(j, k, l) - T.d(k, j, l)), std::abs(T.d(j, k, l) - T.d(l, k, j))});
          anti = std::max({anti, std::abs(T.f(j, k, l) + T.f(k, j, l)), std::abs(T.f(j, k, l) + T.f(l, k, j))});
        }
        Eigen::MatrixXcd P = (j == k ? 1.0 / D : 0.0) * Eigen::MatrixXcd::Identity(D, D);
        for (int l = 0; l < K; ++l) P += Complex(T.d(j, k, l), T.f(j, k, l)) * b->elements()[l + 1];
        rebuild = std::max(rebuild, max_abs(P - b->elements()[j + 1] * b->elements()[k + 1]));
      }
    CHECK(sym <= 1e-12);
    CHECK(anti <= 1e-12);
    CHECK(rebuild <= 1e-12);
  }
}

TEST_CASE("plain-convention products rebuild from chi") {
  const auto b = gellmann_basis(3, Convention::plain);
  const int S = b->size();
  double worst = 0;
  for (int a = 0; a < S; ++a)
    for (int c = 0; c < S; ++c) {
      Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(3, 3);
      for (int g = 0; g < S; ++g) P += b->tensors().chi(a, c, g) * b->elements()[g];
      worst = std::max(worst, max_abs(P - b->elements()[a] * b->elements()[c]));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("vector products") {
  std::mt19937_64 rng(1);
  const auto b2 = gellmann_basis(2);
  const auto a = random_coeffs(b2, rng), c = random_coeffs(b2, rng);
  CHECK(star(a, c).c.cwiseAbs().maxCoeff() <= 1e-15);
  const auto b3 = gellmann_basis(3);
  const auto x = random_coeffs(b3, rng), y = random_coeffs(b3, rng);
  CHECK(wedge(x, x).c.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((wedge(x, y).c + wedge(y, x).c).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((star(x, y).c - star(y, x).c).cwiseAbs().maxCoeff() <= 1e-14);
  const auto pure = embed(DensityMatrix::pure(random_pure_state(3, rng)), b3);
  CHECK(inner(pure, pure) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK_THROWS_AS(inner(x, a), ArgumentError);
  const auto plain = gellmann_basis(3, Convention::plain);
  CoefficientVector p{Eigen::VectorXd::Zero(9), plain};
  CHECK_THROWS_AS(star(p, p), ArgumentError);
}

TEST_CASE("embedding") {
  const auto b = gellmann_basis(2);
  const auto c = embed(DensityMatrix::pure(ket({1, 0})), b);
  CHECK((c.c - fixtures::vec({0, 0, std::sqrt(2.0)})).cwiseAbs().maxCoeff() <= 1e-15);
  const auto mixed = embed(DensityMatrix(Eigen::MatrixXcd::Identity(3, 3) / 3.0), gellmann_basis(3));
  CHECK(mixed.c.cwiseAbs().maxCoeff() <= 1e-15);
  std::mt19937_64 rng(2);
  for (int D = 2; D <= 4; ++D)
    for (auto conv : {Convention::scaled, Convention::plain}) {
      const DensityMatrix rho = random_density_matrix(D, D, rng);
      const auto basis = gellmann_basis(D, conv);
      CHECK(max_abs(unembed(embed(rho, basis)) - rho.matrix()) <= 1e-12);
    }
  CHECK_THROWS_AS(embed(DensityMatrix::pure(ket({1, 0})), gellmann_basis(3)), ArgumentError);
}

TEST_CASE("density matrix validation") {
  Eigen::Matrix2cd m;
  m << 0.5, 0.1, 0.2, 0.5;
  CHECK_THROWS_AS(DensityMatrix{m}, PreconditionError);
  m << 0.6, 0, 0, 0.6;
  CHECK_THROWS_AS(DensityMatrix{m}, PreconditionError);
  m << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(DensityMatrix{m}, PreconditionError);
}

TEST_CASE("purity conditions") {
  std::mt19937_64 rng(3);
  for (int D = 2; D <= 4; ++D) {
    const auto b = gellmann_basis(D);
    for (int k = 0; k < 10; ++k) {
      const auto c = embed(DensityMatrix::pure(random_pure_state(D, rng)), b);
      const auto rep = purity_conditions(c);
      CHECK(rep.is_pure);
      CHECK(rep.norm_residual <= 1e-10);
      CHECK(rep.star_residual <= 1e-10);
      CHECK(purity_conditions(embed(random_density_matrix(D, 2, rng), b)).is_pure == false);
    }
    const auto origin = purity_conditions(CoefficientVector{Eigen::VectorXd::Zero(D * D - 1), b});
    CHECK_FALSE(origin.is_pure);
    CHECK(origin.norm_residual == doctest::Approx(D * (D - 1.0)));
  }
  // Qubits: only the norm condition bites.
  const auto b2 = gellmann_basis(2);
  CoefficientVector on_sphere{fixtures::vec({1.0, 1.0, 0.0}), b2};
  CHECK(purity_conditions(on_sphere).is_pure);
}

TEST_CASE("plain-convention purity") {
  std::mt19937_64 rng(4);
  const auto b = gellmann_basis(3, Convention::plain);
  for (int k = 0; k < 10; ++k) {
    CHECK(purity_conditions(embed(DensityMatrix::pure(random_pure_state(3, rng)), b)).is_pure);
    CHECK_FALSE(purity_conditions(embed(random_density_matrix(3, 3, rng), b)).is_pure);
  }
}

TEST_CASE("pure-state varieties") {
  std::mt19937_64 rng(5);
  for (int D = 2; D <= 3; ++D) {
    const auto b = gellmann_basis(D);
    const Variety v = pure_state_variety(*b);
    CHECK(v.ambient_dim() == D * D - 1);
    std::vector<Eigen::VectorXd> pts;
    for (int k = 0; k < 5; ++k) pts.push_back(embed(DensityMatrix::pure(random_pure_state(D, rng)), b).c);
    for (const auto& x : pts) CHECK(membership(v, x, 1e-10));
    CHECK(dimension_estimate(v, pts) == 2 * (D - 1));
  }
}

TEST_CASE("angles between pure states") {
  std::mt19937_64 rng(6);
  const auto psi = DensityMatrix::pure(random_pure_state(3, rng));
  CHECK(angle(psi, psi) <= 1e-7);
  CHECK(angle(DensityMatrix::pure(ket({1, 0, 0})), DensityMatrix::pure(ket({0, 1, 0}))) ==
        doctest::Approx(2 * M_PI / 3));
  CHECK(angle(DensityMatrix::pure(ket({1, 0})), DensityMatrix::pure(ket({0, 1}))) == doctest::Approx(M_PI));
  CHECK_THROWS_AS(angle(random_density_matrix(3, 2, rng), psi), PreconditionError);
  for (int D = 2; D <= 5; ++D) {
    const double theta_max = std::acos(1.0 / (1.0 - D));
    for (int k = 0; k < 20; ++k) {
      const double t = angle(DensityMatrix::pure(random_pure_state(D, rng)), DensityMatrix::pure(random_pure_state(D, rng)));
      CHECK(t <= theta_max + 1e-9);
    }
  }
}

TEST_CASE("adjoint representation") {
  std::mt19937_64 rng(7);
  const auto b = gellmann_basis(3);
  CHECK((adjoint_rep(Eigen::MatrixXcd::Identity(3, 3), *b) - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <=
        1e-14);
  for (int k = 0; k < 5; ++k) {
    const Eigen::MatrixXcd U = random_unitary(3, rng);
    const Eigen::MatrixXd O = adjoint_rep(U, *b);
    CHECK((O.transpose() * O - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(O(0, 0) - 1) <= 1e-12);
    CHECK(O.row(0).tail(8).cwiseAbs().maxCoeff() <= 1e-12);
    const DensityMatrix rho = random_density_matrix(3, 3, rng);
    const DensityMatrix moved(U * rho.matrix() * U.adjoint());
    CHECK((apply(O, embed(rho, b)).c - embed(moved, b).c).cwiseAbs().maxCoeff() <= 1e-10);
    const auto x = random_coeffs(b, rng), y = random_coeffs(b, rng);
    CHECK(inner(apply(O, x), apply(O, y)) == doctest::Approx(inner(x, y)).epsilon(1e-12));
    CHECK((wedge(apply(O, x), apply(O, y)).c - apply(O, wedge(x, y)).c).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((star(apply(O, x), apply(O, y)).c - apply(O, star(x, y)).c).cwiseAbs().maxCoeff() <= 1e-10);
  }
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(3, 3);
  bad(0, 0) = 2;
  CHECK_THROWS_AS(adjoint_rep(bad, *b), PreconditionError);
}

TEST_CASE("rotated bases") {
  std::mt19937_64 rng(8);
  const auto b = gellmann_basis(3);
  const auto same = rotate_basis(*b, Eigen::MatrixXd::Identity(9, 9));
  for (int i = 0; i < 9; ++i) CHECK(max_abs(same->elements()[i] - b->elements()[i]) <= 1e-15);

  const Eigen::MatrixXd O = adjoint_rep(random_unitary(3, rng), *b);
  const auto rotated = rotate_basis(*b, O);
  CHECK(rotated->convention() == Convention::scaled);
  const auto plain = gellmann_basis(3, Convention::plain);
  const auto rotated_plain = rotate_basis(*plain, O);
  for (int k = 0; k < 5; ++k) {
    const DensityMatrix psi = DensityMatrix::pure(random_pure_state(3, rng));
    // Pure in the old coordinates, and its image O c is pure in the new ones.
    const CoefficientVector c = embed(psi, plain);
    const CoefficientVector d{O * c.c, rotated_plain};
    CHECK(purity_conditions(d).is_pure);
    CHECK(purity_conditions(embed(psi, rotated)).is_pure);
  }
  Eigen::MatrixXd skew = Eigen::MatrixXd::Identity(9, 9);
  skew(1, 2) = 0.5;
  CHECK_THROWS_AS(rotate_basis(*b, skew), PreconditionError);
}

TEST_CASE("tensor-product bases") {
  const auto t = tensor_product_basis(*gellmann_basis(2), *gellmann_basis(3));
  CHECK(t->dim() == 6);
  CHECK(t->size() == 36);
  CHECK(t->convention() == Convention::scaled);
  CHECK((t->gram() - Eigen::MatrixXd::Identity(36, 36)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("partial traces") {
  const auto half = partial_trace(DensityMatrix::pure(bell()), 2, 2, Subsystem::B);
  CHECK(max_abs(half.matrix() - Eigen::Matrix2cd::Identity() / 2.0) <= 1e-15);
  const Eigen::VectorXcd zero_plus = ket({1, 1, 0, 0}) / std::sqrt(2.0);
  const auto a = partial_trace(DensityMatrix::pure(zero_plus), 2, 2, Subsystem::B);
  CHECK(max_abs(a.matrix() - (Eigen::Matrix2cd() << 1, 0, 0, 0).finished()) <= 1e-15);
  const auto bsys = partial_trace(DensityMatrix::pure(zero_plus), 2, 2, Subsystem::A);
  CHECK(max_abs(bsys.matrix() - Eigen::Matrix2cd::Constant(0.5)) <= 1e-15);

  std::mt19937_64 rng(9);
  const DensityMatrix rho = random_density_matrix(6, 4, rng);
  CHECK(std::abs(partial_trace(rho, 2, 3, Subsystem::B).matrix().trace() - 1.0) <= 1e-12);
  CHECK(std::abs(partial_trace(rho, 2, 3, Subsystem::A).matrix().trace() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(partial_trace(rho, 2, 2, Subsystem::B), ArgumentError);

  // Coefficient form: sqrt(dB) c_{a0} over plain bases.
  const auto plain = tensor_product_basis(*gellmann_basis(2, Convention::plain), *gellmann_basis(3, Convention::plain));
  const Eigen::VectorXd red = reduced_coefficients(embed(rho, plain), 2, 3);
  const auto expected = embed(partial_trace(rho, 2, 3, Subsystem::B), gellmann_basis(2, Convention::plain));
  CHECK((red - expected.c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("entanglement measures on pure states") {
  CHECK(std::abs(F_a(bell(), 2, 2, 2) - 1.0) <= 1e-12);
  std::mt19937_64 rng(10);
  for (int a : {2, 3, 4}) {
    const Eigen::VectorXcd prod = Eigen::kroneckerProduct(random_pure_state(2, rng), random_pure_state(3, rng));
    CHECK(std::abs(F_a(prod, 2, 3, a)) <= 1e-12);
  }
  for (double p = 0.0; p <= 1.0; p += 0.125) {
    const Eigen::VectorXcd psi = ket({std::sqrt(p), 0, 0, std::sqrt(1 - p)});
    CHECK(std::abs(F_a(psi, 2, 2, 2) - 4 * p * (1 - p)) <= 1e-12);
  }
  for (int k = 0; k < 10; ++k) {
    const double v = F_a(random_pure_state(6, rng), 2, 3, 3);
    CHECK(v >= -1e-12);
    CHECK(v <= 2 * (1 - std::pow(2.0, -2)) + 1e-12);
  }
  CHECK_THROWS_AS(F_a(bell(), 2, 2, 1), ArgumentError);
  CHECK_THROWS_AS(f_a(DensityMatrix::pure(bell()), 1), ArgumentError);
  CHECK_THROWS_AS(F_a(ket({1, 1, 0, 0}), 2, 2, 2), PreconditionError);
}

TEST_CASE("f_a is concave and unitarily invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int D = 2; D <= 4; ++D)
    for (int a = 2; a <= 3; ++a)
      for (int k = 0; k < 10; ++k) {
        const DensityMatrix w1 = random_density_matrix(D, 1 + k % D, rng), w2 = random_density_matrix(D, D, rng);
        const double p = u(rng);
        const DensityMatrix mix(p * w1.matrix() + (1 - p) * w2.matrix());
        CHECK(f_a(mix, a) >= p * f_a(w1, a) + (1 - p) * f_a(w2, a) - 1e-10);
        const Eigen::MatrixXcd U = random_unitary(D, rng);
        CHECK(std::abs(f_a(DensityMatrix(U * w2.matrix() * U.adjoint()), a) - f_a(w2, a)) <= 1e-12);
      }
}

TEST_CASE("f_a polynomial agrees with F_a") {
  std::mt19937_64 rng(12);
  const auto t = tensor_product_basis(*gellmann_basis(2), *gellmann_basis(2));
  for (int a : {2, 3}) {
    const Poly P = f_a_polynomial(2, 2, a);
    for (int k = 0; k < 10; ++k) {
      const Eigen::VectorXcd psi = random_pure_state(4, rng);
      CHECK(std::abs(eval(P, embed(DensityMatrix::pure(psi), t).c) - F_a(psi, 2, 2, a)) <= 1e-12);
    }
  }
}

TEST_CASE("concurrence oracle on known states") {
  CHECK(fixtures::concurrence_squared(bell() * bell().adjoint()) == doctest::Approx(1.0));
  const Eigen::VectorXcd prod = ket({1, 0, 0, 0});
  CHECK(fixtures::concurrence_squared(prod * prod.adjoint()) <= 1e-14);
  std::mt19937_64 rng(13);
  // Rounding-level eigenvalues of rho * flip enter through square roots, so
  // the oracle itself is good to about 1e-8 on pure states.
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXcd psi = random_pure_state(4, rng);
    CHECK(std::abs(fixtures::concurrence_squared(psi * psi.adjoint()) - F_a(psi, 2, 2, 2)) <= 1e-7);
  }
}

TEST_CASE("HJW ensembles reconstruct the state") {
  std::mt19937_64 rng(14);
  const DensityMatrix rho = random_density_matrix(4, 2, rng);
  const Ensemble eigen = hjw_ensemble(rho, Eigen::MatrixXcd::Identity(2, 2));
  CHECK(eigen.states.size() == 2);
  CHECK(max_abs(eigen.density() - rho.matrix()) <= 1e-10);
  for (double phi = 0; phi < 3.2; phi += 0.4) {
    Eigen::Matrix2cd R;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    const Ensemble e = hjw_ensemble(rho, R);
    CHECK(max_abs(e.density() - rho.matrix()) <= 1e-10);
    CHECK(std::abs(e.weights.sum() - 1) <= 1e-12);
    CHECK(e.weights.minCoeff() > 0);
  }
  // Rectangular right-unitary: first two columns of a 4x4 unitary.
  const Eigen::MatrixXcd U = random_unitary(4, rng).leftCols(2);
  CHECK(max_abs(hjw_ensemble(rho, U).density() - rho.matrix()) <= 1e-10);

  const Eigen::VectorXcd psi = random_pure_state(4, rng);
  const Ensemble single = hjw_ensemble(DensityMatrix::pure(psi), random_unitary(3, rng).leftCols(1));
  for (const auto& s : single.states) CHECK(std::abs(std::abs(s.dot(psi)) - 1) <= 1e-10);

  CHECK_THROWS_AS(hjw_ensemble(rho, Eigen::MatrixXcd::Identity(3, 3)), PreconditionError);
  CHECK_THROWS_AS(hjw_ensemble(rho, Eigen::MatrixXcd::Constant(2, 2, 1.0)), PreconditionError);
}

TEST_CASE("entanglement of formation") {
  EofOptions opt;
  opt.restarts = 16;
  const auto pure = entanglement_of_formation(DensityMatrix::pure(bell()), 2, 2, opt);
  CHECK(pure.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pure.ensemble.states.size() == 1);

  Eigen::Matrix4cd sep = Eigen::Matrix4cd::Zero();
  sep(0, 0) = sep(3, 3) = 0.5;
  CHECK(entanglement_of_formation(DensityMatrix(sep), 2, 2, opt).value <= 1e-8);

  const Eigen::VectorXcd phi_minus = ket({1, 0, 0, -1}) / std::sqrt(2.0);
  for (double q : {0.6, 0.85}) {
    const DensityMatrix rho(q * bell() * bell().adjoint() + (1 - q) * phi_minus * phi_minus.adjoint());
    const double oracle = fixtures::concurrence_squared(rho.matrix());
    CHECK(oracle == doctest::Approx((2 * q - 1) * (2 * q - 1)).epsilon(1e-12));
    const auto r = entanglement_of_formation(rho, 2, 2, opt);
    CHECK(std::abs(r.value - oracle) <= 1e-4);
    CHECK(max_abs(r.ensemble.density() - rho.matrix()) <= 1e-10);
  }

  std::mt19937_64 rng(15);
  const DensityMatrix rho = random_density_matrix(4, 2, rng);
  const double us = entanglement_of_formation(rho, 2, 2, opt).value;
  EofOptions pr = opt;
  pr.strategy = EofStrategy::poincare_roof;
  const auto roof = entanglement_of_formation(rho, 2, 2, pr);
  CHECK(std::abs(us - roof.value) <= 1e-4);
  CHECK(max_abs(roof.ensemble.density() - rho.matrix()) <= 1e-8);

  CHECK_THROWS_AS(entanglement_of_formation(random_density_matrix(6, 2, rng), 2, 3, opt), UnsupportedScaleError);
  CHECK_THROWS_AS(entanglement_of_formation(rho, 2, 3, opt), ArgumentError);
}
