#ifndef ROOFBENCH_QUANTUM_HPP
#define ROOFBENCH_QUANTUM_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/CXX11/Tensor>

#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "roofbench/roof.hpp"

namespace roofbench::quantum {

using Complex = std::complex<double>;

/// scaled: rho = (I + c_j lambda^j) / D over the traceless generators.
/// plain:  rho = c_alpha mu^alpha over the full basis.
enum class Convention { scaled, plain };

const char* to_string(Convention c);
Convention parse_convention(const std::string& s);

/// Hermitian, unit trace, positive semidefinite (to 1e-12 / 1e-12 / -1e-10).
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd m);
  static DensityMatrix pure(const Eigen::VectorXcd& psi);

  const Eigen::MatrixXcd& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double purity() const;  // tr(rho^2)

 private:
  Eigen::MatrixXcd m_;
};

struct StructureTensors {
  // Traceless sector (scaled convention only), indices 0..D^2-2 for
  // lambda^1..lambda^{D^2-1}.
  Eigen::Tensor<double, 3> d;
  Eigen::Tensor<double, 3> f;
  std::vector<Eigen::MatrixXd> D;  // D[l](j, k) = d^{jk}_l
  // Full basis, any convention.
  Eigen::Tensor<Complex, 3> chi;  // mu^a mu^b = chi^{ab}_g mu^g
  Eigen::VectorXd tau;            // tr(mu^a)
};

/// Hermitian operator basis, orthonormal under the Hilbert-Schmidt product.
/// In the scaled convention element 0 is I/sqrt(D) and the rest are traceless.
class OperatorBasis {
 public:
  OperatorBasis(int dim, std::vector<Eigen::MatrixXcd> elements, Convention convention);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(elements_.size()); }
  const std::vector<Eigen::MatrixXcd>& elements() const { return elements_; }
  Convention convention() const { return convention_; }
  const StructureTensors& tensors() const { return tensors_; }
  /// Length of coefficient vectors: D^2 - 1 (scaled) or D^2 (plain).
  int coordinate_count() const { return convention_ == Convention::scaled ? size() - 1 : size(); }
  /// Gram matrix tr(mu^a mu^b).
  Eigen::MatrixXd gram() const;

 private:
  int dim_;
  std::vector<Eigen::MatrixXcd> elements_;
  Convention convention_;
  StructureTensors tensors_;
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

/// Generalized Gell-Mann basis: I/sqrt(D), then the symmetric off-diagonal
/// generators (a<b lexicographic), the antisymmetric ones likewise, then the
/// diagonal ones for a = 2..D.
BasisPtr gellmann_basis(int D, Convention convention = Convention::scaled);

/// {lambda^a (x) lambda^b} with index a * B.size() + b.
BasisPtr tensor_product_basis(const OperatorBasis& A, const OperatorBasis& B);

/// mu^a = O_ab lambda^b. The scaled convention is kept when O fixes index 0.
BasisPtr rotate_basis(const OperatorBasis& basis, const Eigen::MatrixXd& O);

struct CoefficientVector {
  Eigen::VectorXd c;
  BasisPtr basis;
};

double inner(const CoefficientVector& a, const CoefficientVector& b);
/// (a ^ b)_l = a_j b_k f^{jk}_l
CoefficientVector wedge(const CoefficientVector& a, const CoefficientVector& b);
/// (a * b)_l = a_j b_k d^{jk}_l
CoefficientVector star(const CoefficientVector& a, const CoefficientVector& b);

CoefficientVector embed(const DensityMatrix& rho, const BasisPtr& basis);
/// Works for any coefficient vector; the result need not be positive.
Eigen::MatrixXcd unembed(const CoefficientVector& c);

struct PurityReport {
  bool is_pure = false;
  double norm_residual = 0.0;  // |l_0| (plain: max of |c.tau - 1|, ||c|^2 - 1|)
  double star_residual = 0.0;  // max_l |l_l|
};

PurityReport purity_conditions(const CoefficientVector& c, double tol = 1e-9);

/// Pure states as a real variety in coefficient space.
Variety pure_state_variety(const OperatorBasis& basis);

/// Angle between the coefficient vectors of two pure states.
double angle(const DensityMatrix& rho, const DensityMatrix& sigma);

/// O(U)_ab = tr(lambda^a U lambda^b U^dag), a D^2 x D^2 orthogonal matrix.
Eigen::MatrixXd adjoint_rep(const Eigen::MatrixXcd& U, const OperatorBasis& basis);

/// Applies O(U) to a coefficient vector (traceless block in the scaled convention).
CoefficientVector apply(const Eigen::MatrixXd& O, const CoefficientVector& c);

enum class Subsystem { A, B };

/// Partial trace of a state on C^dA (x) C^dB, tracing out `traced`.
DensityMatrix partial_trace(const DensityMatrix& rho, int dA, int dB, Subsystem traced);

/// Plain coefficients of tr_B(rho) in the plain Gell-Mann basis of C^dA, from
/// the plain coefficients c_{ab} of rho in the tensor-product basis:
/// sqrt(dB) * c_{a0}.
Eigen::VectorXd reduced_coefficients(const CoefficientVector& c_plain, int dA, int dB);

/// f_a(rho) = 2 (1 - tr(rho^a)).
double f_a(const DensityMatrix& rho, int a);
/// F_a(psi) = f_a(tr_B |psi><psi|).
double F_a(const Eigen::VectorXcd& psi, int dA, int dB, int a);

/// F_a as a polynomial in the scaled coordinates of the tensor-product
/// Gell-Mann basis of C^dA (x) C^dB.
Poly f_a_polynomial(int dA, int dB, int a);

struct Ensemble {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXcd> states;

  Eigen::MatrixXcd density() const;
  double average(int dA, int dB, int a) const;  // sum_j q_j F_a(psi_j)
};

/// Eigenvalue cutoff for numerical rank.
constexpr double kRankCutoff = 1e-12;

/// Ensemble |v_j> = sum_k U*_{jk} sqrt(p_k)|u_k> for a right-unitary s x r U.
Ensemble hjw_ensemble(const DensityMatrix& rho, const Eigen::MatrixXcd& U);

enum class EofStrategy { unitary_search, poincare_roof };

struct EofOptions {
  int a = 2;
  EofStrategy strategy = EofStrategy::unitary_search;
  std::uint64_t seed = 0;
  int restarts = 64;
  int s_max = 0;    // 0: rank + 2
  int max_dim = 4;  // dA * dB cap
};

struct EofResult {
  double value = 0.0;
  Ensemble ensemble;
};

/// Generalized entanglement of formation: the convex roof of F_a.
EofResult entanglement_of_formation(const DensityMatrix& rho, int dA, int dB, const EofOptions& opt = {});

// Random objects for tests and the CLI.
Eigen::MatrixXcd random_unitary(int D, std::mt19937_64& rng);
Eigen::VectorXcd random_pure_state(int D, std::mt19937_64& rng);
/// rank-k state with Haar eigenvectors and flat-Dirichlet spectrum.
DensityMatrix random_density_matrix(int D, int rank, std::mt19937_64& rng);

}  // namespace roofbench::quantum

#endif  // ROOFBENCH_QUANTUM_HPP
