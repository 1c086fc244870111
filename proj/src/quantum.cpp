#include "roofbench/quantum.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>

#include "roofbench/optim.hpp"

namespace roofbench::quantum {

const char* to_string(Convention c) { return c == Convention::scaled ? "scaled" : "plain"; }

Convention parse_convention(const std::string& s) {
  if (s == "scaled") return Convention::scaled;
  if (s == "plain") return Convention::plain;
  throw ArgumentError("unknown convention '" + s + "' (expected scaled or plain)");
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) throw ArgumentError("DensityMatrix: matrix must be square");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw PreconditionError("DensityMatrix: not hermitian");
  if (std::abs(m_.trace() - Complex(1.0)) > 1e-12) throw PreconditionError("DensityMatrix: trace is not 1");
  m_ = (0.5 * (m_ + m_.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw PreconditionError("DensityMatrix: not positive semidefinite");
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw PreconditionError("DensityMatrix::pure: state is not normalized");
  return DensityMatrix(psi * psi.adjoint());
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

// ---------------------------------------------------------------------------
// Operator bases

namespace {

StructureTensors compute_tensors(const std::vector<Eigen::MatrixXcd>& el, Convention conv) {
  StructureTensors t;
  const int S = static_cast<int>(el.size());
  t.tau.resize(S);
  for (int a = 0; a < S; ++a) t.tau(a) = el[a].trace().real();
  t.chi.resize(S, S, S);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b) {
      const Eigen::MatrixXcd ab = el[a] * el[b];
      for (int g = 0; g < S; ++g) t.chi(a, b, g) = (ab * el[g]).trace();
    }
  if (conv == Convention::scaled) {
    const int K = S - 1;
    t.d.resize(K, K, K);
    t.f.resize(K, K, K);
    for (int j = 0; j < K; ++j)
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
          const Complex T = t.chi(j + 1, k + 1, l + 1);
          t.d(j, k, l) = T.real();
          t.f(j, k, l) = T.imag();
        }
    t.D.assign(K, Eigen::MatrixXd(K, K));
    for (int l = 0; l < K; ++l)
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) t.D[l](j, k) = t.d(j, k, l);
  }
  return t;
}

bool same_basis(const BasisPtr& a, const BasisPtr& b) {
  if (!a || !b) return false;
  if (a == b) return true;
  if (a->dim() != b->dim() || a->size() != b->size() || a->convention() != b->convention()) return false;
  for (int i = 0; i < a->size(); ++i)
    if (!a->elements()[i].isApprox(b->elements()[i], 1e-14) &&
        (a->elements()[i] - b->elements()[i]).cwiseAbs().maxCoeff() > 1e-14)
      return false;
  return true;
}

void require_unitary(const Eigen::MatrixXcd& U, const char* who) {
  if (U.rows() != U.cols() ||
      (U.adjoint() * U - Eigen::MatrixXcd::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError(std::string(who) + ": matrix is not unitary");
}

}  // namespace

OperatorBasis::OperatorBasis(int dim, std::vector<Eigen::MatrixXcd> elements, Convention convention)
    : dim_(dim), elements_(std::move(elements)), convention_(convention) {
  if (dim_ < 1) throw ArgumentError("OperatorBasis: dimension must be positive");
  if (static_cast<int>(elements_.size()) != dim_ * dim_)
    throw ArgumentError("OperatorBasis: need D^2 elements");
  for (const auto& e : elements_) {
    if (e.rows() != dim_ || e.cols() != dim_) throw ArgumentError("OperatorBasis: element has wrong shape");
    if ((e - e.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw ArgumentError("OperatorBasis: element not hermitian");
  }
  if ((gram() - Eigen::MatrixXd::Identity(size(), size())).cwiseAbs().maxCoeff() > 1e-10)
    throw ArgumentError("OperatorBasis: elements are not orthonormal");
  if (convention_ == Convention::scaled) {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim_, dim_) / std::sqrt(double(dim_));
    if ((elements_[0] - id).cwiseAbs().maxCoeff() > 1e-12)
      throw ArgumentError("OperatorBasis: scaled convention needs element 0 = I/sqrt(D)");
  }
  tensors_ = compute_tensors(elements_, convention_);
}

Eigen::MatrixXd OperatorBasis::gram() const {
  Eigen::MatrixXd G(size(), size());
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) G(a, b) = (elements_[a] * elements_[b]).trace().real();
  return G;
}

BasisPtr gellmann_basis(int D, Convention convention) {
  if (D < 2) throw ArgumentError("gellmann_basis: D must be at least 2");
  using M = Eigen::MatrixXcd;
  std::vector<M> el;
  el.push_back(M::Identity(D, D) / std::sqrt(double(D)));
  const double h = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < D; ++a)
    for (int b = a + 1; b < D; ++b) {
      M g = M::Zero(D, D);
      g(a, b) = g(b, a) = h;
      el.push_back(g);
    }
  for (int a = 0; a < D; ++a)
    for (int b = a + 1; b < D; ++b) {
      M g = M::Zero(D, D);
      // -i/sqrt2 (|a><b| - |b><a|)
      g(a, b) = Complex(0, -h);
      g(b, a) = Complex(0, h);
      el.push_back(g);
    }
  for (int a = 2; a <= D; ++a) {
    M g = M::Zero(D, D);
    const double s = 1.0 / std::sqrt(double(a) * (a - 1));
    for (int b = 1; b < a; ++b) g(b - 1, b - 1) = s;
    g(a - 1, a - 1) = -(a - 1) * s;
    el.push_back(g);
  }
  return std::make_shared<const OperatorBasis>(D, std::move(el), convention);
}

BasisPtr tensor_product_basis(const OperatorBasis& A, const OperatorBasis& B) {
  std::vector<Eigen::MatrixXcd> el;
  el.reserve(A.size() * B.size());
  for (const auto& a : A.elements())
    for (const auto& b : B.elements()) el.push_back(Eigen::kroneckerProduct(a, b).eval());
  const Convention c = A.convention() == Convention::scaled && B.convention() == Convention::scaled
                           ? Convention::scaled
                           : Convention::plain;
  return std::make_shared<const OperatorBasis>(A.dim() * B.dim(), std::move(el), c);
}

BasisPtr rotate_basis(const OperatorBasis& basis, const Eigen::MatrixXd& O) {
  const int S = basis.size();
  if (O.rows() != S || O.cols() != S) throw ArgumentError("rotate_basis: O has wrong shape");
  if ((O.transpose() * O - Eigen::MatrixXd::Identity(S, S)).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError("rotate_basis: O is not orthogonal");
  std::vector<Eigen::MatrixXcd> el(S, Eigen::MatrixXcd::Zero(basis.dim(), basis.dim()));
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b)
      if (O(a, b) != 0.0) el[a] += O(a, b) * basis.elements()[b];
  const bool fixes_identity = std::abs(O(0, 0) - 1.0) <= 1e-12 && O.row(0).tail(S - 1).cwiseAbs().maxCoeff() <= 1e-12;
  const Convention c =
      basis.convention() == Convention::scaled && fixes_identity ? Convention::scaled : Convention::plain;
  return std::make_shared<const OperatorBasis>(basis.dim(), std::move(el), c);
}

// ---------------------------------------------------------------------------
// Vector products

namespace {

void require_same(const CoefficientVector& a, const CoefficientVector& b, const char* who) {
  if (!same_basis(a.basis, b.basis)) throw ArgumentError(std::string(who) + ": coefficient vectors use different bases");
  if (a.c.size() != b.c.size() || a.c.size() != a.basis->coordinate_count())
    throw ArgumentError(std::string(who) + ": coefficient vector has wrong length");
}

CoefficientVector contract(const CoefficientVector& a, const CoefficientVector& b, const Eigen::Tensor<double, 3>& T) {
  const int K = static_cast<int>(a.c.size());
  CoefficientVector out{Eigen::VectorXd::Zero(K), a.basis};
  for (int j = 0; j < K; ++j) {
    if (a.c(j) == 0.0) continue;
    for (int k = 0; k < K; ++k) {
      const double w = a.c(j) * b.c(k);
      if (w == 0.0) continue;
      for (int l = 0; l < K; ++l) out.c(l) += w * T(j, k, l);
    }
  }
  return out;
}

}  // namespace

double inner(const CoefficientVector& a, const CoefficientVector& b) {
  require_same(a, b, "inner");
  return a.c.dot(b.c);
}

CoefficientVector wedge(const CoefficientVector& a, const CoefficientVector& b) {
  require_same(a, b, "wedge");
  if (a.basis->convention() != Convention::scaled) throw ArgumentError("wedge: needs the scaled convention");
  return contract(a, b, a.basis->tensors().f);
}

CoefficientVector star(const CoefficientVector& a, const CoefficientVector& b) {
  require_same(a, b, "star");
  if (a.basis->convention() != Convention::scaled) throw ArgumentError("star: needs the scaled convention");
  return contract(a, b, a.basis->tensors().d);
}

// ---------------------------------------------------------------------------
// Embedding

CoefficientVector embed(const DensityMatrix& rho, const BasisPtr& basis) {
  if (!basis) throw ArgumentError("embed: null basis");
  const int D = basis->dim();
  if (rho.dim() != D) throw ArgumentError("embed: density matrix dimension does not match the basis");
  const auto& el = basis->elements();
  CoefficientVector out{Eigen::VectorXd(basis->coordinate_count()), basis};
  if (basis->convention() == Convention::scaled) {
    for (int j = 1; j < basis->size(); ++j) out.c(j - 1) = D * (rho.matrix() * el[j]).trace().real();
  } else {
    for (int a = 0; a < basis->size(); ++a) out.c(a) = (rho.matrix() * el[a]).trace().real();
  }
  return out;
}

Eigen::MatrixXcd unembed(const CoefficientVector& c) {
  if (!c.basis) throw ArgumentError("unembed: null basis");
  const auto& b = *c.basis;
  if (c.c.size() != b.coordinate_count()) throw ArgumentError("unembed: coefficient vector has wrong length");
  const int D = b.dim();
  Eigen::MatrixXcd rho;
  if (b.convention() == Convention::scaled) {
    rho = Eigen::MatrixXcd::Identity(D, D);
    for (int j = 1; j < b.size(); ++j) rho += c.c(j - 1) * b.elements()[j];
    rho /= double(D);
  } else {
    rho = Eigen::MatrixXcd::Zero(D, D);
    for (int a = 0; a < b.size(); ++a) rho += c.c(a) * b.elements()[a];
  }
  return rho;
}

// ---------------------------------------------------------------------------
// Purity

PurityReport purity_conditions(const CoefficientVector& c, double tol) {
  if (!c.basis) throw ArgumentError("purity_conditions: null basis");
  const auto& b = *c.basis;
  if (c.c.size() != b.coordinate_count()) throw ArgumentError("purity_conditions: wrong length");
  PurityReport rep;
  const auto& T = b.tensors();
  if (b.convention() == Convention::scaled) {
    const int D = b.dim();
    rep.norm_residual = std::abs(c.c.squaredNorm() - double(D) * (D - 1));
    const Eigen::VectorXd s = contract(c, c, T.d).c - (D - 2) * c.c;
    rep.star_residual = s.size() ? s.cwiseAbs().maxCoeff() : 0.0;
  } else {
    rep.norm_residual = std::max(std::abs(c.c.dot(T.tau) - 1.0), std::abs(c.c.squaredNorm() - 1.0));
    const int S = b.size();
    double worst = 0.0;
    for (int g = 0; g < S; ++g) {
      double acc = -c.c(g);
      for (int a = 0; a < S; ++a)
        for (int k = 0; k < S; ++k) acc += c.c(a) * c.c(k) * T.chi(a, k, g).real();
      worst = std::max(worst, std::abs(acc));
    }
    rep.star_residual = worst;
  }
  rep.is_pure = rep.norm_residual <= tol && rep.star_residual <= tol;
  return rep;
}

Variety pure_state_variety(const OperatorBasis& b) {
  const int D = b.dim();
  const auto& T = b.tensors();
  std::vector<Poly> gens;
  if (b.convention() == Convention::scaled) {
    const int K = b.size() - 1;
    Poly l0 = Poly::constant(K, -double(D) * (D - 1));
    for (int j = 0; j < K; ++j) l0 += pow(Poly::variable(K, j), 2);
    gens.push_back(std::move(l0));
    for (int l = 0; l < K; ++l) {
      Poly q = Poly::variable(K, l) * (-(double(D) - 2.0));
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) {
          const double d = T.d(j, k, l);
          if (std::abs(d) < 1e-15) continue;
          Exponents e(K, 0);
          e[j] += 1;
          e[k] += 1;
          q.add_term(e, d);
        }
      q = q.prune(1e-15);
      if (!q.is_zero()) gens.push_back(std::move(q));
    }
    return Variety(K, std::move(gens), 2 * (D - 1));
  }
  const int S = b.size();
  Poly trace = Poly::constant(S, -1.0);
  Poly norm = Poly::constant(S, -1.0);
  for (int a = 0; a < S; ++a) {
    if (std::abs(T.tau(a)) > 1e-15) trace += Poly::variable(S, a) * T.tau(a);
    norm += pow(Poly::variable(S, a), 2);
  }
  gens.push_back(trace.prune(1e-15));
  gens.push_back(std::move(norm));
  for (int g = 0; g < S; ++g) {
    Poly q = -Poly::variable(S, g);
    for (int a = 0; a < S; ++a)
      for (int k = 0; k < S; ++k) {
        const double x = T.chi(a, k, g).real();
        if (std::abs(x) < 1e-15) continue;
        Exponents e(S, 0);
        e[a] += 1;
        e[k] += 1;
        q.add_term(e, x);
      }
    q = q.prune(1e-15);
    if (!q.is_zero()) gens.push_back(std::move(q));
  }
  return Variety(S, std::move(gens), 2 * (D - 1));
}

double angle(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ArgumentError("angle: dimension mismatch");
  if (std::abs(rho.purity() - 1.0) > 1e-8 || std::abs(sigma.purity() - 1.0) > 1e-8)
    throw PreconditionError("angle: both states must be pure");
  const double D = rho.dim();
  const double overlap = (rho.matrix() * sigma.matrix()).trace().real();
  const double c = std::clamp((D * overlap - 1.0) / (D - 1.0), -1.0, 1.0);
  return std::acos(c);
}

Eigen::MatrixXd adjoint_rep(const Eigen::MatrixXcd& U, const OperatorBasis& basis) {
  if (U.rows() != basis.dim()) throw ArgumentError("adjoint_rep: dimension mismatch");
  require_unitary(U, "adjoint_rep");
  const int S = basis.size();
  std::vector<Eigen::MatrixXcd> conj(S);
  for (int b = 0; b < S; ++b) conj[b] = U * basis.elements()[b] * U.adjoint();
  Eigen::MatrixXd O(S, S);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b) O(a, b) = (basis.elements()[a] * conj[b]).trace().real();
  return O;
}

CoefficientVector apply(const Eigen::MatrixXd& O, const CoefficientVector& c) {
  const int S = c.basis->size();
  if (O.rows() != S || O.cols() != S) throw ArgumentError("apply: O has wrong shape");
  if (c.basis->convention() == Convention::scaled) return {O.bottomRightCorner(S - 1, S - 1) * c.c, c.basis};
  return {O * c.c, c.basis};
}

// ---------------------------------------------------------------------------
// Bipartite states

DensityMatrix partial_trace(const DensityMatrix& rho, int dA, int dB, Subsystem traced) {
  if (dA < 1 || dB < 1 || dA * dB != rho.dim())
    throw ArgumentError("partial_trace: dimensions " + std::to_string(dA) + "x" + std::to_string(dB) +
                        " do not factor a " + std::to_string(rho.dim()) + "-dimensional state");
  const auto& m = rho.matrix();
  if (traced == Subsystem::B) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dA, dA);
    for (int i = 0; i < dA; ++i)
      for (int j = 0; j < dA; ++j)
        for (int k = 0; k < dB; ++k) r(i, j) += m(i * dB + k, j * dB + k);
    return DensityMatrix(r);
  }
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(dB, dB);
  for (int k = 0; k < dB; ++k)
    for (int l = 0; l < dB; ++l)
      for (int i = 0; i < dA; ++i) r(k, l) += m(i * dB + k, i * dB + l);
  return DensityMatrix(r);
}

Eigen::VectorXd reduced_coefficients(const CoefficientVector& c, int dA, int dB) {
  if (!c.basis || c.basis->convention() != Convention::plain || c.basis->dim() != dA * dB)
    throw ArgumentError("reduced_coefficients: expects plain coefficients over C^dA (x) C^dB");
  const int SA = dA * dA, SB = dB * dB;
  Eigen::VectorXd out(SA);
  for (int a = 0; a < SA; ++a) out(a) = std::sqrt(double(dB)) * c.c(a * SB);
  return out;
}

namespace {

double trace_power(const Eigen::MatrixXcd& rho, int a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  double t = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) t += std::pow(es.eigenvalues()(i), a);
  return t;
}

Eigen::MatrixXcd reduced_of_pure(const Eigen::VectorXcd& psi, int dA, int dB) {
  const Eigen::MatrixXcd Psi = Eigen::Map<const Eigen::Matrix<Complex, -1, -1, Eigen::RowMajor>>(psi.data(), dA, dB);
  return Psi * Psi.adjoint();
}

}  // namespace

double f_a(const DensityMatrix& rho, int a) {
  if (a < 2) throw ArgumentError("f_a: a must be at least 2");
  return 2.0 * (1.0 - trace_power(rho.matrix(), a));
}

double F_a(const Eigen::VectorXcd& psi, int dA, int dB, int a) {
  if (a < 2) throw ArgumentError("F_a: a must be at least 2");
  if (psi.size() != dA * dB) throw ArgumentError("F_a: state length does not match dA * dB");
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw PreconditionError("F_a: state is not normalized");
  return 2.0 * (1.0 - trace_power(reduced_of_pure(psi, dA, dB), a));
}

Poly f_a_polynomial(int dA, int dB, int a) {
  if (a < 2) throw ArgumentError("f_a_polynomial: a must be at least 2");
  const auto A = gellmann_basis(dA);
  const int KA = dA * dA - 1;
  const int SB = dB * dB;
  const int nv = dA * dB * dA * dB - 1;
  // Reduced scaled coordinate j of rho_A is c_{(j,0)} / sqrt(dB).
  std::vector<Poly> red;
  for (int j = 1; j <= KA; ++j) red.push_back(Poly::variable(nv, j * SB - 1) * (1.0 / std::sqrt(double(dB))));
  // tr((I + X)^a) = sum_k C(a,k) tr(X^k), X = sum_j red_j lambda^j.
  Poly tr = Poly::constant(nv, double(dA));
  double binom = 1.0;
  for (int k = 1; k <= a; ++k) {
    binom = binom * (a - k + 1) / k;
    if (k == 1) continue;  // generators are traceless
    std::vector<int> idx(k, 1);
    while (true) {
      Eigen::MatrixXcd prod = A->elements()[idx[0]];
      for (int i = 1; i < k; ++i) prod = prod * A->elements()[idx[i]];
      const double t = prod.trace().real();
      if (std::abs(t) > 1e-15) {
        Poly term = Poly::constant(nv, binom * t);
        for (int i = 0; i < k; ++i) term *= red[idx[i] - 1];
        tr += term;
      }
      int p = k - 1;
      while (p >= 0 && idx[p] == KA) idx[p--] = 1;
      if (p < 0) break;
      ++idx[p];
    }
  }
  Poly f = Poly::constant(nv, 2.0) - tr * (2.0 / std::pow(double(dA), a));
  return f.prune(1e-15);
}

Eigen::MatrixXcd Ensemble::density() const {
  if (states.empty()) throw ArgumentError("Ensemble: empty");
  const int D = static_cast<int>(states.front().size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(D, D);
  for (std::size_t j = 0; j < states.size(); ++j) rho += weights(j) * states[j] * states[j].adjoint();
  return rho;
}

double Ensemble::average(int dA, int dB, int a) const {
  double v = 0.0;
  for (std::size_t j = 0; j < states.size(); ++j) v += weights(j) * F_a(states[j], dA, dB, a);
  return v;
}

namespace {

struct Spectrum {
  Eigen::MatrixXcd sub;  // columns sqrt(p_k) |u_k>, descending p
  Eigen::MatrixXcd vecs; // columns |u_k>
  Eigen::VectorXd probs;
};

Spectrum subnormalized_eigenvectors(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
  const int D = rho.dim();
  std::vector<int> keep;
  for (int i = D - 1; i >= 0; --i)
    if (es.eigenvalues()(i) > kRankCutoff) keep.push_back(i);
  Spectrum s;
  const int r = static_cast<int>(keep.size());
  s.sub.resize(D, r);
  s.vecs.resize(D, r);
  s.probs.resize(r);
  for (int k = 0; k < r; ++k) {
    s.probs(k) = es.eigenvalues()(keep[k]);
    s.vecs.col(k) = es.eigenvectors().col(keep[k]);
    s.sub.col(k) = std::sqrt(s.probs(k)) * s.vecs.col(k);
  }
  return s;
}

Ensemble mix(const Spectrum& sp, const Eigen::MatrixXcd& U) {
  // v_j = sum_k conj(U_jk) sub_k  ->  V = sub * U^dagger^T = sub * conj(U)^T
  const Eigen::MatrixXcd V = sp.sub * U.conjugate().transpose();
  Ensemble e;
  std::vector<double> w;
  for (int j = 0; j < V.cols(); ++j) {
    const double q = V.col(j).squaredNorm();
    if (q < 1e-14) continue;
    w.push_back(q);
    e.states.push_back(V.col(j) / std::sqrt(q));
  }
  e.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return e;
}

}  // namespace

Ensemble hjw_ensemble(const DensityMatrix& rho, const Eigen::MatrixXcd& U) {
  Spectrum sp = subnormalized_eigenvectors(rho);
  const int r = static_cast<int>(sp.probs.size());
  if (U.cols() != r || U.rows() < r)
    throw PreconditionError("hjw_ensemble: U must be s x r with s >= r = rank " + std::to_string(r));
  if ((U.adjoint() * U - Eigen::MatrixXcd::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-10)
    throw PreconditionError("hjw_ensemble: U is not right-unitary");
  return mix(sp, U);
}

namespace {

// Polar factor Z (Z^dag Z)^{-1/2}: a smooth map onto right-unitary matrices.
Eigen::MatrixXcd polar_factor(const Eigen::MatrixXcd& Z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Z.adjoint() * Z);
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return Z * es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd unpack(const Eigen::VectorXd& theta, int s, int r) {
  Eigen::MatrixXcd Z(s, r);
  for (int j = 0; j < s; ++j)
    for (int k = 0; k < r; ++k) Z(j, k) = Complex(theta(2 * (j * r + k)), theta(2 * (j * r + k) + 1));
  return Z;
}

double ensemble_cost(const Spectrum& sp, const Eigen::MatrixXcd& U, int dA, int dB, int a) {
  const Eigen::MatrixXcd V = sp.sub * U.conjugate().transpose();
  double v = 0.0;
  for (int j = 0; j < V.cols(); ++j) {
    const double q = V.col(j).squaredNorm();
    if (q < 1e-300) continue;
    const Eigen::MatrixXcd red = reduced_of_pure(V.col(j) / std::sqrt(q), dA, dB);
    v += q * 2.0 * (1.0 - trace_power(red, a));
  }
  return v;
}

EofResult unitary_search(const DensityMatrix& rho, const Spectrum& sp, int dA, int dB, const EofOptions& opt) {
  const int r = static_cast<int>(sp.probs.size());
  const int s_max = opt.s_max > 0 ? opt.s_max : r + 2;
  std::optional<EofResult> best;
  for (int s = r; s <= s_max; ++s) {
    std::mt19937_64 rng(opt.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(s));
    std::normal_distribution<double> normal(0.0, 1.0);
    const int np = 2 * s * r;
    optim::Objective obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
      const double h = 1e-6;
      g.resize(np);
      Eigen::VectorXd t = th;
      for (int i = 0; i < np; ++i) {
        t(i) = th(i) + h;
        const double fp = ensemble_cost(sp, polar_factor(unpack(t, s, r)), dA, dB, opt.a);
        t(i) = th(i) - h;
        const double fm = ensemble_cost(sp, polar_factor(unpack(t, s, r)), dA, dB, opt.a);
        t(i) = th(i);
        g(i) = (fp - fm) / (2 * h);
      }
      return ensemble_cost(sp, polar_factor(unpack(th, s, r)), dA, dB, opt.a);
    };
    optim::LbfgsOptions lo;
    lo.max_iter = 200;
    lo.grad_tol = 1e-9;
    lo.f_tol = 1e-14;
    for (int k = 0; k < opt.restarts; ++k) {
      Eigen::VectorXd th(np);
      for (int i = 0; i < np; ++i) th(i) = normal(rng);
      auto res = optim::lbfgs(obj, th, lo);
      const Eigen::MatrixXcd U = polar_factor(unpack(res.x, s, r));
      Ensemble e = hjw_ensemble(rho, U);
      const double v = e.average(dA, dB, opt.a);
      if (!best || v < best->value - 1e-15) best = EofResult{v, std::move(e)};
    }
  }
  return *best;
}

EofResult poincare_roof(const DensityMatrix& rho, const Spectrum& sp, int dA, int dB, const EofOptions& opt) {
  const int r = static_cast<int>(sp.probs.size());
  const int D = dA * dB;
  // Only pure states in the support of rho can appear in a decomposition of
  // it; restrict to the Poincare sphere of that r-dimensional support.
  const auto small = gellmann_basis(r);
  const auto big = tensor_product_basis(*gellmann_basis(dA), *gellmann_basis(dB));
  const Eigen::MatrixXcd& W = sp.vecs;
  const int Ks = r * r - 1, Kb = D * D - 1;
  Eigen::MatrixXd A(Kb, Ks);
  Eigen::VectorXd b(Kb);
  const Eigen::MatrixXcd P = W * W.adjoint();
  for (int j = 0; j < Kb; ++j) {
    const auto& L = big->elements()[j + 1];
    b(j) = double(D) / r * (P * L).trace().real();
    for (int k = 0; k < Ks; ++k)
      A(j, k) = double(D) / r * (W * small->elements()[k + 1] * W.adjoint() * L).trace().real();
  }
  const Poly f_small = substitute_affine(f_a_polynomial(dA, dB, opt.a), A, b).prune(1e-14);
  RoofProblem problem(pure_state_variety(*small), f_small, Sense::convex);
  const DensityMatrix target(W.adjoint() * rho.matrix() * W);
  const Eigen::VectorXd t = embed(target, small).c;
  OracleOptions oo;
  oo.seed = opt.seed;
  oo.restarts = opt.restarts;
  oo.m_max = r * r;
  RoofValue rv = roof_eval_oracle(problem, t, oo);
  Ensemble e;
  e.weights = rv.decomposition.weights;
  for (const auto& c : rv.decomposition.points) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(unembed({c, small}));
    e.states.push_back(W * es.eigenvectors().col(r - 1));
  }
  return {rv.value, std::move(e)};
}

}  // namespace

EofResult entanglement_of_formation(const DensityMatrix& rho, int dA, int dB, const EofOptions& opt) {
  if (dA < 1 || dB < 1 || dA * dB != rho.dim()) throw ArgumentError("entanglement_of_formation: bad dimensions");
  if (opt.a < 2) throw ArgumentError("entanglement_of_formation: a must be at least 2");
  if (dA * dB > opt.max_dim)
    throw UnsupportedScaleError("entanglement_of_formation: dimension " + std::to_string(dA * dB) +
                                " exceeds the cap " + std::to_string(opt.max_dim));
  if (opt.restarts < 1) throw ArgumentError("entanglement_of_formation: need at least one restart");
  Spectrum sp = subnormalized_eigenvectors(rho);
  if (sp.probs.size() == 1) {
    Ensemble e;
    e.weights = Eigen::VectorXd::Ones(1);
    e.states.push_back(sp.vecs.col(0));
    return {F_a(e.states[0], dA, dB, opt.a), std::move(e)};
  }
  return opt.strategy == EofStrategy::unitary_search ? unitary_search(rho, sp, dA, dB, opt)
                                                     : poincare_roof(rho, sp, dA, dB, opt);
}

// ---------------------------------------------------------------------------
// Random objects

Eigen::MatrixXcd random_unitary(int D, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd Z(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) Z(i, j) = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  Eigen::MatrixXcd Q = qr.householderQ();
  const Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < D; ++i) {
    const Complex d = R(i, i);
    Q.col(i) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0);
  }
  return Q;
}

Eigen::VectorXcd random_pure_state(int D, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(D);
  for (int i = 0; i < D; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

DensityMatrix random_density_matrix(int D, int rank, std::mt19937_64& rng) {
  if (rank < 1 || rank > D) throw ArgumentError("random_density_matrix: rank out of range");
  const Eigen::MatrixXcd U = random_unitary(D, rng);
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd p(rank);
  for (int k = 0; k < rank; ++k) p(k) = expo(rng);
  p /= p.sum();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(D, D);
  for (int k = 0; k < rank; ++k) rho += p(k) * U.col(k) * U.col(k).adjoint();
  // Remove rounding in the trace so the DensityMatrix check is exact.
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

}  // namespace roofbench::quantum
