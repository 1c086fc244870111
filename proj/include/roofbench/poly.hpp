#ifndef ROOFBENCH_POLY_HPP
#define ROOFBENCH_POLY_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "roofbench/errors.hpp"

namespace roofbench {

using Exponents = std::vector<int>;

/// Sparse multivariate polynomial with coefficients of type `Scalar`.
///
/// Terms are kept in canonical form: one entry per exponent vector, and a term
/// whose coefficient becomes exactly zero is removed. No epsilon pruning is
/// done here; callers that need it should use `prune`.
template <typename Scalar>
class Polynomial {
 public:
  using TermMap = std::map<Exponents, Scalar>;

  explicit Polynomial(int nvars = 1) : nvars_(nvars) {
    if (nvars < 0) throw ArgumentError("Polynomial: negative variable count");
  }

  static Polynomial constant(int nvars, Scalar c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  /// The coordinate polynomial x_index (0-based).
  static Polynomial variable(int nvars, int index) {
    if (index < 0 || index >= nvars)
      throw ArgumentError("Polynomial::variable: index out of range");
    Exponents e(nvars, 0);
    e[index] = 1;
    Polynomial p(nvars);
    p.add_term(e, Scalar(1));
    return p;
  }

  static Polynomial monomial(const Exponents& e, Scalar c) {
    Polynomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
  }

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Total degree; -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int k : e) s += k;
      d = std::max(d, s);
    }
    return d;
  }

  int degree_in(int var) const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
    return d;
  }

  Scalar coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  void add_term(const Exponents& e, Scalar c) {
    if (static_cast<int>(e.size()) != nvars_)
      throw ArgumentError("Polynomial: exponent vector length mismatch");
    for (int k : e)
      if (k < 0) throw ArgumentError("Polynomial: negative exponent");
    if (c == Scalar(0)) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Scalar(0)) terms_.erase(it);
    }
  }

  /// Evaluates at `x`. The argument scalar may differ from `Scalar` (e.g. an
  /// automatic-differentiation type), as long as `Scalar * T` is defined.
  template <typename Derived>
  typename Derived::Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    using T = typename Derived::Scalar;
    if (x.size() != nvars_)
      throw ArgumentError("Polynomial::eval: expected " + std::to_string(nvars_) +
                          " coordinates, got " + std::to_string(x.size()));
    // Power table per variable, built up to the highest exponent used.
    std::vector<std::vector<T>> powers(nvars_);
    for (const auto& [e, c] : terms_) {
      for (int i = 0; i < nvars_; ++i) {
        auto& row = powers[i];
        if (row.empty()) row.push_back(T(1));
        while (static_cast<int>(row.size()) <= e[i]) row.push_back(row.back() * x(i));
      }
    }
    T acc(0);
    for (const auto& [e, c] : terms_) {
      T term(c);
      for (int i = 0; i < nvars_; ++i)
        if (e[i] > 0) term = term * powers[i][e[i]];
      acc = acc + term;
    }
    return acc;
  }

  /// ∂p/∂x_var.
  Polynomial derivative(int var) const {
    if (var < 0 || var >= nvars_) throw ArgumentError("Polynomial::derivative: bad variable");
    Polynomial d(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponents f = e;
      f[var] -= 1;
      d.add_term(f, c * Scalar(e[var]));
    }
    return d;
  }

  /// Copy with all terms |c| <= tol removed.
  Polynomial prune(double tol) const {
    Polynomial q(nvars_);
    for (const auto& [e, c] : terms_)
      if (std::abs(c) > tol) q.terms_.emplace(e, c);
    return q;
  }

  Polynomial& operator+=(const Polynomial& q) {
    check_same(q);
    for (const auto& [e, c] : q.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& q) {
    check_same(q);
    for (const auto& [e, c] : q.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(Scalar s) {
    if (s == Scalar(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator-(Polynomial p) { return p *= Scalar(-1); }
  friend Polynomial operator*(Polynomial p, Scalar s) { return p *= s; }
  friend Polynomial operator*(Scalar s, Polynomial p) { return p *= s; }

  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    p.check_same(q);
    Polynomial r(p.nvars_);
    Exponents e(p.nvars_);
    for (const auto& [ep, cp] : p.terms_)
      for (const auto& [eq, cq] : q.terms_) {
        for (int i = 0; i < p.nvars_; ++i) e[i] = ep[i] + eq[i];
        r.add_term(e, cp * cq);
      }
    return r;
  }
  Polynomial& operator*=(const Polynomial& q) { return *this = *this * q; }

  friend bool operator==(const Polynomial& p, const Polynomial& q) {
    return p.nvars_ == q.nvars_ && p.terms_ == q.terms_;
  }

 private:
  void check_same(const Polynomial& q) const {
    if (q.nvars_ != nvars_)
      throw ArgumentError("Polynomial: variable count mismatch (" + std::to_string(nvars_) +
                          " vs " + std::to_string(q.nvars_) + ")");
  }

  int nvars_;
  TermMap terms_;
};

using Poly = Polynomial<double>;

template <typename Scalar>
Polynomial<Scalar> scale(Polynomial<Scalar> p, Scalar s) {
  return p *= s;
}

template <typename Scalar, typename Derived>
typename Derived::Scalar eval(const Polynomial<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  return p(x);
}

/// Gradient as a vector of polynomials, component i = ∂p/∂x_i.
template <typename Scalar>
std::vector<Polynomial<Scalar>> grad(const Polynomial<Scalar>& p) {
  std::vector<Polynomial<Scalar>> g;
  g.reserve(p.nvars());
  for (int i = 0; i < p.nvars(); ++i) g.push_back(p.derivative(i));
  return g;
}

template <typename Scalar>
Polynomial<Scalar> pow(const Polynomial<Scalar>& p, int k) {
  if (k < 0) throw ArgumentError("pow: negative exponent");
  auto r = Polynomial<Scalar>::constant(p.nvars(), Scalar(1));
  for (int i = 0; i < k; ++i) r *= p;
  return r;
}

/// p(q_1, ..., q_n): substitutes polynomial q_i (all over a common variable set)
/// for variable x_i.
template <typename Scalar>
Polynomial<Scalar> compose(const Polynomial<Scalar>& p,
                           const std::vector<Polynomial<Scalar>>& replacements) {
  if (static_cast<int>(replacements.size()) != p.nvars())
    throw ArgumentError("compose: need one replacement per variable");
  const int m = replacements.empty() ? 0 : replacements.front().nvars();
  for (const auto& q : replacements)
    if (q.nvars() != m) throw ArgumentError("compose: replacements disagree on variable count");
  std::vector<std::vector<Polynomial<Scalar>>> powers(p.nvars());
  Polynomial<Scalar> out(m);
  for (const auto& [e, c] : p.terms()) {
    auto term = Polynomial<Scalar>::constant(m, c);
    for (int i = 0; i < p.nvars(); ++i) {
      if (e[i] == 0) continue;
      auto& row = powers[i];
      if (row.empty()) row.push_back(Polynomial<Scalar>::constant(m, Scalar(1)));
      while (static_cast<int>(row.size()) <= e[i]) row.push_back(row.back() * replacements[i]);
      term *= row[e[i]];
    }
    out += term;
  }
  return out;
}

/// p(A y + b) as a polynomial in y (A is nvars × k).
inline Poly substitute_affine(const Poly& p, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != p.nvars() || b.size() != p.nvars())
    throw ArgumentError("substitute_affine: shape mismatch");
  const int k = static_cast<int>(A.cols());
  std::vector<Poly> reps;
  reps.reserve(p.nvars());
  for (int i = 0; i < p.nvars(); ++i) {
    Poly li = Poly::constant(k, b(i));
    for (int j = 0; j < k; ++j)
      if (A(i, j) != 0.0) li += Poly::variable(k, j) * A(i, j);
    reps.push_back(std::move(li));
  }
  return compose(p, reps);
}

/// Re-embeds p into `nvars` variables; variable i of p becomes variable map[i].
template <typename Scalar>
Polynomial<Scalar> remap_variables(const Polynomial<Scalar>& p, int nvars, const std::vector<int>& map) {
  if (static_cast<int>(map.size()) != p.nvars()) throw ArgumentError("remap_variables: map size");
  Polynomial<Scalar> q(nvars);
  Exponents f(nvars);
  for (const auto& [e, c] : p.terms()) {
    std::fill(f.begin(), f.end(), 0);
    for (int i = 0; i < p.nvars(); ++i) {
      if (map[i] < 0 || map[i] >= nvars) throw ArgumentError("remap_variables: target out of range");
      f[map[i]] += e[i];
    }
    q.add_term(f, c);
  }
  return q;
}

/// Determinant of a small square matrix of polynomials (Laplace expansion).
Poly determinant(const std::vector<std::vector<Poly>>& m);

/// Parses the config syntax: signed terms `c*x1^e1*x2^e2`, with `*` and `^`
/// mandatory and variables named x1..xn. A bare number is a constant term.
Poly parse_polynomial(const std::string& text, int nvars);

/// Inverse of parse_polynomial (17 significant digits).
std::string to_string(const Poly& p);

}  // namespace roofbench

#endif  // ROOFBENCH_POLY_HPP
