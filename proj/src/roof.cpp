#include "roofbench/roof.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "roofbench/optim.hpp"

namespace roofbench {

const char* to_string(Sense s) { return s == Sense::convex ? "convex" : "concave"; }

Sense parse_sense(const std::string& s) {
  if (s == "convex") return Sense::convex;
  if (s == "concave") return Sense::concave;
  throw ArgumentError("unknown sense '" + s + "' (expected convex or concave)");
}

RoofProblem::RoofProblem(Variety v, Poly fn, Sense s, std::optional<TangentField> field)
    : variety(std::move(v)), f(std::move(fn)), sense(s), tangent_field(std::move(field)) {
  if (f.nvars() != variety.ambient_dim())
    throw ArgumentError("RoofProblem: f has " + std::to_string(f.nvars()) + " variables, variety lives in R^" +
                        std::to_string(variety.ambient_dim()));
  if (tangent_field) {
    for (const auto& t : *tangent_field) {
      if (static_cast<int>(t.size()) != variety.ambient_dim())
        throw ArgumentError("RoofProblem: tangent field vector has wrong length");
      for (const auto& c : t)
        if (c.nvars() != variety.ambient_dim()) throw ArgumentError("RoofProblem: tangent field polynomial arity");
    }
  }
}

Eigen::VectorXd Decomposition::barycenter() const {
  if (points.empty()) throw ArgumentError("Decomposition: empty");
  Eigen::VectorXd r = Eigen::VectorXd::Zero(points.front().size());
  for (int j = 0; j < size(); ++j) r += weights(j) * points[j];
  return r;
}

namespace {

// Lexicographic on coordinates rounded to 1e-9, so rounding noise does not
// reorder points that agree in a coordinate.
bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < std::min(a.size(), b.size()); ++i) {
    const double ka = std::round(a(i) * 1e9), kb = std::round(b(i) * 1e9);
    if (ka != kb) return ka < kb;
  }
  return a.size() < b.size();
}

}  // namespace

Decomposition Decomposition::canonical() const {
  std::vector<int> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return lex_less(points[a], points[b]); });
  Decomposition out;
  out.weights.resize(weights.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.weights(i) = weights(idx[i]);
    out.points.push_back(points[idx[i]]);
  }
  return out;
}

void validate_decomposition(const Variety& v, const Decomposition& dec, double weight_tol, double member_tol) {
  if (dec.points.empty()) throw ArgumentError("decomposition has no points");
  if (dec.weights.size() != dec.size()) throw ArgumentError("decomposition: weight/point count mismatch");
  if (dec.size() > v.ambient_dim() + 1)
    throw ArgumentError("decomposition: more terms than the Caratheodory bound allows");
  if (dec.weights.minCoeff() < -weight_tol) throw ArgumentError("decomposition: negative weight");
  if (std::abs(dec.weights.sum() - 1.0) > weight_tol) throw ArgumentError("decomposition: weights do not sum to 1");
  for (const auto& x : dec.points) {
    if (x.size() != v.ambient_dim()) throw ArgumentError("decomposition: point has wrong dimension");
    if (!membership(v, x, member_tol)) throw ArgumentError("decomposition: point is not on the variety");
  }
}

double decomposition_value(const RoofProblem& problem, const Decomposition& dec) {
  validate_decomposition(problem.variety, dec);
  double v = 0.0;
  for (int j = 0; j < dec.size(); ++j) v += dec.weights(j) * problem.f(dec.points[j]);
  return v;
}

bool better_decomposition(Sense sense, double va, const Decomposition& a, double vb, const Decomposition& b,
                          double tie_tol) {
  const double diff = sense == Sense::convex ? va - vb : vb - va;
  const double tol = tie_tol * (1.0 + std::max(std::abs(va), std::abs(vb)));
  if (diff < -tol) return true;
  if (diff > tol) return false;
  if (a.size() != b.size()) return a.size() < b.size();
  auto ca = a.canonical(), cb = b.canonical();
  for (int j = 0; j < ca.size(); ++j) {
    if (lex_less(ca.points[j], cb.points[j])) return true;
    if (lex_less(cb.points[j], ca.points[j])) return false;
  }
  return false;
}

namespace {

// Augmented-Lagrangian local solve over (x_1..x_m, s_1..s_m) with
// p_j = s_j^2 / sum_k s_k^2, so the weights stay on the simplex.
class LocalSolver {
 public:
  LocalSolver(const RoofProblem& problem, const Eigen::VectorXd& r)
      : problem_(problem), r_(r), n_(problem.variety.ambient_dim()), grad_f_(grad(problem.f)) {
    sign_ = problem.sense == Sense::convex ? 1.0 : -1.0;
    for (const auto& g : grad_f_) hess_f_.push_back(grad(g));
    for (const auto& gl : problem.variety.gradients()) {
      std::vector<std::vector<Poly>> h;
      for (const auto& g : gl) h.push_back(grad(g));
      hess_l_.push_back(std::move(h));
    }
  }

  std::optional<RoofValue> solve(Decomposition start, double tol) {
    for (int round = 0; round < 6; ++round) {
      auto dec = run_alm(start, tol);
      if (!dec) return std::nullopt;
      // Drop vanishing weights and merge coincident points, then re-solve.
      Decomposition reduced;
      std::vector<double> w;
      for (int j = 0; j < dec->size(); ++j) {
        if (dec->weights(j) < 1e-7) continue;
        bool merged = false;
        for (std::size_t k = 0; k < reduced.points.size(); ++k) {
          if ((reduced.points[k] - dec->points[j]).norm() < 1e-6) {
            w[k] += dec->weights(j);
            merged = true;
            break;
          }
        }
        if (!merged) {
          reduced.points.push_back(dec->points[j]);
          w.push_back(dec->weights(j));
        }
      }
      if (static_cast<int>(reduced.points.size()) == dec->size()) return finish(*dec);
      if (reduced.points.empty()) return std::nullopt;
      reduced.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      reduced.weights /= reduced.weights.sum();
      start = std::move(reduced);
    }
    return std::nullopt;
  }

 private:
  struct PointEval {
    double f;
    Eigen::VectorXd grad_f;
    Eigen::VectorXd l;
    Eigen::MatrixXd J;
  };

  PointEval eval_point(const Eigen::VectorXd& x) const {
    PointEval e;
    e.f = problem_.f(x);
    e.grad_f.resize(n_);
    for (int i = 0; i < n_; ++i) e.grad_f(i) = grad_f_[i](x);
    e.l = problem_.variety.residuals(x);
    e.J = jacobian_at(problem_.variety, x);
    return e;
  }

  std::optional<Decomposition> run_alm(const Decomposition& start, double tol) {
    const int m = start.size();
    const int G = static_cast<int>(problem_.variety.generators().size());
    Eigen::VectorXd u(m * n_ + m);
    for (int j = 0; j < m; ++j) {
      u.segment(j * n_, n_) = start.points[j];
      u(m * n_ + j) = std::sqrt(std::max(start.weights(j), 1e-12));
    }
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(G * m);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n_);
    double mu = 10.0;

    auto unpack_weights = [&](const Eigen::VectorXd& v, Eigen::VectorXd& p, double& S) {
      const auto s = v.tail(m);
      S = s.squaredNorm();
      p = s.array().square() / S;
    };

    auto constraints = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd p;
      double S;
      unpack_weights(v, p, S);
      Eigen::VectorXd c(G * m + n_);
      Eigen::VectorXd b = -r_;
      for (int j = 0; j < m; ++j) {
        Eigen::VectorXd x = v.segment(j * n_, n_);
        if (G) c.segment(j * G, G) = problem_.variety.residuals(x);
        b += p(j) * x;
      }
      c.tail(n_) = b;
      return c;
    };

    optim::Objective L = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) -> double {
      Eigen::VectorXd p;
      double S;
      unpack_weights(v, p, S);
      if (!(S > 0)) {
        g.setZero(v.size());
        return std::numeric_limits<double>::infinity();
      }
      std::vector<PointEval> ev;
      ev.reserve(m);
      Eigen::VectorXd b = -r_;
      for (int j = 0; j < m; ++j) {
        ev.push_back(eval_point(v.segment(j * n_, n_)));
        b += p(j) * v.segment(j * n_, n_);
      }
      const Eigen::VectorXd bary_mult = nu + mu * b;
      double val = nu.dot(b) + 0.5 * mu * b.squaredNorm();
      g.setZero(v.size());
      Eigen::VectorXd gp(m);
      for (int j = 0; j < m; ++j) {
        const auto& e = ev[j];
        val += sign_ * p(j) * e.f;
        Eigen::VectorXd gx = sign_ * p(j) * e.grad_f + p(j) * bary_mult;
        if (G) {
          const auto lj = lam.segment(j * G, G);
          val += lj.dot(e.l) + 0.5 * mu * e.l.squaredNorm();
          gx += e.J.transpose() * (lj + mu * e.l);
        }
        g.segment(j * n_, n_) = gx;
        gp(j) = sign_ * e.f + v.segment(j * n_, n_).dot(bary_mult);
      }
      const double avg = p.dot(gp);
      for (int j = 0; j < m; ++j) g(m * n_ + j) = 2.0 * v(m * n_ + j) / S * (gp(j) - avg);
      return val;
    };

    double viol = constraints(u).lpNorm<Eigen::Infinity>();
    optim::LbfgsOptions lo;
    lo.max_iter = 400;
    lo.f_tol = 0.0;
    for (int outer = 0; outer < 40; ++outer) {
      lo.grad_tol = std::max(1e-11, std::min(1e-4, 1e-2 * viol));
      auto res = optim::lbfgs(L, u, lo);
      if (!res.x.allFinite()) return std::nullopt;
      u = res.x;
      Eigen::VectorXd c = constraints(u);
      double new_viol = c.lpNorm<Eigen::Infinity>();
      if (G) lam += mu * c.head(G * m);
      nu += mu * c.tail(n_);
      if (new_viol > 0.25 * viol) mu = std::min(mu * 10.0, 1e9);
      viol = new_viol;
      if (viol <= tol && res.converged) break;
    }
    Decomposition dec;
    Eigen::VectorXd p;
    double S;
    unpack_weights(u, p, S);
    dec.weights = p;
    for (int j = 0; j < m; ++j) dec.points.push_back(u.segment(j * n_, n_));
    return dec;
  }

  static Eigen::MatrixXd hessian(const std::vector<std::vector<Poly>>& h, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(h.size());
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) H(i, k) = h[i][k](x);
    return H;
  }

  // Newton polish of the first-order conditions at fixed support. Unknowns:
  // points, weights, multipliers of l (per point), of the barycenter and of
  // the weight sum.
  std::optional<Decomposition> polish(const Decomposition& dec) const {
    const int m = dec.size(), n = n_;
    const int G = static_cast<int>(problem_.variety.generators().size());
    const int ip = m * n, il = ip + m, inu = il + m * G, ik = inu + n, N = ik + 1;
    const int e2 = m * n, e3 = e2 + m, e4 = e3 + m * G, e5 = e4 + n, E = e5 + 1;

    Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
    for (int j = 0; j < m; ++j) u.segment(j * n, n) = dec.points[j];
    u.segment(ip, m) = dec.weights;
    // Multipliers enter the stationarity rows linearly: least-squares start.
    {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m * n + m, m * G + n + 1);
      Eigen::VectorXd rhs(m * n + m);
      for (int j = 0; j < m; ++j) {
        const PointEval e = eval_point(dec.points[j]);
        const double pj = dec.weights(j);
        rhs.segment(j * n, n) = -sign_ * pj * e.grad_f;
        if (G) A.block(j * n, j * G, n, G) = e.J.transpose();
        A.block(j * n, m * G, n, n) = pj * Eigen::MatrixXd::Identity(n, n);
        rhs(m * n + j) = -sign_ * e.f;
        A.block(m * n + j, m * G, 1, n) = dec.points[j].transpose();
        A(m * n + j, m * G + n) = 1.0;
      }
      u.tail(m * G + n + 1) = A.completeOrthogonalDecomposition().solve(rhs);
    }

    optim::ResidualFn F = [&](const Eigen::VectorXd& v, Eigen::VectorXd& res, Eigen::MatrixXd* Jac) {
      res.setZero(E);
      if (Jac) Jac->setZero(E, N);
      const Eigen::VectorXd nu = v.segment(inu, n);
      const double kappa = v(ik);
      Eigen::VectorXd bary = -r_;
      for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd x = v.segment(j * n, n);
        const double pj = v(ip + j);
        const PointEval e = eval_point(x);
        const auto lam = v.segment(il + j * G, G);
        res.segment(j * n, n) = sign_ * pj * e.grad_f + pj * nu;
        if (G) res.segment(j * n, n) += e.J.transpose() * lam;
        res(e2 + j) = sign_ * e.f + nu.dot(x) + kappa;
        if (G) res.segment(e3 + j * G, G) = e.l;
        bary += pj * x;
        res(e5) += pj;
        if (!Jac) continue;
        Eigen::MatrixXd Hx = sign_ * pj * hessian(hess_f_, x);
        for (int g = 0; g < G; ++g) Hx += lam(g) * hessian(hess_l_[g], x);
        Jac->block(j * n, j * n, n, n) = Hx;
        Jac->block(j * n, ip + j, n, 1) = sign_ * e.grad_f + nu;
        if (G) Jac->block(j * n, il + j * G, n, G) = e.J.transpose();
        Jac->block(j * n, inu, n, n) = pj * Eigen::MatrixXd::Identity(n, n);
        Jac->block(e2 + j, j * n, 1, n) = (sign_ * e.grad_f + nu).transpose();
        Jac->block(e2 + j, inu, 1, n) = x.transpose();
        (*Jac)(e2 + j, ik) = 1.0;
        if (G) Jac->block(e3 + j * G, j * n, G, n) = e.J;
        Jac->block(e4, j * n, n, n) = pj * Eigen::MatrixXd::Identity(n, n);
        Jac->block(e4, ip + j, n, 1) = x;
        (*Jac)(e5, ip + j) = 1.0;
      }
      res.segment(e4, n) = bary;
      res(e5) -= 1.0;
    };
    optim::LmOptions lo;
    lo.max_iter = 50;
    lo.residual_tol = 1e-14;
    const optim::LmResult out = optim::levenberg_marquardt(F, u, lo);
    if (!out.x.allFinite() || out.max_residual > 1e-11) return std::nullopt;
    Decomposition polished;
    polished.weights = out.x.segment(ip, m);
    if (polished.weights.minCoeff() <= 0.0) return std::nullopt;
    for (int j = 0; j < m; ++j) {
      polished.points.push_back(out.x.segment(j * n, n));
      if ((polished.points[j] - dec.points[j]).norm() > 1e-4) return std::nullopt;
    }
    return polished;
  }

  // Snap points onto V and re-solve the weights so the barycenter is exact.
  std::optional<RoofValue> finish(Decomposition dec) const {
    const int m = dec.size();
    if (m > 1)
      if (auto p = polish(dec)) {
        const double before = decomposition_sum(dec), after = decomposition_sum(*p);
        if (sign_ * (after - before) <= 1e-9) dec = std::move(*p);
      }
    for (auto& x : dec.points) {
      auto px = project_to_variety(problem_.variety, x, 1e-14, 20);
      if (px) x = *px;
    }
    Eigen::MatrixXd A(n_ + 1, m);
    for (int j = 0; j < m; ++j) {
      A.col(j).head(n_) = dec.points[j];
      A(n_, j) = 1.0;
    }
    Eigen::VectorXd rhs(n_ + 1);
    rhs << r_, 1.0;
    Eigen::VectorXd w = A.colPivHouseholderQr().solve(rhs);
    if (w.allFinite() && w.minCoeff() >= -1e-9 && (A * w - rhs).lpNorm<Eigen::Infinity>() <=
                                                        (A * dec.weights - rhs).lpNorm<Eigen::Infinity>()) {
      w = w.cwiseMax(0.0);
      dec.weights = w / w.sum();
    }
    if ((dec.barycenter() - r_).lpNorm<Eigen::Infinity>() > 1e-6) return std::nullopt;
    for (const auto& x : dec.points)
      if (!membership(problem_.variety, x, 1e-8)) return std::nullopt;
    RoofValue out;
    out.value = 0.0;
    for (int j = 0; j < m; ++j) out.value += dec.weights(j) * problem_.f(dec.points[j]);
    out.decomposition = std::move(dec);
    out.target = r_;
    out.status = RoofStatus::oracle;
    return out;
  }

  double decomposition_sum(const Decomposition& d) const {
    double v = 0.0;
    for (int j = 0; j < d.size(); ++j) v += d.weights(j) * problem_.f(d.points[j]);
    return v;
  }

  const RoofProblem& problem_;
  Eigen::VectorXd r_;
  int n_;
  std::vector<Poly> grad_f_;
  std::vector<std::vector<Poly>> hess_f_;
  std::vector<std::vector<std::vector<Poly>>> hess_l_;
  double sign_;
};

// Candidates reproducing r to this accuracy outrank looser ones; looser ones
// only witness feasibility.
constexpr double kPreciseBarycenter = 1e-9;

bool precise(const RoofValue& v) {
  return (v.decomposition.barycenter() - v.target).lpNorm<Eigen::Infinity>() <= kPreciseBarycenter;
}

bool prefer(Sense sense, const RoofValue& cand, const std::optional<RoofValue>& best) {
  if (!best) return true;
  if (precise(cand) != precise(*best)) return precise(cand);
  return better_decomposition(sense, cand.value, cand.decomposition, best->value, best->decomposition);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::optional<RoofValue> refine_decomposition(const RoofProblem& problem, const Eigen::VectorXd& r,
                                              const Decomposition& start, double tol) {
  if (r.size() != problem.variety.ambient_dim()) throw ArgumentError("refine_decomposition: target dimension");
  LocalSolver solver(problem, r);
  return solver.solve(start, tol);
}

std::optional<RoofValue> roof_eval_fixed_m(const RoofProblem& problem, const Eigen::VectorXd& r, int m,
                                           const OracleOptions& opt) {
  const Variety& V = problem.variety;
  if (r.size() != V.ambient_dim()) throw ArgumentError("roof oracle: target has wrong dimension");
  if (m < 1) throw ArgumentError("roof oracle: m must be at least 1");
  if (m == 1) {
    if (!membership(V, r, 1e-8)) return std::nullopt;
    RoofValue v;
    v.value = problem.f(r);
    v.decomposition.weights = Eigen::VectorXd::Ones(1);
    v.decomposition.points = {r};
    v.target = r;
    return v;
  }
  std::mt19937_64 rng(mix_seed(opt.seed, static_cast<std::uint64_t>(m)));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 + r.lpNorm<Eigen::Infinity>();
  LocalSolver solver(problem, r);
  std::optional<RoofValue> best;
  for (int k = 0; k < opt.restarts; ++k) {
    Decomposition start;
    try {
      start.points = sample_points(V, m, rng, r, scale);
    } catch (const InfeasibleError&) {
      continue;
    }
    start.weights.resize(m);
    for (int j = 0; j < m; ++j) start.weights(j) = std::abs(normal(rng)) + 0.1;
    start.weights /= start.weights.sum();
    auto cand = solver.solve(start, opt.tol);
    if (!cand) continue;
    if (prefer(problem.sense, *cand, best)) best = std::move(cand);
  }
  if (best) best->decomposition = best->decomposition.canonical();
  return best;
}

RoofValue roof_eval_oracle(const RoofProblem& problem, const Eigen::VectorXd& r, const OracleOptions& opt) {
  if (opt.m_max < 0) throw ArgumentError("roof oracle: m_max must be positive (0 selects dim(conv V) + 1)");
  if (opt.restarts < 1) throw ArgumentError("roof oracle: restarts must be at least 1");
  const int m_max = opt.m_max > 0 ? opt.m_max : affine_hull_dimension(problem.variety) + 1;
  std::optional<RoofValue> best;
  for (int m = 1; m <= m_max; ++m) {
    auto cand = roof_eval_fixed_m(problem, r, m, opt);
    if (!cand) continue;
    if (prefer(problem.sense, *cand, best)) best = std::move(cand);
  }
  if (!best) throw InfeasibleError("roof oracle: no decomposition reproduces the target; it is likely outside conv V");
  return *best;
}

std::vector<GridEntry> roof_grid(const RoofProblem& problem, const std::vector<Eigen::VectorXd>& grid,
                                 const OracleOptions& opt, int workers) {
  std::vector<GridEntry> out(grid.size());
  OracleOptions o = opt;
  if (o.m_max <= 0) o.m_max = affine_hull_dimension(problem.variety) + 1;
  auto work = [&](std::size_t i) {
    out[i].target = grid[i];
    try {
      out[i].value = roof_eval_oracle(problem, grid[i], o);
    } catch (const InfeasibleError& e) {
      out[i].error = e.what();
    }
  };
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(grid.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < grid.size(); i += workers) work(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

bool check_affine_on_polytope(const RoofProblem& problem, const Decomposition& dec, int samples, double tol,
                              const OracleOptions& opt) {
  if (dec.size() <= 1) return true;
  std::mt19937_64 rng(mix_seed(opt.seed, 0xaff1));
  std::exponential_distribution<double> expo(1.0);
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd q(dec.size());
    for (int j = 0; j < dec.size(); ++j) q(j) = expo(rng);
    q /= q.sum();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(problem.variety.ambient_dim());
    double expected = 0.0;
    for (int j = 0; j < dec.size(); ++j) {
      s += q(j) * dec.points[j];
      expected += q(j) * problem.f(dec.points[j]);
    }
    RoofValue v;
    try {
      v = roof_eval_oracle(problem, s, opt);
    } catch (const InfeasibleError&) {
      return false;
    }
    if (std::abs(v.value - expected) > tol) return false;
  }
  return true;
}

}  // namespace roofbench
