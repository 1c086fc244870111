#include "roofbench/tangency.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "roofbench/optim.hpp"

namespace roofbench {

Variety graph_variety(const RoofProblem& problem) {
  const int n = problem.variety.ambient_dim();
  std::vector<int> embed(n);
  for (int i = 0; i < n; ++i) embed[i] = i;
  std::vector<Poly> gens;
  for (const auto& g : problem.variety.generators()) gens.push_back(remap_variables(g, n + 1, embed));
  gens.push_back(Poly::variable(n + 1, n) - remap_variables(problem.f, n + 1, embed));
  std::optional<int> dim = problem.variety.expected_dim();
  return Variety(n + 1, std::move(gens), dim);
}

Eigen::VectorXd lift(const RoofProblem& problem, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size() + 1);
  y << x, problem.f(x);
  return y;
}

RMatrix build_r_matrix(const Variety& graph, const std::vector<Eigen::VectorXd>& contacts, double tol) {
  const int m = static_cast<int>(contacts.size());
  if (m == 0) throw ArgumentError("build_r_matrix: no contacts");
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k)
      if ((contacts[j] - contacts[k]).norm() <= 1e-8)
        throw DegenerateInputError("build_r_matrix: contacts " + std::to_string(j) + " and " + std::to_string(k) +
                                   " coincide");
  const int N = graph.ambient_dim();
  std::vector<Eigen::VectorXd> rows;
  RMatrix R;
  for (int j = 0; j < m; ++j) {
    TangentFrame tf = tangent_frame(graph, contacts[j], tol);
    for (int i = 0; i < tf.dim(); ++i) {
      rows.push_back(tf.basis.col(i));
      R.labels.push_back({RowLabel::Kind::tangent, j, i});
    }
  }
  if (m == 2) {
    rows.push_back(contacts[0] - contacts[1]);
    R.labels.push_back({RowLabel::Kind::difference, 0, 1});
  } else if (m >= 3) {
    for (int j = 0; j < m; ++j) {
      rows.push_back(contacts[j] - contacts[(j + 1) % m]);
      R.labels.push_back({RowLabel::Kind::difference, j, (j + 1) % m});
    }
  }
  R.rows.resize(static_cast<Eigen::Index>(rows.size()), N);
  for (std::size_t i = 0; i < rows.size(); ++i) R.rows.row(i) = rows[i].transpose();
  return R;
}

namespace {

// Calls visit(subset) for every size-k subset of {0..n-1} in lexicographic order.
template <typename Visit>
void for_each_subset(int n, int k, Visit&& visit) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

constexpr double kMaxMinors = 5000.0;

}  // namespace

TangencyResidual tangency_residual(const RMatrix& R) {
  const int rows = static_cast<int>(R.rows.rows());
  const int N = static_cast<int>(R.rows.cols());
  TangencyResidual out;
  if (rows < N) {
    out.sv_residual = 0.0;
    out.minor_residual = 0.0;
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R.rows);
  out.sv_residual = svd.singularValues()(N - 1);
  if (binomial(rows, N) <= kMaxMinors) {
    double worst = 0.0;
    Eigen::MatrixXd sub(N, N);
    for_each_subset(rows, N, [&](const std::vector<int>& idx) {
      for (int i = 0; i < N; ++i) sub.row(i) = R.rows.row(idx[i]);
      worst = std::max(worst, std::abs(sub.determinant()));
    });
    out.minor_residual = worst;
  }
  return out;
}

std::vector<Poly> OptimalitySystem::all_equations() const {
  std::vector<Poly> out;
  for (const auto* g : {&membership, &minors, &barycenter, &normalization})
    out.insert(out.end(), g->begin(), g->end());
  return out;
}

OptimalitySystem assemble_system(const RoofProblem& problem, const Eigen::VectorXd& r, int m) {
  const int n = problem.variety.ambient_dim();
  if (r.size() != n) throw ArgumentError("assemble_system: target has wrong dimension");
  if (m < 1 || m > n + 1) throw ArgumentError("assemble_system: m must lie in 1..n+1");
  OptimalitySystem sys;
  sys.n = n;
  sys.m = m;
  sys.nvars = m * (n + 1) + m;
  const int nv = sys.nvars;

  auto on_contact = [&](const Poly& p, int k) {
    std::vector<int> map(n);
    for (int i = 0; i < n; ++i) map[i] = sys.x_var(k, i);
    return remap_variables(p, nv, map);
  };

  for (int k = 0; k < m; ++k) {
    for (const auto& g : problem.variety.generators()) sys.membership.push_back(on_contact(g, k));
    sys.membership.push_back(Poly::variable(nv, sys.z_var(k)) - on_contact(problem.f, k));
  }

  // Polynomial R rows: lifted tangent field at each contact, then differences.
  std::vector<std::vector<Poly>> rows;
  if (problem.tangent_field) {
    const auto gf = grad(problem.f);
    for (int k = 0; k < m; ++k) {
      for (const auto& t : *problem.tangent_field) {
        std::vector<Poly> row;
        Poly slope(n);
        for (int i = 0; i < n; ++i) {
          row.push_back(on_contact(t[i], k));
          slope += gf[i] * t[i];
        }
        row.push_back(on_contact(slope, k));
        rows.push_back(std::move(row));
      }
    }
    auto diff = [&](int a, int b) {
      std::vector<Poly> row;
      for (int i = 0; i < n; ++i) row.push_back(Poly::variable(nv, sys.x_var(a, i)) - Poly::variable(nv, sys.x_var(b, i)));
      row.push_back(Poly::variable(nv, sys.z_var(a)) - Poly::variable(nv, sys.z_var(b)));
      return row;
    };
    if (m == 2) rows.push_back(diff(0, 1));
    if (m >= 3)
      for (int k = 0; k < m; ++k) rows.push_back(diff(k, (k + 1) % m));
  }
  const int N = n + 1;
  const int nrows = static_cast<int>(rows.size());
  if (!problem.tangent_field || binomial(nrows, N) > kMaxMinors) {
    sys.minors_numeric = true;
  } else if (nrows >= N) {
    for_each_subset(nrows, N, [&](const std::vector<int>& idx) {
      std::vector<std::vector<Poly>> sub;
      for (int i : idx) sub.push_back(rows[i]);
      Poly d = determinant(sub);
      if (!d.is_zero()) sys.minors.push_back(std::move(d));
    });
  }

  for (int i = 0; i < n; ++i) {
    Poly b = Poly::constant(nv, -r(i));
    for (int k = 0; k < m; ++k) {
      Exponents e(nv, 0);
      e[sys.x_var(k, i)] = 1;
      e[sys.p_var(k)] = 1;
      b.add_term(e, 1.0);
    }
    sys.barycenter.push_back(std::move(b));
  }
  Poly norm = Poly::constant(nv, -1.0);
  for (int k = 0; k < m; ++k) norm += Poly::variable(nv, sys.p_var(k));
  sys.normalization.push_back(std::move(norm));
  return sys;
}

std::vector<Poly> eliminate_graph_and_normalization(const RoofProblem& problem, const OptimalitySystem& sys) {
  const int n = sys.n, m = sys.m;
  const int nv = m * n + (m - 1);
  std::vector<Poly> rep(sys.nvars, Poly(nv));
  for (int k = 0; k < m; ++k) {
    std::vector<int> map(n);
    for (int i = 0; i < n; ++i) {
      map[i] = k * n + i;
      rep[sys.x_var(k, i)] = Poly::variable(nv, k * n + i);
    }
    rep[sys.z_var(k)] = remap_variables(problem.f, nv, map);
  }
  Poly last = Poly::constant(nv, 1.0);
  for (int k = 0; k + 1 < m; ++k) {
    rep[sys.p_var(k)] = Poly::variable(nv, m * n + k);
    last -= Poly::variable(nv, m * n + k);
  }
  rep[sys.p_var(m - 1)] = last;
  std::vector<Poly> out;
  for (const auto& eq : sys.all_equations()) {
    Poly q = compose(eq, rep);
    if (!q.is_zero()) out.push_back(std::move(q));
  }
  return out;
}

bool CertificateReport::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupCheck& g) { return g.pass; });
}

const GroupCheck* CertificateReport::group(const std::string& name) const {
  for (const auto& g : groups)
    if (g.name == name) return &g;
  return nullptr;
}

CertificateReport verify_certificate(const RoofProblem& problem, const Eigen::VectorXd& r,
                                     const TangencyCertificate& cert, double tol) {
  CertificateReport rep;
  const auto& dec = cert.decomposition;
  const int n = problem.variety.ambient_dim();
  auto add = [&](const std::string& name, double residual) {
    if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
    rep.groups.push_back({name, residual, tol, residual <= tol});
  };
  const bool shapes_ok = dec.size() >= 1 && dec.weights.size() == dec.size() && r.size() == n &&
                         std::all_of(dec.points.begin(), dec.points.end(),
                                     [&](const Eigen::VectorXd& x) { return x.size() == n; }) &&
                         cert.hyperplane.normal.size() == n + 1;
  if (!shapes_ok) {
    add("shape", std::numeric_limits<double>::infinity());
    return rep;
  }

  double member = 0.0;
  for (const auto& x : dec.points) {
    auto res = problem.variety.residuals(x);
    if (res.size()) member = std::max(member, res.cwiseAbs().maxCoeff());
  }
  add("membership", member);

  std::vector<Eigen::VectorXd> lifted;
  for (const auto& x : dec.points) lifted.push_back(lift(problem, x));
  const Variety graph = graph_variety(problem);
  double minors = std::numeric_limits<double>::infinity();
  double tangent_dot = std::numeric_limits<double>::infinity();
  try {
    RMatrix R = build_r_matrix(graph, lifted, tol);
    auto tr = tangency_residual(R);
    minors = std::max(tr.sv_residual, tr.minor_residual.value_or(0.0));
    tangent_dot = (R.rows * cert.hyperplane.normal).cwiseAbs().maxCoeff();
  } catch (const std::exception&) {
  }
  add("minors", minors);

  add("barycenter", (dec.barycenter() - r).lpNorm<Eigen::Infinity>());
  add("normalization", std::abs(dec.weights.sum() - 1.0));
  add("weights", std::max({0.0, -dec.weights.minCoeff(), dec.weights.maxCoeff() - 1.0}));

  double plane = std::abs(cert.hyperplane.normal.norm() - 1.0);
  for (const auto& y : lifted) plane = std::max(plane, std::abs(cert.hyperplane.signed_distance(y)));
  plane = std::max(plane, tangent_dot);
  add("hyperplane", plane);

  rep.value = 0.0;
  for (int j = 0; j < dec.size(); ++j) rep.value += dec.weights(j) * problem.f(dec.points[j]);
  add("value", std::abs(rep.value - cert.value));
  return rep;
}

namespace {

using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;
using ADVec = Eigen::Matrix<AD, Eigen::Dynamic, 1>;

// Smooth form of the m-tangency conditions: a unit normal a in R^{n+1} that
// lies in the row space of the graph Jacobian at every contact (multipliers
// lambda_k) and is orthogonal to the contact differences.
class CertificateSystem {
 public:
  CertificateSystem(const RoofProblem& problem, const Eigen::VectorXd& r, int m)
      : problem_(problem), r_(r), m_(m), n_(problem.variety.ambient_dim()),
        G_(static_cast<int>(problem.variety.generators().size())), grad_f_(grad(problem.f)) {}

  int N() const { return n_ + 1; }
  int x_off(int k) const { return k * n_; }
  int p_off() const { return m_ * n_; }
  int a_off() const { return m_ * n_ + m_; }
  int l_off(int k) const { return a_off() + N() + k * (G_ + 1); }
  int unknowns() const { return l_off(m_); }
  int equations() const { return G_ * m_ + N() * m_ + (m_ - 1) + 1 + n_ + 1; }

  template <typename T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> residual(const Eigen::Matrix<T, Eigen::Dynamic, 1>& u) const {
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    Vec F(equations());
    int row = 0;
    const auto& grads = problem_.variety.gradients();
    std::vector<T> fz(m_);
    for (int k = 0; k < m_; ++k) {
      const Vec x = u.segment(x_off(k), n_);
      for (int i = 0; i < G_; ++i) F(row++) = problem_.variety.generators()[i](x);
      fz[k] = problem_.f(x);
      // a - J_gr(x_k)^T lambda_k
      Vec rowspace = Vec::Zero(N());
      for (int i = 0; i < G_; ++i) {
        const T li = u(l_off(k) + i);
        for (int c = 0; c < n_; ++c) rowspace(c) += li * grads[i][c](x);
      }
      const T lz = u(l_off(k) + G_);
      for (int c = 0; c < n_; ++c) rowspace(c) -= lz * grad_f_[c](x);
      rowspace(n_) += lz;
      for (int c = 0; c < N(); ++c) F(row++) = u(a_off() + c) - rowspace(c);
    }
    for (int k = 0; k + 1 < m_; ++k) {
      T dot(0);
      for (int c = 0; c < n_; ++c) dot += u(a_off() + c) * (u(x_off(k) + c) - u(x_off(k + 1) + c));
      dot += u(a_off() + n_) * (fz[k] - fz[k + 1]);
      F(row++) = dot;
    }
    T an(0);
    for (int c = 0; c < N(); ++c) an += u(a_off() + c) * u(a_off() + c);
    F(row++) = an - T(1);
    for (int c = 0; c < n_; ++c) {
      T b(-r_(c));
      for (int k = 0; k < m_; ++k) b += u(p_off() + k) * u(x_off(k) + c);
      F(row++) = b;
    }
    T ps(-1);
    for (int k = 0; k < m_; ++k) ps += u(p_off() + k);
    F(row++) = ps;
    return F;
  }

  void operator()(const Eigen::VectorXd& u, Eigen::VectorXd& F, Eigen::MatrixXd* J) const {
    if (!J) {
      F = residual<double>(u);
      return;
    }
    const int nu = unknowns();
    ADVec ua(nu);
    for (int i = 0; i < nu; ++i) ua(i) = AD(u(i), nu, i);
    ADVec Fa = residual<AD>(ua);
    F.resize(Fa.size());
    J->setZero(Fa.size(), nu);
    for (int i = 0; i < Fa.size(); ++i) {
      F(i) = Fa(i).value();
      if (Fa(i).derivatives().size() == nu) J->row(i) = Fa(i).derivatives().transpose();
    }
  }

  // Unknown vector from a decomposition: normal from the smallest right
  // singular vector of R, multipliers by least squares.
  Eigen::VectorXd initial_guess(const Decomposition& dec) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(unknowns());
    std::vector<Eigen::VectorXd> lifted;
    for (int k = 0; k < m_; ++k) {
      u.segment(x_off(k), n_) = dec.points[k];
      u(p_off() + k) = dec.weights(k);
      lifted.push_back(lift(problem_, dec.points[k]));
    }
    const Variety graph = graph_variety(problem_);
    Eigen::MatrixXd rows(0, N());
    for (int k = 0; k < m_; ++k) {
      Eigen::MatrixXd J = jacobian_at(graph, lifted[k]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
      int rank = 0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++rank;
      Eigen::MatrixXd tang = svd.matrixV().rightCols(N() - rank).transpose();
      Eigen::MatrixXd grown(rows.rows() + tang.rows(), N());
      grown << rows, tang;
      rows = grown;
    }
    for (int k = 0; k + 1 < m_; ++k) {
      rows.conservativeResize(rows.rows() + 1, Eigen::NoChange);
      rows.row(rows.rows() - 1) = (lifted[k] - lifted[k + 1]).transpose();
    }
    Eigen::VectorXd a;
    if (rows.rows() == 0) {
      a = Eigen::VectorXd::Unit(N(), n_);
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeFullV);
      a = svd.matrixV().col(N() - 1);
    }
    u.segment(a_off(), N()) = a;
    for (int k = 0; k < m_; ++k) {
      Eigen::MatrixXd J = jacobian_at(graph, lifted[k]);
      u.segment(l_off(k), G_ + 1) = J.transpose().colPivHouseholderQr().solve(a);
    }
    return u;
  }

  Decomposition decomposition(const Eigen::VectorXd& u) const {
    Decomposition d;
    d.weights = u.segment(p_off(), m_);
    for (int k = 0; k < m_; ++k) d.points.push_back(u.segment(x_off(k), n_));
    return d;
  }

  Eigen::VectorXd normal(const Eigen::VectorXd& u) const { return u.segment(a_off(), N()); }

 private:
  const RoofProblem& problem_;
  Eigen::VectorXd r_;
  int m_, n_, G_;
  std::vector<Poly> grad_f_;
};

std::uint64_t cert_seed(std::uint64_t seed, int m) {
  std::uint64_t z = seed ^ (0x632be59bd9b4e019ULL * static_cast<std::uint64_t>(m + 7));
  z = (z ^ (z >> 31)) * 0xd6e8feb86659fd93ULL;
  return z ^ (z >> 32);
}

std::optional<TangencyCertificate> try_start(const RoofProblem& problem, const Eigen::VectorXd& r,
                                             const Decomposition& start, const CertifyOptions& opt, int depth) {
  const int m = start.size();
  CertificateSystem sys(problem, r, m);
  optim::LmOptions lo;
  lo.max_iter = 200;
  lo.residual_tol = 1e-14;
  auto res = optim::levenberg_marquardt(std::cref(sys), sys.initial_guess(start), lo);
  if (!res.x.allFinite() || res.max_residual > opt.converge_tol) return std::nullopt;

  Decomposition dec = sys.decomposition(res.x);
  if (dec.weights.minCoeff() < -1e-9 || dec.weights.maxCoeff() > 1.0 + 1e-9) return std::nullopt;

  // Colliding contacts make the system degenerate: collapse and retry at m-1.
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k)
      if ((dec.points[j] - dec.points[k]).norm() < 1e-6) {
        if (depth > 3 || m == 1) return std::nullopt;
        Decomposition merged;
        std::vector<double> w;
        for (int i = 0; i < m; ++i) {
          if (i == k) continue;
          merged.points.push_back(dec.points[i]);
          w.push_back(dec.weights(i) + (i == j ? dec.weights(k) : 0.0));
        }
        merged.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        return try_start(problem, r, merged, opt, depth + 1);
      }

  dec.weights = dec.weights.cwiseMax(0.0).cwiseMin(1.0);
  TangencyCertificate cert;
  Eigen::VectorXd a = sys.normal(res.x);
  a.normalize();
  const double want = problem.sense == Sense::convex ? -1.0 : 1.0;
  if (a(a.size() - 1) * want < 0) a = -a;
  cert.hyperplane.normal = a;
  double off = 0.0;
  for (const auto& x : dec.points) off += a.dot(lift(problem, x));
  cert.hyperplane.offset = off / m;
  cert.value = 0.0;
  for (int j = 0; j < m; ++j) cert.value += dec.weights(j) * problem.f(dec.points[j]);
  cert.decomposition = dec.canonical();
  cert.solver.iterations = res.iterations;
  cert.solver.m = m;

  auto report = verify_certificate(problem, r, cert, opt.tol);
  if (!report.passed()) return std::nullopt;
  for (const auto& g : report.groups) {
    if (g.name == "membership") cert.residuals.membership = g.residual;
    if (g.name == "minors") cert.residuals.minors = g.residual;
    if (g.name == "barycenter") cert.residuals.barycenter = g.residual;
    if (g.name == "normalization") cert.residuals.normalization = g.residual;
    if (g.name == "hyperplane") cert.residuals.hyperplane = g.residual;
  }
  std::vector<Eigen::VectorXd> lifted;
  for (const auto& x : cert.decomposition.points) lifted.push_back(lift(problem, x));
  auto tr = tangency_residual(build_r_matrix(graph_variety(problem), lifted, opt.tol));
  cert.minor_residual = tr.minor_residual;
  cert.sv_residual = tr.sv_residual;
  return cert;
}

}  // namespace

std::optional<TangencyCertificate> solve_certificate(const RoofProblem& problem, const Eigen::VectorXd& r, int m,
                                                     const CertifyOptions& opt) {
  const int n = problem.variety.ambient_dim();
  if (r.size() != n) throw ArgumentError("solve_certificate: target has wrong dimension");
  if (m < 1 || m > n + 1) throw ArgumentError("solve_certificate: m must lie in 1..n+1");

  std::optional<TangencyCertificate> best;
  int total_iters = 0;
  auto consider = [&](std::optional<TangencyCertificate> cand) {
    if (!cand) return;
    total_iters += cand->solver.iterations;
    if (!best || better_decomposition(problem.sense, cand->value, cand->decomposition, best->value,
                                      best->decomposition))
      best = std::move(cand);
  };

  if (m == 1) {
    if (!membership(problem.variety, r, opt.tol)) return std::nullopt;
    Decomposition d;
    d.weights = Eigen::VectorXd::Ones(1);
    d.points = {r};
    consider(try_start(problem, r, d, opt, 0));
  } else {
    if (opt.warm_start) {
      if (opt.warm_start->size() != m) throw ArgumentError("solve_certificate: warm start has wrong size");
      consider(try_start(problem, r, *opt.warm_start, opt, 0));
    }
    std::mt19937_64 rng(cert_seed(opt.seed, m));
    std::exponential_distribution<double> expo(1.0);
    const double scale = 1.0 + r.lpNorm<Eigen::Infinity>();
    for (int k = 0; k < opt.restarts; ++k) {
      Decomposition d;
      try {
        d.points = sample_points(problem.variety, m, rng, r, scale);
      } catch (const InfeasibleError&) {
        continue;
      }
      d.weights.resize(m);
      for (int j = 0; j < m; ++j) d.weights(j) = expo(rng);
      d.weights /= d.weights.sum();
      consider(try_start(problem, r, d, opt, 0));
    }
  }
  if (best) {
    best->solver.seed = opt.seed;
    best->solver.restarts = opt.restarts;
    best->solver.iterations = total_iters;
    best->solver.warm_start = opt.warm_start.has_value();
  }
  return best;
}

}  // namespace roofbench
