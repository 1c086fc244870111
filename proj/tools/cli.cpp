#include "cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace roofbench::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

struct ConfigError : ArgumentError {
  using ArgumentError::ArgumentError;
};

// ---------------------------------------------------------------------------
// Field access

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(where, "missing field '" + key + "'");
  return *it;
}

const json* maybe(const json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd real_vector(const json& j, const std::string& where, int expected = -1) {
  if (!j.is_array()) bad(where, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], where + "[" + std::to_string(i) + "]");
  if (expected >= 0 && v.size() != expected)
    bad(where, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  return v;
}

Poly polynomial(const json& j, int nvars, const std::string& where) {
  const std::string s = text(j, where);
  try {
    return parse_polynomial(s, nvars);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what(), e.token());
  }
}

json load_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(what + " '" + path.string() + "' cannot be opened");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output helpers

ojson to_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ojson to_json(const Decomposition& d) {
  ojson points = ojson::array();
  for (const auto& x : d.points) points.push_back(to_json(x));
  return ojson{{"weights", to_json(d.weights)}, {"points", points}};
}

ojson complex_pairs(const Eigen::MatrixXcd& m) {
  ojson a = ojson::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) a.push_back(ojson::array({m(i, j).real(), m(i, j).imag()}));
  return a;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Config

struct SolverConfig {
  std::uint64_t seed = 0;
  int restarts = 64;
  int m_max = 0;
  double tol = 1e-10;
  bool certify = false;
  int certify_restarts = 0;
  double certify_tol = 1e-8;
  std::optional<int> m;
  int workers = 0;
};

struct OutputConfig {
  std::optional<fs::path> csv, json, graph_csv;
  int graph_resolution = 360;
};

struct Config {
  std::string kind;
  std::optional<RoofProblem> problem;
  std::vector<Eigen::VectorXd> targets;
  SolverConfig solver;
  OutputConfig output;
  json raw;
};

RoofProblem parse_problem(const json& j) {
  const json& vj = need(j, "variety", "config");
  const long long n = integer(need(vj, "ambient_dim", "variety"), "variety.ambient_dim");
  if (n < 1 || n > 64) bad("variety.ambient_dim", "must lie in 1..64");
  const int nv = static_cast<int>(n);
  const json& gj = need(vj, "generators", "variety");
  if (!gj.is_array()) bad("variety.generators", "expected an array of polynomial strings");
  std::vector<Poly> gens;
  for (std::size_t i = 0; i < gj.size(); ++i)
    gens.push_back(polynomial(gj[i], nv, "variety.generators[" + std::to_string(i) + "]"));
  std::optional<int> expected;
  if (const json* e = maybe(vj, "expected_dim")) expected = static_cast<int>(integer(*e, "variety.expected_dim"));
  Poly f = polynomial(need(j, "function", "config"), nv, "function");
  Sense sense = Sense::convex;
  if (const json* s = maybe(j, "sense")) sense = parse_sense(text(*s, "sense"));
  std::optional<TangentField> field;
  if (const json* tf = maybe(j, "tangent_field")) {
    if (!tf->is_array()) bad("tangent_field", "expected an array of vector fields");
    TangentField t;
    for (std::size_t k = 0; k < tf->size(); ++k) {
      const std::string where = "tangent_field[" + std::to_string(k) + "]";
      const json& row = (*tf)[k];
      if (!row.is_array() || static_cast<int>(row.size()) != nv)
        bad(where, "expected " + std::to_string(nv) + " polynomial strings");
      std::vector<Poly> comps;
      for (std::size_t i = 0; i < row.size(); ++i)
        comps.push_back(polynomial(row[i], nv, where + "[" + std::to_string(i) + "]"));
      t.push_back(std::move(comps));
    }
    field = std::move(t);
  }
  return RoofProblem(Variety(nv, std::move(gens), expected), std::move(f), sense, std::move(field));
}

std::vector<Eigen::VectorXd> parse_targets(const json& j, int n) {
  std::vector<Eigen::VectorXd> out;
  if (const json* pts = maybe(j, "points")) {
    if (!pts->is_array()) bad("targets.points", "expected an array of points");
    for (std::size_t i = 0; i < pts->size(); ++i)
      out.push_back(real_vector((*pts)[i], "targets.points[" + std::to_string(i) + "]", n));
  }
  if (const json* g = maybe(j, "grid")) {
    const Eigen::VectorXd lo = real_vector(need(*g, "lower", "targets.grid"), "targets.grid.lower", n);
    const Eigen::VectorXd hi = real_vector(need(*g, "upper", "targets.grid.upper"), "targets.grid.upper", n);
    const json& rj = need(*g, "resolution", "targets.grid");
    std::vector<int> res(n);
    if (rj.is_array()) {
      if (static_cast<int>(rj.size()) != n) bad("targets.grid.resolution", "expected one entry per coordinate");
      for (int i = 0; i < n; ++i) res[i] = static_cast<int>(integer(rj[i], "targets.grid.resolution"));
    } else {
      std::fill(res.begin(), res.end(), static_cast<int>(integer(rj, "targets.grid.resolution")));
    }
    for (int r : res)
      if (r < 1) bad("targets.grid.resolution", "must be at least 1");
    std::optional<Eigen::VectorXd> center;
    double radius = 0.0;
    if (const json* reg = maybe(*g, "region")) {
      center = real_vector(need(*reg, "center", "targets.grid.region"), "targets.grid.region.center", n);
      radius = number(need(*reg, "radius", "targets.grid.region"), "targets.grid.region.radius");
    }
    std::vector<int> idx(n, 0);
    while (true) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i)
        x(i) = res[i] == 1 ? 0.5 * (lo(i) + hi(i)) : lo(i) + (hi(i) - lo(i)) * idx[i] / (res[i] - 1);
      if (!center || (x - *center).norm() <= radius + 1e-12) out.push_back(x);
      int k = n - 1;
      while (k >= 0 && ++idx[k] == res[k]) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  if (out.empty()) bad("targets", "no target points (give 'points' or a 'grid')");
  return out;
}

SolverConfig parse_solver(const json& j, const Overrides& ov) {
  SolverConfig s;
  const json* sj = maybe(j, "solver");
  if (!sj && !ov.seed) bad("config", "missing field 'solver' (a seed is required)");
  if (sj) {
    if (const json* v = maybe(*sj, "seed")) {
      const long long seed = integer(*v, "solver.seed");
      if (seed < 0) bad("solver.seed", "must be non-negative");
      s.seed = static_cast<std::uint64_t>(seed);
    } else if (!ov.seed) {
      bad("solver", "missing field 'seed' (unseeded runs are not allowed)");
    }
    if (const json* v = maybe(*sj, "restarts")) s.restarts = static_cast<int>(integer(*v, "solver.restarts"));
    if (const json* v = maybe(*sj, "m_max")) s.m_max = static_cast<int>(integer(*v, "solver.m_max"));
    if (const json* v = maybe(*sj, "tol")) s.tol = number(*v, "solver.tol");
    if (const json* v = maybe(*sj, "certify")) {
      if (!v->is_boolean()) bad("solver.certify", "expected true or false");
      s.certify = v->get<bool>();
    }
    if (const json* v = maybe(*sj, "certify_restarts"))
      s.certify_restarts = static_cast<int>(integer(*v, "solver.certify_restarts"));
    if (const json* v = maybe(*sj, "certify_tol")) s.certify_tol = number(*v, "solver.certify_tol");
    if (const json* v = maybe(*sj, "m")) s.m = static_cast<int>(integer(*v, "solver.m"));
    if (const json* v = maybe(*sj, "workers")) s.workers = static_cast<int>(integer(*v, "solver.workers"));
  }
  if (ov.seed) s.seed = *ov.seed;
  if (ov.restarts) s.restarts = *ov.restarts;
  if (ov.tol) s.tol = *ov.tol;
  if (s.restarts < 1) bad("solver.restarts", "must be at least 1");
  if (s.m_max < 0) bad("solver.m_max", "must be non-negative");
  if (!(s.tol > 0)) bad("solver.tol", "must be positive");
  if (s.certify_restarts < 0) bad("solver.certify_restarts", "must be non-negative");
  return s;
}

OutputConfig parse_output(const json& j, const Overrides& ov) {
  OutputConfig o;
  const fs::path base = ov.out ? fs::path(*ov.out) : fs::path();
  auto path_of = [&](const json& v, const std::string& where) {
    const fs::path p(text(v, where));
    return p.is_absolute() || base.empty() ? p : base / p;
  };
  if (const json* oj = maybe(j, "output")) {
    if (const json* v = maybe(*oj, "csv")) o.csv = path_of(*v, "output.csv");
    if (const json* v = maybe(*oj, "json")) o.json = path_of(*v, "output.json");
    if (const json* v = maybe(*oj, "graph_csv")) o.graph_csv = path_of(*v, "output.graph_csv");
    if (const json* v = maybe(*oj, "graph_resolution"))
      o.graph_resolution = static_cast<int>(integer(*v, "output.graph_resolution"));
  }
  return o;
}

Config load_config(const std::string& path, const Overrides& ov) {
  Config c;
  c.raw = load_json(path, "config");
  c.kind = text(need(c.raw, "kind", "config"), "kind");
  if (c.kind != "roof" && c.kind != "certify" && c.kind != "quantum")
    bad("kind", "unknown kind '" + c.kind + "' (expected roof, certify or quantum)");
  c.solver = parse_solver(c.raw, ov);
  c.output = parse_output(c.raw, ov);
  if (c.kind != "quantum") {
    c.problem = parse_problem(c.raw);
    c.targets = parse_targets(need(c.raw, "targets", "config"), c.problem->variety.ambient_dim());
  }
  return c;
}

int effective_m_max(const Config& c) {
  return c.solver.m_max > 0 ? c.solver.m_max : affine_hull_dimension(c.problem->variety) + 1;
}

// ---------------------------------------------------------------------------
// Certificates as JSON

ojson certificate_json(const Eigen::VectorXd& r, const TangencyCertificate& cert, const CertificateReport& rep) {
  ojson groups = ojson::object();
  for (const auto& g : rep.groups)
    groups[g.name] = ojson{{"residual", g.residual}, {"tolerance", g.tolerance}, {"pass", g.pass}};
  ojson j;
  j["status"] = rep.passed() ? "pass" : "fail";
  j["target"] = to_json(r);
  j["value"] = cert.value;
  j["decomposition"] = to_json(cert.decomposition);
  j["hyperplane"] = ojson{{"normal", to_json(cert.hyperplane.normal)}, {"offset", cert.hyperplane.offset}};
  j["residuals"] = groups;
  j["minor_residual"] = cert.minor_residual ? ojson(*cert.minor_residual) : ojson();
  j["sv_residual"] = cert.sv_residual;
  j["solver"] = ojson{{"seed", cert.solver.seed},
                      {"restarts", cert.solver.restarts},
                      {"iterations", cert.solver.iterations},
                      {"m", cert.solver.m},
                      {"warm_start", cert.solver.warm_start}};
  return j;
}

ojson no_solution_json(const Eigen::VectorXd& r, int m) {
  return ojson{{"status", "no-solution"}, {"target", to_json(r)}, {"m", m}};
}

TangencyCertificate certificate_from_json(const json& j, int n) {
  TangencyCertificate c;
  const json& dj = need(j, "decomposition", "certificate");
  c.decomposition.weights = real_vector(need(dj, "weights", "decomposition"), "decomposition.weights");
  const json& pj = need(dj, "points", "decomposition");
  if (!pj.is_array()) bad("decomposition.points", "expected an array of points");
  for (std::size_t i = 0; i < pj.size(); ++i)
    c.decomposition.points.push_back(real_vector(pj[i], "decomposition.points[" + std::to_string(i) + "]", n));
  const json& hj = need(j, "hyperplane", "certificate");
  c.hyperplane.normal = real_vector(need(hj, "normal", "hyperplane"), "hyperplane.normal", n + 1);
  c.hyperplane.offset = number(need(hj, "offset", "hyperplane"), "hyperplane.offset");
  c.value = number(need(j, "value", "certificate"), "value");
  return c;
}

// ---------------------------------------------------------------------------
// Roof runs

struct PointResult {
  Eigen::VectorXd target;
  std::optional<RoofValue> value;
  std::string status;
  std::string error;
  std::optional<ojson> certificate;
  std::optional<double> oracle_value;  // set when a certificate improved on the oracle
};

std::string csv_header(int n, int m_max) {
  std::ostringstream os;
  for (int i = 1; i <= n; ++i) os << 'r' << i << ',';
  os << "value,m";
  for (int j = 1; j <= m_max; ++j) os << ",p" << j;
  for (int j = 1; j <= m_max; ++j)
    for (int i = 1; i <= n; ++i) os << ",x" << j << '_' << i;
  return os.str();
}

std::string csv_row(const PointResult& p, int m_max) {
  const int n = static_cast<int>(p.target.size());
  std::ostringstream os;
  for (int i = 0; i < n; ++i) os << format_double(p.target(i)) << ',';
  if (!p.value) {
    os << "nan,0";
    for (int k = 0; k < m_max * (n + 1); ++k) os << ',';
    return os.str();
  }
  const Decomposition& d = p.value->decomposition;
  os << format_double(p.value->value) << ',' << d.size();
  for (int j = 0; j < m_max; ++j) os << ',' << (j < d.size() ? format_double(d.weights(j)) : "");
  for (int j = 0; j < m_max; ++j)
    for (int i = 0; i < n; ++i) os << ',' << (j < d.size() ? format_double(d.points[j](i)) : "");
  return os.str();
}

ojson problem_json(const Config& c) {
  ojson gens = ojson::array();
  for (const auto& g : c.problem->variety.generators()) gens.push_back(to_string(g));
  return ojson{{"ambient_dim", c.problem->variety.ambient_dim()},
               {"generators", gens},
               {"function", to_string(c.problem->f)},
               {"sense", to_string(c.problem->sense)}};
}

int write_roof_outputs(const Config& c, const std::vector<PointResult>& results, int m_max, ojson header,
                       std::ostream& out) {
  if (c.output.csv) {
    std::ostringstream os;
    os << csv_header(c.problem->variety.ambient_dim(), m_max) << '\n';
    for (const auto& p : results) os << csv_row(p, m_max) << '\n';
    write_file(*c.output.csv, os.str());
  }
  ojson items = ojson::array();
  int code = kSuccess;
  int counts[4] = {0, 0, 0, 0};
  for (const auto& p : results) {
    ojson e;
    e["target"] = to_json(p.target);
    e["status"] = p.status;
    if (p.value) {
      e["value"] = p.value->value;
      e["m"] = p.value->decomposition.size();
      e["decomposition"] = to_json(p.value->decomposition);
    }
    if (p.oracle_value) e["oracle_value"] = *p.oracle_value;
    if (p.certificate) e["certificate"] = *p.certificate;
    if (!p.error.empty()) e["error"] = p.error;
    items.push_back(e);
    if (p.status == "infeasible" || p.status == "no-solution") {
      code = std::max<int>(code, kInfeasible);
      ++counts[2];
    } else if (p.status == "certificate_failed" || p.status == "fail") {
      code = std::max<int>(code, kCertificateFailure);
      ++counts[1];
    } else {
      ++counts[0];
    }
  }
  header["results"] = items;
  if (c.output.json) write_file(*c.output.json, dump(header));
  out << results.size() << " targets: " << counts[0] << " ok, " << counts[1] << " certificate failures, "
      << counts[2] << " infeasible\n";
  return code;
}

int run_roof(const Config& c, std::ostream& out) {
  const RoofProblem& problem = *c.problem;
  OracleOptions oo;
  oo.seed = c.solver.seed;
  oo.restarts = c.solver.restarts;
  oo.tol = c.solver.tol;
  oo.m_max = effective_m_max(c);
  const auto grid = roof_grid(problem, c.targets, oo, c.solver.workers);
  std::vector<PointResult> results;
  for (const auto& g : grid) {
    PointResult p;
    p.target = g.target;
    p.value = g.value;
    if (!g.value) {
      p.status = "infeasible";
      p.error = g.error;
      results.push_back(std::move(p));
      continue;
    }
    p.status = "oracle";
    if (c.solver.certify) {
      CertifyOptions co;
      co.seed = c.solver.seed;
      co.restarts = c.solver.certify_restarts;
      co.tol = c.solver.certify_tol;
      const int m = g.value->decomposition.size();
      if (m > 1) co.warm_start = g.value->decomposition;
      auto cert = solve_certificate(problem, g.target, m, co);
      if (!cert) {
        p.status = "certificate_failed";
        p.certificate = no_solution_json(g.target, m);
      } else {
        const auto rep = verify_certificate(problem, g.target, *cert, co.tol);
        p.certificate = certificate_json(g.target, *cert, rep);
        const double gap = cert->value - g.value->value;
        const bool agrees = std::abs(gap) <= 1e-6;
        const bool improves = (problem.sense == Sense::convex ? -gap : gap) > 1e-6;
        if (rep.passed() && improves) {
          p.oracle_value = g.value->value;
          p.value->value = cert->value;
          p.value->decomposition = cert->decomposition;
        }
        p.status = rep.passed() && (agrees || improves) ? "certified" : "certificate_failed";
        if (p.status == "certified") p.value->status = RoofStatus::certified;
        if (!agrees && !improves) p.error = "certified value differs from the oracle value";
      }
    }
    results.push_back(std::move(p));
  }
  ojson header;
  header["kind"] = "roof";
  header["problem"] = problem_json(c);
  header["solver"] = ojson{{"seed", c.solver.seed},
                           {"restarts", c.solver.restarts},
                           {"m_max", oo.m_max},
                           {"tol", c.solver.tol},
                           {"certify", c.solver.certify}};
  return write_roof_outputs(c, results, oo.m_max, header, out);
}

int run_certify(const Config& c, std::ostream& out) {
  const RoofProblem& problem = *c.problem;
  const int m_max = effective_m_max(c);
  CertifyOptions co;
  co.seed = c.solver.seed;
  co.restarts = c.solver.restarts;
  co.tol = c.solver.certify_tol;
  std::vector<PointResult> results;
  for (const auto& r : c.targets) {
    PointResult p;
    p.target = r;
    std::optional<TangencyCertificate> best;
    const int lo = c.solver.m ? *c.solver.m : 1, hi = c.solver.m ? *c.solver.m : m_max;
    for (int m = lo; m <= hi; ++m) {
      auto cert = solve_certificate(problem, r, m, co);
      if (cert && (!best || better_decomposition(problem.sense, cert->value, cert->decomposition, best->value,
                                                  best->decomposition)))
        best = std::move(cert);
    }
    if (!best) {
      p.status = "no-solution";
      p.certificate = no_solution_json(r, hi);
    } else {
      const auto rep = verify_certificate(problem, r, *best, co.tol);
      p.certificate = certificate_json(r, *best, rep);
      RoofValue v;
      v.value = best->value;
      v.decomposition = best->decomposition;
      v.target = r;
      v.status = RoofStatus::certified;
      p.value = v;
      p.status = rep.passed() ? "pass" : "fail";
    }
    results.push_back(std::move(p));
  }
  ojson header;
  header["kind"] = "certify";
  header["problem"] = problem_json(c);
  header["solver"] = ojson{{"seed", c.solver.seed}, {"restarts", c.solver.restarts}, {"m_max", m_max}};
  return write_roof_outputs(c, results, m_max, header, out);
}

// ---------------------------------------------------------------------------
// Quantum

Eigen::VectorXcd complex_vector(const json& j, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of [re, im] pairs");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    const std::string w = where + "[" + std::to_string(i) + "]";
    if (e.is_number()) {
      v(i) = e.get<double>();
    } else if (e.is_array() && e.size() == 2) {
      v(i) = quantum::Complex(number(e[0], w), number(e[1], w));
    } else {
      bad(w, "expected [re, im]");
    }
  }
  return v;
}

quantum::DensityMatrix density_from(const json& j, const std::string& where) {
  const Eigen::VectorXcd flat = complex_vector(j, where);
  const int D = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
  if (D < 1 || D * D != flat.size()) bad(where, "expected D*D row-major entries");
  Eigen::MatrixXcd m(D, D);
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) m(i, k) = flat(i * D + k);
  try {
    return quantum::DensityMatrix(m);
  } catch (const PreconditionError& e) {
    bad(where, e.what());
  }
}

quantum::BasisPtr basis_for(const std::string& name, quantum::Convention conv, int D,
                            const std::optional<std::vector<int>>& dims) {
  if (name == "gellmann") return quantum::gellmann_basis(D, conv);
  if (name == "tensor") {
    if (!dims) throw ConfigError("basis 'tensor' needs subsystem dimensions");
    if ((*dims)[0] * (*dims)[1] != D) throw ConfigError("subsystem dimensions do not multiply to the state dimension");
    return quantum::tensor_product_basis(*quantum::gellmann_basis((*dims)[0], conv),
                                         *quantum::gellmann_basis((*dims)[1], conv));
  }
  throw ConfigError("unknown basis '" + name + "' (expected gellmann or tensor)");
}

quantum::EofStrategy parse_strategy(const std::string& s) {
  if (s == "unitary_search") return quantum::EofStrategy::unitary_search;
  if (s == "poincare_roof") return quantum::EofStrategy::poincare_roof;
  throw ConfigError("unknown strategy '" + s + "' (expected unitary_search or poincare_roof)");
}

struct QuantumInput {
  std::optional<Eigen::VectorXcd> state;
  std::optional<quantum::DensityMatrix> density;
  std::optional<Eigen::VectorXd> coefficients;
};

struct QuantumSettings {
  std::string operation;
  std::optional<std::vector<int>> dims;
  std::optional<int> dim;
  std::string basis = "gellmann";
  quantum::Convention convention = quantum::Convention::scaled;
  int a = 2;
  quantum::EofStrategy strategy = quantum::EofStrategy::unitary_search;
  std::uint64_t seed = 0;
  int restarts = 64;
};

ojson state_json(const Eigen::VectorXcd& v) { return complex_pairs(v); }

// One operation on one input; the returned object holds the result fields.
ojson quantum_op(const QuantumSettings& s, const QuantumInput& in) {
  using namespace quantum;
  auto density = [&]() {
    if (in.density) return *in.density;
    if (in.state) {
      if (std::abs(in.state->norm() - 1.0) > 1e-10) throw ConfigError("state is not normalized");
      return DensityMatrix::pure(*in.state);
    }
    throw ConfigError("operation '" + s.operation + "' needs a state or a density matrix");
  };
  auto dimension = [&]() {
    if (in.density) return in.density->dim();
    if (in.state) return static_cast<int>(in.state->size());
    if (s.dim) return *s.dim;
    if (s.dims) return (*s.dims)[0] * (*s.dims)[1];
    throw ConfigError("cannot infer the dimension; pass --dim");
  };
  const int D = dimension();
  if (s.dim && *s.dim != D) throw ConfigError("--dim does not match the input");
  ojson r;
  if (s.operation == "embed") {
    const auto basis = basis_for(s.basis, s.convention, D, s.dims);
    r["convention"] = to_string(s.convention);
    r["coefficients"] = to_json(embed(density(), basis).c);
  } else if (s.operation == "purity") {
    const auto basis = basis_for(s.basis, s.convention, D, s.dims);
    CoefficientVector c;
    if (in.coefficients) {
      if (in.coefficients->size() != basis->coordinate_count())
        throw ConfigError("expected " + std::to_string(basis->coordinate_count()) + " coefficients");
      c = CoefficientVector{*in.coefficients, basis};
    } else {
      c = embed(density(), basis);
    }
    const auto rep = purity_conditions(c);
    r["is_pure"] = rep.is_pure;
    r["norm_residual"] = rep.norm_residual;
    r["star_residual"] = rep.star_residual;
  } else if (s.operation == "measure") {
    if (s.a < 2) throw ConfigError("a must be at least 2");
    if (in.state) {
      if (!s.dims) throw ConfigError("measure on a pure state needs subsystem dimensions");
      r["value"] = F_a(*in.state, (*s.dims)[0], (*s.dims)[1], s.a);
    } else {
      r["value"] = f_a(density(), s.a);
    }
    r["a"] = s.a;
  } else if (s.operation == "eof") {
    if (!s.dims) throw ConfigError("eof needs subsystem dimensions");
    EofOptions o;
    o.a = s.a;
    o.strategy = s.strategy;
    o.seed = s.seed;
    o.restarts = s.restarts;
    const DensityMatrix rho = density();
    const EofResult e = entanglement_of_formation(rho, (*s.dims)[0], (*s.dims)[1], o);
    r["value"] = e.value;
    r["a"] = s.a;
    ojson states = ojson::array();
    for (const auto& v : e.ensemble.states) states.push_back(state_json(v));
    r["ensemble"] = ojson{{"weights", to_json(e.ensemble.weights)}, {"states", states}};
    r["reconstruction_error"] = (e.ensemble.density() - rho.matrix()).cwiseAbs().maxCoeff();
  } else {
    throw ConfigError("unknown quantum operation '" + s.operation + "' (expected embed, purity, measure or eof)");
  }
  return r;
}

std::vector<int> dims_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where, "expected [dA, dB]");
  std::vector<int> d = {static_cast<int>(integer(j[0], where)), static_cast<int>(integer(j[1], where))};
  if (d[0] < 1 || d[1] < 1) bad(where, "dimensions must be positive");
  return d;
}

int run_quantum(const Config& c, std::ostream& out) {
  const json& j = c.raw;
  QuantumSettings s;
  s.operation = text(need(j, "operation", "config"), "operation");
  if (const json* v = maybe(j, "dims")) s.dims = dims_from(*v, "dims");
  if (const json* v = maybe(j, "basis")) s.basis = text(*v, "basis");
  if (const json* v = maybe(j, "convention")) s.convention = quantum::parse_convention(text(*v, "convention"));
  if (const json* v = maybe(j, "a")) s.a = static_cast<int>(integer(*v, "a"));
  if (const json* v = maybe(j, "strategy")) s.strategy = parse_strategy(text(*v, "strategy"));
  s.seed = c.solver.seed;
  s.restarts = c.solver.restarts;

  std::vector<QuantumInput> inputs;
  if (const json* st = maybe(j, "states")) {
    if (!st->is_array()) bad("states", "expected an array");
    for (std::size_t i = 0; i < st->size(); ++i) {
      const std::string w = "states[" + std::to_string(i) + "]";
      QuantumInput in;
      if (const json* v = maybe((*st)[i], "density")) in.density = density_from(*v, w + ".density");
      if (const json* v = maybe((*st)[i], "state")) in.state = complex_vector(*v, w + ".state");
      if (const json* v = maybe((*st)[i], "coefficients")) in.coefficients = real_vector(*v, w + ".coefficients");
      if (!in.density && !in.state && !in.coefficients) bad(w, "expected 'density', 'state' or 'coefficients'");
      inputs.push_back(std::move(in));
    }
  }
  if (const json* rnd = maybe(j, "random")) {
    const int count = static_cast<int>(integer(need(*rnd, "count", "random"), "random.count"));
    const int rank = static_cast<int>(integer(need(*rnd, "rank", "random"), "random.rank"));
    int D = 0;
    if (const json* v = maybe(*rnd, "dim")) D = static_cast<int>(integer(*v, "random.dim"));
    if (!D && s.dims) D = (*s.dims)[0] * (*s.dims)[1];
    if (D < 1) bad("random", "needs 'dim' or top-level 'dims'");
    if (rank < 1 || rank > D) bad("random.rank", "must lie in 1..dim");
    std::mt19937_64 rng(c.solver.seed ^ 0x5eedc0ffeeULL);
    for (int k = 0; k < count; ++k) {
      QuantumInput in;
      in.density = quantum::random_density_matrix(D, rank, rng);
      inputs.push_back(std::move(in));
    }
  }
  if (inputs.empty()) bad("config", "no quantum inputs (give 'states' or 'random')");

  ojson items = ojson::array();
  std::ostringstream csv;
  csv << "index,value\n";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    ojson e = quantum_op(s, inputs[i]);
    if (inputs[i].density) e["density"] = complex_pairs(inputs[i].density->matrix());
    if (inputs[i].state) e["state"] = state_json(*inputs[i].state);
    csv << i << ',' << (e.contains("value") ? format_double(e["value"].get<double>()) : "") << '\n';
    items.push_back(e);
  }
  ojson doc;
  doc["kind"] = "quantum";
  doc["operation"] = s.operation;
  doc["solver"] = ojson{{"seed", s.seed}, {"restarts", s.restarts}};
  doc["results"] = items;
  if (c.output.csv) write_file(*c.output.csv, csv.str());
  if (c.output.json) write_file(*c.output.json, dump(doc));
  out << inputs.size() << " quantum inputs processed (" << s.operation << ")\n";
  return kSuccess;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << " [token: " << e.token() << "]\n";
    return kConfigError;
  } catch (const ArgumentError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const PreconditionError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DegenerateInputError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const UnsupportedScaleError& e) {
    err << "unsupported: " << e.what() << '\n';
    return kInfeasible;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run(const std::string& config_path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config c = load_config(config_path, ov);
    if (c.kind == "roof") return run_roof(c, out);
    if (c.kind == "certify") return run_certify(c, out);
    return run_quantum(c, out);
  });
}

int certify(const std::string& config_path, const std::string& certificate_path, const Overrides& ov,
            std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config c = load_config(config_path, ov);
    if (!c.problem) throw ConfigError("certify needs a roof or certify config");
    const int n = c.problem->variety.ambient_dim();
    const json doc = load_json(certificate_path, "certificate");
    std::vector<json> certs;
    if (const json* list = maybe(doc, "results")) {
      for (const auto& e : *list) certs.push_back(e.contains("certificate") ? e["certificate"] : e);
    } else if (const json* list2 = maybe(doc, "certificates")) {
      for (const auto& e : *list2) certs.push_back(e);
    } else {
      certs.push_back(doc);
    }
    if (certs.empty()) throw ConfigError("certificate file holds no certificates");
    const double tol = ov.tol ? *ov.tol : c.solver.certify_tol;
    int code = kSuccess;
    for (std::size_t i = 0; i < certs.size(); ++i) {
      const json& cj = certs[i];
      const std::string label = "certificate " + std::to_string(i);
      if (cj.is_null() || (cj.contains("status") && cj["status"] == "no-solution") || !cj.contains("decomposition")) {
        out << label << ": no solution\n";
        code = std::max<int>(code, kInfeasible);
        continue;
      }
      const Eigen::VectorXd r = real_vector(need(cj, "target", label), label + ".target", n);
      const TangencyCertificate cert = certificate_from_json(cj, n);
      const CertificateReport rep = verify_certificate(*c.problem, r, cert, tol);
      out << label << ": " << (rep.passed() ? "PASS" : "FAIL") << " value " << format_double(rep.value) << '\n';
      for (const auto& g : rep.groups)
        out << "  " << g.name << " residual " << format_double(g.residual) << " tol " << format_double(g.tolerance)
            << (g.pass ? " pass" : " FAIL") << '\n';
      if (!rep.passed()) code = std::max<int>(code, kCertificateFailure);
    }
    return code;
  });
}

std::vector<Eigen::VectorXd> emit_graph_data(const RoofProblem& problem, int resolution) {
  if (resolution < 1) throw ArgumentError("emit_graph_data: resolution must be positive");
  const Variety& V = problem.variety;
  const int n = V.ambient_dim();
  std::mt19937_64 rng(0x9a9a);
  const auto samples = sample_points(V, 4 * n + 16, rng, Eigen::VectorXd::Zero(n), 2.0);
  const int dim = V.expected_dim() ? *V.expected_dim() : dimension_estimate(V, samples);
  if (dim != 1 && dim != 2)
    throw UnsupportedScaleError("emit_graph_data: V has dimension " + std::to_string(dim) + "; only 1 or 2 is supported");
  Eigen::VectorXd center = Eigen::VectorXd::Zero(n);
  for (const auto& x : samples) center += x;
  center /= static_cast<double>(samples.size());
  Eigen::MatrixXd X(samples.size(), n);
  double radius = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    X.row(i) = (samples[i] - center).transpose();
    radius = std::max(radius, (samples[i] - center).norm());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullV);
  const Eigen::MatrixXd U = svd.matrixV();
  const int axes = std::min(n, dim + 1);
  std::vector<Eigen::VectorXd> out;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < resolution; ++k) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
    if (dim == 1 || axes < 3) {
      const double t = 2 * M_PI * k / resolution;
      dir += std::cos(t) * U.col(0);
      if (axes > 1) dir += std::sin(t) * U.col(1);
    } else {
      const double z = 1.0 - 2.0 * (k + 0.5) / resolution, rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      dir += rho * std::cos(golden * k) * U.col(0) + rho * std::sin(golden * k) * U.col(1) + z * U.col(2);
    }
    std::optional<Eigen::VectorXd> x;
    for (double s : {1.0, 0.5, 1.5, 0.25})
      if ((x = project_to_variety(V, (center + s * radius * dir).eval(), 1e-12))) break;
    if (!x) throw InfeasibleError("emit_graph_data: projection onto V failed for sample " + std::to_string(k));
    out.push_back(lift(problem, *x));
  }
  return out;
}

int graph(const std::string& config_path, std::optional<int> resolution, const Overrides& ov, std::ostream& out,
          std::ostream& err) {
  return guarded(err, [&] {
    const Config c = load_config(config_path, ov);
    if (!c.problem) throw ConfigError("graph needs a roof or certify config");
    const int res = resolution ? *resolution : c.output.graph_resolution;
    const auto pts = emit_graph_data(*c.problem, res);
    std::ostringstream os;
    const int n = c.problem->variety.ambient_dim();
    for (int i = 1; i <= n; ++i) os << 'x' << i << ',';
    os << "z\n";
    for (const auto& y : pts) {
      for (int i = 0; i < y.size(); ++i) os << (i ? "," : "") << format_double(y(i));
      os << '\n';
    }
    if (c.output.graph_csv) {
      write_file(*c.output.graph_csv, os.str());
      out << pts.size() << " graph samples written to " << c.output.graph_csv->string() << '\n';
    } else {
      out << os.str();
    }
    return kSuccess;
  });
}

int quantum(const QuantumRequest& req, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    QuantumSettings s;
    s.operation = req.operation;
    s.dim = req.dim;
    if (req.dims) {
      if (req.dims->size() != 2 || (*req.dims)[0] < 1 || (*req.dims)[1] < 1)
        throw ConfigError("--dims expects two positive integers");
      s.dims = req.dims;
    }
    s.basis = req.basis;
    s.convention = quantum::parse_convention(req.convention);
    s.a = req.a;
    s.strategy = parse_strategy(req.strategy);
    s.seed = ov.seed.value_or(0);
    s.restarts = ov.restarts.value_or(64);
    QuantumInput in;
    auto parse = [](const std::string& t, const std::string& what) {
      try {
        return json::parse(t);
      } catch (const json::parse_error& e) {
        throw ConfigError(what + " is not valid JSON: " + e.what());
      }
    };
    if (req.state) in.state = complex_vector(parse(*req.state, "--state"), "--state");
    if (req.density) in.density = density_from(parse(*req.density, "--density"), "--density");
    if (req.coefficients) in.coefficients = real_vector(parse(*req.coefficients, "--coefficients"), "--coefficients");
    ojson r = quantum_op(s, in);
    ojson doc{{"operation", s.operation}};
    for (auto it = r.begin(); it != r.end(); ++it) doc[it.key()] = it.value();
    if (ov.out) {
      write_file(*ov.out, dump(doc));
    } else {
      out << dump(doc);
    }
    return kSuccess;
  });
}

}  // namespace roofbench::cli
