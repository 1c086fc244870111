#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cli.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

using namespace roofbench;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kSource = ROOFBENCH_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roofbench_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const char* kCircle = R"("variety": {"ambient_dim": 2, "generators": ["1*x1^2 + 1*x2^2 - 1"], "expected_dim": 1},
  "function": "1*x1^3")";

std::string roof_config(const std::string& targets, const std::string& extra = "") {
  return std::string("{\"kind\": \"roof\", ") + kCircle + ", \"targets\": " + targets +
         ", \"solver\": {\"seed\": 4, \"restarts\": 16" + extra + "}, \"output\": {\"json\": \"out.json\", \"csv\": \"out.csv\"}}";
}

struct Run {
  int code;
  std::string out, err;
};

Run run_config(const fs::path& cfg, const fs::path& dir) {
  std::ostringstream out, err;
  cli::Overrides ov;
  ov.out = dir.string();
  const int code = cli::run(cfg.string(), ov, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("malformed polynomial is a config error naming the token") {
  const fs::path dir = scratch("malformed");
  const Run r = run_config(kSource / "tests/data/malformed_polynomial.cfg", dir);
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("x3") != std::string::npos);
  CHECK(r.err.find("variety.generators[0]") != std::string::npos);
}

TEST_CASE("config errors") {
  const fs::path dir = scratch("errors");
  CHECK(run_config(write(dir / "a.cfg", "{not json"), dir).code == cli::kConfigError);
  CHECK(run_config(dir / "missing.cfg", dir).code == cli::kConfigError);
  const std::string unseeded = std::string("{\"kind\": \"roof\", ") + kCircle +
                               ", \"targets\": {\"points\": [[0, 0]]}, \"solver\": {\"restarts\": 4}}";
  const Run r = run_config(write(dir / "b.cfg", unseeded), dir);
  CHECK(r.code == cli::kConfigError);
  CHECK(r.err.find("seed") != std::string::npos);
  CHECK(run_config(write(dir / "c.cfg", R"({"kind": "upper"})"), dir).code == cli::kConfigError);
  CHECK(run_config(write(dir / "d.cfg", roof_config(R"({"points": [[0, 0, 0]]})")), dir).code == cli::kConfigError);
  CHECK(run_config(write(dir / "e.cfg", roof_config(R"({"points": [[0, 0]]})", ", \"restarts\": 0")), dir).code ==
        cli::kConfigError);

  std::ostringstream out, err;
  cli::Overrides ov;
  ov.seed = 1;
  ov.out = dir.string();
  std::string cfg = roof_config(R"({"points": [[0, 0]]})");
  cfg.replace(cfg.find("\"seed\": 4, "), 11, "");
  CHECK(cli::run(write(dir / "f.cfg", cfg).string(), ov, out, err) == cli::kSuccess);
}

TEST_CASE("roof run writes JSON and CSV") {
  const fs::path dir = scratch("roof");
  const Run r = run_config(write(dir / "r.cfg", roof_config(R"({"points": [[0, 0], [0.6, 0.8]]})", ", \"certify\": true")), dir);
  REQUIRE(r.code == cli::kSuccess);
  const json j = json::parse(slurp(dir / "out.json"));
  REQUIRE(j["results"].size() == 2);
  CHECK(j["results"][0]["status"] == "certified");
  CHECK(std::abs(j["results"][0]["value"].get<double>() + 0.25) <= 1e-6);
  CHECK(j["results"][1]["m"] == 1);
  CHECK(std::abs(j["results"][1]["value"].get<double>() - 0.216) <= 1e-9);
  std::istringstream csv(slurp(dir / "out.csv"));
  std::string header, row;
  std::getline(csv, header);
  CHECK(header == "r1,r2,value,m,p1,p2,p3,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2");
  std::getline(csv, row);
  CHECK(row.rfind("0,0,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 12);
}

TEST_CASE("grid targets follow the region filter") {
  const fs::path dir = scratch("grid");
  const Run r = run_config(
      write(dir / "g.cfg", roof_config(R"({"grid": {"lower": [-1, -1], "upper": [1, 1], "resolution": 5,
                                           "region": {"center": [0, 0], "radius": 1}}})")),
      dir);
  REQUIRE(r.code == cli::kSuccess);
  const json j = json::parse(slurp(dir / "out.json"));
  // 5x5 lattice on [-1, 1]^2 inside the closed unit disk.
  int inside = 0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) inside += std::hypot(-1 + 0.5 * a, -1 + 0.5 * b) <= 1.0;
  CHECK(static_cast<int>(j["results"].size()) == inside);
  CHECK(j["results"][0]["target"][0] == -1.0);
}

TEST_CASE("infeasible targets exit 2") {
  const fs::path dir = scratch("infeasible");
  const Run r = run_config(write(dir / "i.cfg", roof_config(R"({"points": [[0, 0], [1.5, 0]]})")), dir);
  CHECK(r.code == cli::kInfeasible);
  const json j = json::parse(slurp(dir / "out.json"));
  CHECK(j["results"][1]["status"] == "infeasible");
  CHECK(j["results"][0]["status"] == "oracle");
}

TEST_CASE("certify subcommand") {
  const fs::path dir = scratch("certify");
  const fs::path cfg = kSource / "configs/circle_x3_certify.cfg";
  const fs::path good = kSource / "configs/tritangent_certificate.json";
  std::ostringstream out, err;
  CHECK(cli::certify(cfg.string(), good.string(), {}, out, err) == cli::kSuccess);
  CHECK(out.str().find("PASS") != std::string::npos);

  json bad = json::parse(slurp(good));
  bad["hyperplane"]["offset"] = 0.25;
  std::ostringstream o2, e2;
  CHECK(cli::certify(cfg.string(), write(dir / "bad.json", bad.dump()).string(), {}, o2, e2) ==
        cli::kCertificateFailure);

  std::ostringstream o3, e3;
  CHECK(cli::certify(cfg.string(), write(dir / "none.json", R"({"status": "no-solution", "target": [2, 0]})").string(),
                     {}, o3, e3) == cli::kInfeasible);

  std::ostringstream o4, e4;
  CHECK(cli::certify(cfg.string(), write(dir / "short.json", R"({"target": [0, 0], "value": 0})").string(), {}, o4,
                     e4) == cli::kInfeasible);
}

TEST_CASE("certify run round-trips through the certify subcommand") {
  const fs::path dir = scratch("certify_run");
  const fs::path cfg = kSource / "configs/circle_x3_certify.cfg";
  const Run r = run_config(cfg, dir);
  REQUIRE(r.code == cli::kSuccess);
  std::ostringstream out, err;
  CHECK(cli::certify(cfg.string(), (dir / "circle_x3_certificates.json").string(), {}, out, err) == cli::kSuccess);

  std::string text = std::string("{\"kind\": \"certify\", ") + kCircle +
                     ", \"targets\": {\"points\": [[1.5, 0]]}, \"solver\": {\"seed\": 2, \"restarts\": 4}," +
                     " \"output\": {\"json\": \"n.json\"}}";
  const Run none = run_config(write(dir / "n.cfg", text), dir);
  CHECK(none.code == cli::kInfeasible);
  const json j = json::parse(slurp(dir / "n.json"));
  CHECK(j["results"][0]["status"] == "no-solution");
}

TEST_CASE("graph samples lie on the graph of f") {
  const RoofProblem p = fixtures::circle_x3();
  const auto pts = cli::emit_graph_data(p, 360);
  REQUIRE(pts.size() == 360);
  double lo = 1, hi = -1;
  for (const auto& y : pts) {
    REQUIRE(y.size() == 3);
    CHECK(std::abs(y.head<2>().norm() - 1.0) <= 1e-10);
    CHECK(std::abs(y(2) - std::pow(y(0), 3)) <= 1e-15);
    lo = std::min(lo, y(2));
    hi = std::max(hi, y(2));
  }
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0);
  CHECK(lo < -0.99);
  CHECK(hi > 0.99);

  for (int res : {1, 7, 50}) CHECK(cli::emit_graph_data(p, res).size() == static_cast<std::size_t>(res));
  CHECK_THROWS_AS(cli::emit_graph_data(p, 0), ArgumentError);

  const RoofProblem flat(fixtures::circle(), Poly(2), Sense::convex);
  for (const auto& y : cli::emit_graph_data(flat, 40)) CHECK(y(2) == 0.0);

  const Variety sphere(3, {parse_polynomial("1*x1^2 + 1*x2^2 + 1*x3^2 - 1", 3)}, 2);
  const auto s = cli::emit_graph_data(RoofProblem(sphere, parse_polynomial("1*x3^1", 3), Sense::convex), 200);
  REQUIRE(s.size() == 200);
  for (const auto& y : s) {
    CHECK(std::abs(y.head<3>().norm() - 1.0) <= 1e-10);
    CHECK(y(3) == y(2));
  }

  const Variety s3(4, {parse_polynomial("1*x1^2 + 1*x2^2 + 1*x3^2 + 1*x4^2 - 1", 4)}, 3);
  CHECK_THROWS_AS(cli::emit_graph_data(RoofProblem(s3, Poly(4), Sense::convex), 10), UnsupportedScaleError);
}

TEST_CASE("graph subcommand writes exactly the requested samples") {
  const fs::path dir = scratch("graph");
  std::ostringstream out, err;
  cli::Overrides ov;
  ov.out = dir.string();
  REQUIRE(cli::graph((kSource / "configs/circle_x3.cfg").string(), 90, ov, out, err) == cli::kSuccess);
  std::istringstream csv(slurp(dir / "circle_x3_graph.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x1,x2,z");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 90);
}

TEST_CASE("runs are byte-identical") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const char* name : {"configs/circle_x3_concave.cfg", "configs/circle_x3_certify.cfg"}) {
    REQUIRE(run_config(kSource / name, a).code == cli::kSuccess);
    REQUIRE(run_config(kSource / name, b).code == cli::kSuccess);
  }
  for (const char* f : {"circle_x3_concave.json", "circle_x3_concave.csv", "circle_x3_certificates.json"}) {
    CHECK(!slurp(a / f).empty());
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("quantum requests") {
  const std::string bell = R"([[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]])";
  cli::QuantumRequest req;
  req.operation = "measure";
  req.dims = std::vector<int>{2, 2};
  req.state = bell;
  std::ostringstream out, err;
  REQUIRE(cli::quantum(req, {}, out, err) == cli::kSuccess);
  CHECK(std::abs(json::parse(out.str())["value"].get<double>() - 1.0) <= 1e-12);

  cli::QuantumRequest emb;
  emb.operation = "embed";
  emb.density = R"([[1,0],[0,0],[0,0],[0,0]])";
  std::ostringstream o2, e2;
  REQUIRE(cli::quantum(emb, {}, o2, e2) == cli::kSuccess);
  const json c = json::parse(o2.str())["coefficients"];
  CHECK(std::abs(c[2].get<double>() - std::sqrt(2.0)) <= 1e-12);

  cli::QuantumRequest pur;
  pur.operation = "purity";
  pur.dim = 2;
  pur.coefficients = "[0, 0, 1.4142135623730951]";
  std::ostringstream o3, e3;
  REQUIRE(cli::quantum(pur, {}, o3, e3) == cli::kSuccess);
  CHECK(json::parse(o3.str())["is_pure"] == true);

  cli::QuantumRequest eof;
  eof.operation = "eof";
  eof.dims = std::vector<int>{2, 2};
  eof.density = R"([[0.5,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0.5,0]])";
  std::ostringstream o4, e4;
  cli::Overrides ov;
  ov.seed = 3;
  ov.restarts = 8;
  REQUIRE(cli::quantum(eof, ov, o4, e4) == cli::kSuccess);
  CHECK(std::abs(json::parse(o4.str())["value"].get<double>() - 1.0) <= 1e-8);

  cli::QuantumRequest bad = emb;
  bad.density = R"([[1,0],[0,0],[0,0],[1,0]])";
  std::ostringstream o5, e5;
  CHECK(cli::quantum(bad, {}, o5, e5) == cli::kConfigError);
  cli::QuantumRequest nodims = eof;
  nodims.dims.reset();
  std::ostringstream o6, e6;
  CHECK(cli::quantum(nodims, {}, o6, e6) == cli::kConfigError);
}

TEST_CASE("quantum config run") {
  const fs::path dir = scratch("quantum");
  const Run r = run_config(kSource / "configs/bell_eof.cfg", dir);
  REQUIRE(r.code == cli::kSuccess);
  const json j = json::parse(slurp(dir / "bell_eof.json"));
  REQUIRE(j["results"].size() == 5);
  CHECK(std::abs(j["results"][0]["value"].get<double>() - 1.0) <= 1e-8);
  for (const auto& e : j["results"]) CHECK(e["reconstruction_error"].get<double>() <= 1e-9);
}

TEST_CASE("format_double keeps 17 significant digits") {
  CHECK(cli::format_double(0.1) == "0.10000000000000001");
  CHECK(cli::format_double(-0.25) == "-0.25");
  CHECK(std::stod(cli::format_double(M_PI)) == M_PI);
}
