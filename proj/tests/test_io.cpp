#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "qgraph/cli.hpp"
#include "qgraph/io.hpp"
#include "qgraph/mcmc.hpp"
#include "qgraph/simgen.hpp"
#include "qgraph/vb.hpp"

using namespace qgraph;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_csv(in);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "qgraph");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("csv parsing") {
  std::istringstream in("a, \"b\"\n1,2\n3.5,-4e-3\n 5 ,6\n");
  const Dataset d = parse_csv(in);
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.column_names == std::vector<std::string>{"a", "b"});
  CHECK(d.values(1, 1) == -4e-3);
  CHECK(d.values(2, 0) == 5.0);

  const std::string bad = error_of("x,y\n1,2\n3,4\n5,6\n7,8\n9,abc\n");
  CHECK(bad.find("'abc'") != std::string::npos);
  CHECK(bad.find("row 5") != std::string::npos);
  CHECK(bad.find("column 2") != std::string::npos);
  CHECK(error_of("x,y\n1,\n2,3\n").find("row 1") != std::string::npos);
  CHECK(error_of("x,y\n").find("fewer than 2 rows") != std::string::npos);
  CHECK(error_of("x,y\n1,2\n").find("fewer than 2 rows") != std::string::npos);
  CHECK(error_of("x,x\n1,2\n3,4\n").find("duplicate column") != std::string::npos);
  CHECK_FALSE(error_of("x,y\n1,2\n3\n").empty());
  CHECK_THROWS(load_csv("/nonexistent/data.csv"));

  // 17 significant digits make the round trip exact.
  Eigen::MatrixXd v(2, 2);
  v << 0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789;
  std::ostringstream out;
  write_csv(make_dataset(v, {"p", "q"}), out);
  std::istringstream back(out.str());
  CHECK(parse_csv(back).values == v);
}

TEST_CASE("graph files") {
  Graph g = Graph::empty(4, {"a", "b", "c", "d"});
  g.add_edge(0, 1);
  g.add_edge(2, 3);
  g.signs[{0, 1}] = EdgeSign::positive;
  g.signs[{2, 3}] = EdgeSign::negative;

  std::ostringstream adj;
  write_adjacency(g, adj);
  CHECK(adj.str() == "a,b,c,d\n0,1,0,0\n1,0,0,0\n0,0,0,1\n0,0,1,0\n");
  std::istringstream adj_in(adj.str());
  const Graph back = read_adjacency(adj_in);
  CHECK(back.adjacency == g.adjacency);
  CHECK(back.node_names == g.node_names);

  std::istringstream asym("a,b\n0,1\n0,0\n");
  CHECK_THROWS_AS(read_adjacency(asym), std::invalid_argument);
  std::istringstream loop("a,b\n1,0\n0,0\n");
  CHECK_THROWS_AS(read_adjacency(loop), std::invalid_argument);
  std::istringstream two("a,b\n0,2\n2,0\n");
  CHECK_THROWS_AS(read_adjacency(two), std::invalid_argument);
  std::istringstream wide("a,b,c\n0,1,0\n1,0,0\n");
  CHECK_THROWS_AS(read_adjacency(wide), std::invalid_argument);

  std::ostringstream dot;
  write_dot(g, dot);
  CHECK(dot.str() ==
        "graph qgraph {\n  \"a\" -- \"b\" [sign=\"positive\"];\n  \"c\" -- \"d\" [sign=\"negative\"];\n}\n");

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
  q(1, 0) = 0.75;  // b in a's fit
  q(0, 1) = 0.25;
  std::ostringstream tsv;
  write_edges_tsv(g, q, tsv);
  std::istringstream lines(tsv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "node_i\tnode_j\tsign\tincl_prob_ij\tincl_prob_ji");
  std::getline(lines, line);
  CHECK(line == "a\tb\tpositive\t0.75\t0.25");

  std::ostringstream el;
  write_edge_list(g, el);
  std::istringstream el_in(el.str());
  const Graph from_list = read_edge_list(el_in, g.node_names);
  CHECK(from_list.adjacency == g.adjacency);
  std::istringstream unknown("node_i\tnode_j\na\tz\n");
  CHECK_THROWS(read_edge_list(unknown, g.node_names));
}

TEST_CASE("json round trips are lossless") {
  const Dataset d = standardize(gen_example1(40, 2).dataset);
  const NodeProblem prob = build_node_problem(d, 3);
  const QuantileGrid grid({0.3, 0.7});

  McmcState s = initial_mcmc_state(prob, grid, PriorConfig{});
  Rng rng = make_stream(2);
  for (int k = 0; k < 5; ++k) gibbs_sweep(s, prob, grid, PriorConfig{}, rng, McmcConfig{});
  const McmcState s2 = mcmc_state_from_json(ordered_json::parse(to_json(s).dump()));
  CHECK(s2.beta == s.beta);
  CHECK(s2.v == s.v);
  CHECK(s2.indicators == s.indicators);
  CHECK(s2.pi == s.pi);
  CHECK(s2.t == s.t);

  VariationalState q = initial_vb_state(prob, grid, PriorConfig{});
  for (int k = 0; k < 4; ++k) vb_sweep(q, prob, grid, PriorConfig{});
  const VariationalState q2 = vb_state_from_json(ordered_json::parse(to_json(q).dump()));
  CHECK(q2.beta_mean == q.beta_mean);
  CHECK(q2.beta_cov[1] == q.beta_cov[1]);
  CHECK(q2.incl_prob == q.incl_prob);
  CHECK(q2.v_mean_inverse == q.v_mean_inverse);
  CHECK(q2.expected_t == q.expected_t);

  McmcConfig cfg;
  cfg.n_iterations = 200;
  cfg.burn_in = 50;
  const NeighborhoodPosterior post = run_chain(prob, grid, PriorConfig{}, cfg);
  const NeighborhoodPosterior p2 = posterior_from_json(ordered_json::parse(to_json(post).dump()));
  CHECK(p2.coef_mean == post.coef_mean);
  CHECK(p2.coef_lower == post.coef_lower);
  CHECK(p2.incl_prob == post.incl_prob);
  CHECK(p2.predictor_map == post.predictor_map);
  CHECK(p2.engine == EngineKind::mcmc);

  ordered_json ragged = to_json(s);
  ragged["beta"][1].push_back(0.0);
  CHECK_THROWS(mcmc_state_from_json(ragged));
}

TEST_CASE("command line") {
  TempDir tmp("qgraph_cli_test");

  SUBCASE("simulate writes data and truth") {
    CHECK(run({"simulate", "example1", "--seed", "3", "-o", tmp / "e1"}) == 0);
    CHECK(count_lines(tmp.path / "e1" / "data.csv") == 201);
    CHECK(count_lines(tmp.path / "e1" / "truth_edges.tsv") == 10);
    CHECK(load_csv(tmp / "e1/data.csv").cols() == 15);
    CHECK(run({"simulate", "example2", "-n", "60", "-o", tmp / "e2"}) == 0);
    CHECK(load_csv(tmp / "e2/data.csv").cols() == 30);
    CHECK(run({"simulate", "pgtn", "-o", tmp / "p"}) == 0);
    const Dataset p = load_csv(tmp / "p/data.csv");
    CHECK(p.cols() == 120);
    CHECK(p.rows() == 100);
    CHECK(run({"simulate", "example9", "-o", tmp / "x"}) == 1);
  }

  SUBCASE("fit, eval and diag") {
    REQUIRE(run({"simulate", "example1", "-n", "80", "--seed", "4", "-o", tmp / "sim"}) == 0);
    REQUIRE(run({"fit", tmp / "sim/data.csv", "-o", tmp / "fit"}) == 0);
    for (const char* f : {"adjacency.csv", "edges.tsv", "graph.dot", "report.json", "timing.json"})
      CHECK(fs::exists(tmp.path / "fit" / f));
    std::ifstream adj_in(tmp / "fit/adjacency.csv");
    const Graph fitted = read_adjacency(adj_in);
    CHECK(fitted.size() == 15);
    CHECK(count_lines(tmp.path / "fit" / "edges.tsv") == static_cast<int>(fitted.num_edges()) + 1);
    const auto report = ordered_json::parse(slurp(tmp.path / "fit" / "report.json"));
    CHECK(report["engine"] == "vb");
    CHECK(report["nodes"].size() == 15);
    CHECK_FALSE(report.contains("wall_seconds"));
    CHECK(ordered_json::parse(slurp(tmp.path / "fit" / "timing.json")).contains("jobs"));

    REQUIRE(run({"fit", tmp / "sim/data.csv", "--threshold", "1.0", "-o", tmp / "none"}) == 0);
    CHECK(count_lines(tmp.path / "none" / "edges.tsv") == 1);

    // Same settings from a config file.
    {
      std::ofstream cfg(tmp / "fit.ini");
      cfg << "[fit]\nthreshold = 1.0\ntaus = [0.25, 0.75]\n";
    }
    REQUIRE(run({"fit", tmp / "sim/data.csv", "--config", tmp / "fit.ini", "-o", tmp / "cfg"}) == 0);
    CHECK(count_lines(tmp.path / "cfg" / "edges.tsv") == 1);
    const auto cfg_report = ordered_json::parse(slurp(tmp.path / "cfg" / "report.json"));
    CHECK(cfg_report["taus"] == ordered_json::array({0.25, 0.75}));
    REQUIRE(run({"fit", tmp / "sim/data.csv", "--config", tmp / "fit.ini", "--threshold", "0.5", "-o",
                 tmp / "cfg2"}) == 0);
    CHECK(slurp(tmp.path / "cfg2" / "adjacency.csv") != slurp(tmp.path / "none" / "adjacency.csv"));

    REQUIRE(run({"eval", tmp / "fit/adjacency.csv", tmp / "sim/truth_edges.tsv", "--partition", "example1",
                 "-o", tmp / "ev"}) == 0);
    const auto metrics = ordered_json::parse(slurp(tmp.path / "ev" / "metrics.json"));
    CHECK(metrics["fdr_count"].get<int>() + metrics["true_positives"].get<int>() ==
          metrics["fitted_edges"].get<int>());

    // The truth scored against itself, with an explicit partition.
    std::ifstream truth_in(tmp / "sim/truth_edges.tsv");
    const Graph truth = read_edge_list(truth_in, fitted.node_names);
    {
      std::ofstream out(tmp / "truth.csv");
      write_adjacency(truth, out);
    }
    REQUIRE(run({"eval", tmp / "truth.csv", tmp / "truth.csv", "--g1", "1,2,3,4,5,6,7,8,9,10", "--g2",
                 "11,12", "-o", tmp / "self"}) == 0);
    const auto self = ordered_json::parse(slurp(tmp.path / "self" / "metrics.json"));
    CHECK(self["fdr_count"] == 0);
    CHECK(self["e1"] == 0);
    CHECK(self["e3"] == 0);
    Graph connector = truth;
    connector.add_edge(0, 11);
    {
      std::ofstream out(tmp / "connector.csv");
      write_adjacency(connector, out);
    }
    REQUIRE(run({"eval", tmp / "connector.csv", tmp / "truth.csv", "--g1", "1,2,3,4,5,6,7,8,9,10", "--g2",
                 "11,12", "-o", tmp / "conn"}) == 0);
    CHECK(ordered_json::parse(slurp(tmp.path / "conn" / "metrics.json"))["e3"] == 1);

    REQUIRE(run({"diag", tmp / "sim/data.csv", tmp / "fit/report.json", "-o", tmp / "dg"}) == 0);
    CHECK(count_lines(tmp.path / "dg" / "residuals.csv") == 15 * 3 + 1);
  }

  SUBCASE("bad input is reported, not thrown") {
    {
      std::ofstream out(tmp / "bad.csv");
      out << "a,b\n1,2\n3,x\n";
    }
    CHECK(run({"fit", tmp / "bad.csv", "-o", tmp / "o"}) == 1);
    CHECK(run({"fit", tmp / "missing.csv", "-o", tmp / "o"}) == 1);
    CHECK(run({"fit", tmp / "bad.csv", "--engine", "gibbs"}) != 0);
    CHECK(run({}) != 0);
  }
}

TEST_CASE("run configuration") {
  RunConfig cfg;
  cfg.input = "x.csv";
  CHECK_NOTHROW(cfg.validate());
  const ordered_json snap = cfg.snapshot();
  CHECK(snap["engine"] == "vb");
  CHECK_FALSE(snap.contains("jobs"));
  CHECK_FALSE(snap.contains("input"));
  cfg.threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.threshold = 0.5;
  cfg.taus = {0.7, 0.3};
  CHECK_THROWS(cfg.validate());
  cfg.taus = {0.5};
  cfg.jobs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
