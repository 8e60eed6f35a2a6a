#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "support.hpp"

#include "qgraph/graph.hpp"
#include "qgraph/simgen.hpp"

using namespace qgraph;

namespace {

double kendall_tau(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (a(i) - a(j)) * (b(i) - b(j));
      s += d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    }
  return 2.0 * s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

double kurtosis(const Eigen::VectorXd& a) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const double m2 = x.square().mean();
  return x.pow(4).mean() / (m2 * m2);
}

// Elliptical laws have Kendall's tau = 2 asin(rho) / pi whatever the radial part.
double elliptical_tau(double rho) { return 2.0 * std::asin(rho) / std::numbers::pi; }

Eigen::VectorXd ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design << Eigen::VectorXd::Ones(x.rows()), x;
  return design.colPivHouseholderQr().solve(y);
}

// Posterior stub for node k of d with the given coefficients (all quantiles)
// and every predictor included.
NeighborhoodPosterior posterior_with(const Dataset& d, int k, const Eigen::VectorXd& coef, int m) {
  const NodeProblem prob = build_node_problem(d, k);
  NeighborhoodPosterior post;
  post.node_index = k;
  post.predictor_map = prob.predictor_map;
  post.incl_prob = Eigen::VectorXd::Ones(prob.num_predictors());
  post.coef_mean = coef.transpose().replicate(m, 1);
  return post;
}

}  // namespace

TEST_CASE("example 1") {
  const SimOutput s = gen_example1(200, 1);
  CHECK(s.dataset.rows() == 200);
  CHECK(s.dataset.cols() == 15);
  CHECK_FALSE(s.dataset.standardized);
  CHECK(s.truth.num_edges() == 9);
  for (int k = 0; k < 9; ++k) CHECK(s.truth.has_edge(k, k + 1));
  CHECK(s.truth.valid());
  CHECK(s.g1_nodes.size() == 10);
  CHECK(s.dataset.column_names.front() == "X1");

  const SimOutput again = gen_example1(200, 1);
  CHECK(again.dataset.values == s.dataset.values);
  CHECK(gen_example1(200, 2).dataset.values != s.dataset.values);
  CHECK_THROWS_AS(gen_example1(1, 1), std::invalid_argument);

  const SimOutput big = gen_example1(4000, 3);
  const auto& x = big.dataset.values;
  CHECK(kendall_tau(x.col(0), x.col(1)) == doctest::Approx(elliptical_tau(0.7)).epsilon(0.05));
  CHECK(kendall_tau(x.col(2), x.col(4)) == doctest::Approx(elliptical_tau(0.49)).epsilon(0.08));
  CHECK(std::abs(kendall_tau(x.col(0), x.col(11))) <= 0.04);

  const SimOutput huge = gen_example1(100000, 4);
  const auto& h = huge.dataset.values;
  CHECK(kurtosis(h.col(0)) > 10.0);
  for (int a = 10; a < 15; ++a) {
    CHECK(kurtosis(h.col(a)) == doctest::Approx(3.0).epsilon(0.05));
    for (int b = a + 1; b < 15; ++b) CHECK(std::abs(correlation(h.col(a), h.col(b))) <= 0.02);
  }
}

TEST_CASE("example 2") {
  const SimOutput s = gen_example2(150, 5);
  CHECK(s.dataset.cols() == 30);
  CHECK(s.truth.num_edges() == 17);
  CHECK(s.g1_nodes == std::vector<int>{0, 1, 3, 5, 6, 8});
  CHECK(s.g2_nodes.size() == 10);
  CHECK(s.induced_edges == std::vector<Edge>{{12, 14}});
  int g1_edges = 0, g2_edges = 0;
  const std::set<int> g1(s.g1_nodes.begin(), s.g1_nodes.end()), g2(s.g2_nodes.begin(), s.g2_nodes.end());
  for (auto [i, j] : s.truth.edges()) {
    g1_edges += g1.count(i) && g1.count(j);
    g2_edges += g2.count(i) && g2.count(j);
  }
  CHECK(g1_edges == 5);
  CHECK(g2_edges == 12);
  CHECK(s.truth.has_edge(0, 1));
  CHECK(s.truth.has_edge(1, 6));
  CHECK(s.truth.has_edge(10, 12));

  const SimOutput big = gen_example2(100000, 6);
  const auto& x = big.dataset.values;
  CHECK(x.col(0).mean() == doctest::Approx(0.0).epsilon(0.1).scale(1.0));
  const Eigen::VectorXd b2 = ols(x.col(1), x.col(0));
  CHECK(std::abs(b2(1) - 0.4) <= 0.01);
  Eigen::MatrixXd parents(x.rows(), 3);
  parents << x.col(0), x.col(3), x.col(8);
  const Eigen::VectorXd b6 = ols(x.col(5), parents);
  CHECK(std::abs(b6(1) - 1.1) <= 0.01);
  CHECK(std::abs(b6(2) - 4.0) <= 0.01);
  CHECK(std::abs(b6(3) - 1.3) <= 0.01);
  CHECK(correlation(x.col(6), x.col(1)) > 0.3);
  for (int a = 20; a < 30; ++a)
    for (int b = a + 1; b < 30; ++b) CHECK(std::abs(correlation(x.col(a), x.col(b))) <= 0.02);

  const SimOutput p = gen_pgtn(7);
  CHECK(p.dataset.rows() == 100);
  CHECK(p.dataset.cols() == 120);
  CHECK(p.truth.num_edges() == 17);
  CHECK(p.spec_name == "pgtn");
  CHECK(simulate("example2", 50, 8).dataset.values == gen_example2(50, 8).dataset.values);
  CHECK_THROWS_AS(simulate("example3", 50, 8), std::invalid_argument);
  CHECK_THROWS_AS(gen_example2(50, 8, -1), std::invalid_argument);
}

TEST_CASE("evaluate") {
  const SimOutput s = gen_example2(20, 9);

  const Metrics empty = evaluate(Graph::empty(30), s.truth, s.g1_nodes, s.g2_nodes, s.induced_edges);
  CHECK(empty.e1 == 5);
  CHECK(empty.e2 == 12);
  CHECK(empty.e2_direct == 11);
  CHECK(empty.fdr_count == 0);
  CHECK(empty.e3 == 0);

  const Metrics exact = evaluate(s.truth, s.truth, s.g1_nodes, s.g2_nodes, s.induced_edges);
  CHECK(exact.e1 == 0);
  CHECK(exact.e2 == 0);
  CHECK(exact.fdr_count == 0);
  CHECK(exact.true_positives == 17);

  Graph connector = s.truth;
  connector.add_edge(0, 10);
  connector.add_edge(25, 26);
  const Metrics m = evaluate(connector, s.truth, s.g1_nodes, s.g2_nodes);
  CHECK(m.e3 == 1);
  CHECK(m.fdr_count == 2);

  Rng rng = make_stream(9);
  for (int rep = 0; rep < 50; ++rep) {
    Graph g = Graph::empty(30);
    for (int i = 0; i < 30; ++i)
      for (int j = i + 1; j < 30; ++j)
        if (draw::bernoulli(rng, 0.05)) g.add_edge(i, j);
    const Metrics r = evaluate(g, s.truth, s.g1_nodes, s.g2_nodes, s.induced_edges);
    CHECK(r.fdr_count + r.true_positives == r.fitted_edges);
    CHECK(r.fitted_edges == static_cast<int>(g.num_edges()));
    CHECK(r.e2_direct <= r.e2);
  }
  CHECK_THROWS_AS(evaluate(Graph::empty(29), s.truth, s.g1_nodes, s.g2_nodes), std::invalid_argument);
}

TEST_CASE("residual diagnostic") {
  Rng rng = make_stream(10);
  constexpr int n = 40;
  Eigen::MatrixXd x(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = draw::normal(rng);
    x(i, 1) = draw::normal(rng);
    x(i, 2) = x(i, 0) - 2.0 * x(i, 1);
  }
  const Dataset d = standardize(make_dataset(x));
  const QuantileGrid grid({0.3, 0.5});

  SUBCASE("exact linear relations give zero loss") {
    FitReport report;
    for (int k = 0; k < 3; ++k) {
      const NodeProblem prob = build_node_problem(d, k);
      const Eigen::VectorXd coef = prob.design.colPivHouseholderQr().solve(prob.response);
      report.posteriors.push_back(posterior_with(d, k, coef, 2));
    }
    CHECK(residual_diagnostic(d, report, grid) <= 1e-12);
  }

  SUBCASE("zero coefficients give the loss of the raw column") {
    FitReport report;
    for (int k = 0; k < 3; ++k) report.posteriors.push_back(posterior_with(d, k, Eigen::VectorXd::Zero(3), 2));
    const Eigen::MatrixXd table = residual_table(d, report, grid);
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd c = d.values.col(k);
      CHECK(table(k, 1) == doctest::Approx(c.cwiseAbs().mean() / 2.0));
      double loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) loss += check_loss(c(i), 0.3);
      CHECK(table(k, 0) == doctest::Approx(loss / n));
    }
    const double base = residual_diagnostic(d, report, grid);
    CHECK(residual_diagnostic(d, report, grid) == base);

    // Node 2 with its first parent switched on improves; below-threshold
    // coefficients are ignored.
    const NodeProblem prob = build_node_problem(d, 2);
    const Eigen::VectorXd coef = prob.design.colPivHouseholderQr().solve(prob.response);
    Eigen::VectorXd partial = Eigen::VectorXd::Zero(3);
    partial(1) = coef(1);
    report.posteriors[2] = posterior_with(d, 2, partial, 2);
    CHECK(residual_diagnostic(d, report, grid) < base);
    report.posteriors[2].incl_prob(0) = 0.5;
    CHECK(residual_diagnostic(d, report, grid) == doctest::Approx(base));
  }

  FitReport short_report;
  CHECK_THROWS_AS(residual_table(d, short_report, grid), std::invalid_argument);
}
