#include "qgraph/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

namespace qgraph {

namespace {

constexpr double kAr = 0.7;

// n x 10 rows ~ MVN(0, r_i Sigma), Sigma_kl = 0.7^|k-l|, 1/r_i ~ Gamma(1, 1).
Eigen::MatrixXd scale_mixture_ar_block(int n, Rng& rng) {
  constexpr int q = 10;
  Eigen::MatrixXd sigma(q, q);
  for (int k = 0; k < q; ++k)
    for (int l = 0; l < q; ++l) sigma(k, l) = std::pow(kAr, std::abs(k - l));
  const Eigen::MatrixXd chol = sigma.llt().matrixL();
  Eigen::MatrixXd out(n, q);
  Eigen::VectorXd z(q);
  for (int i = 0; i < n; ++i) {
    const double r = 1.0 / draw::gamma(rng, 1.0, 1.0);
    for (int k = 0; k < q; ++k) z(k) = draw::normal(rng);
    out.row(i) = (std::sqrt(r) * (chol * z)).transpose();
  }
  return out;
}

// Phi^{-1}(exp(x) / (1 + exp(x))) without rounding the probability to 0 or 1.
double probit_of_logistic(double x) {
  static const boost::math::normal_distribution<double> std_normal;
  constexpr double tiny = std::numeric_limits<double>::min();
  if (x <= 0.0) {
    const double p = std::max(1.0 / (1.0 + std::exp(-x)), tiny);
    return boost::math::quantile(std_normal, p);
  }
  const double q = std::max(1.0 / (1.0 + std::exp(x)), tiny);
  return boost::math::quantile(boost::math::complement(std_normal, q));
}

std::vector<std::string> names_for(int p) { return default_column_names(p); }

}  // namespace

SimOutput gen_example1(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("example1 needs n >= 2");
  Rng rng = make_stream(seed, hash_name("example1"));
  constexpr int p = 15;
  Eigen::MatrixXd x(n, p);
  x.leftCols(10) = scale_mixture_ar_block(n, rng);
  for (int i = 0; i < n; ++i)
    for (int k = 10; k < p; ++k) x(i, k) = draw::normal(rng);

  std::vector<Edge> edges;
  for (int k = 0; k < 9; ++k) edges.emplace_back(k, k + 1);
  SimOutput out{make_dataset(std::move(x), names_for(p)), Graph::from_edges(p, edges, names_for(p)),
                "example1", seed, {}, {}, {}};
  for (int k = 0; k < 10; ++k) out.g1_nodes.push_back(k);
  return out;
}

SimOutput gen_example2(int n, std::uint64_t seed, int extra_noise_nodes) {
  if (n < 2) throw std::invalid_argument("example2 needs n >= 2");
  if (extra_noise_nodes < 0) throw std::invalid_argument("extra_noise_nodes must be nonnegative");
  Rng rng = make_stream(seed, hash_name("example2"));
  const int p = 30 + extra_noise_nodes;
  Eigen::MatrixXd x(n, p);

  // Block 1 (columns 0..9 hold X1..X10).
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 10; ++k) x(i, k) = draw::gamma(rng, 1.0, 0.1) - 10.0;
  for (int i = 0; i < n; ++i) {
    x(i, 1) = 0.4 * x(i, 0) + draw::normal(rng);
    const double e2 = (draw::uniform(rng) < 0.5 ? 2.0 : -2.0) + draw::normal(rng);
    x(i, 5) = 1.1 * x(i, 0) + 4.0 * x(i, 3) + 1.3 * x(i, 8) + e2;
    x(i, 6) = probit_of_logistic(x(i, 1)) + draw::normal(rng);
  }

  // Block 2 (X11..X20) from the scale-mixture AR block Y1..Y10.
  const Eigen::MatrixXd y = scale_mixture_ar_block(n, rng);
  for (int i = 0; i < n; ++i) {
    const double e4 = (draw::uniform(rng) < 0.3 ? 3.0 : 1.0) * draw::normal(rng);
    const double e5 = 3.0 * draw::normal(rng);
    x(i, 10) = 3.0 * y(i, 2) + 2.0 * y(i, 4) + e4;
    x(i, 11) = 3.0 * y(i, 5) + 2.0 * y(i, 6) + e5;
    for (int j = 3; j <= 10; ++j) x(i, 9 + j) = y(i, j - 1);  // X_{10+j} = Y_j
  }

  // X21..X30 and any extra columns: independent N(0, 1).
  for (int i = 0; i < n; ++i)
    for (int k = 20; k < p; ++k) x(i, k) = draw::normal(rng);

  // One-based truth, converted below.
  const std::vector<Edge> g1 = {{1, 2}, {1, 6}, {4, 6}, {6, 9}, {2, 7}};
  std::vector<Edge> g2;
  for (int k = 13; k < 20; ++k) g2.emplace_back(k, k + 1);
  for (Edge e : {Edge{11, 13}, Edge{11, 15}, Edge{12, 16}, Edge{12, 17}}) g2.push_back(e);
  const Edge moral{13, 15};  // Y3 and Y5 share the child X11
  g2.push_back(moral);

  std::vector<Edge> edges;
  for (auto [a, b] : g1) edges.push_back(make_edge(a - 1, b - 1));
  for (auto [a, b] : g2) edges.push_back(make_edge(a - 1, b - 1));

  SimOutput out{make_dataset(std::move(x), names_for(p)), Graph::from_edges(p, edges, names_for(p)),
                extra_noise_nodes == 0 ? "example2" : "example2+noise", seed, {}, {}, {}};
  out.g1_nodes = {0, 1, 3, 5, 6, 8};
  for (int k = 10; k < 20; ++k) out.g2_nodes.push_back(k);
  out.induced_edges.push_back(make_edge(moral.first - 1, moral.second - 1));
  return out;
}

SimOutput gen_pgtn(std::uint64_t seed, int n) {
  SimOutput out = gen_example2(n, seed, 90);
  out.spec_name = "pgtn";
  return out;
}

SimOutput simulate(const std::string& spec_name, int n, std::uint64_t seed) {
  if (spec_name == "example1") return gen_example1(n, seed);
  if (spec_name == "example2") return gen_example2(n, seed);
  if (spec_name == "pgtn") return gen_pgtn(seed, n);
  throw std::invalid_argument(fmt::format("unknown simulation '{}'", spec_name));
}

Metrics evaluate(const Graph& fitted, const Graph& truth, std::span<const int> g1_nodes,
                 std::span<const int> g2_nodes, std::span<const Edge> induced_edges) {
  if (fitted.size() != truth.size())
    throw std::invalid_argument(fmt::format("fitted graph has {} nodes, truth has {}",
                                            fitted.size(), truth.size()));
  const std::set<int> g1(g1_nodes.begin(), g1_nodes.end());
  const std::set<int> g2(g2_nodes.begin(), g2_nodes.end());
  std::set<Edge> induced;
  for (auto [a, b] : induced_edges) induced.insert(make_edge(a, b));

  Metrics m;
  for (const auto& [i, j] : fitted.edges()) {
    ++m.fitted_edges;
    if (truth.has_edge(i, j)) ++m.true_positives;
    else ++m.fdr_count;
    if ((g1.count(i) && g2.count(j)) || (g2.count(i) && g1.count(j))) ++m.e3;
  }
  for (const auto& [i, j] : truth.edges()) {
    if (fitted.has_edge(i, j)) continue;
    if (g1.count(i) && g1.count(j)) ++m.e1;
    if (g2.count(i) && g2.count(j)) {
      ++m.e2;
      if (!induced.count(Edge{i, j})) ++m.e2_direct;
    }
  }
  return m;
}

Eigen::MatrixXd residual_table(const Dataset& d, const FitReport& report, const QuantileGrid& grid,
                               double threshold) {
  const auto p = d.cols();
  if (static_cast<Eigen::Index>(report.posteriors.size()) != p)
    throw std::invalid_argument(fmt::format("report has {} node fits for {} variables",
                                            report.posteriors.size(), p));
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd table(p, m);
  for (const auto& post : report.posteriors) {
    const NodeProblem prob = build_node_problem(d, post.node_index);
    if (post.coef_mean.rows() != m || post.coef_mean.cols() != prob.p())
      throw std::invalid_argument(
          fmt::format("node {} coefficients do not match the data", post.node_index));
    for (Eigen::Index l = 0; l < m; ++l) {
      Eigen::VectorXd b = post.coef_mean.row(l).transpose();
      for (Eigen::Index j = 1; j < b.size(); ++j)
        if (post.incl_prob(j - 1) <= threshold) b(j) = 0.0;
      const Eigen::VectorXd r = prob.response - prob.design * b;
      const double tau = grid.tau(static_cast<std::size_t>(l));
      double total = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) total += check_loss(r(i), tau);
      table(post.node_index, l) = total / static_cast<double>(r.size());
    }
  }
  return table;
}

double residual_diagnostic(const Dataset& d, const FitReport& report, const QuantileGrid& grid,
                           double threshold) {
  return residual_table(d, report, grid, threshold).mean();
}

}  // namespace qgraph
