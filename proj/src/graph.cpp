#include "qgraph/graph.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace qgraph {

const char* to_string(EdgeSign s) {
  switch (s) {
    case EdgeSign::positive: return "positive";
    case EdgeSign::negative: return "negative";
    default: return "inconclusive";
  }
}

EdgeSign edge_sign_from_string(const std::string& s) {
  if (s == "positive") return EdgeSign::positive;
  if (s == "negative") return EdgeSign::negative;
  if (s == "inconclusive") return EdgeSign::inconclusive;
  throw std::invalid_argument(fmt::format("unknown edge sign '{}'", s));
}

Graph Graph::empty(int p, std::vector<std::string> names) {
  Graph g;
  g.adjacency = Eigen::MatrixXi::Zero(p, p);
  g.node_names = names.empty() ? default_column_names(p) : std::move(names);
  if (static_cast<int>(g.node_names.size()) != p)
    throw std::invalid_argument("node name count does not match graph size");
  return g;
}

Graph Graph::from_edges(int p, std::span<const Edge> edges, std::vector<std::string> names) {
  Graph g = empty(p, std::move(names));
  for (auto [i, j] : edges) g.add_edge(i, j);
  return g;
}

void Graph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("self-loops are not allowed");
  if (i < 0 || j < 0 || i >= size() || j >= size())
    throw std::out_of_range(fmt::format("edge ({}, {}) outside a {}-node graph", i, j, size()));
  adjacency(i, j) = adjacency(j, i) = 1;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      if (adjacency(i, j)) out.emplace_back(i, j);
  return out;
}

std::size_t Graph::num_edges() const { return edges().size(); }

bool Graph::valid() const {
  if (adjacency.rows() != adjacency.cols()) return false;
  if (adjacency != adjacency.transpose()) return false;
  if (adjacency.diagonal().any()) return false;
  if (((adjacency.array() != 0) && (adjacency.array() != 1)).any()) return false;
  if (!signs.empty()) {
    if (signs.size() != num_edges()) return false;
    for (const auto& [e, s] : signs)
      if (!has_edge(e.first, e.second)) return false;
  }
  return true;
}

NodeFits fit_all_nodes(const Dataset& d, const QuantileGrid& grid, const PriorConfig& priors,
                       const FitOptions& opts) {
  if (!d.standardized) throw std::invalid_argument("fit_all_nodes requires a standardized dataset");
  const int p = static_cast<int>(d.cols());
  std::vector<std::optional<NeighborhoodPosterior>> slots(static_cast<std::size_t>(p));
  std::vector<std::optional<std::string>> errors(static_cast<std::size_t>(p));

  auto fit_one = [&](int k) {
    try {
      const NodeProblem problem = build_node_problem(d, k);
      const std::string& name = d.column_names[static_cast<std::size_t>(k)];
      const std::uint64_t node_seed = mix64(opts.seed) ^ hash_name(name);
      std::ofstream trace;
      if (!opts.trace_dir.empty()) {
        trace.open(opts.trace_dir + "/trace_" + name + ".csv");
        if (!trace) throw std::runtime_error("cannot open trace file for " + name);
      }
      std::ostream* trace_ptr = trace.is_open() ? &trace : nullptr;
      if (opts.engine == EngineKind::mcmc) {
        McmcConfig cfg = opts.mcmc;
        cfg.seed = node_seed;
        cfg.trace = trace_ptr;
        slots[static_cast<std::size_t>(k)] = run_chain(problem, grid, priors, cfg);
      } else {
        VbConfig cfg = opts.vb;
        cfg.seed = node_seed;
        cfg.trace = trace_ptr;
        slots[static_cast<std::size_t>(k)] = run_vb(problem, grid, priors, cfg);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  };

  const int jobs = std::clamp(opts.jobs, 1, std::max(p, 1));
  if (jobs == 1) {
    for (int k = 0; k < p; ++k) fit_one(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (int k = next++; k < p; k = next++) fit_one(k);
      });
    for (auto& t : pool) t.join();
  }

  NodeFits out;
  for (int k = 0; k < p; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (slots[ks]) out.posteriors.push_back(std::move(*slots[ks]));
    if (errors[ks]) out.failures.push_back({k, *errors[ks]});
  }
  return out;
}

namespace {

// Posteriors indexed by node, validated to cover 0..P-1 with matching maps.
std::vector<const NeighborhoodPosterior*> index_posteriors(
    std::span<const NeighborhoodPosterior> posteriors) {
  const int p = static_cast<int>(posteriors.size());
  std::vector<const NeighborhoodPosterior*> by_node(static_cast<std::size_t>(p), nullptr);
  for (const auto& post : posteriors) {
    const int k = post.node_index;
    if (k < 0 || k >= p || by_node[static_cast<std::size_t>(k)])
      throw std::invalid_argument(fmt::format("posterior node indices do not cover 0..{}", p - 1));
    if (static_cast<int>(post.predictor_map.size()) != p - 1 ||
        post.incl_prob.size() != p - 1)
      throw std::invalid_argument(fmt::format("node {} has an inconsistent predictor map", k));
    std::vector<int> seen(post.predictor_map);
    seen.push_back(k);
    std::sort(seen.begin(), seen.end());
    for (int j = 0; j < p; ++j)
      if (seen[static_cast<std::size_t>(j)] != j)
        throw std::invalid_argument(fmt::format("node {} has an inconsistent predictor map", k));
    by_node[static_cast<std::size_t>(k)] = &post;
  }
  return by_node;
}

}  // namespace

Eigen::MatrixXd inclusion_matrix(std::span<const NeighborhoodPosterior> posteriors) {
  const auto by_node = index_posteriors(posteriors);
  const auto p = static_cast<Eigen::Index>(by_node.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto& post = *by_node[static_cast<std::size_t>(k)];
    for (std::size_t c = 0; c < post.predictor_map.size(); ++c)
      q(post.predictor_map[c], k) = post.incl_prob(static_cast<Eigen::Index>(c));
  }
  return q;
}

Graph assemble_graph(std::span<const NeighborhoodPosterior> posteriors, double threshold,
                     std::vector<std::string> names) {
  const Eigen::MatrixXd q = inclusion_matrix(posteriors);
  const int p = static_cast<int>(q.rows());
  Graph g = Graph::empty(p, std::move(names));
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (q(i, j) > threshold || q(j, i) > threshold) g.add_edge(i, j);
  return g;
}

std::map<Edge, EdgeSign> edge_signs(std::span<const NeighborhoodPosterior> posteriors,
                                    const Graph& graph, double threshold) {
  const auto by_node = index_posteriors(posteriors);
  // Coefficient means of predictor `j` in node `k`'s fit, all quantiles.
  auto coefficients = [&](int k, int j) {
    const auto& post = *by_node[static_cast<std::size_t>(k)];
    const auto it = std::find(post.predictor_map.begin(), post.predictor_map.end(), j);
    const auto c = static_cast<Eigen::Index>(it - post.predictor_map.begin());
    return std::make_pair(post.incl_prob(c), Eigen::VectorXd(post.coef_mean.col(c + 1)));
  };

  std::map<Edge, EdgeSign> out;
  for (const auto& [i, j] : graph.edges()) {
    const auto [pij, bij] = coefficients(i, j);
    const auto [pji, bji] = coefficients(j, i);
    std::vector<double> values;
    const bool sel_ij = pij > threshold;
    const bool sel_ji = pji > threshold;
    if (sel_ij || !sel_ji) values.insert(values.end(), bij.begin(), bij.end());
    if (sel_ji || !sel_ij) values.insert(values.end(), bji.begin(), bji.end());
    EdgeSign s = EdgeSign::inconclusive;
    if (std::all_of(values.begin(), values.end(), [](double b) { return b > 0.0; }))
      s = EdgeSign::positive;
    else if (std::all_of(values.begin(), values.end(), [](double b) { return b < 0.0; }))
      s = EdgeSign::negative;
    out.emplace(Edge{i, j}, s);
  }
  return out;
}

}  // namespace qgraph
