#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "qgraph/mcmc.hpp"
#include "qgraph/model.hpp"
#include "qgraph/vb.hpp"

namespace qgraph {

enum class EdgeSign { positive, negative, inconclusive };

const char* to_string(EdgeSign s);
EdgeSign edge_sign_from_string(const std::string& s);

/// Unordered pair stored with first < second.
using Edge = std::pair<int, int>;

inline Edge make_edge(int i, int j) { return i < j ? Edge{i, j} : Edge{j, i}; }

struct Graph {
  Eigen::MatrixXi adjacency;  // symmetric 0/1, zero diagonal
  std::map<Edge, EdgeSign> signs;
  std::vector<std::string> node_names;

  static Graph empty(int p, std::vector<std::string> names = {});
  static Graph from_edges(int p, std::span<const Edge> edges, std::vector<std::string> names = {});

  int size() const { return static_cast<int>(adjacency.rows()); }
  bool has_edge(int i, int j) const { return adjacency(i, j) != 0; }
  void add_edge(int i, int j);
  std::vector<Edge> edges() const;
  std::size_t num_edges() const;
  /// Symmetric, 0/1, zero diagonal, signs only on present edges.
  bool valid() const;
};

struct FitOptions {
  EngineKind engine = EngineKind::vb;
  McmcConfig mcmc;
  VbConfig vb;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string trace_dir;  // when set, one trace_<name>.csv per node
};

struct NodeFailure {
  int node_index;
  std::string message;
};

struct NodeFits {
  std::vector<NeighborhoodPosterior> posteriors;  // successful fits, ordered by node
  std::vector<NodeFailure> failures;
};

/// Fit every node of a standardized dataset. Node k draws from the stream
/// keyed by (seed, column name of k), so results do not depend on `jobs` or on
/// the column order.
NodeFits fit_all_nodes(const Dataset& d, const QuantileGrid& grid, const PriorConfig& priors,
                       const FitOptions& opts);

/// Q(j, k) = inclusion probability of variable j in node k's fit (diagonal 0).
Eigen::MatrixXd inclusion_matrix(std::span<const NeighborhoodPosterior> posteriors);

/// OR-rule graph: edge {i, j} iff Q(i, j) > threshold or Q(j, i) > threshold.
Graph assemble_graph(std::span<const NeighborhoodPosterior> posteriors, double threshold = 0.5,
                     std::vector<std::string> names = {});

/// Sign of each edge from the posterior coefficient means of every direction
/// that selected it, across all quantiles.
std::map<Edge, EdgeSign> edge_signs(std::span<const NeighborhoodPosterior> posteriors,
                                    const Graph& graph, double threshold = 0.5);

struct FitReport {
  std::vector<NeighborhoodPosterior> posteriors;
  Graph graph;
  double wall_seconds = 0.0;
  EngineKind engine = EngineKind::vb;
  std::vector<double> taus;
  double threshold = 0.5;
  nlohmann::ordered_json config;  // effective settings, for provenance
};

}  // namespace qgraph
