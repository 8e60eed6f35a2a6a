#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/model.hpp"

namespace qgraph {

/// Raw (unstandardized) draws together with the graph they were built from.
struct SimOutput {
  Dataset dataset;
  Graph truth;
  std::string spec_name;
  std::uint64_t seed = 0;
  std::vector<int> g1_nodes;        // zero-based
  std::vector<int> g2_nodes;
  std::vector<Edge> induced_edges;  // truth edges implied by conditioning on a common child
};

/// Fifteen variables: X1..X10 a Gamma scale mixture of an AR(1) Gaussian
/// (correlation 0.7^|k-l|), X11..X15 independent N(0, 1). Truth is the chain
/// X1 - X2 - ... - X10.
SimOutput gen_example1(int n, std::uint64_t seed);

/// Thirty variables with non-linear and heavy-tailed dependence in two
/// disconnected blocks, plus `extra_noise_nodes` independent N(0, 1) columns.
SimOutput gen_example2(int n, std::uint64_t seed, int extra_noise_nodes = 0);

/// Example 2 with 90 extra noise columns (P = 120); n defaults to 100.
SimOutput gen_pgtn(std::uint64_t seed, int n = 100);

SimOutput simulate(const std::string& spec_name, int n, std::uint64_t seed);

struct Metrics {
  int fdr_count = 0;  // fitted edges absent from the truth
  int e1 = 0;         // truth edges inside G1 missing from the fit
  int e2 = 0;         // truth edges inside G2 missing from the fit
  int e3 = 0;         // fitted edges joining G1 and G2
  int e2_direct = 0;  // e2 ignoring the induced edges
  int true_positives = 0;
  int fitted_edges = 0;
};

Metrics evaluate(const Graph& fitted, const Graph& truth, std::span<const int> g1_nodes,
                 std::span<const int> g2_nodes, std::span<const Edge> induced_edges = {});

/// Mean check loss rho_tau(x_ik - x_i' beta_hat) per node (rows) and quantile
/// (columns), with predictors whose inclusion probability is <= threshold
/// removed. `d` must be the standardized data the report was fitted on.
Eigen::MatrixXd residual_table(const Dataset& d, const FitReport& report, const QuantileGrid& grid,
                               double threshold = 0.5);

/// Mean of residual_table over nodes and quantiles.
double residual_diagnostic(const Dataset& d, const FitReport& report, const QuantileGrid& grid,
                           double threshold = 0.5);

}  // namespace qgraph
