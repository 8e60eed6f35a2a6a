#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qgraph/model.hpp"

namespace qgraph {

struct VbConfig {
  int max_iterations = 500;
  double tolerance = 1e-6;
  // Initialization is deterministic, so the seed only identifies the run.
  std::uint64_t seed = 0;
  std::ostream* trace = nullptr;  // CSV: iteration, metric, sum of p_j

  void validate() const;
};

/// p_j = 1/2, q(beta) = prior, E(t) = a0/b0 (or the fixed value), E(1/v) = 1.
VariationalState initial_vb_state(const NodeProblem& problem, const QuantileGrid& grid,
                                  const PriorConfig& priors);

/// E[(y_i - x_i' beta_gamma,l)^2] under q(beta) and the indicator factors: n x m.
Eigen::MatrixXd expected_squared_residuals(const VariationalState& s, const NodeProblem& problem);

// Coordinate updates, each refreshing one factor from the others.

void vb_update_beta(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                    const PriorConfig& priors);

/// All p_j are refreshed jointly from the incoming factors.
void vb_update_indicators(VariationalState& s, const NodeProblem& problem,
                          const QuantileGrid& grid, const PriorConfig& priors);

void vb_update_v(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid);

void vb_update_pi(VariationalState& s, const PriorConfig& priors);

void vb_update_t(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                 const PriorConfig& priors);

/// One pass beta, I, v, pi, t. Returns max(|dp|, |d beta_mean|) over the pass.
double vb_sweep(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                const PriorConfig& priors);

struct VbRun {
  VariationalState state;
  FitDiagnostics diagnostics;
  std::vector<double> metric_history;
};

VbRun fit_vb(const NodeProblem& problem, const QuantileGrid& grid, const PriorConfig& priors,
             const VbConfig& cfg);

NeighborhoodPosterior run_vb(const NodeProblem& problem, const QuantileGrid& grid,
                             const PriorConfig& priors, const VbConfig& cfg);

}  // namespace qgraph
