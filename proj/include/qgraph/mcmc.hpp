#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>

#include "qgraph/model.hpp"
#include "qgraph/random.hpp"

namespace qgraph {

/// Raised when a linear system that must be positive definite is not
/// (in practice a sign of NaN contamination).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct McmcConfig {
  int n_iterations = 10000;
  int burn_in = 4000;
  int thin = 1;
  std::uint64_t seed = 0;
  VSampler v_method = VSampler::exact;
  bool sample_indicators = true;  // false holds every I_j at 1
  std::ostream* trace = nullptr;  // CSV, one row per kept iteration

  void validate() const;
};

/// beta = 0, all I_j = 1, pi = 0.5, t = a0/b0 (or the fixed value), v = 1.
McmcState initial_mcmc_state(const NodeProblem& problem, const QuantileGrid& grid,
                             const PriorConfig& priors);

/// Shape of the Gamma full conditional of t from the prior, the Gaussian
/// terms and the latent scales: a0 + m n / 2 + n. The coefficient prior adds
/// m P / 2 on top.
double t_shape_likelihood(double a0, std::size_t m, Eigen::Index n);

// Full conditionals. Each mutates only its own block of `state`.

void update_beta(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                 const PriorConfig& priors, Rng& rng);

void update_pi(McmcState& state, const PriorConfig& priors, Rng& rng);

/// Returns the fraction of accepted latent-scale moves (1 for exact draws).
double update_v(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid, Rng& rng,
                VSampler method = VSampler::exact);

void update_t(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
              const PriorConfig& priors, Rng& rng);

void update_indicators(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                       Rng& rng);

/// P(I_j = 1 | rest) for design column j >= 1 at the current state.
double indicator_conditional(const McmcState& state, const NodeProblem& problem,
                             const QuantileGrid& grid, Eigen::Index j);

/// One sweep in the order beta, I, v, pi, t. Returns the v acceptance fraction.
double gibbs_sweep(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                   const PriorConfig& priors, Rng& rng, const McmcConfig& cfg);

NeighborhoodPosterior run_chain(const NodeProblem& problem, const QuantileGrid& grid,
                                const PriorConfig& priors, const McmcConfig& cfg);

}  // namespace qgraph
