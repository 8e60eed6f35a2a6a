#include "qgraph/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace qgraph {

namespace {

constexpr double kLogOddsClamp = 700.0;

double sigmoid(double x) {
  x = std::clamp(x, -kLogOddsClamp, kLogOddsClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

// y - X beta_gamma,l for every quantile: n x m.
Eigen::MatrixXd linear_residuals(const McmcState& s, const NodeProblem& p) {
  Eigen::MatrixXd e = -(p.design * s.masked_beta().transpose());
  e.colwise() += p.response;
  return e;
}

// Empirical percentile with linear interpolation between order statistics.
double percentile(std::vector<double>& xs, double q) {
  std::sort(xs.begin(), xs.end());
  const double h = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

void McmcConfig::validate() const {
  if (n_iterations <= 0) throw std::invalid_argument("n_iterations must be positive");
  if (burn_in < 0 || burn_in >= n_iterations)
    throw std::invalid_argument("burn_in must lie in [0, n_iterations)");
  if (thin <= 0) throw std::invalid_argument("thin must be positive");
}

McmcState initial_mcmc_state(const NodeProblem& problem, const QuantileGrid& grid,
                             const PriorConfig& priors) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  McmcState s;
  s.beta = Eigen::MatrixXd::Zero(m, problem.p());
  s.indicators.assign(static_cast<std::size_t>(problem.num_predictors()), 1);
  s.pi = 0.5;
  s.t = priors.initial_t();
  s.v = Eigen::MatrixXd::Ones(problem.n(), m);
  return s;
}

double t_shape_likelihood(double a0, std::size_t m, Eigen::Index n) {
  const auto nn = static_cast<double>(n);
  return a0 + static_cast<double>(m) * nn / 2.0 + nn;
}

void update_beta(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                 const PriorConfig& priors, Rng& rng) {
  const Eigen::Index p = problem.p();
  Eigen::MatrixXd xg = problem.design;
  for (std::size_t j = 0; j < state.indicators.size(); ++j)
    if (!state.indicators[j]) xg.col(static_cast<Eigen::Index>(j) + 1).setZero();

  const double prior_precision = state.t / priors.sigma_beta2;
  Eigen::MatrixXd a(p, p);
  Eigen::VectorXd z(p);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto li = static_cast<Eigen::Index>(l);
    // Sigma_1 diagonal: t / (v xi2^2); offset response y - xi1 v.
    const Eigen::ArrayXd w = state.t / (state.v.col(li).array() * c.xi2 * c.xi2);
    const Eigen::ArrayXd ydelta = problem.response.array() - c.xi1 * state.v.col(li).array();
    const Eigen::MatrixXd xw = xg.array().colwise() * w.sqrt();
    a.setZero();
    a.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
    a.diagonal().array() += prior_precision;
    const Eigen::VectorXd rhs = xg.transpose() * (w * ydelta).matrix();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw NumericalError(fmt::format("coefficient precision for quantile {} is not positive definite",
                                       grid.tau(l)));
    Eigen::VectorXd mean = llt.solve(rhs);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = draw::normal(rng);
    state.beta.row(li) = (mean + llt.matrixU().solve(z)).transpose();
  }
  if (!state.beta.allFinite()) throw NumericalError("non-finite coefficient draw");
}

void update_pi(McmcState& state, const PriorConfig& priors, Rng& rng) {
  double included = 0.0;
  for (auto b : state.indicators) included += b;
  const auto q = static_cast<double>(state.indicators.size());
  const double pi = draw::beta(rng, priors.a1 + included, q - included + priors.b1);
  state.pi = std::clamp(pi, 1e-300, 1.0 - 1e-16);
}

double update_v(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid, Rng& rng,
                VSampler method) {
  const Eigen::MatrixXd e = linear_residuals(state, problem);
  std::size_t accepted = 0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto li = static_cast<Eigen::Index>(l);
    const double xi2sq = c.xi2 * c.xi2;
    const double psi = state.t * (2.0 + c.xi1 * c.xi1 / xi2sq);
    for (Eigen::Index i = 0; i < problem.n(); ++i) {
      const double lambda = state.t * e(i, li) * e(i, li) / xi2sq;
      const auto params = TiltedIGParams<double>::from_coefficients(lambda, psi);
      bool ok = true;
      state.v(i, li) = sample_tilted_ig(params, state.v(i, li), rng, method, &ok);
      accepted += ok;
    }
  }
  return static_cast<double>(accepted) / static_cast<double>(state.v.size());
}

void update_t(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
              const PriorConfig& priors, Rng& rng) {
  if (priors.fix_t) {
    state.t = *priors.fix_t;
    return;
  }
  const Eigen::MatrixXd e = linear_residuals(state, problem);
  double quad = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto v = state.v.col(static_cast<Eigen::Index>(l)).array();
    const Eigen::ArrayXd d = e.col(static_cast<Eigen::Index>(l)).array() - c.xi1 * v;
    quad += (d * d / (v * c.xi2 * c.xi2)).sum();
  }
  // The t-scaled coefficient prior contributes mP/2 to the shape and
  // beta'beta / (2 sigma_beta2) to the rate.
  const double shape = t_shape_likelihood(priors.a0, grid.size(), problem.n()) +
                       0.5 * static_cast<double>(state.beta.size());
  const double rate = priors.b0 + 0.5 * quad + state.v.sum() +
                      0.5 * state.beta.squaredNorm() / priors.sigma_beta2;
  state.t = draw::gamma(rng, shape, rate);
}

namespace {

// Weighted residuals r = y - X beta_gamma - xi1 v and weights t / (v xi2^2).
struct IndicatorWork {
  Eigen::MatrixXd r;
  Eigen::MatrixXd w;
};

IndicatorWork indicator_work(const McmcState& s, const NodeProblem& p, const QuantileGrid& grid) {
  IndicatorWork out{linear_residuals(s, p), Eigen::MatrixXd(p.n(), s.v.cols())};
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto li = static_cast<Eigen::Index>(l);
    out.r.col(li) -= c.xi1 * s.v.col(li);
    out.w.col(li) = s.t / (s.v.col(li).array() * c.xi2 * c.xi2);
  }
  return out;
}

// log P(I_j=1|.) - log P(I_j=0|.) given residuals at the current indicators.
double indicator_log_odds(const McmcState& s, const NodeProblem& p, const IndicatorWork& wk,
                          Eigen::Index j) {
  // With c = x_j beta_j: on gives r1 = r, r0 = r + c; off gives r1 = r - c, r0 = r.
  const double sign = s.indicators[static_cast<std::size_t>(j - 1)] ? 1.0 : -1.0;
  const auto x = p.design.col(j).array();
  double dssr = 0.0;
  for (Eigen::Index l = 0; l < wk.r.cols(); ++l) {
    const Eigen::ArrayXd c = x * s.beta(l, j);
    dssr -= (wk.w.col(l).array() * c * (2.0 * wk.r.col(l).array() + sign * c)).sum();
  }
  return std::log(s.pi) - std::log1p(-s.pi) - 0.5 * dssr;
}

}  // namespace

double indicator_conditional(const McmcState& state, const NodeProblem& problem,
                             const QuantileGrid& grid, Eigen::Index j) {
  if (j < 1 || j >= problem.p()) throw std::out_of_range("indicator column out of range");
  return sigmoid(indicator_log_odds(state, problem, indicator_work(state, problem, grid), j));
}

void update_indicators(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                       Rng& rng) {
  IndicatorWork wk = indicator_work(state, problem, grid);
  for (Eigen::Index j = 1; j < problem.p(); ++j) {
    const double prob = sigmoid(indicator_log_odds(state, problem, wk, j));
    auto& ind = state.indicators[static_cast<std::size_t>(j - 1)];
    const std::uint8_t next = draw::bernoulli(rng, prob) ? 1 : 0;
    if (next != ind) {
      const Eigen::MatrixXd contrib = problem.design.col(j) * state.beta.col(j).transpose();
      if (next) wk.r -= contrib;
      else wk.r += contrib;
      ind = next;
    }
  }
}

double gibbs_sweep(McmcState& state, const NodeProblem& problem, const QuantileGrid& grid,
                   const PriorConfig& priors, Rng& rng, const McmcConfig& cfg) {
  update_beta(state, problem, grid, priors, rng);
  if (cfg.sample_indicators) update_indicators(state, problem, grid, rng);
  const double acc = update_v(state, problem, grid, rng, cfg.v_method);
  update_pi(state, priors, rng);
  update_t(state, problem, grid, priors, rng);
  return acc;
}

NeighborhoodPosterior run_chain(const NodeProblem& problem, const QuantileGrid& grid,
                                const PriorConfig& priors, const McmcConfig& cfg) {
  cfg.validate();
  priors.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto m = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index p = problem.p();
  const Eigen::Index q = problem.num_predictors();

  Rng rng = make_stream(cfg.seed);
  McmcState state = initial_mcmc_state(problem, grid, priors);

  const int kept_count = (cfg.n_iterations - cfg.burn_in + cfg.thin - 1) / cfg.thin;
  Eigen::MatrixXd draws(kept_count, m * p);  // row-major flattening of masked beta
  Eigen::VectorXd incl_sum = Eigen::VectorXd::Zero(q);
  double acc_sum = 0.0;

  if (cfg.trace) {
    std::string header = "iteration";
    for (Eigen::Index l = 0; l < m; ++l)
      for (Eigen::Index j = 0; j < p; ++j) header += fmt::format(",beta_{}_{}", l, j);
    for (Eigen::Index j = 1; j < p; ++j) header += fmt::format(",I_{}", j);
    *cfg.trace << header << ",pi,t\n";
  }

  int kept = 0;
  for (int it = 0; it < cfg.n_iterations; ++it) {
    try {
      acc_sum += gibbs_sweep(state, problem, grid, priors, rng, cfg);
    } catch (const NumericalError& e) {
      throw NumericalError(fmt::format("iteration {}: {}", it, e.what()));
    }
    if (it < cfg.burn_in || (it - cfg.burn_in) % cfg.thin != 0) continue;
    const Eigen::MatrixXd mb = state.masked_beta();
    for (Eigen::Index l = 0; l < m; ++l) draws.row(kept).segment(l * p, p) = mb.row(l);
    for (Eigen::Index j = 0; j < q; ++j) incl_sum(j) += state.indicators[static_cast<std::size_t>(j)];
    if (cfg.trace) {
      std::string row = std::to_string(it);
      for (Eigen::Index l = 0; l < m; ++l)
        for (Eigen::Index j = 0; j < p; ++j) row += fmt::format(",{:.17g}", state.beta(l, j));
      for (auto b : state.indicators) row += b ? ",1" : ",0";
      row += fmt::format(",{:.17g},{:.17g}\n", state.pi, state.t);
      *cfg.trace << row;
    }
    ++kept;
  }

  NeighborhoodPosterior post;
  post.node_index = problem.node_index;
  post.predictor_map = problem.predictor_map;
  post.engine = EngineKind::mcmc;
  post.incl_prob = incl_sum / static_cast<double>(kept);
  post.coef_mean.resize(m, p);
  post.coef_sd.resize(m, p);
  post.coef_lower.resize(m, p);
  post.coef_upper.resize(m, p);
  std::vector<double> col(static_cast<std::size_t>(kept));
  for (Eigen::Index l = 0; l < m; ++l) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto c = draws.col(l * p + j);
      const double mean = c.mean();
      post.coef_mean(l, j) = mean;
      post.coef_sd(l, j) =
          kept > 1 ? std::sqrt((c.array() - mean).square().sum() / (kept - 1)) : 0.0;
      std::copy(c.data(), c.data() + kept, col.begin());
      post.coef_lower(l, j) = percentile(col, 0.025);
      post.coef_upper(l, j) = percentile(col, 0.975);
    }
  }
  post.diagnostics.iterations = cfg.n_iterations;
  post.diagnostics.converged = true;
  post.diagnostics.final_metric = 0.0;
  post.diagnostics.acceptance_rate = acc_sum / cfg.n_iterations;
  post.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return post;
}

}  // namespace qgraph
