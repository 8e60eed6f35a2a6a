#include "qgraph/vb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <fmt/format.h>

#include "qgraph/mcmc.hpp"

namespace qgraph {

namespace {

constexpr double kLogOddsClamp = 700.0;

// Per-quantile weighted sufficient statistics: Sigma weights
// E(t) E(1/v) / xi2^2, the Gram matrix X' W X and h = X' W Y^delta with
// Y^delta = y - xi1 / E(1/v).
struct BlockStats {
  Eigen::MatrixXd gram;
  Eigen::VectorXd h;
};

BlockStats block_stats(const VariationalState& s, const NodeProblem& p, const QuantileGrid& grid,
                       std::size_t l) {
  const auto c = grid.constants(l);
  const auto li = static_cast<Eigen::Index>(l);
  const Eigen::ArrayXd einv = s.v_mean_inverse.col(li).array();
  const Eigen::ArrayXd w = s.expected_t * einv / (c.xi2 * c.xi2);
  const Eigen::ArrayXd ydelta = p.response.array() - c.xi1 / einv;
  const Eigen::MatrixXd xw = p.design.array().colwise() * w.sqrt();
  BlockStats b;
  b.gram = Eigen::MatrixXd::Zero(p.p(), p.p());
  b.gram.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
  b.gram = b.gram.selfadjointView<Eigen::Lower>();
  b.h = p.design.transpose() * (w * ydelta).matrix();
  return b;
}

}  // namespace

void VbConfig::validate() const {
  if (max_iterations <= 0) throw std::invalid_argument("max_iterations must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

VariationalState initial_vb_state(const NodeProblem& problem, const QuantileGrid& grid,
                                  const PriorConfig& priors) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index p = problem.p();
  const auto q = static_cast<double>(problem.num_predictors());
  VariationalState s;
  s.expected_t = priors.initial_t();
  s.t_a = priors.a0;
  s.t_b = priors.b0;
  s.beta_mean = Eigen::MatrixXd::Zero(m, p);
  s.beta_cov.assign(static_cast<std::size_t>(m),
                    Eigen::MatrixXd::Identity(p, p) * (priors.sigma_beta2 / s.expected_t));
  s.incl_prob = Eigen::VectorXd::Constant(problem.num_predictors(), 0.5);
  s.pi_a = priors.a1 + 0.5 * q;
  s.pi_b = priors.b1 + 0.5 * q;
  s.v_lambda = Eigen::MatrixXd::Ones(problem.n(), m);
  s.v_mu = Eigen::MatrixXd::Ones(problem.n(), m);
  s.v_mean = Eigen::MatrixXd::Constant(problem.n(), m, 2.0);
  s.v_mean_inverse = Eigen::MatrixXd::Ones(problem.n(), m);
  return s;
}

Eigen::MatrixXd expected_squared_residuals(const VariationalState& s, const NodeProblem& problem) {
  const Eigen::VectorXd g = s.inclusion_with_intercept();
  const Eigen::MatrixXd xg = problem.design * g.asDiagonal();
  const Eigen::MatrixXd xsq = problem.design.array().square().matrix();
  const auto m = s.beta_mean.rows();
  Eigen::MatrixXd out(problem.n(), m);
  for (Eigen::Index l = 0; l < m; ++l) {
    const Eigen::VectorXd mean = s.beta_mean.row(l).transpose();
    const Eigen::MatrixXd& cov = s.beta_cov[static_cast<std::size_t>(l)];
    const Eigen::ArrayXd mu_r = problem.response - xg * mean;
    // Var(sum_k x_k I_k beta_k) = x' G C G x + sum_k x_k^2 (g_k - g_k^2)(C_kk + m_k^2).
    const Eigen::ArrayXd quad = ((xg * cov).array() * xg.array()).rowwise().sum();
    const Eigen::VectorXd d =
        (g.array() - g.array().square()) * (cov.diagonal().array() + mean.array().square());
    out.col(l) = mu_r.square() + quad + (xsq * d).array();
  }
  return out;
}

namespace {

std::vector<BlockStats> all_block_stats(const VariationalState& s, const NodeProblem& p,
                                        const QuantileGrid& grid) {
  std::vector<BlockStats> out;
  out.reserve(grid.size());
  for (std::size_t l = 0; l < grid.size(); ++l) out.push_back(block_stats(s, p, grid, l));
  return out;
}

void update_beta_from(VariationalState& s, const std::vector<BlockStats>& stats,
                      const QuantileGrid& grid, const PriorConfig& priors) {
  const Eigen::VectorXd g = s.inclusion_with_intercept();
  const Eigen::Index p = g.size();
  const double prior_precision = s.expected_t / priors.sigma_beta2;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const BlockStats& b = stats[l];
    // E over indicators of G X' W X G: g_j g_k off the diagonal, g_j on it.
    Eigen::MatrixXd a = (g * g.transpose()).cwiseProduct(b.gram);
    a.diagonal() = g.cwiseProduct(b.gram.diagonal());
    a.diagonal().array() += prior_precision;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw NumericalError(
          fmt::format("variational precision for quantile {} is not positive definite", grid.tau(l)));
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
    cov = 0.5 * (cov + cov.transpose());
    const auto li = static_cast<Eigen::Index>(l);
    s.beta_mean.row(li) = llt.solve(g.cwiseProduct(b.h)).transpose();
    s.beta_cov[l] = std::move(cov);
  }
}

void update_indicators_from(VariationalState& s, const std::vector<BlockStats>& stats,
                            const QuantileGrid& grid) {
  using boost::math::digamma;
  const Eigen::VectorXd g = s.inclusion_with_intercept();
  const Eigen::Index p = g.size();
  const double prior_log_odds = digamma(s.pi_a) - digamma(s.pi_b);
  Eigen::VectorXd dssr = Eigen::VectorXd::Zero(p);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const BlockStats& b = stats[l];
    const auto li = static_cast<Eigen::Index>(l);
    const Eigen::VectorXd mean = s.beta_mean.row(li).transpose();
    const Eigen::MatrixXd& cov = s.beta_cov[l];
    // Second moments E(beta_j beta_k) = C_jk + m_j m_k.
    const Eigen::MatrixXd second = cov + mean * mean.transpose();
    // cross_j = sum_{k != j} g_k G_jk E(beta_j beta_k)
    const Eigen::MatrixXd weighted = b.gram.cwiseProduct(second);
    Eigen::VectorXd cross = weighted * g;
    cross -= g.cwiseProduct(weighted.diagonal());
    dssr += b.gram.diagonal().cwiseProduct(second.diagonal()) - 2.0 * mean.cwiseProduct(b.h) +
            2.0 * cross;
  }
  for (Eigen::Index j = 1; j < p; ++j) {
    const double lo = std::clamp(prior_log_odds - 0.5 * dssr(j), -kLogOddsClamp, kLogOddsClamp);
    s.incl_prob(j - 1) = 1.0 / (1.0 + std::exp(-lo));
  }
}

void update_v_from(VariationalState& s, const Eigen::MatrixXd& er2, const QuantileGrid& grid) {
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto li = static_cast<Eigen::Index>(l);
    const double xi2sq = c.xi2 * c.xi2;
    const double psi = s.expected_t * (2.0 + c.xi1 * c.xi1 / xi2sq);
    for (Eigen::Index i = 0; i < er2.rows(); ++i) {
      const auto params =
          TiltedIGParams<double>::from_coefficients(s.expected_t * er2(i, li) / xi2sq, psi);
      const auto mom = tilted_ig_moments(params);
      s.v_lambda(i, li) = params.lambda;
      s.v_mu(i, li) = params.mu;
      s.v_mean(i, li) = mom.mean;
      s.v_mean_inverse(i, li) = mom.mean_inverse;
    }
  }
}

void update_t_from(VariationalState& s, const Eigen::MatrixXd& er2, const NodeProblem& problem,
                   const QuantileGrid& grid, const PriorConfig& priors) {
  if (priors.fix_t) {
    s.expected_t = *priors.fix_t;
    return;
  }
  const Eigen::MatrixXd fitted =
      problem.design * s.inclusion_with_intercept().asDiagonal() * s.beta_mean.transpose();
  double quad = 0.0;
  double prior_quad = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const auto c = grid.constants(l);
    const auto li = static_cast<Eigen::Index>(l);
    const Eigen::ArrayXd er = problem.response.array() - fitted.col(li).array();
    // E[(r - xi1 v)^2 / v] = E(r^2) E(1/v) - 2 xi1 E(r) + xi1^2 E(v)
    const Eigen::ArrayXd term = er2.col(li).array() * s.v_mean_inverse.col(li).array() -
                                2.0 * c.xi1 * er + c.xi1 * c.xi1 * s.v_mean.col(li).array();
    quad += term.sum() / (c.xi2 * c.xi2);
    prior_quad += s.beta_mean.row(li).squaredNorm() + s.beta_cov[l].trace();
  }
  s.t_a = t_shape_likelihood(priors.a0, grid.size(), problem.n()) +
          0.5 * static_cast<double>(s.beta_mean.size());
  s.t_b = priors.b0 + 0.5 * quad + s.v_mean.sum() + 0.5 * prior_quad / priors.sigma_beta2;
  s.expected_t = s.t_a / s.t_b;
}

}  // namespace

void vb_update_beta(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                    const PriorConfig& priors) {
  update_beta_from(s, all_block_stats(s, problem, grid), grid, priors);
}

void vb_update_indicators(VariationalState& s, const NodeProblem& problem,
                          const QuantileGrid& grid, const PriorConfig&) {
  update_indicators_from(s, all_block_stats(s, problem, grid), grid);
}

void vb_update_v(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid) {
  update_v_from(s, expected_squared_residuals(s, problem), grid);
}

void vb_update_t(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                 const PriorConfig& priors) {
  update_t_from(s, expected_squared_residuals(s, problem), problem, grid, priors);
}

void vb_update_pi(VariationalState& s, const PriorConfig& priors) {
  const double total = s.incl_prob.sum();
  const auto q = static_cast<double>(s.incl_prob.size());
  s.pi_a = priors.a1 + total;
  s.pi_b = q - total + priors.b1;
}

double vb_sweep(VariationalState& s, const NodeProblem& problem, const QuantileGrid& grid,
                const PriorConfig& priors) {
  const Eigen::MatrixXd old_mean = s.beta_mean;
  const Eigen::VectorXd old_p = s.incl_prob;
  // beta and I see the same v and t factors, and v and t the same q(beta)
  // and indicators, so each pair shares its statistics.
  const auto stats = all_block_stats(s, problem, grid);
  update_beta_from(s, stats, grid, priors);
  update_indicators_from(s, stats, grid);
  const Eigen::MatrixXd er2 = expected_squared_residuals(s, problem);
  update_v_from(s, er2, grid);
  vb_update_pi(s, priors);
  update_t_from(s, er2, problem, grid, priors);
  double metric = (s.beta_mean - old_mean).cwiseAbs().maxCoeff();
  if (s.incl_prob.size() > 0) metric = std::max(metric, (s.incl_prob - old_p).cwiseAbs().maxCoeff());
  return metric;
}

VbRun fit_vb(const NodeProblem& problem, const QuantileGrid& grid, const PriorConfig& priors,
             const VbConfig& cfg) {
  cfg.validate();
  priors.validate();
  const auto start = std::chrono::steady_clock::now();
  VbRun run{initial_vb_state(problem, grid, priors), {}, {}};
  if (cfg.trace) *cfg.trace << "iteration,metric,sum_p\n";
  double metric = 0.0;
  int it = 0;
  while (it < cfg.max_iterations) {
    metric = vb_sweep(run.state, problem, grid, priors);
    ++it;
    run.metric_history.push_back(metric);
    if (cfg.trace)
      *cfg.trace << fmt::format("{},{:.17g},{:.17g}\n", it, metric, run.state.incl_prob.sum());
    if (!std::isfinite(metric))
      throw NumericalError(fmt::format("iteration {}: non-finite variational update", it));
    if (metric < cfg.tolerance) break;
  }
  run.diagnostics.iterations = it;
  run.diagnostics.converged = metric < cfg.tolerance;
  run.diagnostics.final_metric = metric;
  run.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

NeighborhoodPosterior run_vb(const NodeProblem& problem, const QuantileGrid& grid,
                             const PriorConfig& priors, const VbConfig& cfg) {
  VbRun run = fit_vb(problem, grid, priors, cfg);
  NeighborhoodPosterior post;
  post.node_index = problem.node_index;
  post.predictor_map = problem.predictor_map;
  post.engine = EngineKind::vb;
  post.incl_prob = run.state.incl_prob;
  post.coef_mean = run.state.beta_mean;
  post.coef_sd.resize(post.coef_mean.rows(), post.coef_mean.cols());
  for (std::size_t l = 0; l < run.state.beta_cov.size(); ++l)
    post.coef_sd.row(static_cast<Eigen::Index>(l)) =
        run.state.beta_cov[l].diagonal().cwiseSqrt().transpose();
  post.diagnostics = run.diagnostics;
  return post;
}

}  // namespace qgraph
