#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/quantile_core.hpp"

namespace qgraph {

/// n x P observations, one named column per variable.
struct Dataset {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  bool standardized = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Default names X1..XP.
std::vector<std::string> default_column_names(Eigen::Index p);

Dataset make_dataset(Eigen::MatrixXd values, std::vector<std::string> names = {});

/// Center every column and scale it to unit sample standard deviation.
/// Throws std::invalid_argument naming any zero-variance column.
Dataset standardize(const Dataset& d);

class QuantileGrid {
 public:
  explicit QuantileGrid(std::vector<double> taus);

  std::size_t size() const { return taus_.size(); }
  double tau(std::size_t l) const { return taus_[l]; }
  const MixtureConstants<double>& constants(std::size_t l) const { return constants_[l]; }
  const std::vector<double>& taus() const { return taus_; }

 private:
  std::vector<double> taus_;
  std::vector<MixtureConstants<double>> constants_;
};

struct PriorConfig {
  double a0 = 1.0;  // Gamma(a0, b0) on t, rate parametrization
  double b0 = 1.0;
  double a1 = 1.0;  // Beta(a1, b1) on pi
  double b1 = 1.0;
  double sigma_beta2 = 10.0;  // beta ~ N(0, sigma_beta2 / t)
  std::optional<double> fix_t;

  void validate() const;
  double initial_t() const { return fix_t ? *fix_t : a0 / b0; }
};

/// Regression view of one node: the node's column as response, an intercept
/// column followed by every other variable in index order as the design.
struct NodeProblem {
  int node_index = 0;
  Eigen::VectorXd response;
  Eigen::MatrixXd design;          // n x P, column 0 is all ones
  std::vector<int> predictor_map;  // design column c >= 1 -> variable predictor_map[c-1]

  Eigen::Index n() const { return design.rows(); }
  Eigen::Index p() const { return design.cols(); }
  Eigen::Index num_predictors() const { return design.cols() - 1; }
};

/// Zero-based node index k.
NodeProblem build_node_problem(const Dataset& d, int k);

/// Build a problem directly from a response and a predictor matrix (no
/// intercept column); predictors are labelled 0..q-1 unless a map is given.
NodeProblem make_regression_problem(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                    std::vector<int> predictor_map = {}, int node_index = -1);

/// One Gibbs configuration. beta is m x P (row l holds quantile l, column 0 the
/// intercept); v is n x m.
struct McmcState {
  Eigen::MatrixXd beta;
  std::vector<std::uint8_t> indicators;  // length P - 1
  double pi = 0.5;
  double t = 1.0;
  Eigen::MatrixXd v;

  /// Indicator-masked coefficients: column 0 always kept, column j>=1 times I_j.
  Eigen::MatrixXd masked_beta() const;
  bool valid() const;
};

/// Mean-field factors. v_* matrices are n x m.
struct VariationalState {
  Eigen::MatrixXd beta_mean;              // m x P
  std::vector<Eigen::MatrixXd> beta_cov;  // m blocks of P x P
  Eigen::VectorXd incl_prob;              // P - 1
  double pi_a = 1.0, pi_b = 1.0;
  double t_a = 1.0, t_b = 1.0;
  double expected_t = 1.0;
  Eigen::MatrixXd v_lambda, v_mu;
  Eigen::MatrixXd v_mean, v_mean_inverse;

  /// Inclusion expectations including the intercept (entry 0 is 1).
  Eigen::VectorXd inclusion_with_intercept() const;
  bool valid() const;
};

enum class EngineKind { mcmc, vb };

const char* to_string(EngineKind e);
EngineKind engine_from_string(const std::string& s);

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  double final_metric = 0.0;
  double acceptance_rate = 1.0;  // latent-scale MH acceptance (MCMC only)
  double wall_seconds = 0.0;
};

struct NeighborhoodPosterior {
  int node_index = 0;
  std::vector<int> predictor_map;
  Eigen::VectorXd incl_prob;   // P - 1
  Eigen::MatrixXd coef_mean;   // m x P, intercept in column 0
  Eigen::MatrixXd coef_sd;     // m x P
  Eigen::MatrixXd coef_lower;  // 2.5% (MCMC only, else empty)
  Eigen::MatrixXd coef_upper;  // 97.5%
  EngineKind engine = EngineKind::vb;
  FitDiagnostics diagnostics;
};

}  // namespace qgraph
