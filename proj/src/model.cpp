#include "qgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qgraph {

std::vector<std::string> default_column_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) names.push_back(fmt::format("X{}", j + 1));
  return names;
}

Dataset make_dataset(Eigen::MatrixXd values, std::vector<std::string> names) {
  if (names.empty()) names = default_column_names(values.cols());
  if (static_cast<Eigen::Index>(names.size()) != values.cols())
    throw std::invalid_argument(fmt::format("{} column names for {} columns", names.size(),
                                            values.cols()));
  if (!values.allFinite()) throw std::invalid_argument("dataset contains missing or non-finite values");
  return Dataset{std::move(values), std::move(names), false};
}

Dataset standardize(const Dataset& d) {
  const Eigen::Index n = d.rows();
  if (n < 2) throw std::invalid_argument("standardize needs at least 2 rows");
  Dataset out = d;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    auto col = out.values.col(j);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      throw std::invalid_argument(
          fmt::format("column '{}' has zero variance", d.column_names[static_cast<std::size_t>(j)]));
    col /= sd;
  }
  out.standardized = true;
  return out;
}

QuantileGrid::QuantileGrid(std::vector<double> taus) : taus_(std::move(taus)) {
  if (taus_.empty()) throw std::invalid_argument("quantile grid is empty");
  for (std::size_t l = 0; l < taus_.size(); ++l) {
    if (l > 0 && !(taus_[l] > taus_[l - 1]))
      throw std::invalid_argument("quantile grid must be strictly increasing");
    constants_.push_back(mixture_constants(taus_[l]));
  }
}

void PriorConfig::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw std::invalid_argument(fmt::format("prior {} must be positive", name));
  };
  positive(a0, "a0");
  positive(b0, "b0");
  positive(a1, "a1");
  positive(b1, "b1");
  positive(sigma_beta2, "sigma_beta2");
  if (fix_t) positive(*fix_t, "fix_t");
}

NodeProblem build_node_problem(const Dataset& d, int k) {
  const Eigen::Index p = d.cols();
  if (k < 0 || k >= p)
    throw std::out_of_range(fmt::format("node index {} out of range for {} variables", k, p));
  NodeProblem prob;
  prob.node_index = k;
  prob.response = d.values.col(k);
  prob.design.resize(d.rows(), p);
  prob.design.col(0).setOnes();
  Eigen::Index c = 1;
  for (int j = 0; j < p; ++j) {
    if (j == k) continue;
    prob.design.col(c++) = d.values.col(j);
    prob.predictor_map.push_back(j);
  }
  return prob;
}

NodeProblem make_regression_problem(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                    std::vector<int> predictor_map, int node_index) {
  if (y.size() != x.rows()) throw std::invalid_argument("response and design row counts differ");
  NodeProblem prob;
  prob.node_index = node_index;
  prob.response = y;
  prob.design.resize(x.rows(), x.cols() + 1);
  prob.design.col(0).setOnes();
  prob.design.rightCols(x.cols()) = x;
  if (predictor_map.empty()) {
    for (int j = 0; j < x.cols(); ++j) predictor_map.push_back(j);
  }
  if (static_cast<Eigen::Index>(predictor_map.size()) != x.cols())
    throw std::invalid_argument("predictor map size does not match design");
  prob.predictor_map = std::move(predictor_map);
  return prob;
}

Eigen::MatrixXd McmcState::masked_beta() const {
  Eigen::MatrixXd b = beta;
  for (std::size_t j = 0; j < indicators.size(); ++j)
    if (!indicators[j]) b.col(static_cast<Eigen::Index>(j) + 1).setZero();
  return b;
}

bool McmcState::valid() const {
  return pi > 0.0 && pi < 1.0 && t > 0.0 && (v.array() > 0.0).all() && v.allFinite() &&
         beta.allFinite() && std::isfinite(t);
}

Eigen::VectorXd VariationalState::inclusion_with_intercept() const {
  Eigen::VectorXd g(incl_prob.size() + 1);
  g(0) = 1.0;
  g.tail(incl_prob.size()) = incl_prob;
  return g;
}

bool VariationalState::valid() const {
  if ((incl_prob.array() < 0.0).any() || (incl_prob.array() > 1.0).any()) return false;
  if (!(expected_t > 0.0)) return false;
  for (const auto& c : beta_cov) {
    if (!c.isApprox(c.transpose(), 1e-12)) return false;
    if (Eigen::LLT<Eigen::MatrixXd>(c).info() != Eigen::Success) return false;
  }
  // E(v) E(1/v) >= 1, up to rounding.
  const Eigen::ArrayXXd prod = v_mean.array() * v_mean_inverse.array();
  return (prod >= 1.0 - 1e-12).all();
}

const char* to_string(EngineKind e) { return e == EngineKind::mcmc ? "mcmc" : "vb"; }

EngineKind engine_from_string(const std::string& s) {
  if (s == "mcmc") return EngineKind::mcmc;
  if (s == "vb") return EngineKind::vb;
  throw std::invalid_argument(fmt::format("unknown engine '{}'", s));
}

}  // namespace qgraph
