#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/model.hpp"
#include "qgraph/random.hpp"

namespace qgraph::testing {

/// Centered and scaled to unit sample standard deviation, like the pipeline.
inline Eigen::VectorXd standardized(Eigen::VectorXd v) {
  v.array() -= v.mean();
  v /= std::sqrt(v.squaredNorm() / static_cast<double>(v.size() - 1));
  return v;
}

/// y = slope * x1 + N(0, 1) noise with q standard-normal predictors, all
/// standardized.
inline NodeProblem toy_problem(int n, int q, double slope, std::uint64_t seed) {
  Rng rng = make_stream(seed, 7);
  Eigen::MatrixXd x(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) x(i, j) = draw::normal(rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = slope * x(i, 0) + draw::normal(rng);
  for (int j = 0; j < q; ++j) x.col(j) = standardized(x.col(j));
  return make_regression_problem(standardized(y), x);
}

/// Mean and Monte-Carlo standard error from non-overlapping batch means.
struct BatchEstimate {
  double mean;
  double se;
};

inline BatchEstimate batch_means(const std::vector<double>& xs, int batches = 50) {
  const auto n = static_cast<int>(xs.size());
  const int len = n / batches;
  double total = 0.0;
  std::vector<double> bm(static_cast<std::size_t>(batches), 0.0);
  for (int b = 0; b < batches; ++b) {
    for (int i = 0; i < len; ++i) bm[static_cast<std::size_t>(b)] += xs[static_cast<std::size_t>(b * len + i)];
    bm[static_cast<std::size_t>(b)] /= len;
    total += bm[static_cast<std::size_t>(b)];
  }
  const double mean = total / batches;
  double ss = 0.0;
  for (double v : bm) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (batches - 1) / batches)};
}

}  // namespace qgraph::testing
