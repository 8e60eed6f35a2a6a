#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/io.hpp"

namespace qgraph {

struct RunConfig {
  std::string input;
  std::string output_dir = ".";
  EngineKind engine = EngineKind::vb;
  std::vector<double> taus{0.3, 0.5, 0.7};
  PriorConfig priors;
  McmcConfig mcmc;
  VbConfig vb;
  double threshold = 0.5;
  int jobs = 1;
  std::uint64_t seed = 1;
  std::string trace_dir;

  /// Throws std::invalid_argument on the first bad field.
  void validate() const;
  /// Settings that determine the fit; paths and jobs are left out.
  ordered_json snapshot() const;
};

/// Load, standardize, fit every node and build the graph. No files written.
FitReport fit_dataset(const Dataset& raw, const RunConfig& cfg, std::vector<NodeFailure>* failures);

// Each command returns a process exit status and reports errors on stderr.

int cmd_fit(const RunConfig& cfg);
int cmd_simulate(const std::string& spec_name, int n, std::uint64_t seed, const std::string& out_dir);

/// `partition` is example1, example2, pgtn or explicit; explicit uses the
/// one-based g1/g2 node lists.
int cmd_eval(const std::string& fitted_path, const std::string& truth_path,
             const std::string& partition, const std::vector<int>& g1, const std::vector<int>& g2,
             const std::string& out_dir);

int cmd_diag(const std::string& data_path, const std::string& report_path,
             const std::string& out_dir);

int run_cli(int argc, char** argv);

}  // namespace qgraph
