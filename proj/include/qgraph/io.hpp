#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "qgraph/graph.hpp"
#include "qgraph/model.hpp"

namespace qgraph {

using ordered_json = nlohmann::ordered_json;

/// Header row of names followed by numeric rows. Errors report the 1-based
/// data row (header excluded) and column of the offending cell.
Dataset parse_csv(std::istream& in, const std::string& source = "<input>");
Dataset load_csv(const std::string& path);

/// Values written with 17 significant digits.
void write_csv(const Dataset& d, std::ostream& out);

/// Header of node names, then P rows of 0/1.
void write_adjacency(const Graph& g, std::ostream& out);
/// Rejects non-square, non-0/1, asymmetric or self-looped matrices.
Graph read_adjacency(std::istream& in, const std::string& source = "<input>");

/// node_i, node_j, sign, incl_prob_ij, incl_prob_ji where incl_prob_ij is the
/// inclusion probability of node_j in node_i's fit.
void write_edges_tsv(const Graph& g, const Eigen::MatrixXd& inclusion, std::ostream& out);

/// node_i, node_j header, one edge per row.
void write_edge_list(const Graph& g, std::ostream& out);
/// Names are resolved against `names`; the result has those nodes.
Graph read_edge_list(std::istream& in, const std::vector<std::string>& names,
                     const std::string& source = "<input>");

/// Undirected DOT graph with the sign as an edge attribute.
void write_dot(const Graph& g, std::ostream& out);

ordered_json to_json(const NeighborhoodPosterior& post);
NeighborhoodPosterior posterior_from_json(const ordered_json& j);

/// Everything needed to rebuild the fit except wall-clock timings, so equal
/// inputs give byte-identical documents.
ordered_json report_to_json(const FitReport& report);
FitReport report_from_json(const ordered_json& j);

/// Wall-clock timings, kept apart from the deterministic report.
ordered_json timing_to_json(const FitReport& report);

ordered_json to_json(const McmcState& s);
McmcState mcmc_state_from_json(const ordered_json& j);
ordered_json to_json(const VariationalState& s);
VariationalState vb_state_from_json(const ordered_json& j);

}  // namespace qgraph
