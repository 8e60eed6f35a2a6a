#include "qgraph/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qgraph {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string_view rest(line);
  for (;;) {
    const auto pos = rest.find(sep);
    out.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool blank(const std::string& line) { return trim(line).empty(); }

std::string fmt17(double x) { return fmt::format("{:.17g}", x); }

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const ordered_json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    names = split(line, ',');
    break;
  }
  if (names.empty()) throw std::invalid_argument(fmt::format("{}: empty file", source));
  std::set<std::string> unique;
  for (const auto& n : names) {
    if (n.empty()) throw std::invalid_argument(fmt::format("{}: empty column name", source));
    if (!unique.insert(n).second)
      throw std::invalid_argument(fmt::format("{}: duplicate column name '{}'", source, n));
  }

  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() != names.size())
      throw std::invalid_argument(fmt::format("{}: row {} has {} cells, expected {}", source, row,
                                              cells.size(), names.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double x = 0.0;
      if (!parse_double(cells[c], x))
        throw std::invalid_argument(fmt::format("{}: non-numeric or missing value '{}' at row {}, column {}",
                                                source, cells[c], row, c + 1));
      values.push_back(x);
    }
  }
  if (row < 2) throw std::invalid_argument(fmt::format("{}: fewer than 2 rows of data", source));

  const auto p = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(row), p);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = values[static_cast<std::size_t>(i * p + j)];
  return make_dataset(std::move(m), std::move(names));
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return parse_csv(in, path);
}

void write_csv(const Dataset& d, std::ostream& out) {
  for (std::size_t j = 0; j < d.column_names.size(); ++j)
    out << (j ? "," : "") << d.column_names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) out << (j ? "," : "") << fmt17(d.values(i, j));
    out << '\n';
  }
}

void write_adjacency(const Graph& g, std::ostream& out) {
  for (std::size_t j = 0; j < g.node_names.size(); ++j) out << (j ? "," : "") << g.node_names[j];
  out << '\n';
  for (int i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.size(); ++j) out << (j ? "," : "") << g.adjacency(i, j);
    out << '\n';
  }
}

Graph read_adjacency(std::istream& in, const std::string& source) {
  const Dataset d = parse_csv(in, source);
  if (d.rows() != d.cols())
    throw std::invalid_argument(
        fmt::format("{}: adjacency must be square, got {}x{}", source, d.rows(), d.cols()));
  const int p = static_cast<int>(d.cols());
  Graph g = Graph::empty(p, d.column_names);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double a = d.values(i, j);
      if (a != 0.0 && a != 1.0)
        throw std::invalid_argument(fmt::format("{}: entry ({}, {}) is not 0/1", source, i + 1, j + 1));
      if (a != d.values(j, i))
        throw std::invalid_argument(fmt::format("{}: adjacency is not symmetric at ({}, {})", source,
                                                i + 1, j + 1));
      if (i == j && a != 0.0)
        throw std::invalid_argument(fmt::format("{}: self-loop at node {}", source, i + 1));
      g.adjacency(i, j) = static_cast<int>(a);
    }
  }
  return g;
}

void write_edges_tsv(const Graph& g, const Eigen::MatrixXd& inclusion, std::ostream& out) {
  out << "node_i\tnode_j\tsign\tincl_prob_ij\tincl_prob_ji\n";
  for (const auto& [i, j] : g.edges()) {
    const auto it = g.signs.find(Edge{i, j});
    const EdgeSign s = it == g.signs.end() ? EdgeSign::inconclusive : it->second;
    out << g.node_names[static_cast<std::size_t>(i)] << '\t' << g.node_names[static_cast<std::size_t>(j)]
        << '\t' << to_string(s) << '\t' << fmt17(inclusion(j, i)) << '\t' << fmt17(inclusion(i, j))
        << '\n';
  }
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "node_i\tnode_j\n";
  for (const auto& [i, j] : g.edges())
    out << g.node_names[static_cast<std::size_t>(i)] << '\t' << g.node_names[static_cast<std::size_t>(j)]
        << '\n';
}

Graph read_edge_list(std::istream& in, const std::vector<std::string>& names,
                     const std::string& source) {
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < names.size(); ++k) index[names[k]] = static_cast<int>(k);
  Graph g = Graph::empty(static_cast<int>(names.size()), names);
  std::string line;
  bool header = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    const auto cells = split(line, '\t');
    if (header) {
      header = false;
      if (cells.size() >= 2 && cells[0] == "node_i") continue;
    }
    ++row;
    if (cells.size() < 2)
      throw std::invalid_argument(fmt::format("{}: row {} needs two node names", source, row));
    const auto a = index.find(cells[0]);
    const auto b = index.find(cells[1]);
    if (a == index.end() || b == index.end())
      throw std::invalid_argument(fmt::format("{}: row {} names an unknown node", source, row));
    g.add_edge(a->second, b->second);
  }
  return g;
}

void write_dot(const Graph& g, std::ostream& out) {
  out << "graph qgraph {\n";
  for (const auto& [i, j] : g.edges()) {
    const auto it = g.signs.find(Edge{i, j});
    const EdgeSign s = it == g.signs.end() ? EdgeSign::inconclusive : it->second;
    out << "  \"" << g.node_names[static_cast<std::size_t>(i)] << "\" -- \""
        << g.node_names[static_cast<std::size_t>(j)] << "\" [sign=\"" << to_string(s) << "\"];\n";
  }
  out << "}\n";
}

ordered_json to_json(const NeighborhoodPosterior& post) {
  ordered_json j;
  j["node_index"] = post.node_index;
  j["engine"] = to_string(post.engine);
  j["predictor_map"] = post.predictor_map;
  j["incl_prob"] = vector_to_json(post.incl_prob);
  j["coef_mean"] = matrix_to_json(post.coef_mean);
  j["coef_sd"] = matrix_to_json(post.coef_sd);
  if (post.coef_lower.size() > 0) {
    j["coef_lower"] = matrix_to_json(post.coef_lower);
    j["coef_upper"] = matrix_to_json(post.coef_upper);
  }
  j["diagnostics"] = {{"iterations", post.diagnostics.iterations},
                      {"converged", post.diagnostics.converged},
                      {"final_metric", post.diagnostics.final_metric},
                      {"acceptance_rate", post.diagnostics.acceptance_rate}};
  return j;
}

NeighborhoodPosterior posterior_from_json(const ordered_json& j) {
  NeighborhoodPosterior post;
  post.node_index = j.at("node_index").get<int>();
  post.engine = engine_from_string(j.at("engine").get<std::string>());
  post.predictor_map = j.at("predictor_map").get<std::vector<int>>();
  post.incl_prob = vector_from_json(j.at("incl_prob"));
  post.coef_mean = matrix_from_json(j.at("coef_mean"));
  post.coef_sd = matrix_from_json(j.at("coef_sd"));
  if (j.contains("coef_lower")) {
    post.coef_lower = matrix_from_json(j.at("coef_lower"));
    post.coef_upper = matrix_from_json(j.at("coef_upper"));
  }
  const auto& d = j.at("diagnostics");
  post.diagnostics.iterations = d.at("iterations").get<int>();
  post.diagnostics.converged = d.at("converged").get<bool>();
  post.diagnostics.final_metric = d.at("final_metric").get<double>();
  post.diagnostics.acceptance_rate = d.at("acceptance_rate").get<double>();
  return post;
}

ordered_json report_to_json(const FitReport& report) {
  ordered_json j;
  j["engine"] = to_string(report.engine);
  j["taus"] = report.taus;
  j["threshold"] = report.threshold;
  j["config"] = report.config;
  j["node_names"] = report.graph.node_names;
  ordered_json nodes = ordered_json::array();
  for (const auto& post : report.posteriors) {
    ordered_json n = to_json(post);
    n["name"] = report.graph.node_names.at(static_cast<std::size_t>(post.node_index));
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  ordered_json edges = ordered_json::array();
  for (const auto& [i, jj] : report.graph.edges()) {
    const auto it = report.graph.signs.find(Edge{i, jj});
    edges.push_back({{"i", i},
                     {"j", jj},
                     {"sign", to_string(it == report.graph.signs.end() ? EdgeSign::inconclusive
                                                                       : it->second)}});
  }
  j["edges"] = std::move(edges);
  return j;
}

FitReport report_from_json(const ordered_json& j) {
  FitReport r;
  r.engine = engine_from_string(j.at("engine").get<std::string>());
  r.taus = j.at("taus").get<std::vector<double>>();
  r.threshold = j.at("threshold").get<double>();
  r.config = j.at("config");
  auto names = j.at("node_names").get<std::vector<std::string>>();
  for (const auto& n : j.at("nodes")) r.posteriors.push_back(posterior_from_json(n));
  const int p = static_cast<int>(names.size());
  r.graph = Graph::empty(p, std::move(names));
  for (const auto& e : j.at("edges")) {
    const int a = e.at("i").get<int>();
    const int b = e.at("j").get<int>();
    r.graph.add_edge(a, b);
    r.graph.signs[make_edge(a, b)] = edge_sign_from_string(e.at("sign").get<std::string>());
  }
  return r;
}

ordered_json timing_to_json(const FitReport& report) {
  ordered_json j;
  j["engine"] = to_string(report.engine);
  j["total_wall_seconds"] = report.wall_seconds;
  ordered_json nodes = ordered_json::array();
  for (const auto& post : report.posteriors)
    nodes.push_back({{"node_index", post.node_index},
                     {"iterations", post.diagnostics.iterations},
                     {"wall_seconds", post.diagnostics.wall_seconds}});
  j["nodes"] = std::move(nodes);
  return j;
}

ordered_json to_json(const McmcState& s) {
  std::vector<int> ind(s.indicators.begin(), s.indicators.end());
  return {{"beta", matrix_to_json(s.beta)},
          {"indicators", ind},
          {"pi", s.pi},
          {"t", s.t},
          {"v", matrix_to_json(s.v)}};
}

McmcState mcmc_state_from_json(const ordered_json& j) {
  McmcState s;
  s.beta = matrix_from_json(j.at("beta"));
  for (int b : j.at("indicators").get<std::vector<int>>()) s.indicators.push_back(b ? 1 : 0);
  s.pi = j.at("pi").get<double>();
  s.t = j.at("t").get<double>();
  s.v = matrix_from_json(j.at("v"));
  return s;
}

ordered_json to_json(const VariationalState& s) {
  ordered_json cov = ordered_json::array();
  for (const auto& c : s.beta_cov) cov.push_back(matrix_to_json(c));
  return {{"beta_mean", matrix_to_json(s.beta_mean)},
          {"beta_cov", std::move(cov)},
          {"incl_prob", vector_to_json(s.incl_prob)},
          {"pi_a", s.pi_a},
          {"pi_b", s.pi_b},
          {"t_a", s.t_a},
          {"t_b", s.t_b},
          {"expected_t", s.expected_t},
          {"v_lambda", matrix_to_json(s.v_lambda)},
          {"v_mu", matrix_to_json(s.v_mu)},
          {"v_mean", matrix_to_json(s.v_mean)},
          {"v_mean_inverse", matrix_to_json(s.v_mean_inverse)}};
}

VariationalState vb_state_from_json(const ordered_json& j) {
  VariationalState s;
  s.beta_mean = matrix_from_json(j.at("beta_mean"));
  for (const auto& c : j.at("beta_cov")) s.beta_cov.push_back(matrix_from_json(c));
  s.incl_prob = vector_from_json(j.at("incl_prob"));
  s.pi_a = j.at("pi_a").get<double>();
  s.pi_b = j.at("pi_b").get<double>();
  s.t_a = j.at("t_a").get<double>();
  s.t_b = j.at("t_b").get<double>();
  s.expected_t = j.at("expected_t").get<double>();
  s.v_lambda = matrix_from_json(j.at("v_lambda"));
  s.v_mu = matrix_from_json(j.at("v_mu"));
  s.v_mean = matrix_from_json(j.at("v_mean"));
  s.v_mean_inverse = matrix_from_json(j.at("v_mean_inverse"));
  return s;
}

}  // namespace qgraph
