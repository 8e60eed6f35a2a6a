#include "qgraph/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include "CLI11.hpp"

#include "qgraph/simgen.hpp"

namespace qgraph {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return in;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create '{}': {}", dir, ec.message()));
}

const char* to_string(VSampler v) { return v == VSampler::exact ? "exact" : "metropolis"; }

VSampler v_sampler_from_string(const std::string& s) {
  if (s == "exact") return VSampler::exact;
  if (s == "metropolis") return VSampler::metropolis;
  throw std::invalid_argument(fmt::format("unknown v sampler '{}'", s));
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

void RunConfig::validate() const {
  if (taus.empty()) throw std::invalid_argument("at least one tau is required");
  QuantileGrid grid(taus);  // checks ordering and range
  priors.validate();
  if (engine == EngineKind::mcmc) mcmc.validate();
  else vb.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1]");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

ordered_json RunConfig::snapshot() const {
  ordered_json j;
  j["engine"] = to_string(engine);
  j["taus"] = taus;
  j["threshold"] = threshold;
  j["seed"] = seed;
  j["priors"] = {{"a0", priors.a0},
                 {"b0", priors.b0},
                 {"a1", priors.a1},
                 {"b1", priors.b1},
                 {"sigma_beta2", priors.sigma_beta2}};
  j["priors"]["fix_t"] = priors.fix_t ? ordered_json(*priors.fix_t) : ordered_json(nullptr);
  if (engine == EngineKind::mcmc) {
    j["mcmc"] = {{"n_iterations", mcmc.n_iterations},
                 {"burn_in", mcmc.burn_in},
                 {"thin", mcmc.thin},
                 {"v_method", to_string(mcmc.v_method)}};
  } else {
    j["vb"] = {{"max_iterations", vb.max_iterations}, {"tolerance", vb.tolerance}};
  }
  return j;
}

FitReport fit_dataset(const Dataset& raw, const RunConfig& cfg, std::vector<NodeFailure>* failures) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dataset d = standardize(raw);
  const QuantileGrid grid(cfg.taus);

  FitOptions opts;
  opts.engine = cfg.engine;
  opts.mcmc = cfg.mcmc;
  opts.vb = cfg.vb;
  opts.seed = cfg.seed;
  opts.jobs = cfg.jobs;
  opts.trace_dir = cfg.trace_dir;
  NodeFits fits = fit_all_nodes(d, grid, cfg.priors, opts);
  if (!fits.failures.empty()) {
    if (failures) *failures = fits.failures;
    std::ostringstream msg;
    msg << fits.failures.size() << " node fit(s) failed";
    for (const auto& f : fits.failures)
      msg << "\n  " << d.column_names[static_cast<std::size_t>(f.node_index)] << ": " << f.message;
    throw std::runtime_error(msg.str());
  }

  FitReport report;
  report.graph = assemble_graph(fits.posteriors, cfg.threshold, d.column_names);
  report.graph.signs = edge_signs(fits.posteriors, report.graph, cfg.threshold);
  report.posteriors = std::move(fits.posteriors);
  report.engine = cfg.engine;
  report.taus = cfg.taus;
  report.threshold = cfg.threshold;
  report.config = cfg.snapshot();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

int cmd_fit(const RunConfig& cfg) {
  return guarded([&] {
    if (cfg.input.empty()) throw std::invalid_argument("no input file given");
    const Dataset raw = load_csv(cfg.input);
    ensure_dir(cfg.output_dir);
    ensure_dir(cfg.trace_dir);
    const FitReport report = fit_dataset(raw, cfg, nullptr);
    const fs::path out(cfg.output_dir);
    {
      auto f = open_out(out / "adjacency.csv");
      write_adjacency(report.graph, f);
    }
    {
      auto f = open_out(out / "edges.tsv");
      write_edges_tsv(report.graph, inclusion_matrix(report.posteriors), f);
    }
    {
      auto f = open_out(out / "graph.dot");
      write_dot(report.graph, f);
    }
    {
      auto f = open_out(out / "report.json");
      f << report_to_json(report).dump(1) << '\n';
    }
    {
      ordered_json timing = timing_to_json(report);
      timing["jobs"] = cfg.jobs;
      auto f = open_out(out / "timing.json");
      f << timing.dump(1) << '\n';
    }
    std::cout << fmt::format("{} nodes, {} edges, {:.3f} s\n", report.graph.size(),
                             report.graph.num_edges(), report.wall_seconds);
    return 0;
  });
}

int cmd_simulate(const std::string& spec_name, int n, std::uint64_t seed, const std::string& out_dir) {
  return guarded([&] {
    const SimOutput sim = simulate(spec_name, n, seed);
    ensure_dir(out_dir);
    const fs::path out(out_dir);
    {
      auto f = open_out(out / "data.csv");
      write_csv(sim.dataset, f);
    }
    {
      auto f = open_out(out / "truth_edges.tsv");
      write_edge_list(sim.truth, f);
    }
    std::cout << fmt::format("{}: {} x {}, {} truth edges\n", sim.spec_name, sim.dataset.rows(),
                             sim.dataset.cols(), sim.truth.num_edges());
    return 0;
  });
}

int cmd_eval(const std::string& fitted_path, const std::string& truth_path,
             const std::string& partition, const std::vector<int>& g1, const std::vector<int>& g2,
             const std::string& out_dir) {
  return guarded([&] {
    auto fin = open_in(fitted_path);
    const Graph fitted = read_adjacency(fin, fitted_path);
    auto tin = open_in(truth_path);
    Graph truth;
    if (fs::path(truth_path).extension() == ".csv") {
      truth = read_adjacency(tin, truth_path);
    } else {
      truth = read_edge_list(tin, fitted.node_names, truth_path);
    }
    if (truth.size() != fitted.size())
      throw std::invalid_argument(
          fmt::format("fitted graph has {} nodes, truth has {}", fitted.size(), truth.size()));

    std::vector<int> nodes1, nodes2;
    std::vector<Edge> induced;
    if (partition == "example1") {
      const SimOutput ref = gen_example1(2, 0);
      nodes1 = ref.g1_nodes;
    } else if (partition == "example2" || partition == "pgtn") {
      const SimOutput ref = gen_example2(2, 0);
      nodes1 = ref.g1_nodes;
      nodes2 = ref.g2_nodes;
      induced = ref.induced_edges;
    } else if (partition == "explicit") {
      for (int k : g1) nodes1.push_back(k - 1);
      for (int k : g2) nodes2.push_back(k - 1);
    } else {
      throw std::invalid_argument(fmt::format("unknown partition '{}'", partition));
    }
    for (int k : nodes1)
      if (k < 0 || k >= fitted.size()) throw std::invalid_argument("partition node out of range");
    for (int k : nodes2)
      if (k < 0 || k >= fitted.size()) throw std::invalid_argument("partition node out of range");

    const Metrics m = evaluate(fitted, truth, nodes1, nodes2, induced);
    ordered_json j = {{"fdr_count", m.fdr_count}, {"e1", m.e1},
                      {"e2", m.e2},               {"e2_direct", m.e2_direct},
                      {"e3", m.e3},               {"true_positives", m.true_positives},
                      {"fitted_edges", m.fitted_edges}};
    std::cout << j.dump(1) << '\n';
    ensure_dir(out_dir);
    auto f = open_out(fs::path(out_dir) / "metrics.json");
    f << j.dump(1) << '\n';
    return 0;
  });
}

int cmd_diag(const std::string& data_path, const std::string& report_path,
             const std::string& out_dir) {
  return guarded([&] {
    const Dataset d = standardize(load_csv(data_path));
    auto rin = open_in(report_path);
    const FitReport report = report_from_json(ordered_json::parse(rin));
    if (report.graph.node_names != d.column_names)
      throw std::invalid_argument("report and data have different columns");
    const QuantileGrid grid(report.taus);
    const Eigen::MatrixXd table = residual_table(d, report, grid, report.threshold);
    ensure_dir(out_dir);
    auto f = open_out(fs::path(out_dir) / "residuals.csv");
    f << "node,tau,mean_residual\n";
    for (Eigen::Index k = 0; k < table.rows(); ++k)
      for (Eigen::Index l = 0; l < table.cols(); ++l)
        f << d.column_names[static_cast<std::size_t>(k)] << ','
          << fmt::format("{:.17g},{:.17g}\n", grid.tau(static_cast<std::size_t>(l)), table(k, l));
    std::cout << fmt::format("mean residual: {:.17g}\n", table.mean());
    return 0;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian multi-quantile neighborhood selection for graphical models"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string engine = "vb", v_method = "exact";
  std::optional<double> fix_t;
  std::optional<int> iterations;
  // Settings for fit go under a [fit] section; the command line wins.
  app.set_config("--config", "", "TOML/INI settings file");
  auto* fit = app.add_subcommand("fit", "fit a graph to a CSV data file");
  fit->fallthrough();
  fit->add_option("input", cfg.input, "data CSV with a header row")->required();
  fit->add_option("-o,--out", cfg.output_dir, "output directory");
  fit->add_option("--engine", engine, "vb or mcmc")->check(CLI::IsMember({"vb", "mcmc"}));
  fit->add_option("--taus", cfg.taus, "quantile levels")->delimiter(',');
  fit->add_option("--threshold", cfg.threshold, "inclusion probability threshold");
  fit->add_option("--seed", cfg.seed);
  fit->add_option("--jobs", cfg.jobs, "node fits run concurrently");
  fit->add_option("--fix-t", fix_t, "hold the scale t at this value");
  fit->add_option("--iterations", iterations, "MCMC iterations or VB iteration cap");
  fit->add_option("--burn-in", cfg.mcmc.burn_in);
  fit->add_option("--thin", cfg.mcmc.thin);
  fit->add_option("--v-method", v_method)->check(CLI::IsMember({"exact", "metropolis"}));
  fit->add_option("--tolerance", cfg.vb.tolerance);
  fit->add_option("--a0", cfg.priors.a0);
  fit->add_option("--b0", cfg.priors.b0);
  fit->add_option("--a1", cfg.priors.a1);
  fit->add_option("--b1", cfg.priors.b1);
  fit->add_option("--sigma-beta2", cfg.priors.sigma_beta2);
  fit->add_option("--trace-dir", cfg.trace_dir, "write one trace CSV per node here");

  std::string sim_name, sim_out = ".";
  int sim_n = 0;
  std::uint64_t sim_seed = 1;
  auto* sim = app.add_subcommand("simulate", "draw a dataset with a known graph");
  sim->add_option("spec", sim_name, "example1, example2 or pgtn")->required();
  sim->add_option("-n", sim_n, "sample size (default 200, 100 for pgtn)");
  sim->add_option("--seed", sim_seed);
  sim->add_option("-o,--out", sim_out);

  std::string ev_fitted, ev_truth, ev_partition = "example2", ev_out = ".";
  std::vector<int> ev_g1, ev_g2;
  auto* ev = app.add_subcommand("eval", "compare a fitted adjacency with the truth");
  ev->add_option("fitted", ev_fitted, "adjacency.csv")->required();
  ev->add_option("truth", ev_truth, "truth_edges.tsv or adjacency CSV")->required();
  ev->add_option("--partition", ev_partition, "example1, example2, pgtn or explicit");
  ev->add_option("--g1", ev_g1, "one-based nodes of the first block")->delimiter(',');
  ev->add_option("--g2", ev_g2, "one-based nodes of the second block")->delimiter(',');
  ev->add_option("-o,--out", ev_out);

  std::string dg_data, dg_report, dg_out = ".";
  auto* dg = app.add_subcommand("diag", "mean check-loss residual of a fit");
  dg->add_option("data", dg_data)->required();
  dg->add_option("report", dg_report, "report.json from fit")->required();
  dg->add_option("-o,--out", dg_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*fit) {
    cfg.engine = engine_from_string(engine);
    cfg.mcmc.v_method = v_sampler_from_string(v_method);
    cfg.priors.fix_t = fix_t;
    if (iterations) {
      cfg.mcmc.n_iterations = *iterations;
      cfg.vb.max_iterations = *iterations;
    }
    return cmd_fit(cfg);
  }
  if (*sim) {
    if (sim_n == 0) sim_n = sim_name == "pgtn" ? 100 : 200;
    return cmd_simulate(sim_name, sim_n, sim_seed, sim_out);
  }
  if (*ev) {
    if (!ev_g1.empty() || !ev_g2.empty()) ev_partition = "explicit";
    return cmd_eval(ev_fitted, ev_truth, ev_partition, ev_g1, ev_g2, ev_out);
  }
  return cmd_diag(dg_data, dg_report, dg_out);
}

}  // namespace qgraph
