// bec-ramsey: batch front end for the ground, sweep, evolution and model
// pipelines. Precedence: convenience flags > --set > config file > defaults.

#include "bec/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<double> N;
  std::optional<int> q;
  std::optional<double> match;
  std::optional<double> horizon;
  std::optional<double> dt;
  std::optional<int> workers;
  std::optional<int> n_rho;
  std::optional<int> n_z;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "override a config key, e.g. --set trap.q=4 (repeatable)");
  app->add_option("--N", c.N, "atom number(s); several values give an N list");
  app->add_option("--q", c.q, "longitudinal power-law exponent");
  app->add_option("--match-crossover", c.match, "target transverse critical number for k");
  app->add_option("--horizon", c.horizon, "evolution horizon in seconds");
  app->add_option("--dt", c.dt, "real-time step in trap units");
  app->add_option("--workers", c.workers, "concurrent sweep workers");
  app->add_option("--n-rho", c.n_rho, "radial grid points");
  app->add_option("--n-z", c.n_z, "longitudinal grid points (power of two)");
  app->add_option("-o,--out", c.out, "output directory (relative to $BEC_RAMSEY_OUTPUT_ROOT)");
}

bec::RunConfig resolve(const Common& c) {
  std::map<std::string, std::string> ov;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw bec::ConfigError("--set " + s + ": expected key=value");
    ov[s.substr(0, eq)] = s.substr(eq + 1);
  }
  auto d = [](double x) { return bec::json(x).dump(); };
  if (!c.N.empty())
    ov["atoms"] = c.N.size() == 1 ? bec::json{{"N", c.N[0]}}.dump() : bec::json{{"N_list", c.N}}.dump();
  if (c.q)
    ov["trap.q"] = std::to_string(*c.q);
  if (c.match)
    ov["trap.match_crossover"] = d(*c.match);
  if (c.horizon)
    ov["protocol.horizon_s"] = d(*c.horizon);
  if (c.dt)
    ov["protocol.dt"] = d(*c.dt);
  if (c.workers)
    ov["sweep.workers"] = std::to_string(*c.workers);
  if (c.n_rho)
    ov["grid.n_rho"] = std::to_string(*c.n_rho);
  if (c.n_z)
    ov["grid.n_z"] = std::to_string(*c.n_z);
  if (!c.out.empty())
    ov["output.dir"] = bec::json(c.out).dump();
  return c.config.empty() ? bec::default_config(ov) : bec::load_config(c.config, ov);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear Ramsey interferometry of a two-mode condensate"};
  app.set_version_flag("--version", bec::code_version());
  app.require_subcommand(1);

  Common common;
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  auto* ground = app.add_subcommand("ground", "3D ground state(s): eta_N, mu, energies");
  auto* sweep = app.add_subcommand("eta-sweep", "eta_N over a log-spaced N range with power-law fits");
  auto* evolve = app.add_subcommand("evolve", "two-mode real-time evolution and Josephson overlay");
  auto* models = app.add_subcommand("models", "closed-form and semi-analytic fringe models");
  auto* analyze = app.add_subcommand("analyze", "fringe statistics of a series CSV");
  auto* figure = app.add_subcommand("reproduce-figure", "data sets for figures 1..7 (eta sweep, fringes, model overlays)");
  for (auto* s : {ground, sweep, evolve, models, figure})
    add_common(s, common);

  std::vector<std::string> model_names{"josephson"};
  std::string ground_file;
  models->add_option("-m,--model", model_names,
                     "josephson, improved_tf, improved_adhoc, quantum_exact (repeatable)");
  models->add_option("--ground", ground_file, "ground.json with eta_N (default: <out>/ground.json)");

  std::string series, against, analysis_out;
  double horizon_s = 0.0;
  analyze->add_option("series", series, "FringeSeries CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--against", against, "second series to compare with")->check(CLI::ExistingFile);
  analyze->add_option("--horizon", horizon_s, "restrict to t <= horizon seconds");
  analyze->add_option("--write", analysis_out, "also write the key = value block here");

  int fig = 0;
  std::optional<double> fig_horizon;
  figure->add_option("--fig", fig, "figure id")->required()->check(CLI::Range(1, 7));
  figure->remove_option(figure->get_option("--horizon"));
  figure->add_option("--horizon", fig_horizon, "evolution horizon in seconds (default per figure)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed())
      return bec::cmd_analyze(series, against.empty() ? std::nullopt : std::optional<std::filesystem::path>(against),
                              horizon_s,
                              analysis_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(analysis_out),
                              std::cout);
    const bec::RunConfig cfg = resolve(common);
    if (print_config) {
      std::cout << bec::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (ground->parsed())
      return bec::cmd_ground(cfg, std::cerr);
    if (sweep->parsed())
      return bec::cmd_eta_sweep(cfg, std::cerr);
    if (evolve->parsed())
      return bec::cmd_evolve(cfg, std::cerr);
    if (models->parsed())
      return bec::cmd_models(cfg, model_names,
                             ground_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(ground_file),
                             std::cerr);
    if (figure->parsed())
      return bec::cmd_reproduce_figure(cfg, fig, fig_horizon, std::cerr);
  } catch (const bec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
