#include "bec/harness.hpp"

#include "bec/analysis.hpp"
#include "bec/dynamics.hpp"
#include "bec/models.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#ifndef BEC_RAMSEY_VERSION
#define BEC_RAMSEY_VERSION "0.0.0-unknown"
#endif

namespace bec {

namespace fs = std::filesystem;

namespace {

constexpr double kReferenceOmegaZHz = 3.5;

std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- config

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw ConfigError(key + ": " + msg);
}

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    fail(section, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      ok = ok || key == a;
    if (!ok)
      fail(section.empty() ? key : section + "." + key, "unknown key");
  }
}

double get_number(const json& obj, const std::string& section, const char* key, double fallback) {
  if (!obj.contains(key))
    return fallback;
  const json& v = obj.at(key);
  if (!v.is_number())
    fail(section + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    fail(section + "." + key, "must be finite");
  return x;
}

double get_positive(const json& obj, const std::string& section, const char* key, double fallback) {
  const double x = get_number(obj, section, key, fallback);
  if (!(x > 0.0))
    fail(section + "." + key, "must be positive");
  return x;
}

long get_integer(const json& obj, const std::string& section, const char* key, long fallback,
                 long min_value) {
  if (!obj.contains(key))
    return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    fail(section + "." + key, "expected an integer");
  const long x = v.get<long>();
  if (x < min_value)
    fail(section + "." + key, "must be at least " + std::to_string(min_value));
  return x;
}

json section_of(const json& doc, const char* name) {
  return doc.contains(name) ? doc.at(name) : json::object();
}

std::string guess_name(InitialGuess g) {
  return g == InitialGuess::quasi_1d ? "quasi_1d" : "thomas_fermi";
}

// "a.b.c" = text; text is parsed as JSON when possible, else taken as a string.
void apply_override(json& doc, const std::string& path, const std::string& text) {
  if (path.empty())
    fail("--set", "empty key");
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty())
      fail(path, "malformed key");
    if (!node->is_object())
      fail(path, "parent is not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null())
      *node = json::object();
    start = dot + 1;
  }
}

RunConfig resolve(const json& doc) {
  check_keys(doc, "", {"species", "trap", "atoms", "grid", "solver", "protocol", "output", "sweep"});
  RunConfig cfg;

  const json sp = section_of(doc, "species");
  check_keys(sp, "species", {"a11", "a12", "a22", "mass_kg"});
  cfg.species.a11 = get_positive(sp, "species", "a11", cfg.species.a11);
  cfg.species.a12 = get_positive(sp, "species", "a12", cfg.species.a12);
  cfg.species.a22 = get_positive(sp, "species", "a22", cfg.species.a22);
  cfg.species.mass = get_positive(sp, "species", "mass_kg", cfg.species.mass);

  const json tr = section_of(doc, "trap");
  check_keys(tr, "trap", {"omega_T_hz", "q", "omega_z_hz", "k_si", "match_crossover"});
  cfg.omega_T_hz = get_positive(tr, "trap", "omega_T_hz", cfg.omega_T_hz);
  cfg.trap.omega_T = 2.0 * std::numbers::pi * cfg.omega_T_hz;
  cfg.trap.q = static_cast<int>(get_integer(tr, "trap", "q", 2, 2));
  const int given = int(tr.contains("omega_z_hz")) + int(tr.contains("k_si")) +
                    int(tr.contains("match_crossover"));
  if (given > 1)
    fail("trap", "give at most one of omega_z_hz, k_si, match_crossover");

  auto reference_NT = [&] {
    TrapSpec ref;
    ref.omega_T = cfg.trap.omega_T;
    ref.q = 2;
    ref.k = harmonic_stiffness(2.0 * std::numbers::pi * kReferenceOmegaZHz, cfg.species.mass);
    return critical_atom_numbers(ref, cfg.species).N_T_bar;
  };
  auto match = [&](double target, const std::string& label) {
    cfg.trap.k = stiffness_for_matched_crossover(cfg.trap.q, target, cfg.trap.omega_T, cfg.species);
    cfg.trap_source = "match_crossover = " + label;
  };

  if (tr.contains("k_si")) {
    cfg.trap.k = get_positive(tr, "trap", "k_si", 0.0);
    cfg.trap_source = "k_si";
  } else if (tr.contains("omega_z_hz")) {
    if (cfg.trap.q != 2)
      fail("trap.omega_z_hz", "only meaningful for q = 2");
    const double wz = get_positive(tr, "trap", "omega_z_hz", 0.0);
    cfg.trap.k = harmonic_stiffness(2.0 * std::numbers::pi * wz, cfg.species.mass);
    cfg.trap_source = "omega_z_hz = " + num(wz);
  } else if (tr.contains("match_crossover")) {
    const json& m = tr.at("match_crossover");
    if (m.is_string()) {
      if (m.get<std::string>() != "reference")
        fail("trap.match_crossover", "expected a number or \"reference\"");
      const double nt = reference_NT();
      match(nt, "reference (" + num(nt) + ")");
    } else {
      match(get_positive(tr, "trap", "match_crossover", 0.0), num(tr.at("match_crossover").get<double>()));
    }
  } else if (cfg.trap.q == 2) {
    cfg.trap.k = harmonic_stiffness(2.0 * std::numbers::pi * kReferenceOmegaZHz, cfg.species.mass);
    cfg.trap_source = "omega_z_hz = " + num(kReferenceOmegaZHz);
  } else {
    const double nt = reference_NT();
    match(nt, "reference (" + num(nt) + ")");
  }

  const json at = section_of(doc, "atoms");
  check_keys(at, "atoms", {"N", "N_list"});
  if (at.contains("N") && at.contains("N_list"))
    fail("atoms", "give either N or N_list");
  if (at.contains("N")) {
    cfg.N = {get_positive(at, "atoms", "N", 0.0)};
  } else if (at.contains("N_list")) {
    const json& l = at.at("N_list");
    if (!l.is_array() || l.empty())
      fail("atoms.N_list", "expected a non-empty array");
    cfg.N.clear();
    for (std::size_t i = 0; i < l.size(); ++i) {
      const std::string key = "atoms.N_list[" + std::to_string(i) + "]";
      if (!l[i].is_number())
        fail(key, "expected a number");
      const double n = l[i].get<double>();
      if (!(n > 0.0) || !std::isfinite(n))
        fail(key, "must be positive");
      cfg.N.push_back(n);
    }
  }

  const json gr = section_of(doc, "grid");
  check_keys(gr, "grid", {"n_rho", "n_z", "extent_rho", "z_margin", "z0_margin"});
  cfg.grid.n_rho = static_cast<int>(get_integer(gr, "grid", "n_rho", cfg.grid.n_rho, 8));
  cfg.grid.n_z = static_cast<int>(get_integer(gr, "grid", "n_z", cfg.grid.n_z, 8));
  if ((cfg.grid.n_z & (cfg.grid.n_z - 1)) != 0)
    fail("grid.n_z", "must be a power of two");
  cfg.grid.extent_rho = get_positive(gr, "grid", "extent_rho", cfg.grid.extent_rho);
  cfg.grid.z_margin = get_positive(gr, "grid", "z_margin", cfg.grid.z_margin);
  cfg.grid.z0_margin = get_positive(gr, "grid", "z0_margin", cfg.grid.z0_margin);

  const json so = section_of(doc, "solver");
  check_keys(so, "solver", {"dtau", "dtau_min", "strang_steps", "floor_ratio", "descent_step", "mu_tol",
                            "residual_tol", "window", "max_iterations", "guess"});
  GroundOptions& g = cfg.solver;
  g.dtau = get_positive(so, "solver", "dtau", g.dtau);
  g.dtau_min = get_positive(so, "solver", "dtau_min", g.dtau_min);
  if (g.dtau_min > g.dtau)
    fail("solver.dtau_min", "must not exceed solver.dtau");
  g.strang_steps = get_integer(so, "solver", "strang_steps", g.strang_steps, 0);
  g.floor_ratio = get_positive(so, "solver", "floor_ratio", g.floor_ratio);
  g.descent_step = get_positive(so, "solver", "descent_step", g.descent_step);
  g.mu_tol = get_positive(so, "solver", "mu_tol", g.mu_tol);
  g.residual_tol = get_positive(so, "solver", "residual_tol", g.residual_tol);
  g.window = static_cast<int>(get_integer(so, "solver", "window", g.window, 1));
  g.max_iterations = get_integer(so, "solver", "max_iterations", g.max_iterations, 1);
  if (so.contains("guess")) {
    const json& v = so.at("guess");
    if (v == "thomas_fermi")
      g.guess = InitialGuess::thomas_fermi;
    else if (v == "quasi_1d")
      g.guess = InitialGuess::quasi_1d;
    else
      fail("solver.guess", "expected \"thomas_fermi\" or \"quasi_1d\"");
  }

  const json pr = section_of(doc, "protocol");
  check_keys(pr, "protocol", {"horizon_s", "sample_interval_s", "dt"});
  cfg.protocol.horizon_s = get_positive(pr, "protocol", "horizon_s", cfg.protocol.horizon_s);
  cfg.protocol.sample_interval_s =
      get_positive(pr, "protocol", "sample_interval_s", cfg.protocol.sample_interval_s);
  cfg.protocol.dt = get_positive(pr, "protocol", "dt", cfg.protocol.dt);

  const json ou = section_of(doc, "output");
  check_keys(ou, "output", {"dir", "snapshots"});
  if (ou.contains("dir")) {
    if (!ou.at("dir").is_string() || ou.at("dir").get<std::string>().empty())
      fail("output.dir", "expected a non-empty string");
    cfg.output_dir = ou.at("dir").get<std::string>();
  }
  if (ou.contains("snapshots")) {
    if (!ou.at("snapshots").is_boolean())
      fail("output.snapshots", "expected true or false");
    cfg.snapshots = ou.at("snapshots").get<bool>();
  }

  const json sw = section_of(doc, "sweep");
  check_keys(sw, "sweep", {"N_min", "N_max", "points", "workers", "windows"});
  cfg.sweep.N_min = get_positive(sw, "sweep", "N_min", cfg.sweep.N_min);
  cfg.sweep.N_max = get_positive(sw, "sweep", "N_max", cfg.sweep.N_max);
  if (!(cfg.sweep.N_max > cfg.sweep.N_min))
    fail("sweep.N_max", "must exceed sweep.N_min");
  cfg.sweep.points = static_cast<int>(get_integer(sw, "sweep", "points", cfg.sweep.points, 2));
  cfg.sweep.workers = static_cast<int>(get_integer(sw, "sweep", "workers", cfg.sweep.workers, 1));
  if (sw.contains("windows")) {
    const json& ws = sw.at("windows");
    if (!ws.is_array())
      fail("sweep.windows", "expected an array");
    cfg.sweep.windows.clear();
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const std::string key = "sweep.windows[" + std::to_string(i) + "]";
      check_keys(ws[i], key, {"regime", "N_min", "N_max"});
      FitWindow w;
      if (!ws[i].contains("regime") || !ws[i].at("regime").is_string())
        fail(key + ".regime", "expected a string");
      w.regime = ws[i].at("regime").get<std::string>();
      if (!ws[i].contains("N_min") || !ws[i].contains("N_max"))
        fail(key, "needs N_min and N_max");
      w.N_min = get_positive(ws[i], key, "N_min", 0.0);
      w.N_max = get_positive(ws[i], key, "N_max", 0.0);
      if (!(w.N_max > w.N_min))
        fail(key + ".N_max", "must exceed N_min");
      cfg.sweep.windows.push_back(w);
    }
  }

  try {
    cfg.species.validate();
    cfg.trap.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("trap: ") + e.what());
  }
  return cfg;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto p = what.find("syntax error");
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                      ": " + (p == std::string::npos ? what : what.substr(p)));
  }
}

RunConfig build(json doc, const std::map<std::string, std::string>& overrides) {
  if (!doc.is_object())
    throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : overrides)
    apply_override(doc, key, value);
  return resolve(doc);
}

// ---------------------------------------------------------------- outputs

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_table(const fs::path& file, const Table& t, const std::map<std::string, std::string>& params) {
  std::ofstream os(file);
  if (!os)
    throw std::runtime_error("cannot write " + file.string());
  for (const auto& [k, v] : params)
    os << "# " << k << " = " << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

void write_series(const fs::path& file, const FringeSeries& s,
                  const std::map<std::string, std::string>& params) {
  std::ofstream os(file);
  if (!os)
    throw std::runtime_error("cannot write " + file.string());
  write_csv(os, s, params);
}

std::map<std::string, std::string> merged(std::map<std::string, std::string> base,
                                          const std::map<std::string, std::string>& extra) {
  for (const auto& [k, v] : extra)
    base[k] = v;
  return base;
}

std::string n_label(double N) {
  std::ostringstream os;
  os << "N" << num(N);
  return os.str();
}

// Sample times of propagate(): t = 0 and the end of every block.
std::vector<double> sample_times(long total_steps, int every, double dt) {
  std::vector<double> t{0.0};
  for (long s = 0; s < total_steps;) {
    s += std::min<long>(every, total_steps - s);
    t.push_back(s * dt);
  }
  return t;
}

struct Schedule {
  long steps;
  int every;
  double t_final;
};

Schedule schedule(const RunConfig& cfg, const UnitSystem& units) {
  const double dt = cfg.protocol.dt;
  Schedule s;
  s.steps = std::max(1L, std::lround(std::ceil(units.time_to_trap(cfg.protocol.horizon_s) / dt - 1e-9)));
  s.every = static_cast<int>(std::max(1L, std::lround(units.time_to_trap(cfg.protocol.sample_interval_s) / dt)));
  s.t_final = s.steps * dt;
  return s;
}

json ground_record(const GroundState& gs, const TrapModel& model) {
  return json{{"N", gs.N},
              {"eta", gs.eta},
              {"mu", gs.mu},
              {"energy", gs.energies.total},
              {"residual", gs.residual},
              {"iterations", gs.iterations},
              {"q", model.q},
              {"k_trap", model.k}};
}

void write_ground_json(const fs::path& file, const json& points) {
  std::ofstream os(file);
  os << json{{"points", points}}.dump(2) << '\n';
}

void append_ground_rows(Table& t, const GroundState& gs, const TrapModel& model, const UnitSystem& units) {
  t.rows.push_back({num(gs.N), num(gs.eta), num(gs.mu), num(gs.energies.total), num(gs.energies.kinetic),
                    num(gs.energies.potential), num(gs.energies.interaction), num(gs.residual),
                    std::to_string(gs.iterations), num(units.inverse_volume_to_si(gs.eta)),
                    num(tf_eta_1d(model, gs.N)), num(tf_eta_3d(model, gs.N)),
                    std::to_string(gs.psi.grid().n_rho), std::to_string(gs.psi.grid().n_z()),
                    num(gs.psi.grid().axis.extent)});
}

Table ground_table() {
  return Table{{"N", "eta_N", "mu", "energy", "kinetic", "potential", "interaction", "residual", "iterations",
                "eta_N_si", "eta_1d_tf", "eta_3d_tf", "n_rho", "n_z", "extent_z"},
               {}};
}

void report_solver_error(std::ostream& log, const SolverError& e, double N) {
  log << "error: ground solve failed at N = " << num(N) << ": " << e.what() << " (iterations "
      << e.iterations() << ", residual " << num(e.residual()) << ", dtau " << num(e.dtau()) << ")\n";
}

std::optional<double> lookup_eta(const fs::path& file, double N, const TrapModel& model) {
  std::ifstream is(file);
  if (!is)
    return std::nullopt;
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error&) {
    throw std::runtime_error("unreadable ground summary " + file.string());
  }
  for (const auto& p : doc.value("points", json::array())) {
    const double n = p.at("N").get<double>();
    const double k = p.at("k_trap").get<double>();
    if (std::abs(n - N) <= 1e-12 * N && p.at("q").get<int>() == model.q &&
        std::abs(k - model.k) <= 1e-12 * std::abs(model.k))
      return p.at("eta").get<double>();
  }
  return std::nullopt;
}

RunConfig with_trap(const RunConfig& base, int q, const fs::path& dir) {
  std::map<std::string, std::string> set{{"trap.q", std::to_string(q)}, {"output.dir", dir.string()}};
  json doc = to_json(base);
  doc["trap"].erase("k_si");
  if (q != 2)
    doc["trap"]["match_crossover"] = "reference";
  return build(doc, set);
}

} // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return species == o.species && omega_T_hz == o.omega_T_hz && trap == o.trap && N == o.N && grid == o.grid &&
         solver == o.solver && protocol == o.protocol && output_dir == o.output_dir &&
         snapshots == o.snapshots && sweep == o.sweep;
}

RunConfig parse_config(const std::string& text, const std::map<std::string, std::string>& overrides) {
  return build(parse_text(text), overrides);
}

RunConfig load_config(const fs::path& path, const std::map<std::string, std::string>& overrides) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides);
}

RunConfig default_config(const std::map<std::string, std::string>& overrides) {
  return build(json::object(), overrides);
}

json to_json(const RunConfig& c) {
  json windows = json::array();
  for (const auto& w : c.sweep.windows)
    windows.push_back({{"regime", w.regime}, {"N_min", w.N_min}, {"N_max", w.N_max}});
  json atoms = c.N.size() == 1 ? json{{"N", c.N.front()}} : json{{"N_list", c.N}};
  return json{
      {"species", {{"a11", c.species.a11}, {"a12", c.species.a12}, {"a22", c.species.a22}, {"mass_kg", c.species.mass}}},
      {"trap", {{"omega_T_hz", c.omega_T_hz}, {"q", c.trap.q}, {"k_si", c.trap.k}}},
      {"atoms", atoms},
      {"grid",
       {{"n_rho", c.grid.n_rho},
        {"n_z", c.grid.n_z},
        {"extent_rho", c.grid.extent_rho},
        {"z_margin", c.grid.z_margin},
        {"z0_margin", c.grid.z0_margin}}},
      {"solver",
       {{"dtau", c.solver.dtau},
        {"dtau_min", c.solver.dtau_min},
        {"strang_steps", c.solver.strang_steps},
        {"floor_ratio", c.solver.floor_ratio},
        {"descent_step", c.solver.descent_step},
        {"mu_tol", c.solver.mu_tol},
        {"residual_tol", c.solver.residual_tol},
        {"window", c.solver.window},
        {"max_iterations", c.solver.max_iterations},
        {"guess", guess_name(c.solver.guess)}}},
      {"protocol",
       {{"horizon_s", c.protocol.horizon_s},
        {"sample_interval_s", c.protocol.sample_interval_s},
        {"dt", c.protocol.dt}}},
      {"output", {{"dir", c.output_dir}, {"snapshots", c.snapshots}}},
      {"sweep",
       {{"N_min", c.sweep.N_min},
        {"N_max", c.sweep.N_max},
        {"points", c.sweep.points},
        {"workers", c.sweep.workers},
        {"windows", windows}}}};
}

std::map<std::string, std::string> provenance(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  const json flat = to_json(cfg).flatten();
  for (const auto& [ptr, value] : flat.items()) {
    std::string key = ptr.substr(1);
    std::replace(key.begin(), key.end(), '/', '.');
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

fs::path output_root() {
  const char* env = std::getenv("BEC_RAMSEY_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

fs::path resolve_output_dir(const RunConfig& cfg) {
  const fs::path p(cfg.output_dir);
  return p.is_absolute() ? p : output_root() / p;
}

std::string code_version() { return BEC_RAMSEY_VERSION; }

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

Manifest::Manifest(fs::path dir, std::string command, const RunConfig& cfg)
    : dir_(std::move(dir)), path_(dir_ / ("manifest_" + command + ".json")),
      start_(std::chrono::steady_clock::now()) {
  fs::create_directories(dir_);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  doc_ = json{{"command", std::move(command)},
              {"status", "running"},
              {"code_version", code_version()},
              {"started_utc", stamp},
              {"config", to_json(cfg)},
              {"trap_source", cfg.trap_source},
              {"grids", json::array()},
              {"diagnostics", json::object()},
              {"outputs", json::array()}};
  write();
}

void Manifest::add_output(const fs::path& file) { outputs_.push_back(file); }

void Manifest::add_grid(double N, const CylGrid& g) {
  doc_["grids"].push_back({{"N", N},
                           {"n_rho", g.n_rho},
                           {"n_z", g.n_z()},
                           {"extent_rho", g.extent_rho},
                           {"extent_z", g.axis.extent},
                           {"d_rho", g.d_rho},
                           {"d_z", g.d_z()}});
}

void Manifest::finalize(const std::string& status) {
  doc_["status"] = status;
  doc_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  json outs = json::array();
  for (const auto& f : outputs_)
    if (fs::exists(f))
      outs.push_back({{"file", fs::relative(f, dir_).generic_string()}, {"sha256", sha256_file(f)}});
  doc_["outputs"] = outs;
  write();
}

void Manifest::write() const {
  const fs::path tmp = path_.string() + ".tmp";
  {
    std::ofstream os(tmp);
    os << doc_.dump(2) << '\n';
  }
  fs::rename(tmp, path_);
}

// ---------------------------------------------------------------- commands

int cmd_ground(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg);
  Manifest man(dir, "ground", cfg);
  const TrapModel model = to_trap_units(cfg.trap, cfg.species);
  const UnitSystem units(cfg.trap, cfg.species);
  const auto params = provenance(cfg);
  Table table = ground_table();
  json points = json::array();
  int status = 0;
  for (double N : cfg.N) {
    const CylGrid grid = grid_for(model, N, cfg.grid);
    man.add_grid(N, grid);
    try {
      const GroundState gs = solve_ground_3d(model, N, grid, cfg.solver);
      log << "ground N = " << num(N) << ": eta = " << num(gs.eta) << ", mu = " << num(gs.mu)
          << ", residual = " << num(gs.residual) << ", iterations = " << gs.iterations << '\n';
      append_ground_rows(table, gs, model, units);
      points.push_back(ground_record(gs, model));
      man.diagnostics()[n_label(N)] = ground_record(gs, model);
      if (cfg.snapshots) {
        const fs::path snap = dir / ("ground_" + n_label(N) + ".txt");
        std::ofstream os(snap);
        write_snapshot(os, gs.psi, merged(params, {{"N", num(N)}, {"mu", num(gs.mu)}}));
        man.add_output(snap);
      }
    } catch (const SolverError& e) {
      report_solver_error(log, e, N);
      man.diagnostics()[n_label(N)] = {{"error", e.what()}, {"iterations", e.iterations()},
                                       {"residual", e.residual()}, {"dtau", e.dtau()}};
      status = 2;
    }
  }
  write_table(dir / "ground_summary.csv", table, params);
  write_ground_json(dir / "ground.json", points);
  man.add_output(dir / "ground_summary.csv");
  man.add_output(dir / "ground.json");
  man.finalize(status == 0 ? "complete" : "failed");
  return status;
}

int cmd_eta_sweep(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg);
  Manifest man(dir, "eta-sweep", cfg);
  const TrapModel model = to_trap_units(cfg.trap, cfg.species);
  const auto params = provenance(cfg);
  const int q = cfg.trap.q;

  std::vector<double> Ns;
  const double l0 = std::log(cfg.sweep.N_min), l1 = std::log(cfg.sweep.N_max);
  for (int i = 0; i < cfg.sweep.points; ++i)
    Ns.push_back(std::round(std::exp(l0 + (l1 - l0) * i / (cfg.sweep.points - 1))));
  Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());

  SweepOptions so{cfg.grid, cfg.solver, cfg.sweep.windows, cfg.sweep.workers};
  const SweepResult res = eta_sweep(model, Ns, so);

  Table t{{"N", "eta_N", "mu", "residual", "iterations", "eta_1d_tf", "eta_3d_tf", "ok", "error"}, {}};
  int failed = 0;
  for (const auto& p : res.points) {
    man.add_grid(p.N, grid_for(model, p.N, cfg.grid));
    t.rows.push_back({num(p.N), p.ok ? num(p.eta) : "nan", p.ok ? num(p.mu) : "nan", num(p.residual),
                      std::to_string(p.iterations), num(tf_eta_1d(model, p.N)), num(tf_eta_3d(model, p.N)),
                      p.ok ? "1" : "0", p.error});
    if (!p.ok) {
      ++failed;
      log << "error: sweep point N = " << num(p.N) << " failed: " << p.error << '\n';
    }
  }
  const std::string tag = "_q" + std::to_string(q);
  const fs::path table = dir / ("eta_sweep" + tag + ".csv");
  write_table(table, t, params);
  man.add_output(table);

  Table f{{"regime", "N_min", "N_max", "exponent", "expected_exponent", "prefactor", "residual_rms", "ok", "error"},
          {}};
  const double e1 = -1.0 / (q + 1.0), e3 = -(q + 1.0) / (2.0 * q + 1.0);
  for (const auto& fit : res.fits) {
    const double expect = fit.window.regime == "1d" ? e1 : fit.window.regime == "3d" ? e3 : std::nan("");
    f.rows.push_back({fit.window.regime, num(fit.window.N_min), num(fit.window.N_max), num(fit.exponent),
                      num(expect), num(fit.prefactor), num(fit.residual_rms), fit.ok ? "1" : "0", fit.error});
    log << "fit " << fit.window.regime << " [" << num(fit.window.N_min) << ", " << num(fit.window.N_max)
        << "]: exponent = " << (fit.ok ? num(fit.exponent) : "n/a (" + fit.error + ")") << '\n';
    man.diagnostics()["fit_" + fit.window.regime] = {{"exponent", fit.exponent}, {"ok", fit.ok}};
  }
  // Analytic references: the closed-form TF laws over their asymptotic windows.
  {
    std::vector<double> x, y1, y3;
    for (double n = 1e6; n <= 1e8 * 1.0001; n *= std::pow(10.0, 0.25)) {
      x.push_back(n);
      y3.push_back(tf_eta_3d(model, n));
    }
    const PowerLawFit p3 = fit_power_law(x, y3);
    f.rows.push_back({"tf_3d_analytic", "1e+06", "1e+08", num(p3.exponent), num(e3), num(p3.prefactor),
                      num(p3.residual_rms), "1", ""});
    x.clear();
    for (double n = 100.0; n <= 3000.0 * 1.0001; n *= std::pow(30.0, 0.125)) {
      x.push_back(n);
      y1.push_back(tf_eta_1d(model, n));
    }
    const PowerLawFit p1 = fit_power_law(x, y1);
    f.rows.push_back({"tf_1d_analytic", "100", "3000", num(p1.exponent), num(e1), num(p1.prefactor),
                      num(p1.residual_rms), "1", ""});
  }
  const fs::path fits = dir / ("eta_fits" + tag + ".csv");
  write_table(fits, f, params);
  man.add_output(fits);
  man.diagnostics()["failed_points"] = failed;
  man.finalize(failed == 0 ? "complete" : "failed");
  return failed == 0 ? 0 : 2;
}

namespace {

int evolve_one(const RunConfig& cfg, double N, const fs::path& dir, Manifest& man, json& ground_points,
               std::ostream& log) {
  const TrapModel model = to_trap_units(cfg.trap, cfg.species);
  const UnitSystem units(cfg.trap, cfg.species);
  const auto params = provenance(cfg);
  const CylGrid grid = grid_for(model, N, cfg.grid);
  man.add_grid(N, grid);

  GroundState gs;
  try {
    gs = solve_ground_3d(model, N, grid, cfg.solver);
  } catch (const SolverError& e) {
    report_solver_error(log, e, N);
    man.diagnostics()[n_label(N)] = {{"error", e.what()}};
    return 2;
  }
  ground_points.push_back(ground_record(gs, model));
  const double Omega = N * gs.eta * model.gamma1();
  log << "ground N = " << num(N) << ": eta = " << num(gs.eta) << ", Omega_N = " << num(Omega)
      << " (trap units)\n";

  const Schedule sch = schedule(cfg, units);
  PropagateOptions po;
  po.t_final = sch.t_final;
  po.dt = cfg.protocol.dt;
  po.sample_every = sch.every;
  po.time_unit_s = units.time_unit();
  TwoModeState st = initialize_after_pulse(gs);
  PropagationResult pr;
  try {
    pr = propagate(st, model, po);
  } catch (const PropagationError& e) {
    log << "error: propagation failed at step " << e.step() << " (t = " << num(e.t())
        << "), norm drift " << num(e.norm_drift()) << ": " << e.what() << '\n';
    man.diagnostics()[n_label(N)] = {{"error", e.what()}, {"step", e.step()}, {"norm_drift", e.norm_drift()}};
    return 3;
  }

  const std::map<std::string, std::string> extra{
      {"N", num(N)}, {"eta_N", num(gs.eta)}, {"Omega_N_trap", num(Omega)}, {"steps", std::to_string(pr.steps)}};
  const fs::path fringe = dir / "fringe.csv";
  write_series(fringe, pr.series, merged(params, extra));
  man.add_output(fringe);

  const ModelCurve jos = josephson_fringe(Omega, pr.series.t_trap, units.time_unit());
  const fs::path jfile = dir / "josephson.csv";
  write_series(jfile, jos.series, merged(merged(params, extra), jos.parameters));
  man.add_output(jfile);

  Table ov{{"t_s", "t_trap", "p1_sim", "p1_josephson", "im_overlap_sim", "im_overlap_josephson", "abs_overlap_sim"},
           {}};
  for (std::size_t i = 0; i < pr.series.size(); ++i)
    ov.rows.push_back({num(pr.series.t_s[i]), num(pr.series.t_trap[i]), num(pr.series.p1[i]),
                       num(jos.series.p1[i]), num(pr.series.overlap_im[i]), num(jos.series.overlap_im[i]),
                       num(pr.series.overlap_abs[i])});
  const fs::path ofile = dir / "overlay.csv";
  write_table(ofile, ov, merged(params, extra));
  man.add_output(ofile);

  json d{{"eta_N", gs.eta},
         {"Omega_N_trap", Omega},
         {"steps", pr.steps},
         {"max_norm_drift", pr.max_norm_drift},
         {"max_energy_drift", pr.max_energy_drift},
         {"phase_frequency_trap", phase_frequency(pr.series)}};
  try {
    d["fringe_frequency_trap"] = extract_fringe(pr.series).frequency_trap;
  } catch (const AnalysisError&) {
  }
  man.diagnostics()[n_label(N)] = d;
  log << "evolve N = " << num(N) << ": " << pr.steps << " steps, norm drift " << num(pr.max_norm_drift)
      << ", energy drift " << num(pr.max_energy_drift) << ", phase frequency / Omega_N = "
      << num(phase_frequency(pr.series) / Omega) << '\n';
  return 0;
}

} // namespace

int cmd_evolve(const RunConfig& cfg, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg);
  Manifest man(dir, "evolve", cfg);
  json points = json::array();
  int status = 0;
  for (double N : cfg.N) {
    const fs::path sub = cfg.N.size() == 1 ? dir : dir / n_label(N);
    fs::create_directories(sub);
    status = std::max(status, evolve_one(cfg, N, sub, man, points, log));
  }
  write_ground_json(dir / "ground.json", points);
  man.add_output(dir / "ground.json");
  man.finalize(status == 0 ? "complete" : "failed");
  return status;
}

int cmd_models(const RunConfig& cfg, const std::vector<std::string>& models,
               const std::optional<fs::path>& ground_summary, std::ostream& log) {
  const fs::path dir = resolve_output_dir(cfg);
  const fs::path gfile = ground_summary.value_or(dir / "ground.json");
  const TrapModel model = to_trap_units(cfg.trap, cfg.species);
  const UnitSystem units(cfg.trap, cfg.species);

  // Dependency check before anything is written.
  std::vector<ModelId> ids;
  for (const auto& m : models) {
    try {
      ids.push_back(model_from_string(m));
    } catch (const std::exception&) {
      log << "error: unknown model '" << m
          << "' (expected josephson, improved_tf, improved_adhoc, quantum_exact)\n";
      return 1;
    }
  }
  for (ModelId id : ids)
    if (id == ModelId::improved_adhoc)
      for (double N : cfg.N)
        if (!lookup_eta(gfile, N, model)) {
          log << "error: improved_adhoc needs eta_N from a ground solve at N = " << num(N) << " in this trap; "
              << "run the ground command first (looked in " << gfile.string() << ")\n";
          return 4;
        }

  Manifest man(dir, "models", cfg);
  const auto params = provenance(cfg);
  const Schedule sch = schedule(cfg, units);
  const std::vector<double> times = sample_times(sch.steps, sch.every, cfg.protocol.dt);
  int status = 0;
  for (double N : cfg.N) {
    const fs::path sub = cfg.N.size() == 1 ? dir : dir / n_label(N);
    fs::create_directories(sub);
    const std::optional<double> eta_num = lookup_eta(gfile, N, model);
    const double eta = eta_num.value_or(tf_eta_1d(model, N));
    const std::string eta_source = eta_num ? "ground_solve" : "thomas_fermi_1d";
    for (ModelId id : ids) {
      ModelCurve c;
      try {
        switch (id) {
        case ModelId::josephson:
          c = josephson_fringe(N * eta * model.gamma1(), times, units.time_unit());
          c.parameters["eta_source"] = eta_source;
          break;
        case ModelId::improved_tf:
          c = improved_overlap(model, N, times, ImprovedOptions{}, units.time_unit());
          break;
        case ModelId::improved_adhoc: {
          ImprovedOptions io;
          io.source = EtaSource::adhoc_numeric;
          io.eta_numeric = eta_num;
          c = improved_overlap(model, N, times, io, units.time_unit());
          break;
        }
        case ModelId::quantum_exact: {
          const long n = std::lround(N);
          if (std::abs(N - n) > 1e-9 * N)
            throw std::invalid_argument("quantum_exact needs an integer atom number");
          c = exact_quantum_josephson(static_cast<int>(n), model.gamma1(), model.gamma2(), eta, times,
                                      units.time_unit());
          c.parameters["eta_source"] = eta_source;
          break;
        }
        }
      } catch (const std::exception& e) {
        log << "error: model " << to_string(id) << " at N = " << num(N) << ": " << e.what() << '\n';
        status = 2;
        continue;
      }
      const fs::path file = sub / ("model_" + to_string(id) + ".csv");
      write_series(file, c.series, merged(merged(params, {{"N", num(N)}}), c.parameters));
      man.add_output(file);
      log << "model " << to_string(id) << " N = " << num(N) << ": Omega = " << num(c.Omega) << " -> "
          << file.string() << '\n';
    }
  }
  man.finalize(status == 0 ? "complete" : "failed");
  return status;
}

int cmd_analyze(const fs::path& series, const std::optional<fs::path>& against, double horizon_s,
                const std::optional<fs::path>& out, std::ostream& log) {
  auto read = [](const fs::path& p) {
    std::ifstream is(p);
    if (!is)
      throw std::runtime_error("cannot read " + p.string());
    return read_csv(is);
  };
  FringeSeries a;
  std::optional<FringeSeries> b;
  try {
    a = read(series);
    if (against)
      b = read(*against);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  // Trap-unit horizon from the series' own time axes.
  double horizon = std::numeric_limits<double>::infinity();
  if (horizon_s > 0.0 && std::isfinite(horizon_s))
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.t_s[i] > 0.0) {
        horizon = horizon_s * a.t_trap[i] / a.t_s[i];
        break;
      }

  std::ostringstream os;
  os << std::setprecision(10);
  os << "series = " << series.string() << '\n' << "samples = " << a.size() << '\n';
  FringeSeries clipped;
  for (std::size_t i = 0; i < a.size() && a.t_trap[i] <= horizon * (1 + 1e-12); ++i)
    clipped.push(a.t_trap[i], a.t_s[i], a.overlap(i));
  try {
    const FringeStats fs_ = extract_fringe(clipped);
    os << "fringe_frequency_trap = " << fs_.frequency_trap << '\n'
       << "fringe_frequency_si = " << fs_.frequency_si << '\n'
       << "fringe_frequency_uncertainty_trap = " << fs_.frequency_uncertainty_trap << '\n'
       << "zero_crossings = " << fs_.zero_crossings.size() << '\n';
  } catch (const AnalysisError& e) {
    os << "fringe_frequency_trap = nan\n"
       << "fringe_note = " << e.what() << '\n';
  }
  try {
    os << "phase_frequency_trap = " << phase_frequency(clipped) << '\n';
  } catch (const AnalysisError&) {
    os << "phase_frequency_trap = nan\n";
  }
  if (clipped.size() > 0) {
    const auto& v = clipped.overlap_abs;
    double mean = 0.0;
    for (double x : v)
      mean += x;
    os << "visibility_min = " << *std::min_element(v.begin(), v.end()) << '\n'
       << "visibility_mean = " << mean / v.size() << '\n'
       << "visibility_final = " << v.back() << '\n';
  }
  if (b) {
    try {
      const SeriesComparison c = compare_series(a, *b, horizon);
      os << "against = " << against->string() << '\n'
         << "max_dp1 = " << c.max_dp1 << '\n'
         << "rms_dp1 = " << c.rms_dp1 << '\n'
         << "frequency_ratio = " << c.frequency_ratio << '\n'
         << "compared_samples = " << c.samples << '\n';
    } catch (const AnalysisError& e) {
      log << "error: " << e.what() << '\n';
      return 1;
    }
  }
  log << os.str();
  if (out) {
    std::ofstream f(*out);
    f << os.str();
  }
  return 0;
}

int cmd_reproduce_figure(const RunConfig& cfg, int fig, std::optional<double> horizon_s, std::ostream& log) {
  if (fig < 1 || fig > 7) {
    log << "error: figure id must be 1..7\n";
    return 1;
  }
  const fs::path base = fs::absolute(resolve_output_dir(cfg) / ("fig" + std::to_string(fig)));
  int status = 0;
  for (int q : {2, 4, 10}) {
    RunConfig c = with_trap(cfg, q, base / ("q" + std::to_string(q)));
    log << "figure " << fig << ", q = " << q << " (" << c.trap_source << ")\n";
    if (fig == 1) {
      status = std::max(status, cmd_eta_sweep(c, log));
      continue;
    }
    c.N = {fig == 3 || fig == 4 || fig == 7 ? 5000.0 : 1000.0};
    c.protocol.horizon_s = horizon_s.value_or(fig == 4 ? 0.12 : 1.0);
    const int rc = cmd_evolve(c, log);
    status = std::max(status, rc);
    if (rc != 0)
      continue;
    if (fig >= 5) {
      const std::string m = fig == 5 ? "improved_tf" : "improved_adhoc";
      status = std::max(status, cmd_models(c, {"josephson", m}, std::nullopt, log));
    }
  }
  return status;
}

} // namespace bec
