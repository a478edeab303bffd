#include "bec/harness.hpp"
#include "bec/series.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace bec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bec_harness_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> header_params(const fs::path& csv) {
  std::map<std::string, std::string> out;
  std::ifstream is(csv);
  std::string line;
  while (std::getline(is, line) && line.rfind("# ", 0) == 0) {
    const auto eq = line.find(" = ");
    out[line.substr(2, eq - 2)] = line.substr(eq + 3);
  }
  return out;
}

std::string small_grid(const fs::path& dir) {
  return R"({"grid": {"n_rho": 16, "n_z": 256}, "output": {"dir": ")" + dir.generic_string() + R"("}})";
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("defaults resolve to the reference experiment") {
  const RunConfig c = default_config();
  CHECK(c.trap.omega_T == doctest::Approx(2 * std::numbers::pi * 350.0));
  CHECK(c.trap.q == 2);
  CHECK(c.trap.k == doctest::Approx(harmonic_stiffness(2 * std::numbers::pi * 3.5, c.species.mass)));
  CHECK(c.species == SpeciesSpec{});
  CHECK(c.N == std::vector<double>{1000.0});
  CHECK(c.grid == GridPolicy{});
  CHECK(c.solver == GroundOptions{});
}

TEST_CASE("matched crossover and the other trap forms") {
  const RunConfig c = parse_config(R"({"trap": {"q": 4, "match_crossover": 14000}})");
  CHECK(c.trap.k == doctest::Approx(stiffness_for_matched_crossover(4, 14000.0, c.trap.omega_T, c.species)));
  const RunConfig r = parse_config(R"({"trap": {"q": 10, "match_crossover": "reference"}})");
  CHECK(critical_atom_numbers(r.trap, r.species).N_T_bar ==
        doctest::Approx(critical_atom_numbers(reference_trap(), r.species).N_T_bar).epsilon(1e-10));
  CHECK(parse_config(R"({"trap": {"q": 10}})").trap == r.trap);
  const RunConfig k = parse_config(R"({"trap": {"q": 4, "k_si": 1e-20}})");
  CHECK(k.trap.k == 1e-20);
  const RunConfig wz = parse_config(R"({"trap": {"omega_z_hz": 7.0}})");
  CHECK(wz.trap.k == doctest::Approx(harmonic_stiffness(2 * std::numbers::pi * 7.0, wz.species.mass)));
}

TEST_CASE("validation errors name the key") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message(R"({"atoms": {"N": -5}})").find("atoms.N") == 0);
  CHECK(message(R"({"atoms": {"N_list": [100, 0]}})").find("atoms.N_list[1]") == 0);
  CHECK(message(R"({"grid": {"n_z": 1000}})").find("grid.n_z") == 0);
  CHECK(message(R"({"trap": {"omega_z_hz": 3.5, "k_si": 1e-20}})").find("trap") == 0);
  CHECK(message(R"({"trap": {"q": 4, "omega_z_hz": 3.5}})").find("trap.omega_z_hz") == 0);
  CHECK(message(R"({"solver": {"dtau": "fast"}})").find("solver.dtau") == 0);
  CHECK(message(R"({"sweep": {"workers": 0}})").find("sweep.workers") == 0);
  CHECK(message(R"({"protocol": {"horizon": 1}})").find("protocol.horizon: unknown key") == 0);
  CHECK(message(R"({"extra": {}})").find("extra: unknown key") == 0);
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse_config("{\n  \"trap\": {\n    \"q\": 4,\n  }\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("resolved config round trips") {
  const RunConfig c = parse_config(
      R"({"trap": {"q": 4, "match_crossover": 14000}, "atoms": {"N_list": [100, 500.5]},
          "solver": {"guess": "quasi_1d", "residual_tol": 2e-7},
          "sweep": {"windows": [{"regime": "1d", "N_min": 150, "N_max": 2500}]}})");
  const RunConfig back = parse_config(to_json(c).dump());
  CHECK(back == c);
  CHECK(to_json(back) == to_json(c));
  CHECK(provenance(back) == provenance(c));
}

TEST_CASE("flags override the file") {
  const std::string file = R"({"trap": {"q": 4}, "atoms": {"N": 300}})";
  const RunConfig c = parse_config(file, {{"atoms.N", "700"}, {"grid.n_rho", "32"}, {"output.dir", "elsewhere"}});
  CHECK(c.N == std::vector<double>{700.0});
  CHECK(c.trap.q == 4);
  CHECK(c.grid.n_rho == 32);
  CHECK(c.output_dir == "elsewhere");
  CHECK_THROWS_AS(parse_config(file, {{"atoms.N", "-1"}}), ConfigError);
}

TEST_CASE("output root comes from the environment") {
  RunConfig c = default_config();
  c.output_dir = "abc";
  setenv("BEC_RAMSEY_OUTPUT_ROOT", "/tmp/root_for_test", 1);
  CHECK(resolve_output_dir(c) == fs::path("/tmp/root_for_test/abc"));
  c.output_dir = "/abs/dir";
  CHECK(resolve_output_dir(c) == fs::path("/abs/dir"));
  unsetenv("BEC_RAMSEY_OUTPUT_ROOT");
}

TEST_CASE("SHA-256 digest") {
  const fs::path p = scratch("digest.txt");
  std::ofstream(p) << "abc";
  CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("fringe CSV round trip") {
  FringeSeries s;
  s.provenance = "simulation";
  for (int i = 0; i < 10; ++i)
    s.push(0.1 * i, 1e-4 * i, std::polar(0.99, -0.37 * i));
  std::stringstream ss;
  write_csv(ss, s, {{"N", "1000"}});
  std::map<std::string, std::string> p;
  const FringeSeries b = read_csv(ss, &p);
  CHECK(p.at("N") == "1000");
  REQUIRE(b.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(b.t_trap[i] == s.t_trap[i]);
    CHECK(b.overlap(i) == s.overlap(i));
    CHECK(b.p1[i] == s.p1[i]);
  }
}

TEST_CASE("ground command: manifest, digests, header provenance and determinism") {
  const fs::path dir = scratch("ground");
  const RunConfig c = parse_config(small_grid(dir), {{"atoms.N_list", "[200, 800]"}});
  std::ostringstream log;
  REQUIRE(cmd_ground(c, log) == 0);
  const json man = json::parse(slurp(dir / "manifest_ground.json"));
  CHECK(man["status"] == "complete");
  CHECK(man["config"] == to_json(c));
  CHECK(man["grids"].size() == 2);
  CHECK(man["wall_time_s"].get<double>() >= 0.0);
  CHECK(man["code_version"] == code_version());
  REQUIRE(man["outputs"].size() == 2);
  for (const auto& o : man["outputs"])
    CHECK(o["sha256"] == sha256_file(dir / o["file"].get<std::string>()));

  // Header parameters agree with the manifest's config.
  const auto params = header_params(dir / "ground_summary.csv");
  const RunConfig from_manifest = parse_config(man["config"].dump());
  for (const auto& [k, v] : provenance(from_manifest))
    CHECK(params.at(k) == v);

  const std::string first = slurp(dir / "ground_summary.csv");
  REQUIRE(cmd_ground(from_manifest, log) == 0);
  CHECK(slurp(dir / "ground_summary.csv") == first);
}

TEST_CASE("models command needs a ground solve for the ad hoc variant") {
  const fs::path dir = scratch("models");
  const RunConfig c = parse_config(small_grid(dir), {{"protocol.horizon_s", "0.01"}});
  std::ostringstream log;
  CHECK(cmd_models(c, {"improved_adhoc"}, std::nullopt, log) != 0);
  CHECK(log.str().find("run the ground command first") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "model_improved_adhoc.csv"));

  REQUIRE(cmd_ground(c, log) == 0);
  REQUIRE(cmd_models(c, {"improved_adhoc", "josephson", "quantum_exact"}, std::nullopt, log) == 0);
  std::map<std::string, std::string> p;
  std::ifstream is(dir / "model_improved_adhoc.csv");
  const FringeSeries s = read_csv(is, &p);
  CHECK(p.at("model") == "improved_adhoc");
  CHECK(s.size() > 2);
  CHECK(header_params(dir / "model_josephson.csv").at("eta_source") == "ground_solve");
  CHECK(cmd_models(c, {"no_such_model"}, std::nullopt, log) != 0);
}

TEST_CASE("evolve writes the fringe, the Josephson overlay and analysis input") {
  const fs::path dir = scratch("evolve");
  const RunConfig c = parse_config(small_grid(dir), {{"protocol.horizon_s", "0.02"}, {"trap.q", "10"}});
  std::ostringstream log;
  REQUIRE(cmd_evolve(c, log) == 0);
  for (const char* f : {"fringe.csv", "josephson.csv", "overlay.csv", "ground.json", "manifest_evolve.json"})
    CHECK(fs::exists(dir / f));
  std::ifstream is(dir / "fringe.csv");
  const FringeSeries s = read_csv(is);
  CHECK(s.t_s.back() == doctest::Approx(0.02).epsilon(0.01));
  std::ostringstream out;
  CHECK(cmd_analyze(dir / "fringe.csv", dir / "josephson.csv", 0.0, dir / "analysis.txt", out) == 0);
  CHECK(out.str().find("phase_frequency_trap") != std::string::npos);
  CHECK(out.str().find("rms_dp1") != std::string::npos);
  CHECK(fs::exists(dir / "analysis.txt"));
  CHECK(cmd_analyze(dir / "missing.csv", std::nullopt, 0.0, std::nullopt, out) != 0);
}

TEST_CASE("eta-sweep writes the table with reference columns and fits") {
  const fs::path dir = scratch("sweep");
  const RunConfig c = parse_config(small_grid(dir), {{"sweep.N_min", "100"}, {"sweep.N_max", "3000"},
                                                     {"sweep.points", "5"}, {"trap.q", "4"}});
  std::ostringstream log;
  REQUIRE(cmd_eta_sweep(c, log) == 0);
  std::ifstream is(dir / "eta_sweep_q4.csv");
  std::string line;
  while (std::getline(is, line) && line[0] == '#') {
  }
  CHECK(line == "N,eta_N,mu,residual,iterations,eta_1d_tf,eta_3d_tf,ok,error");
  int rows = 0;
  while (std::getline(is, line))
    ++rows;
  CHECK(rows == 5);
  CHECK(fs::exists(dir / "eta_fits_q4.csv"));
}

TEST_CASE("reproduce-figure rejects unknown figures") {
  std::ostringstream log;
  CHECK(cmd_reproduce_figure(default_config(), 8, std::nullopt, log) != 0);
}

}
