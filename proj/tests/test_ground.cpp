#include "bec/ground.hpp"
#include "bec/models.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bec;

namespace {

constexpr double pi = std::numbers::pi;

TrapModel rb_trap(int q) {
  const SpeciesSpec rb;
  TrapSpec t = reference_trap();
  if (q != 2) {
    const double target = critical_atom_numbers(t, rb).N_T_bar;
    t.q = q;
    t.k = stiffness_for_matched_crossover(q, target, t.omega_T, rb);
  }
  return to_trap_units(t, rb);
}

// 2<T> - 2<V_rho> - q<V_z> + 3 E_int = 0 for V = (rho^2 + k z^q)/2.
double virial_residual(const GroundState& gs, const TrapModel& trap) {
  const CylGrid& g = gs.psi.grid();
  double v_rho = 0.0, v_z = 0.0;
  for (int j = 0; j < g.n_rho; ++j)
    for (int i = 0; i < g.n_z(); ++i) {
      const double d = std::norm(gs.psi(j, i)) * g.weight(j);
      v_rho += d * 0.5 * g.rho(j) * g.rho(j);
      v_z += d * trap.longitudinal(g.z(i));
    }
  const EnergyBreakdown& e = gs.energies;
  return (2 * e.kinetic - 2 * v_rho - trap.q * v_z + 3 * e.interaction) / e.total;
}

double l1_to_tf(const GroundState1D& s, const TFQuantities& tf, double inner) {
  double diff = 0.0, ref = 0.0;
  for (int i = 0; i < s.grid.n; ++i) {
    const double z = s.grid.z(i);
    if (std::abs(z) > inner * tf.z_N)
      continue;
    diff += std::abs(s.density(i) - tf.linear_density(z)) * s.grid.dz;
    ref += tf.linear_density(z) * s.grid.dz;
  }
  return diff / ref;
}

} // namespace

TEST_SUITE("ground") {

TEST_CASE("non-interacting harmonic ground state") {
  TrapModel m = rb_trap(2);
  m.g11 = 0.0;
  GridPolicy p;
  p.n_rho = 128;
  const CylGrid g = grid_for(m, 0.0, p);
  const GroundState gs = solve_ground_3d(m, 0.0, g);
  const double wz = std::sqrt(m.k);
  CHECK(std::abs(gs.mu - (1.0 + 0.5 * wz)) < 1e-3);
  // Gaussian with widths 1 and 1/omega_z.
  CHECK(gs.eta == doctest::Approx(1.0 / (2 * pi * std::sqrt(2 * pi / wz))).epsilon(5e-3));
  CHECK(gs.residual < 1e-6);
  CHECK(std::abs(virial_residual(gs, m)) < 1e-3);
}

TEST_CASE("interacting ground state: consistency, virial and Thomas-Fermi agreement") {
  const TrapModel m = rb_trap(2);
  const double N = 1000.0;
  GroundOptions o;
  o.record_trace = true;
  GridPolicy p;
  p.n_rho = 128;
  const GroundState gs = solve_ground_3d(m, N, grid_for(m, N, p), o);
  CHECK(gs.residual < 1e-6);
  CHECK(gs.psi.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
  const EnergyBreakdown e = energy_breakdown(gs.psi, m, m.g11 * N);
  CHECK(std::abs(e.mu - gs.mu) < 1e-8 * gs.mu);
  CHECK(gs.eta == doctest::Approx(density_moment(gs.psi, 2)).epsilon(1e-14));
  CHECK(std::abs(virial_residual(gs, m)) < 2e-3);
  // Quasi-1D: within 10% of the 1D Thomas-Fermi inverse volume.
  CHECK(gs.eta == doctest::Approx(tf_eta_1d(m, N)).epsilon(0.10));

  // Energy never rises during the descent phase.
  double prev = INFINITY;
  int descent = 0;
  for (const TracePoint& t : gs.trace) {
    if (t.dtau != 0.0)
      continue;
    CHECK(t.energy <= prev + 1e-12 * std::abs(prev));
    prev = t.energy;
    ++descent;
  }
  CHECK(descent > 0);
}

TEST_CASE("hard trap ground state on the default grid") {
  const TrapModel m = rb_trap(10);
  const double N = 1000.0;
  const GroundState gs = solve_ground_3d(m, N, grid_for(m, N, GridPolicy{}));
  CHECK(gs.residual < 1e-6);
  CHECK(gs.eta == doctest::Approx(tf_eta_1d(m, N)).epsilon(0.10));
  CHECK(std::abs(virial_residual(gs, m)) < 5e-3);
}

TEST_CASE("initial guesses converge to the same state") {
  const TrapModel m = rb_trap(4);
  const double N = 500.0;
  GridPolicy p;
  p.n_rho = 32;
  p.n_z = 512;
  const CylGrid g = grid_for(m, N, p);
  GroundOptions a, b;
  b.guess = InitialGuess::quasi_1d;
  const GroundState ga = solve_ground_3d(m, N, g, a);
  const GroundState gb = solve_ground_3d(m, N, g, b);
  // mu is first order in the remaining error, the energy second order.
  CHECK(ga.mu == doctest::Approx(gb.mu).epsilon(1e-7));
  CHECK(ga.energies.total == doctest::Approx(gb.energies.total).epsilon(1e-10));
  CHECK(ga.eta == doctest::Approx(gb.eta).epsilon(1e-6));
}

TEST_CASE("1D ground state against the Thomas-Fermi profile") {
  const TrapModel m = rb_trap(2);
  const double eta_T = 1.0 / (2 * pi);
  const double N_L = critical_atom_numbers(reference_trap(), SpeciesSpec{}).N_L;
  {
    const double N = 2000.0; // N_L << N << N_T_bar
    const TFQuantities tf = tf_quantities(m, N);
    const GroundState1D s = solve_ground_1d(m, N, eta_T, make_zgrid(1.5 * tf.z_N, 2048));
    CHECK(s.residual < 1e-6);
    CHECK(l1_to_tf(s, tf, 0.8) < 0.05);
    CHECK(s.eta_L * eta_T == doctest::Approx(tf_eta_1d(m, N)).epsilon(0.05));
  }
  {
    const double N = 0.5 * N_L;
    const TFQuantities tf = tf_quantities(m, N);
    const GroundState1D s = solve_ground_1d(m, N, eta_T, make_zgrid(80.0, 2048));
    CHECK(l1_to_tf(s, tf, 0.8) > 0.10);
  }
}

TEST_CASE("product state and regridding") {
  const TrapModel m = rb_trap(2);
  const GroundState1D s = solve_ground_1d(m, 300.0, 1.0 / (2 * pi), make_zgrid(120.0, 1024));
  const CylGrid g = make_grid(6.0, 120.0, 32, 1024);
  const ComplexField f = product_state(g, s);
  CHECK(f.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
  const ComplexField r = rescale_to_grid(f, make_grid(6.0, 180.0, 32, 1024), 1.0);
  CHECK(r.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(density_moment(r, 2) == doctest::Approx(density_moment(f, 2)).epsilon(1e-3));
  CHECK_THROWS_AS(rescale_to_grid(f, make_grid(6.0, 120.0, 16, 1024), 1.0), GridError);
}

TEST_CASE("sweep: ordering, worker count and recorded failures") {
  const TrapModel m = rb_trap(2);
  SweepOptions o;
  o.grid.n_rho = 16;
  o.grid.n_z = 256;
  o.windows = {{"1d", 100.0, 3000.0}};
  const std::vector<double> Ns{100, 200, 400, 800, 1600, 3000};
  const SweepResult one = eta_sweep(m, Ns, o);
  o.workers = 2;
  const SweepResult two = eta_sweep(m, Ns, o);
  REQUIRE(one.points.size() == Ns.size());
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    CHECK(one.points[i].ok);
    CHECK(one.points[i].N == Ns[i]);
    CHECK(two.points[i].eta == doctest::Approx(one.points[i].eta).epsilon(1e-7));
    if (i)
      CHECK(one.points[i].eta < one.points[i - 1].eta);
  }
  REQUIRE(one.fits.size() == 1);
  CHECK(one.fits[0].ok);
  CHECK(one.fits[0].exponent == doctest::Approx(-1.0 / 3.0).epsilon(0.15));

  o.ground.max_iterations = 1;
  o.ground.strang_steps = 0;
  const SweepResult bad = eta_sweep(m, {100, 200, 400}, o);
  for (const auto& p : bad.points) {
    CHECK_FALSE(p.ok);
    CHECK_FALSE(p.error.empty());
  }
  CHECK_FALSE(bad.fits[0].ok);
}

TEST_CASE("invalid input") {
  const TrapModel m = rb_trap(2);
  const CylGrid g = make_grid(6.0, 100.0, 16, 256);
  CHECK_THROWS_AS(solve_ground_3d(m, -1.0, g), std::invalid_argument);
  const ComplexField wrong(make_grid(6.0, 100.0, 16, 128));
  CHECK_THROWS_AS(solve_ground_3d(m, 10.0, g, {}, &wrong), GridError);
  GroundOptions o;
  o.max_iterations = 3;
  o.strang_steps = 0;
  CHECK_THROWS_AS(solve_ground_3d(m, 1000.0, g, o), SolverError);
}

}
