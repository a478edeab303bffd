#include "bec/params.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bec;

namespace {

constexpr double pi = std::numbers::pi;

// Plain bisection, kept separate from the Boost root finder in the library.
template <class F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) < 0.0) == (f(mid) < 0.0) ? lo = mid : hi = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_SUITE("params") {

TEST_CASE("couplings follow g = 4 pi hbar^2 a / m") {
  const SpeciesSpec rb;
  const DerivedCouplings c = derive_couplings(rb);
  const double h = 1.054571817e-34, a0 = 5.29177210903e-11, m = 86.909180527 * 1.66053906660e-27;
  CHECK(c.g11 == doctest::Approx(4 * pi * h * h * 100.40 * a0 / m).epsilon(1e-14));
  CHECK(c.g22 == doctest::Approx(4 * pi * h * h * 95.00 * a0 / m).epsilon(1e-14));
  CHECK(c.gamma1 == doctest::Approx(0.5 * (c.g11 - c.g22)).epsilon(1e-14));
  CHECK(c.gamma2 == doctest::Approx(0.5 * (c.g11 + c.g22) - c.g12).epsilon(1e-12));
  CHECK(c.gamma1 > 0.0);
}

TEST_CASE("invalid species and traps are rejected") {
  SpeciesSpec s;
  s.a11 = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  TrapSpec t = reference_trap();
  t.q = 1;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = reference_trap();
  t.k = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("unit conversions are exact inverses") {
  const UnitSystem u(2 * pi * 350.0, SpeciesSpec{}.mass);
  CHECK(u.length_unit() == doctest::Approx(0.576e-6).epsilon(0.01));
  CHECK(u.time_unit() == doctest::Approx(1.0 / (2 * pi * 350.0)));
  for (double x : {1e-7, 3.3e-3, 42.0}) {
    CHECK(u.length_to_si(u.length_to_trap(x)) == doctest::Approx(x).epsilon(1e-15));
    CHECK(u.time_to_si(u.time_to_trap(x)) == doctest::Approx(x).epsilon(1e-15));
    CHECK(u.energy_to_si(u.energy_to_trap(x)) == doctest::Approx(x).epsilon(1e-15));
    CHECK(u.coupling_to_si(u.coupling_to_trap(x)) == doctest::Approx(x).epsilon(1e-15));
    CHECK(u.stiffness_to_si(u.stiffness_to_trap(x, 10), 10) == doctest::Approx(x).epsilon(1e-14));
  }
  // m omega_z^2 in trap units is (omega_z / omega_T)^2.
  const TrapSpec ref = reference_trap();
  CHECK(u.stiffness_to_trap(ref.k, 2) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("reference trap: rho0 about 0.6 um and aspect ratio 1:10") {
  const TrapSpec ref = reference_trap();
  const auto l = trap_lengths(ref, SpeciesSpec{}.mass);
  CHECK(l.rho0 == doctest::Approx(0.6e-6).epsilon(0.05));
  CHECK(l.z0 / l.rho0 == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("crossover prefactor") {
  CHECK(crossover_prefactor(2) == doctest::Approx(std::pow(2.5, 1.5) / 3.0).epsilon(1e-14));
  CHECK(crossover_prefactor(2) == doctest::Approx(1.3176).epsilon(1e-4));
  double prev = crossover_prefactor(2);
  for (int q : {4, 6, 10, 20, 100}) {
    CHECK(crossover_prefactor(q) < prev);
    prev = crossover_prefactor(q);
  }
  CHECK(crossover_prefactor(100000) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("N_T_bar balances scattering and transverse kinetic energy") {
  const SpeciesSpec rb;
  const TrapSpec ref = reference_trap();
  const CriticalNumbers cn = critical_atom_numbers(ref, rb);
  CHECK(cn.N_T_bar == doctest::Approx(14000.0).epsilon(0.05));
  CHECK(cn.N_L < 10.0);
  CHECK(cn.N_L > 1.0);

  // (g11/2) N eta_1D(N) = transverse kinetic energy of the Gaussian = 1/2.
  for (const TrapSpec& trap :
       {ref, TrapSpec{ref.omega_T, 4, stiffness_for_matched_crossover(4, 14000.0, ref.omega_T, rb)},
        TrapSpec{ref.omega_T, 10, stiffness_for_matched_crossover(10, 14000.0, ref.omega_T, rb)}}) {
    const TrapModel m = to_trap_units(trap, rb);
    const double oracle =
        bisect([&](double n) { return 0.5 * m.g11 * n * tf_eta_1d(m, n) - 0.5; }, 1.0, 1e8);
    CHECK(critical_atom_numbers(trap, rb).N_T_bar == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("N_L matches longitudinal kinetic vs scattering balance") {
  const SpeciesSpec rb;
  const TrapSpec ref = reference_trap();
  const TrapModel m = to_trap_units(ref, rb);
  // q = 2: bare longitudinal kinetic energy is omega_z / 4 = z0^-2 / 4.
  const double z0 = std::pow(m.k, -0.25);
  const double oracle =
      bisect([&](double n) { return 0.5 * m.g11 * n * tf_eta_1d(m, n) - 0.25 / (z0 * z0); }, 1e-3, 1e6);
  CHECK(critical_atom_numbers(ref, rb).N_L == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(bare_kinetic_coefficient(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("matched crossover reproduces the target and the quoted aspect ratios") {
  const SpeciesSpec rb;
  const TrapSpec ref = reference_trap();
  const double target = critical_atom_numbers(ref, rb).N_T_bar;
  const double expected_z0[] = {24.0, 57.0};
  const double expected_zN[] = {146.0, 138.0};
  int i = 0;
  for (int q : {4, 10}) {
    const TrapSpec t{ref.omega_T, q, stiffness_for_matched_crossover(q, target, ref.omega_T, rb)};
    const CriticalNumbers cn = critical_atom_numbers(t, rb);
    CHECK(cn.N_T_bar == doctest::Approx(target).epsilon(1e-10));
    CHECK(cn.z0 / cn.rho0 == doctest::Approx(expected_z0[i]).epsilon(0.015));
    const TrapModel m = to_trap_units(t, rb);
    CHECK(tf_half_length(m, cn.N_T_bar) == doctest::Approx(expected_zN[i]).epsilon(0.01));
    ++i;
  }
  const TrapModel m2 = to_trap_units(ref, rb);
  CHECK(tf_half_length(m2, target) == doctest::Approx(158.0).epsilon(0.01));

  // With the round target 14000 the ratios move by about 2%.
  const TrapSpec t10{ref.omega_T, 10, stiffness_for_matched_crossover(10, 14000.0, ref.omega_T, rb)};
  CHECK(tf_half_length(to_trap_units(t10, rb), 14000.0) == doctest::Approx(138.0).epsilon(0.03));
  CHECK_THROWS_AS(stiffness_for_matched_crossover(4, -1.0, ref.omega_T, rb), ConfigError);
}

TEST_CASE("1D Thomas-Fermi closed forms") {
  const TrapModel m = to_trap_units(reference_trap(), SpeciesSpec{});
  const double N = 1000.0;
  // Direct integration of the parabola: n(z) = (mu_L - k z^2/2) / (N g eta_T).
  const double zN = tf_half_length(m, N);
  const double eta_T = 1.0 / (2 * pi);
  const double muL = 0.5 * m.k * zN * zN;
  double norm = 0.0, eta_L = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = -zN + (i + 0.5) * 2 * zN / n;
    const double d = (muL - 0.5 * m.k * z * z) / (N * m.g11 * eta_T);
    norm += d * 2 * zN / n;
    eta_L += d * d * 2 * zN / n;
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(tf_eta_1d(m, N) == doctest::Approx(eta_T * eta_L).epsilon(1e-8));
  CHECK(tf_eta_1d(m, 8 * N) / tf_eta_1d(m, N) == doctest::Approx(0.5).epsilon(1e-12));
}

}
