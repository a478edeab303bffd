#include "bec/analysis.hpp"
#include "bec/models.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bec;

namespace {

constexpr double pi = std::numbers::pi;

TrapModel rb(int q) {
  const SpeciesSpec s;
  TrapSpec t = reference_trap();
  if (q != 2) {
    t.q = q;
    t.k = stiffness_for_matched_crossover(q, critical_atom_numbers(reference_trap(), s).N_T_bar, t.omega_T, s);
  }
  return to_trap_units(t, s);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = a + (b - a) * i / (n - 1);
  return v;
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("Josephson fringe") {
  const auto t = linspace(0.0, 100.0, 51);
  const ModelCurve c = josephson_fringe(0.05, t, 1e-3);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(c.series.p1[i] == doctest::Approx(0.5 * (1 + std::sin(0.05 * t[i]))).epsilon(1e-14));
    CHECK(c.series.overlap_abs[i] == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(c.series.provenance == "josephson");
  CHECK_THROWS(josephson_fringe(-1.0, t));
}

TEST_CASE("model ids") {
  for (ModelId id : {ModelId::josephson, ModelId::improved_tf, ModelId::improved_adhoc, ModelId::quantum_exact})
    CHECK(model_from_string(to_string(id)) == id);
  CHECK_THROWS(model_from_string("lorentzian"));
}

TEST_CASE("3D Thomas-Fermi inverse volume by direct quadrature") {
  const TrapModel m = rb(4);
  const double N = 2e5;
  const TF3D tf = tf_3d(m, N);
  // n(rho, z) = (mu - V)/(g N) on V < mu; midpoint rule in (rho, z).
  const double gN = m.g11 * N, rmax = std::sqrt(2 * tf.mu);
  const int nr = 2000, nz = 2000;
  double norm = 0.0, eta = 0.0;
  for (int a = 0; a < nr; ++a) {
    const double r = (a + 0.5) * rmax / nr;
    for (int b = 0; b < nz; ++b) {
      const double z = -tf.z_max + (b + 0.5) * 2 * tf.z_max / nz;
      const double d = std::max(0.0, tf.mu - m.potential(r, z)) / gN;
      const double w = 2 * pi * r * (rmax / nr) * (2 * tf.z_max / nz);
      norm += d * w;
      eta += d * d * w;
    }
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(tf.eta == doctest::Approx(eta).epsilon(1e-4));
}

TEST_CASE("3D Thomas-Fermi exponent") {
  for (int q : {2, 4, 10}) {
    const TrapModel m = rb(q);
    std::vector<double> x, y;
    for (double n = 1e6; n <= 1.0001e8; n *= std::sqrt(10.0)) {
      x.push_back(n);
      y.push_back(tf_eta_3d(m, n));
    }
    CHECK(fit_power_law(x, y).exponent == doctest::Approx(-(q + 1.0) / (2 * q + 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("improved model: t = 0, instantaneous frequency and uniform limit") {
  const TrapModel m = rb(10);
  const double N = 1000.0;
  const std::vector<double> t{0.0, 1e-3, 2e-3};
  const ModelCurve c = improved_overlap(m, N, t, ImprovedOptions{});
  CHECK(std::abs(c.series.overlap(0) - 1.0) < 1e-10);
  const TFQuantities tf = tf_quantities(m, N);
  CHECK(c.Omega == doctest::Approx(N * tf.eta_T * tf.eta_L * m.gamma1()).epsilon(1e-12));
  // d/dt arg at t -> 0, by a central difference on the unwrapped phase.
  const double w = -(std::arg(c.series.overlap(2)) - std::arg(c.series.overlap(0))) / 2e-3;
  CHECK(w == doctest::Approx(c.Omega).epsilon(1e-6));

  const double L = 50.0;
  const ModelCurve u = improved_overlap_profile([L](double) { return 1.0 / L; }, 0.0, L, N, 0.1, m.gamma1(),
                                                linspace(0.0, 5e4, 11));
  for (double v : u.series.overlap_abs)
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ad hoc variant uses the numeric eta") {
  const TrapModel m = rb(10);
  const double N = 5000.0, eta = 5.6e-4;
  ImprovedOptions o;
  o.source = EtaSource::adhoc_numeric;
  o.eta_numeric = eta;
  const ModelCurve c = improved_overlap(m, N, std::vector<double>{0.0, 1.0}, o);
  CHECK(c.id == ModelId::improved_adhoc);
  CHECK(c.Omega == doctest::Approx(N * eta * m.gamma1()).epsilon(1e-12));
  o.eta_numeric.reset();
  CHECK_THROWS(improved_overlap(m, N, std::vector<double>{0.0}, o));
}

TEST_CASE("profile quadrature of a known integral") {
  // integral_0^1 z exp(-i b z) dz = e^c (1/c - 1/c^2) + 1/c^2 with c = -i b
  const double b = 3.7;
  const auto v = profile_overlap([](double z) { return z; }, 0.0, 1.0, b);
  const std::complex<double> c(0.0, -b);
  const auto ref = std::exp(c) * (1.0 / c - 1.0 / (c * c)) + 1.0 / (c * c);
  CHECK(std::abs(v - ref) < 1e-8);
}

TEST_CASE("quantum model without gamma2 is the Josephson signal") {
  const int N = 1000;
  const double eta = 1e-3, g1 = 0.05;
  const double Omega = N * eta * g1;
  const auto t = linspace(0.0, 4 * pi / Omega, 101);
  const QuantumSignal q = exact_quantum_signal(N, g1, 0.0, eta, t);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(std::abs(q.jy_mean[i] - 0.5 * N * std::sin(Omega * t[i])) < 1e-12 * N);
}

TEST_CASE("N = 2 against a matrix exponential") {
  using M = Eigen::Matrix3cd;
  const double j = 1.0, eta = 0.7, g1 = 0.3, g2 = 0.11;
  M Jz = M::Zero(), Jp = M::Zero();
  for (int k = 0; k < 3; ++k) {
    const double m = k - j;
    Jz(k, k) = m;
    if (k < 2)
      Jp(k + 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const M Jx = 0.5 * (Jp + Jp.adjoint());
  const M Jy = (Jp - Jp.adjoint()) / std::complex<double>(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<M> es(Jx);
  const Eigen::Vector3cd psi0 = es.eigenvectors().col(2); // <Jx> = +j
  const M H = g1 * eta * 2.0 * Jz + g2 * eta * Jz * Jz;
  const auto t = linspace(0.0, 40.0, 17);
  const QuantumSignal q = exact_quantum_signal(2, g1, g2, eta, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const M U = (std::complex<double>(0.0, -t[i]) * H).exp();
    const Eigen::Vector3cd psi = U * psi0;
    const double jy = (psi.adjoint() * Jy * psi)(0, 0).real();
    const double jy2 = (psi.adjoint() * Jy * Jy * psi)(0, 0).real();
    const double jx = (psi.adjoint() * Jx * psi)(0, 0).real();
    CHECK(std::abs(q.jy_mean[i] - jy) < 1e-12);
    CHECK(std::abs(q.jx_mean[i] - jx) < 1e-12);
    CHECK(std::abs(q.jy_std[i] - std::sqrt(std::max(0.0, jy2 - jy * jy))) < 1e-7);
  }
}

TEST_CASE("Rb gamma2 barely suppresses the amplitude over one period") {
  const TrapModel m = rb(2);
  const int N = 1000;
  const double eta = 1.37e-3;
  const double Omega = N * eta * m.gamma1();
  const auto t = linspace(0.0, 2 * pi / Omega, 401);
  const QuantumSignal q = exact_quantum_signal(N, m.gamma1(), m.gamma2(), eta, t);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(std::hypot(q.jx_mean[i], q.jy_mean[i]) / (0.5 * N) > 0.99);
  const ModelCurve c = exact_quantum_josephson(N, m.gamma1(), m.gamma2(), eta, t);
  CHECK(c.series.p1[100] == doctest::Approx(0.5 + q.jy_mean[100] / N).epsilon(1e-14));
}

TEST_CASE("ideal sensitivity at the first zero crossing") {
  const double eta = 1e-3, g1 = 0.05;
  for (int N : {100, 1000, 5000}) {
    const double t0 = pi / (N * eta * g1);
    const SensitivityCurve s = sensitivity(N, eta, g1, 0.0, std::vector<double>{t0}, SignalModel::ideal);
    const double oracle = 1.0 / (std::pow(N, 1.5) * eta * t0);
    CHECK(std::abs(s.delta_gamma1[0] - oracle) <= 1e-10 * oracle);
    CHECK(ideal_sensitivity(N, eta, t0) == doctest::Approx(oracle).epsilon(1e-14));
    // The quantum model without gamma2 agrees there too.
    const SensitivityCurve sq = sensitivity(N, eta, g1, 0.0, std::vector<double>{t0}, SignalModel::quantum_exact);
    CHECK(sq.delta_gamma1[0] == doctest::Approx(oracle).epsilon(1e-8));
  }
  const SensitivityCurve s = sensitivity(100, eta, g1, 0.0, std::vector<double>{0.0}, SignalModel::ideal);
  CHECK(std::isinf(s.delta_gamma1[0]));
}

}
