#include "bec/params.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>

namespace bec {

namespace {
constexpr double kPi = PhysicalConstants::pi;
}

void SpeciesSpec::validate() const {
  if (!(a11 > 0.0) || !(a12 > 0.0) || !(a22 > 0.0))
    throw ConfigError("species: scattering lengths must be positive");
  if (!(mass > 0.0))
    throw ConfigError("species: mass must be positive");
}

void TrapSpec::validate() const {
  if (!(omega_T > 0.0))
    throw ConfigError("trap: omega_T must be positive");
  if (q < 2 || q % 2 != 0)
    throw ConfigError("trap: q must be an even integer >= 2");
  if (!(k > 0.0))
    throw ConfigError("trap: k must be positive");
}

double harmonic_stiffness(double omega_z, double mass) { return mass * omega_z * omega_z; }

TrapSpec reference_trap(double mass) {
  TrapSpec t;
  t.omega_T = 2.0 * kPi * 350.0;
  t.q = 2;
  t.k = harmonic_stiffness(2.0 * kPi * 3.5, mass);
  return t;
}

DerivedCouplings derive_couplings(const SpeciesSpec& species) {
  const double hbar = PhysicalConstants::hbar;
  const double unit = 4.0 * kPi * hbar * hbar * PhysicalConstants::bohr_radius / species.mass;
  DerivedCouplings c{};
  c.g11 = unit * species.a11;
  c.g12 = unit * species.a12;
  c.g22 = unit * species.a22;
  c.gamma1 = 0.5 * (c.g11 - c.g22);
  c.gamma2 = 0.5 * (c.g11 + c.g22) - c.g12;
  return c;
}

UnitSystem::UnitSystem(double omega_T, double mass)
    : omega_(omega_T), mass_(mass),
      length_(std::sqrt(PhysicalConstants::hbar / (mass * omega_T))),
      energy_(PhysicalConstants::hbar * omega_T) {
  if (!(omega_T > 0.0) || !(mass > 0.0))
    throw ConfigError("unit system: omega_T and mass must be positive");
}

double UnitSystem::coupling_to_trap(double g) const {
  return g / (energy_ * length_ * length_ * length_);
}
double UnitSystem::coupling_to_si(double g) const {
  return g * energy_ * length_ * length_ * length_;
}
double UnitSystem::inverse_volume_to_trap(double eta) const {
  return eta * length_ * length_ * length_;
}
double UnitSystem::inverse_volume_to_si(double eta) const {
  return eta / (length_ * length_ * length_);
}
double UnitSystem::stiffness_to_trap(double k, int q) const {
  return k * std::pow(length_, q) / energy_;
}
double UnitSystem::stiffness_to_si(double k, int q) const {
  return k * energy_ / std::pow(length_, q);
}

double TrapModel::longitudinal(double z) const {
  return 0.5 * k * std::pow(z, q);
}

double TrapModel::potential(double rho, double z) const {
  return 0.5 * (rho * rho + k * std::pow(z, q));
}

TrapModel to_trap_units(const TrapSpec& trap, const SpeciesSpec& species) {
  trap.validate();
  species.validate();
  const UnitSystem units(trap, species);
  const DerivedCouplings c = derive_couplings(species);
  TrapModel m;
  m.q = trap.q;
  m.k = units.stiffness_to_trap(trap.k, trap.q);
  m.g11 = units.coupling_to_trap(c.g11);
  m.g12 = units.coupling_to_trap(c.g12);
  m.g22 = units.coupling_to_trap(c.g22);
  return m;
}

TrapLengths trap_lengths(const TrapSpec& trap, double mass) {
  const double hbar = PhysicalConstants::hbar;
  TrapLengths l{};
  l.rho0 = std::sqrt(hbar / (mass * trap.omega_T));
  l.z0 = std::pow(hbar * hbar / (mass * trap.k), 1.0 / (trap.q + 2));
  return l;
}

double crossover_prefactor(int q) {
  const double qd = q;
  return qd / (2.0 * (qd + 1.0)) * std::pow((2.0 * qd + 1.0) / qd, (qd + 1.0) / qd);
}

double bare_kinetic_coefficient(int q) {
  // Trial density exp(-z^2/s) in units where hbar = m = 1 and k = z0^-(q+2).
  // E(s) = 1/(4s) + (k/2) s^(q/2) Gamma((q+1)/2)/sqrt(pi), minimised in s.
  const double qd = q;
  const double moment = std::tgamma(0.5 * (qd + 1.0)) / std::sqrt(kPi);
  const double k = 1.0; // z0 = 1
  const double s = std::pow(1.0 / (k * qd * moment), 2.0 / (qd + 2.0));
  const double kinetic = 1.0 / (4.0 * s);
  // kinetic = c_q / (2 z0^2)
  return 2.0 * kinetic;
}

double tf_half_length(const TrapModel& trap, double N) {
  const double qd = trap.q;
  const double eta_T = 1.0 / (2.0 * kPi);
  return std::pow((qd + 1.0) / qd * N * trap.g11 * eta_T / trap.k, 1.0 / (qd + 1.0));
}

double tf_eta_1d(const TrapModel& trap, double N) {
  const double qd = trap.q;
  const double eta_T = 1.0 / (2.0 * kPi);
  return qd / (2.0 * qd + 1.0) * std::pow((qd + 1.0) / qd, qd / (qd + 1.0)) *
         std::pow(trap.k / (N * trap.g11), 1.0 / (qd + 1.0)) * std::pow(eta_T, qd / (qd + 1.0));
}

CriticalNumbers critical_atom_numbers(const TrapSpec& trap, const SpeciesSpec& species) {
  const TrapModel model = to_trap_units(trap, species);
  const UnitSystem units(trap, species);
  const double qd = trap.q;
  const double z0 = std::pow(model.k, -1.0 / (qd + 2.0));
  const double a = model.g11 / (4.0 * kPi);

  CriticalNumbers out{};
  out.rho0 = units.length_unit();
  out.z0 = units.length_to_si(z0);
  out.N_T_bar = crossover_prefactor(trap.q) * (z0 / a) * std::pow(z0, 2.0 / qd);

  // Longitudinal bare kinetic energy equals the scattering energy g N eta / 2.
  const double kinetic = bare_kinetic_coefficient(trap.q) / (2.0 * z0 * z0);
  auto balance = [&](double n) { return 0.5 * model.g11 * n * tf_eta_1d(model, n) - kinetic; };
  std::uintmax_t max_iter = 200;
  boost::math::tools::eps_tolerance<double> tol(50);
  try {
    // The scattering energy grows as N^(q/(q+1)), so the balance is increasing.
    const auto [lo, hi] =
        boost::math::tools::bracket_and_solve_root(balance, 1.0, 2.0, true, tol, max_iter);
    if (max_iter >= 200)
      throw std::runtime_error("iteration limit");
    out.N_L = 0.5 * (lo + hi);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("critical_atom_numbers: N_L solve failed: ") + e.what());
  }
  return out;
}

double stiffness_for_matched_crossover(int q, double target_NT, double omega_T,
                                       const SpeciesSpec& species) {
  if (!(target_NT > 0.0))
    throw ConfigError("stiffness_for_matched_crossover: target must be positive");
  const UnitSystem units(omega_T, species.mass);
  const double a = units.length_to_trap(species.a11 * PhysicalConstants::bohr_radius);
  // N_T_bar = C_q z0^((q+2)/q) / a, and k = z0^-(q+2) in trap units.
  const double k_trap = std::pow(crossover_prefactor(q) / (target_NT * a), q);
  return units.stiffness_to_si(k_trap, q);
}

} // namespace bec
