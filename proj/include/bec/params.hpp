#pragma once

// Physical configuration of a two-mode condensate in a cylindrically
// symmetric power-law trap, and the trap unit system used by the solvers.
//
// Trap units: length rho0 = sqrt(hbar / m omega_T), time 1/omega_T,
// energy hbar omega_T. In these units hbar = m = omega_T = 1 and the
// potential reads V = (rho^2 + k z^q) / 2.

#include <stdexcept>
#include <string>

namespace bec {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct PhysicalConstants {
  static constexpr double hbar = 1.054571817e-34;        // J s
  static constexpr double bohr_radius = 5.29177210903e-11; // m
  static constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
  static constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;
  static constexpr double pi = 3.14159265358979323846;
};

/// Scattering lengths in units of the Bohr radius, mass in kg.
/// Defaults are the |F=1,M=-1>, |F=2,M=1> pair of 87Rb.
struct SpeciesSpec {
  double a11 = 100.40;
  double a12 = 97.66;
  double a22 = 95.00;
  double mass = PhysicalConstants::rb87_mass;

  void validate() const;
  bool operator==(const SpeciesSpec&) const = default;
};

/// V(rho, z) = (m omega_T^2 rho^2 + k z^q) / 2, all SI.
struct TrapSpec {
  double omega_T = 2.0 * PhysicalConstants::pi * 350.0; // rad/s
  int q = 2;
  double k = 0.0; // J / m^q

  void validate() const;
  bool operator==(const TrapSpec&) const = default;
};

/// Harmonic longitudinal stiffness m omega_z^2.
double harmonic_stiffness(double omega_z, double mass);

/// The default experiment: omega_T = 2 pi 350 Hz, omega_z = 2 pi 3.5 Hz, q = 2.
TrapSpec reference_trap(double mass = PhysicalConstants::rb87_mass);

struct DerivedCouplings {
  double g11, g12, g22; // J m^3
  double gamma1;        // (g11 - g22) / 2
  double gamma2;        // (g11 + g22) / 2 - g12
};

DerivedCouplings derive_couplings(const SpeciesSpec& species);

/// Conversion between SI and trap units for a given trap and atomic mass.
class UnitSystem {
public:
  UnitSystem(double omega_T, double mass);
  UnitSystem(const TrapSpec& trap, const SpeciesSpec& species)
      : UnitSystem(trap.omega_T, species.mass) {}

  double length_unit() const { return length_; }        // m
  double time_unit() const { return 1.0 / omega_; }     // s
  double energy_unit() const { return energy_; }        // J
  double omega() const { return omega_; }
  double mass() const { return mass_; }

  double length_to_trap(double m) const { return m / length_; }
  double length_to_si(double l) const { return l * length_; }
  double time_to_trap(double s) const { return s * omega_; }
  double time_to_si(double t) const { return t / omega_; }
  double energy_to_trap(double j) const { return j / energy_; }
  double energy_to_si(double e) const { return e * energy_; }
  double frequency_to_trap(double rad_per_s) const { return rad_per_s / omega_; }
  double frequency_to_si(double w) const { return w * omega_; }
  /// Couplings carry J m^3.
  double coupling_to_trap(double g) const;
  double coupling_to_si(double g) const;
  /// Inverse volumes carry m^-3.
  double inverse_volume_to_trap(double eta) const;
  double inverse_volume_to_si(double eta) const;
  /// Stiffness k carries J / m^q.
  double stiffness_to_trap(double k, int q) const;
  double stiffness_to_si(double k, int q) const;

private:
  double omega_;
  double mass_;
  double length_;
  double energy_;
};

/// Everything a solver needs, already in trap units.
struct TrapModel {
  int q = 2;
  double k = 0.0;   // longitudinal stiffness, trap units
  double g11 = 0.0; // trap units (energy x length^3)
  double g12 = 0.0;
  double g22 = 0.0;

  double gamma1() const { return 0.5 * (g11 - g22); }
  double gamma2() const { return 0.5 * (g11 + g22) - g12; }
  double longitudinal(double z) const;
  double potential(double rho, double z) const;
};

TrapModel to_trap_units(const TrapSpec& trap, const SpeciesSpec& species);

struct TrapLengths {
  double rho0; // m
  double z0;   // m
};

TrapLengths trap_lengths(const TrapSpec& trap, double mass);

/// q-dependent prefactor relating the transverse critical number to
/// N_T = (z0/a)(z0/rho0)^(2/q); 1.3176 for q = 2, tends to 1 as q grows.
double crossover_prefactor(int q);

/// Kinetic energy of the bare longitudinal ground state in units of
/// hbar^2 / (2 m z0^2). Exact for q = 2 (value 1/2), Gaussian variational
/// estimate otherwise.
double bare_kinetic_coefficient(int q);

struct CriticalNumbers {
  double N_T_bar; // transverse (upper) critical atom number
  double N_L;     // longitudinal (lower) critical atom number
  double rho0;    // m
  double z0;      // m
};

CriticalNumbers critical_atom_numbers(const TrapSpec& trap, const SpeciesSpec& species);

/// 1D Thomas-Fermi closed forms in trap units, transverse Gaussian cross
/// section 1/(2 pi). Half length z_N and inverse volume eta.
double tf_half_length(const TrapModel& trap, double N);
double tf_eta_1d(const TrapModel& trap, double N);

/// Stiffness k (SI) for which the transverse critical number equals target_NT.
double stiffness_for_matched_crossover(int q, double target_NT, double omega_T,
                                       const SpeciesSpec& species);

} // namespace bec
