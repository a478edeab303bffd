#pragma once

// Closed-form and semi-analytic predictions, all in trap units
// (hbar = m = omega_T = 1, lengths in rho0).

#include "bec/params.hpp"
#include "bec/series.hpp"

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bec {

/// Longitudinal Thomas-Fermi solution with the Gaussian transverse ground
/// state: q0(z) = (mu_L - k z^q / 2) / (N g11 eta_T) on |z| <= z_N.
struct TFQuantities {
  double N = 0.0;
  int q = 2;
  double k = 0.0;
  double z_N = 0.0;
  double mu_L = 0.0;
  double eta_T = 0.0;
  double eta_L = 0.0;
  double eta_TF = 0.0;
  std::vector<double> z;  // profile nodes on [-z_N, z_N]
  std::vector<double> q0; // linear density at those nodes

  /// Linear density at arbitrary z (zero outside the support).
  double linear_density(double z) const;
};

TFQuantities tf_quantities(const TrapModel& trap, double N, int profile_points = 2049);

/// Three-dimensional Thomas-Fermi state n = (mu - V)_+ / (g11 N).
struct TF3D {
  double mu = 0.0;
  double z_max = 0.0; // longitudinal edge (2 mu / k)^(1/q)
  double eta = 0.0;
};

TF3D tf_3d(const TrapModel& trap, double N);
double tf_eta_3d(const TrapModel& trap, double N);

enum class ModelId { josephson, improved_tf, improved_adhoc, quantum_exact };

std::string to_string(ModelId id);
ModelId model_from_string(const std::string& name);

struct ModelCurve {
  ModelId id = ModelId::josephson;
  std::map<std::string, std::string> parameters;
  double Omega = 0.0; // idealized fringe frequency N eta gamma1, trap units
  FringeSeries series;
};

/// Josephson fringe with overlap exp(-i Omega t); p1 = (1 + sin(Omega t)) / 2.
ModelCurve josephson_fringe(double Omega, std::span<const double> times,
                            double time_unit_s = 0.0);

/// integral q0 exp(-i beta q0 t) dz on a tabulated profile, refined until two
/// successive refinements agree to `tol`.
std::complex<double> profile_overlap(const std::function<double(double)>& q0, double z_lo,
                                     double z_hi, double beta_t, int min_intervals = 2048,
                                     double tol = 1e-8);

enum class EtaSource { thomas_fermi, adhoc_numeric };

struct ImprovedOptions {
  EtaSource source = EtaSource::thomas_fermi;
  std::optional<double> eta_numeric; // required for adhoc_numeric
  int min_intervals = 2048;
  double tol = 1e-8;
};

/// Overlap integral q0 exp(-i q0 N eta_T gamma1 t) dz over the Thomas-Fermi
/// support. The ad hoc variant replaces eta_T by eta_numeric / eta_L.
ModelCurve improved_overlap(const TrapModel& trap, double N, std::span<const double> times,
                            const ImprovedOptions& opts, double time_unit_s = 0.0);

/// Same integral for an arbitrary normalized linear density on [z_lo, z_hi].
ModelCurve improved_overlap_profile(const std::function<double(double)>& q0, double z_lo,
                                    double z_hi, double N, double eta_T, double gamma1,
                                    std::span<const double> times, int min_intervals = 2048,
                                    double tol = 1e-8, double time_unit_s = 0.0);

/// Exact evolution of the x-polarized coherent spin state of N atoms under
/// H = gamma1 eta N Jz + gamma2 eta Jz^2.
struct QuantumSignal {
  std::vector<double> t;
  std::vector<double> jy_mean;
  std::vector<double> jy_std;
  std::vector<double> jx_mean;
  std::vector<double> djy_dgamma1; // analytic derivative of <Jy>
};

QuantumSignal exact_quantum_signal(int N, double gamma1, double gamma2, double eta,
                                   std::span<const double> times);

/// The same evolution reported as a fringe: overlap proxy
/// <psi2|psi1> = 2 <J_-> / N, so p1 = 1/2 + <Jy>/N.
ModelCurve exact_quantum_josephson(int N, double gamma1, double gamma2, double eta,
                                   std::span<const double> times, double time_unit_s = 0.0);

enum class SignalModel { ideal, quantum_exact };

struct SensitivityCurve {
  std::vector<double> t;
  std::vector<double> delta_gamma1; // trap units; +inf where the slope vanishes
  double N = 0.0;
  double eta = 0.0;
};

/// delta gamma1 = Delta Jy / |d<Jy>/d gamma1|.
SensitivityCurve sensitivity(int N, double eta, double gamma1, double gamma2,
                             std::span<const double> times, SignalModel model);

/// Closed form of the ideal model away from extrema: hbar / (N^(3/2) eta t).
double ideal_sensitivity(double N, double eta, double t);

} // namespace bec
