#pragma once

// Ground states of the single-mode GP equation
//   (T + V + g11 N |psi|^2) psi = mu psi,   ||psi|| = 1,
// in the cylindrical geometry and in the reduced longitudinal geometry, by
// normalized imaginary-time Strang splitting.

#include "bec/gridfield.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bec {

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, int iterations, double residual, double dtau)
      : std::runtime_error(what), iterations_(iterations), residual_(residual), dtau_(dtau) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }
  double dtau() const { return dtau_; }

private:
  int iterations_;
  double residual_;
  double dtau_;
};

enum class InitialGuess { thomas_fermi, quasi_1d };

/// Two phases. Strang imaginary-time steps at dtau remove the short-wavelength
/// error of the initial guess until the residual reaches the splitting floor;
/// a preconditioned normalized gradient flow then converges to the discrete
/// eigenstate itself, psi <- normalize(psi - s P^-1 (H - mu) psi) with
/// P = alpha + T + rho^2/2 (and a diagonal damping where k z^q/2 exceeds mu).
struct GroundOptions {
  double dtau = 0.05;          // imaginary time step of the first phase (trap units)
  double dtau_min = 1e-4;      // halving on energy increase stops here
  long strang_steps = 2000;    // cap on the first phase
  double floor_ratio = 0.9;    // residual ratio between windows that ends the first phase
  double descent_step = 1.0;   // initial s of the second phase
  double mu_tol = 1e-10;       // |d mu| / mu between diagnostic windows
  double residual_tol = 1e-6;  // ||(H - mu) psi|| in trap units
  int window = 25;             // Strang steps between diagnostics
  long max_iterations = 20000; // total steps of both phases
  InitialGuess guess = InitialGuess::thomas_fermi;
  bool record_trace = false;   // keep per-diagnostic history

  bool operator==(const GroundOptions&) const = default;
};

struct TracePoint {
  long iteration;
  double dtau; // Strang step, or 0 in the second phase
  double energy; // total energy per particle
  double mu;
  double residual;
};

struct GroundState {
  ComplexField psi;
  double N = 0.0;
  double mu = 0.0;
  EnergyBreakdown energies;
  double eta = 0.0; // integral |psi|^4, in rho0^-3
  long iterations = 0;
  double residual = 0.0;
  double final_dtau = 0.0;
  std::vector<TracePoint> trace;
};

/// ||(H_GP - mu) psi|| with mu the Rayleigh quotient; psi normalized.
double gp_residual(const ComplexField& psi, const TrapModel& trap, double gN, double* mu_out = nullptr);

GroundState solve_ground_3d(const TrapModel& trap, double N, const CylGrid& grid,
                            const GroundOptions& opts = {},
                            const ComplexField* initial = nullptr);

/// Longitudinal ground state for -(1/2) phi'' + k z^q/2 phi + g11 N eta_T |phi|^2 phi = mu_L phi.
struct GroundState1D {
  ZGrid grid;
  std::vector<cplx> phi;
  double N = 0.0;
  double eta_T = 0.0;
  double mu_L = 0.0;
  double eta_L = 0.0; // integral |phi|^4 dz
  long iterations = 0;
  double residual = 0.0;

  double density(int i) const { return std::norm(phi[i]); }
};

GroundState1D solve_ground_1d(const TrapModel& trap, double N, double eta_T, const ZGrid& grid,
                              const GroundOptions& opts = {});

/// Product of the transverse Gaussian and a longitudinal profile, normalized.
ComplexField product_state(const CylGrid& grid, const GroundState1D& longitudinal);

/// Initial guess used by solve_ground_3d.
ComplexField initial_guess(const TrapModel& trap, double N, const CylGrid& grid, InitialGuess kind);

/// Maps psi onto a new grid with z stretched by `z_scale` (linear
/// interpolation in z, exact copy in rho when radial grids agree), then
/// normalizes.
ComplexField rescale_to_grid(const ComplexField& psi, const CylGrid& target, double z_scale);

struct SweepPoint {
  double N = 0.0;
  bool ok = false;
  double eta = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  long iterations = 0;
  std::string error;
};

struct FitWindow {
  std::string regime; // "1d", "3d", ...
  double N_min;
  double N_max;

  bool operator==(const FitWindow&) const = default;
};

struct RegimeFit {
  FitWindow window;
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual_rms = 0.0;
  bool ok = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points; // ascending N
  std::vector<RegimeFit> fits;

  std::vector<double> N_values() const;
  std::vector<double> eta_values() const;
};

struct SweepOptions {
  GridPolicy grid;
  GroundOptions ground;
  std::vector<FitWindow> windows;
  int workers = 1;
};

/// One 3D ground solve per N, each warm-started from the previous point of
/// the same worker chunk. Failures are recorded per point.
SweepResult eta_sweep(const TrapModel& trap, const std::vector<double>& N_list,
                      const SweepOptions& opts);

} // namespace bec
