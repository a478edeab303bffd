#pragma once

// Real-time evolution of the two hyperfine modes after the first pulse,
//   i d/dt psi_a = [T + V + sum_b g_ab N_b |psi_b|^2] psi_a,
// and the Ramsey record read out after the second pulse.

#include "bec/ground.hpp"
#include "bec/series.hpp"

namespace bec {

class PropagationError : public std::runtime_error {
public:
  PropagationError(const std::string& what, long step, double t, double norm_drift)
      : std::runtime_error(what), step_(step), t_(t), norm_drift_(norm_drift) {}
  long step() const { return step_; }
  double t() const { return t_; }
  double norm_drift() const { return norm_drift_; }

private:
  long step_;
  double t_;
  double norm_drift_;
};

struct TwoModeState {
  ComplexField psi1;
  ComplexField psi2;
  double t = 0.0; // trap units
  double N1 = 0.0;
  double N2 = 0.0;
};

/// Both modes start in the ground state with half the atoms each.
TwoModeState initialize_after_pulse(const GroundState& ground);
TwoModeState initialize_after_pulse(const ComplexField& psi, double N);

struct PropagateOptions {
  double t_final = 0.0;     // trap units
  double dt = 0.02;         // trap units
  int sample_every = 25;    // steps between samples
  double norm_tol = 1e-8;   // per-mode drift that aborts the run
  bool track_energy = true; // evaluate the pair energy at every sample
  double time_unit_s = 0.0; // 1/omega_T in seconds, for the t_s column
};

struct PropagationResult {
  FringeSeries series;
  long steps = 0;
  double max_norm_drift = 0.0;
  double energy_initial = 0.0; // per atom, trap units
  double max_energy_drift = 0.0; // relative
};

/// Strang splitting with the exact nonlinear phase (densities are invariant
/// under it) and the shared kinetic propagator. Samples the overlap every
/// `sample_every` steps, including t = 0. Advances `state` in place.
PropagationResult propagate(TwoModeState& state, const TrapModel& trap,
                            const PropagateOptions& opts);

/// Mean-field energy per atom of the pair,
/// sum_a (N_a/N) <T + V>_a + (1/2N) sum_ab g_ab N_a N_b integral |psi_a|^2 |psi_b|^2.
double pair_energy(const TwoModeState& state, const TrapModel& trap);

struct MeasurementRecord {
  double p1;
  double p2;
  cplx overlap; // <psi2|psi1>
};

MeasurementRecord measurement_record(const TwoModeState& state);
MeasurementRecord measurement_record(const FringeSeries& series, std::size_t i);

} // namespace bec
