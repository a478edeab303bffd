#include "bec/dynamics.hpp"

#include "bec/operators.hpp"

#include <cmath>

namespace bec {

namespace {

// psi_a *= exp(-i tau [V + g_a1 N1 |psi1|^2 + g_a2 N2 |psi2|^2]). Both
// densities are unchanged by this map, so it is exact for any tau.
void nonlinear_phase(std::vector<cplx>& p1, std::vector<cplx>& p2, const std::vector<double>& v,
                     const TrapModel& trap, double N1, double N2, double tau) {
  const double a11 = trap.g11 * N1, a12 = trap.g12 * N2;
  const double a21 = trap.g12 * N1, a22 = trap.g22 * N2;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double d1 = std::norm(p1[i]), d2 = std::norm(p2[i]);
    const double ph1 = -tau * (v[i] + a11 * d1 + a12 * d2);
    const double ph2 = -tau * (v[i] + a21 * d1 + a22 * d2);
    p1[i] *= cplx{std::cos(ph1), std::sin(ph1)};
    p2[i] *= cplx{std::cos(ph2), std::sin(ph2)};
  }
}

std::vector<double> potential_values(const CylGrid& grid, const TrapModel& trap) {
  std::vector<double> v(grid.size());
  for (int j = 0; j < grid.n_rho; ++j)
    for (int i = 0; i < grid.n_z(); ++i)
      v[static_cast<std::size_t>(j) * grid.n_z() + i] = trap.potential(grid.rho(j), grid.z(i));
  return v;
}

} // namespace

TwoModeState initialize_after_pulse(const ComplexField& psi, double N) {
  TwoModeState s;
  s.psi1 = psi;
  s.psi1.normalize();
  s.psi2 = s.psi1;
  s.N1 = s.N2 = 0.5 * N;
  return s;
}

TwoModeState initialize_after_pulse(const GroundState& ground) {
  return initialize_after_pulse(ground.psi, ground.N);
}

double pair_energy(const TwoModeState& s, const TrapModel& trap) {
  const CylGrid& grid = s.psi1.grid();
  const double N = s.N1 + s.N2;
  const EnergyBreakdown e1 = energy_breakdown(s.psi1, trap, 0.0);
  const EnergyBreakdown e2 = energy_breakdown(s.psi2, trap, 0.0);
  double i11 = 0.0, i12 = 0.0, i22 = 0.0;
  const int nz = grid.n_z();
  for (int j = 0; j < grid.n_rho; ++j) {
    double r11 = 0.0, r12 = 0.0, r22 = 0.0;
    for (int i = 0; i < nz; ++i) {
      const double d1 = std::norm(s.psi1(j, i)), d2 = std::norm(s.psi2(j, i));
      r11 += d1 * d1;
      r12 += d1 * d2;
      r22 += d2 * d2;
    }
    const double w = grid.weight(j);
    i11 += w * r11;
    i12 += w * r12;
    i22 += w * r22;
  }
  const double inter = 0.5 * (trap.g11 * s.N1 * s.N1 * i11 + 2.0 * trap.g12 * s.N1 * s.N2 * i12 +
                              trap.g22 * s.N2 * s.N2 * i22);
  return (s.N1 * e1.single_particle + s.N2 * e2.single_particle + inter) / N;
}

MeasurementRecord measurement_record(const TwoModeState& s) {
  const cplx ov = overlap(s.psi1, s.psi2);
  const auto p = detection_probabilities(ov);
  return {p.p1, p.p2, ov};
}

MeasurementRecord measurement_record(const FringeSeries& series, std::size_t i) {
  return {series.p1.at(i), series.p2.at(i), series.overlap(i)};
}

PropagationResult propagate(TwoModeState& s, const TrapModel& trap, const PropagateOptions& opts) {
  if (!(opts.dt > 0.0) || opts.sample_every < 1)
    throw std::invalid_argument("propagate: dt must be positive and sample_every >= 1");
  if (!(s.psi1.grid() == s.psi2.grid()))
    throw GridError("propagate: modes live on different grids");
  const long total = std::lround(opts.t_final / opts.dt);
  if (std::abs(total * opts.dt - opts.t_final) > 1e-9 * std::max(1.0, opts.t_final))
    throw std::invalid_argument("propagate: t_final is not a whole number of steps");

  const CylGrid& grid = s.psi1.grid();
  const std::vector<double> v = potential_values(grid, trap);
  const KineticPropagator kinetic(grid, cplx{0.0, opts.dt});
  auto& p1 = s.psi1.values();
  auto& p2 = s.psi2.values();
  const double t0 = s.t;

  PropagationResult r;
  r.series.provenance = "simulation";
  auto sample = [&] {
    const cplx ov = overlap(s.psi1, s.psi2);
    r.series.push(s.t, opts.time_unit_s > 0.0 ? s.t * opts.time_unit_s : 0.0, ov);
    const double drift =
        std::max(std::abs(s.psi1.norm_squared() - 1.0), std::abs(s.psi2.norm_squared() - 1.0));
    r.max_norm_drift = std::max(r.max_norm_drift, drift);
    if (!std::isfinite(ov.real()) || !std::isfinite(ov.imag()))
      throw PropagationError("propagate: non-finite field", r.steps, s.t, drift);
    if (drift > opts.norm_tol)
      throw PropagationError("propagate: norm drift exceeds tolerance", r.steps, s.t, drift);
    if (opts.track_energy) {
      const double e = pair_energy(s, trap);
      if (r.steps == 0)
        r.energy_initial = e;
      else
        r.max_energy_drift =
            std::max(r.max_energy_drift, std::abs(e - r.energy_initial) / std::abs(r.energy_initial));
    }
  };

  sample();
  while (r.steps < total) {
    const long block = std::min<long>(opts.sample_every, total - r.steps);
    // Adjacent nonlinear half steps inside a block merge into full steps.
    nonlinear_phase(p1, p2, v, trap, s.N1, s.N2, 0.5 * opts.dt);
    for (long k = 0; k < block; ++k) {
      kinetic.apply(s.psi1);
      kinetic.apply(s.psi2);
      const double tau = k + 1 < block ? opts.dt : 0.5 * opts.dt;
      nonlinear_phase(p1, p2, v, trap, s.N1, s.N2, tau);
    }
    r.steps += block;
    s.t = t0 + r.steps * opts.dt;
    sample();
  }
  return r;
}

} // namespace bec
