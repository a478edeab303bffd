#include "bec/ground.hpp"

#include "bec/analysis.hpp"
#include "bec/models.hpp"
#include "bec/operators.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

namespace bec {

namespace {

constexpr double kPi = std::numbers::pi;

struct Diagnostics {
  double energy;
  double mu;
  double residual;
};

// Problem interface used by relax():
//   set_step(dtau), step()      one Strang imaginary-time step, normalized
//   diagnose()                  energy, mu, residual; keeps r = (H - mu) psi
//   prepare_descent(mu)         builds the preconditioner around mu
//   save(), restore()           one level of undo
//   descend(s)                  psi <- normalize(psi - s P^-1 r)
//   finite()
template <class Problem>
long relax(Problem& p, const GroundOptions& o, std::vector<TracePoint>* trace, double& dtau,
           const char* who) {
  auto fail = [&](const char* what, long it, double res) {
    throw SolverError(std::string(who) + ": " + what, static_cast<int>(it), res, dtau);
  };
  dtau = o.dtau;
  p.set_step(dtau);
  long it = 0;
  Diagnostics d = p.diagnose();
  if (trace)
    trace->push_back({0, dtau, d.energy, d.mu, d.residual});

  // Strang phase: stop once the residual reaches the splitting floor.
  long strang = 0;
  while (strang < o.strang_steps && d.residual > o.residual_tol) {
    for (int w = 0; w < o.window; ++w)
      p.step();
    strang += o.window;
    it += o.window;
    if (!p.finite())
      fail("non-finite field", it, d.residual);
    const Diagnostics n = p.diagnose();
    if (trace)
      trace->push_back({it, dtau, n.energy, n.mu, n.residual});
    const bool rose = n.energy > d.energy + 1e-12 * std::abs(d.energy);
    const bool floor = n.residual > o.floor_ratio * d.residual;
    d = n;
    if (rose && dtau > o.dtau_min) {
      dtau = std::max(o.dtau_min, 0.5 * dtau);
      p.set_step(dtau);
    } else if (floor) {
      break;
    }
  }

  // Descent phase: exact fixed point, energy never allowed to rise.
  p.prepare_descent(d.mu);
  double s = o.descent_step;
  double prev_mu = d.mu;
  while (true) {
    if (d.residual <= o.residual_tol && std::abs(d.mu - prev_mu) <= o.mu_tol * std::abs(d.mu))
      return it;
    if (it >= o.max_iterations)
      fail("maximum iterations exceeded", it, d.residual);
    p.save();
    p.descend(s);
    ++it;
    if (!p.finite())
      fail("non-finite field", it, d.residual);
    const Diagnostics n = p.diagnose();
    if (n.energy > d.energy + 1e-12 * std::abs(d.energy)) {
      p.restore();
      s *= 0.5;
      if (s < 1e-6)
        fail("residual stagnated above tolerance", it, d.residual);
      d = p.diagnose();
      continue;
    }
    if (trace)
      trace->push_back({it, 0.0, n.energy, n.mu, n.residual});
    prev_mu = d.mu;
    d = n;
    s = std::min(o.descent_step, 1.25 * s);
  }
}

std::vector<double> potential_table(const CylGrid& grid, const TrapModel& trap) {
  std::vector<double> v(grid.size());
  const int nz = grid.n_z();
  std::vector<double> vz(nz);
  for (int i = 0; i < nz; ++i)
    vz[i] = trap.longitudinal(grid.z(i));
  for (int j = 0; j < grid.n_rho; ++j) {
    const double r = grid.rho(j);
    for (int i = 0; i < nz; ++i)
      v[static_cast<std::size_t>(j) * nz + i] = 0.5 * r * r + vz[i];
  }
  return v;
}

// Shift of the preconditioner and damping of the region where the
// longitudinal potential alone exceeds mu; without it the wall of a hard
// trap limits the stable step size.
double descent_shift(double mu) { return std::max(0.2, mu - 1.0); }

double wall_damping(double v_z, double mu, double alpha) {
  return 1.0 / std::sqrt(1.0 + std::max(0.0, v_z - mu) / (alpha + 1.0));
}

// Cylindrical problem. The Strang step freezes W = V + gN|psi|^2 at the
// start so exp(-W/2) exp(-T) exp(-W/2) is symmetric and its fixed point is
// second order accurate in dtau.
class Cylindrical {
public:
  Cylindrical(ComplexField& psi, const TrapModel& trap, double gN)
      : psi_(psi), grid_(psi.grid()), trap_(trap), potential_(potential_table(grid_, trap)),
        gN_(gN), kinetic_(grid_), r_(grid_), w_(grid_.size()) {}

  void set_step(double dtau) {
    dtau_ = dtau;
    prop_.emplace(grid_, cplx{dtau, 0.0});
  }

  void step() {
    auto& p = psi_.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      w_[i] = std::exp(-0.5 * dtau_ * (potential_[i] + gN_ * std::norm(p[i])));
      p[i] *= w_[i];
    }
    prop_->apply(psi_);
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] *= w_[i];
    psi_.normalize();
  }

  bool finite() const { return psi_.all_finite(); }

  Diagnostics diagnose() {
    kinetic_.apply(psi_, r_);
    auto& h = r_.values();
    const auto& p = psi_.values();
    for (std::size_t i = 0; i < h.size(); ++i)
      h[i] += (potential_[i] + gN_ * std::norm(p[i])) * p[i];
    const double mu = overlap(r_, psi_).real();
    for (std::size_t i = 0; i < h.size(); ++i)
      h[i] -= mu * p[i];
    const double inter = 0.5 * gN_ * density_moment(psi_, 2);
    return {mu - inter, mu, std::sqrt(r_.norm_squared())};
  }

  void prepare_descent(double mu) {
    const int R = grid_.n_rho, Z = grid_.n_z();
    const double alpha = descent_shift(mu);
    const RadialStencil st = radial_stencil(grid_);
    const std::vector<double> kz = wave_numbers(Z, grid_.d_z());
    // Thomas factorization of alpha + k^2/2 + T_rho + rho^2/2 for every k.
    lower_ = st.lower;
    cp_.assign(grid_.size(), 0.0);
    inv_.assign(grid_.size(), 0.0);
    for (int i = 0; i < Z; ++i) {
      double prev = 0.0;
      for (int j = 0; j < R; ++j) {
        const double rho = grid_.rho(j);
        const double b = alpha + 0.5 * kz[i] * kz[i] + st.diag[j] + 0.5 * rho * rho;
        const double den = b - (j > 0 ? st.lower[j] * prev : 0.0);
        const std::size_t k = static_cast<std::size_t>(j) * Z + i;
        inv_[k] = 1.0 / den;
        cp_[k] = st.upper[j] / den;
        prev = cp_[k];
      }
    }
    damp_.resize(Z);
    for (int i = 0; i < Z; ++i)
      damp_[i] = wall_damping(trap_.longitudinal(grid_.z(i)), mu, alpha);
  }

  void save() { saved_ = psi_.values(); }
  void restore() { psi_.values() = saved_; }

  void descend(double s) {
    const int R = grid_.n_rho, Z = grid_.n_z();
    auto& h = r_.values();
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < Z; ++i)
        h[static_cast<std::size_t>(j) * Z + i] *= damp_[i];
    const ZFourier& fft = kinetic_.fourier();
    fft.forward(h);
    const double scale = 1.0 / Z;
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < Z; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * Z + i;
        cplx rhs = h[k] * scale;
        if (j > 0)
          rhs -= lower_[j] * h[k - Z];
        h[k] = rhs * inv_[k];
      }
    for (int j = R - 2; j >= 0; --j)
      for (int i = 0; i < Z; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * Z + i;
        h[k] -= cp_[k] * h[k + Z];
      }
    fft.backward(h);
    auto& p = psi_.values();
    for (int j = 0; j < R; ++j)
      for (int i = 0; i < Z; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * Z + i;
        p[k] -= s * damp_[i] * h[k];
      }
    psi_.normalize();
  }

private:
  ComplexField& psi_;
  CylGrid grid_;
  TrapModel trap_;
  std::vector<double> potential_;
  double gN_;
  KineticOperator kinetic_;
  ComplexField r_;
  std::vector<double> w_;
  double dtau_ = 0.0;
  std::optional<KineticPropagator> prop_;
  std::vector<double> lower_, cp_, inv_, damp_;
  std::vector<cplx> saved_;
};

class Longitudinal {
public:
  Longitudinal(std::vector<cplx>& phi, const ZGrid& grid, const TrapModel& trap, double g1)
      : phi_(phi), grid_(grid), g1_(g1), kz_(wave_numbers(grid.n, grid.dz)), fft_(1, grid.n),
        v_(grid.n), w_(grid.n), kfac_(grid.n), r_(grid.n) {
    for (int i = 0; i < grid.n; ++i)
      v_[i] = trap.longitudinal(grid.z(i));
  }

  void normalize() {
    double s = 0.0;
    for (const cplx c : phi_)
      s += std::norm(c);
    const double f = 1.0 / std::sqrt(s * grid_.dz);
    for (cplx& c : phi_)
      c *= f;
  }

  void set_step(double dtau) {
    dtau_ = dtau;
    const double n = grid_.n;
    for (int i = 0; i < grid_.n; ++i)
      kfac_[i] = std::exp(-dtau * 0.5 * kz_[i] * kz_[i]) / n;
  }

  void step() {
    const int n = grid_.n;
    for (int i = 0; i < n; ++i) {
      w_[i] = std::exp(-0.5 * dtau_ * (v_[i] + g1_ * std::norm(phi_[i])));
      phi_[i] *= w_[i];
    }
    fft_.forward(phi_);
    for (int i = 0; i < n; ++i)
      phi_[i] *= kfac_[i];
    fft_.backward(phi_);
    for (int i = 0; i < n; ++i)
      phi_[i] *= w_[i];
    normalize();
  }

  bool finite() const {
    for (const cplx c : phi_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        return false;
    return true;
  }

  Diagnostics diagnose() {
    const int n = grid_.n;
    r_ = phi_;
    fft_.forward(r_);
    for (int i = 0; i < n; ++i)
      r_[i] *= 0.5 * kz_[i] * kz_[i] / n;
    fft_.backward(r_);
    double mu = 0.0, e4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::norm(phi_[i]);
      r_[i] += (v_[i] + g1_ * d) * phi_[i];
      mu += (std::conj(phi_[i]) * r_[i]).real();
      e4 += d * d;
    }
    mu *= grid_.dz;
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      r_[i] -= mu * phi_[i];
      res += std::norm(r_[i]);
    }
    return {mu - 0.5 * g1_ * e4 * grid_.dz, mu, std::sqrt(res * grid_.dz)};
  }

  // Longitudinal analogue with P = alpha + k^2/2; the transverse zero point
  // is absent here, so the shift follows mu_L directly.
  void prepare_descent(double mu) {
    alpha_ = std::max(mu, 1e-3);
    damp_.resize(grid_.n);
    for (int i = 0; i < grid_.n; ++i)
      damp_[i] = 1.0 / std::sqrt(1.0 + std::max(0.0, v_[i] - mu) / alpha_);
  }

  void save() { saved_ = phi_; }
  void restore() { phi_ = saved_; }

  void descend(double s) {
    const int n = grid_.n;
    for (int i = 0; i < n; ++i)
      r_[i] *= damp_[i];
    fft_.forward(r_);
    for (int i = 0; i < n; ++i)
      r_[i] /= n * (alpha_ + 0.5 * kz_[i] * kz_[i]);
    fft_.backward(r_);
    for (int i = 0; i < n; ++i)
      phi_[i] -= s * damp_[i] * r_[i];
    normalize();
  }

private:
  std::vector<cplx>& phi_;
  ZGrid grid_;
  double g1_;
  std::vector<double> kz_;
  ZFourier fft_;
  std::vector<double> v_;
  std::vector<double> w_;
  std::vector<cplx> kfac_;
  std::vector<cplx> r_;
  double dtau_ = 0.0;
  double alpha_ = 1.0;
  std::vector<double> damp_;
  std::vector<cplx> saved_;
};

double transverse_gaussian(double rho) { return std::exp(-0.5 * rho * rho) / std::sqrt(kPi); }

double critical_number_trap_units(const TrapModel& trap) {
  const double z0 = std::pow(trap.k, -1.0 / (trap.q + 2.0));
  const double a = trap.g11 / (4.0 * kPi);
  return crossover_prefactor(trap.q) * (z0 / a) * std::pow(z0, 2.0 / trap.q);
}

// Width parameter s of the variational Gaussian exp(-z^2 / 2s) for k z^q / 2.
double bare_gaussian_s(const TrapModel& trap) {
  const double qd = trap.q;
  const double moment = std::tgamma(0.5 * (qd + 1.0)) / std::sqrt(kPi);
  return std::pow(1.0 / (trap.k * qd * moment), 2.0 / (qd + 2.0));
}

} // namespace

double gp_residual(const ComplexField& psi, const TrapModel& trap, double gN, double* mu_out) {
  ComplexField copy = psi;
  Cylindrical c(copy, trap, gN);
  const Diagnostics d = c.diagnose();
  if (mu_out)
    *mu_out = d.mu;
  return d.residual;
}

ComplexField initial_guess(const TrapModel& trap, double N, const CylGrid& grid, InitialGuess kind) {
  const double gN = trap.g11 * N;
  if (kind == InitialGuess::quasi_1d) {
    GroundOptions opts;
    const auto g1 = solve_ground_1d(trap, N, 1.0 / (2.0 * kPi), grid.axis, opts);
    return product_state(grid, g1);
  }
  ComplexField psi;
  if (gN > 0.0 && N >= critical_number_trap_units(trap)) {
    const TF3D tf = tf_3d(trap, N);
    psi = sample_field(grid, [&](double rho, double z) {
      return cplx{std::sqrt(std::max(0.0, tf.mu - trap.potential(rho, z)) / gN), 0.0};
    });
  } else if (gN > 0.0) {
    const TFQuantities tf = tf_quantities(trap, N, 3);
    psi = sample_field(grid, [&](double rho, double z) {
      return cplx{transverse_gaussian(rho) * std::sqrt(tf.linear_density(z)), 0.0};
    });
  }
  if (gN <= 0.0 || !(psi.norm_squared() > 0.0)) {
    const double s = bare_gaussian_s(trap);
    psi = sample_field(grid, [&](double rho, double z) {
      return cplx{transverse_gaussian(rho) * std::exp(-0.5 * z * z / s), 0.0};
    });
  }
  psi.normalize();
  return psi;
}

GroundState solve_ground_3d(const TrapModel& trap, double N, const CylGrid& grid,
                            const GroundOptions& opts, const ComplexField* initial) {
  if (!(N >= 0.0))
    throw std::invalid_argument("solve_ground_3d: N must be non-negative");
  const double gN = trap.g11 * N;
  GroundState out;
  out.N = N;
  if (initial) {
    if (!(initial->grid() == grid))
      throw GridError("solve_ground_3d: initial state grid mismatch");
    out.psi = *initial;
    out.psi.normalize();
  } else {
    out.psi = initial_guess(trap, N, grid, opts.guess);
  }

  Cylindrical problem(out.psi, trap, gN);
  out.iterations = relax(problem, opts, opts.record_trace ? &out.trace : nullptr, out.final_dtau,
                         "solve_ground_3d");

  // Real and nonnegative up to the global phase.
  auto& psi = out.psi.values();
  for (cplx& v : psi)
    v = cplx{std::abs(v), 0.0};

  const Diagnostics d = problem.diagnose();
  out.mu = d.mu;
  out.residual = d.residual;
  out.energies = energy_breakdown(out.psi, trap, gN);
  out.eta = density_moment(out.psi, 2);
  return out;
}

GroundState1D solve_ground_1d(const TrapModel& trap, double N, double eta_T, const ZGrid& grid,
                              const GroundOptions& opts) {
  if (!(N >= 0.0))
    throw std::invalid_argument("solve_ground_1d: N must be non-negative");
  const int n = grid.n;
  const double g1 = trap.g11 * N * eta_T;

  GroundState1D out;
  out.grid = grid;
  out.N = N;
  out.eta_T = eta_T;
  out.phi.assign(n, cplx{0.0, 0.0});

  // Thomas-Fermi start where it exists, bare Gaussian otherwise.
  if (g1 > 0.0) {
    const TFQuantities tf = tf_quantities(trap, N, 3);
    for (int i = 0; i < n; ++i)
      out.phi[i] = std::sqrt(tf.linear_density(grid.z(i)));
  }
  double s2 = 0.0;
  for (const cplx c : out.phi)
    s2 += std::norm(c);
  if (!(s2 > 0.0)) {
    const double s = bare_gaussian_s(trap);
    for (int i = 0; i < n; ++i)
      out.phi[i] = std::exp(-0.5 * grid.z(i) * grid.z(i) / s);
  }

  Longitudinal problem(out.phi, grid, trap, g1);
  problem.normalize();
  double dtau = 0.0;
  out.iterations = relax(problem, opts, nullptr, dtau, "solve_ground_1d");
  for (cplx& c : out.phi)
    c = std::abs(c);
  const Diagnostics d = problem.diagnose();
  out.residual = d.residual;
  out.mu_L = d.mu;
  double e4 = 0.0;
  for (const cplx c : out.phi)
    e4 += std::norm(c) * std::norm(c);
  out.eta_L = e4 * grid.dz;
  return out;
}

ComplexField product_state(const CylGrid& grid, const GroundState1D& longitudinal) {
  if (!(grid.axis == longitudinal.grid))
    throw GridError("product_state: longitudinal grid mismatch");
  ComplexField psi(grid);
  for (int j = 0; j < grid.n_rho; ++j) {
    const double chi = transverse_gaussian(grid.rho(j));
    for (int i = 0; i < grid.n_z(); ++i)
      psi(j, i) = chi * longitudinal.phi[i];
  }
  psi.normalize();
  return psi;
}

ComplexField rescale_to_grid(const ComplexField& psi, const CylGrid& target, double z_scale) {
  const CylGrid& src = psi.grid();
  if (src.n_rho != target.n_rho || std::abs(src.d_rho - target.d_rho) > 1e-14 * src.d_rho)
    throw GridError("rescale_to_grid: radial grids must agree");
  ComplexField out(target);
  for (int i = 0; i < target.n_z(); ++i) {
    const double zs = target.z(i) / z_scale; // position in the source cloud
    const double x = (zs - src.z(0)) / src.d_z();
    const int i0 = static_cast<int>(std::floor(x));
    const double f = x - i0;
    for (int j = 0; j < target.n_rho; ++j) {
      cplx v{0.0, 0.0};
      if (i0 >= 0 && i0 < src.n_z())
        v += (1.0 - f) * psi(j, i0);
      if (i0 + 1 >= 0 && i0 + 1 < src.n_z())
        v += f * psi(j, i0 + 1);
      out(j, i) = v;
    }
  }
  out.normalize();
  return out;
}

std::vector<double> SweepResult::N_values() const {
  std::vector<double> v;
  for (const auto& p : points)
    if (p.ok)
      v.push_back(p.N);
  return v;
}

std::vector<double> SweepResult::eta_values() const {
  std::vector<double> v;
  for (const auto& p : points)
    if (p.ok)
      v.push_back(p.eta);
  return v;
}

SweepResult eta_sweep(const TrapModel& trap, const std::vector<double>& N_list,
                      const SweepOptions& opts) {
  if (!std::is_sorted(N_list.begin(), N_list.end()))
    throw std::invalid_argument("eta_sweep: N list must be sorted ascending");
  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(N_list.size())));

  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    std::vector<SweepPoint> pts;
    std::optional<ComplexField> previous;
    double previous_N = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      SweepPoint p;
      p.N = N_list[i];
      try {
        const CylGrid grid = grid_for(trap, p.N, opts.grid);
        std::optional<ComplexField> warm;
        if (previous && previous_N > 0.0 && trap.g11 > 0.0) {
          const double scale = tf_half_length(trap, p.N) / tf_half_length(trap, previous_N);
          warm = rescale_to_grid(*previous, grid, scale);
        }
        GroundState g = solve_ground_3d(trap, p.N, grid, opts.ground, warm ? &*warm : nullptr);
        p.ok = true;
        p.eta = g.eta;
        p.mu = g.mu;
        p.residual = g.residual;
        p.iterations = g.iterations;
        previous = std::move(g.psi);
        previous_N = p.N;
      } catch (const SolverError& e) {
        p.error = e.what();
        p.residual = e.residual();
        p.iterations = e.iterations();
      } catch (const std::exception& e) {
        p.error = e.what();
      }
      pts.push_back(std::move(p));
    }
    return pts;
  };

  SweepResult result;
  const std::size_t n = N_list.size();
  if (workers == 1) {
    result.points = run_chunk(0, n);
  } else {
    std::vector<std::future<std::vector<SweepPoint>>> futures;
    for (int w = 0; w < workers; ++w) {
      const std::size_t b = n * w / workers, e = n * (w + 1) / workers;
      futures.push_back(std::async(std::launch::async, run_chunk, b, e));
    }
    for (auto& f : futures) {
      auto part = f.get();
      result.points.insert(result.points.end(), part.begin(), part.end());
    }
  }

  for (const FitWindow& w : opts.windows) {
    RegimeFit fit;
    fit.window = w;
    std::vector<double> xs, ys;
    for (const auto& p : result.points)
      if (p.ok && p.N >= w.N_min && p.N <= w.N_max) {
        xs.push_back(p.N);
        ys.push_back(p.eta);
      }
    try {
      const PowerLawFit f = fit_power_law(xs, ys, {w.N_min, w.N_max});
      fit.exponent = f.exponent;
      fit.prefactor = f.prefactor;
      fit.residual_rms = f.residual_rms;
      fit.ok = true;
    } catch (const std::exception& e) {
      fit.error = e.what();
    }
    result.fits.push_back(fit);
  }
  return result;
}

} // namespace bec
