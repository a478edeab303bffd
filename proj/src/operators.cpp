#include "bec/operators.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace bec {

namespace {

// The FFTW planner is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

struct ZFourier::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  Plans() = default;
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd)
      fftw_destroy_plan(fwd);
    if (bwd)
      fftw_destroy_plan(bwd);
  }
};

ZFourier::ZFourier(int n_rows, int n_z) : rows_(n_rows), n_(n_z), plans_(std::make_unique<Plans>()) {
  std::vector<cplx> scratch(static_cast<std::size_t>(n_rows) * n_z);
  int n[] = {n_z};
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->fwd = fftw_plan_many_dft(1, n, n_rows, as_fftw(scratch.data()), nullptr, 1, n_z,
                                   as_fftw(scratch.data()), nullptr, 1, n_z, FFTW_FORWARD, flags);
  plans_->bwd = fftw_plan_many_dft(1, n, n_rows, as_fftw(scratch.data()), nullptr, 1, n_z,
                                   as_fftw(scratch.data()), nullptr, 1, n_z, FFTW_BACKWARD, flags);
  if (!plans_->fwd || !plans_->bwd)
    throw std::runtime_error("ZFourier: FFTW planning failed");
}

ZFourier::~ZFourier() = default;
ZFourier::ZFourier(ZFourier&&) noexcept = default;
ZFourier& ZFourier::operator=(ZFourier&&) noexcept = default;

void ZFourier::forward(std::span<cplx> data) const {
  fftw_execute_dft(plans_->fwd, as_fftw(data.data()), as_fftw(data.data()));
}

void ZFourier::backward(std::span<cplx> data) const {
  fftw_execute_dft(plans_->bwd, as_fftw(data.data()), as_fftw(data.data()));
}

std::vector<double> wave_numbers(int n, double dz) {
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / (n * dz);
  for (int i = 0; i < n; ++i)
    k[i] = (i < n / 2 ? i : i - n) * dk;
  return k;
}

RadialStencil radial_stencil(const CylGrid& grid) {
  const int n = grid.n_rho;
  const double h2 = grid.d_rho * grid.d_rho;
  RadialStencil s;
  s.lower.assign(n, 0.0);
  s.diag.assign(n, 0.0);
  s.upper.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double r = grid.rho(j);
    const double r_out = (j + 1) * grid.d_rho;
    const double r_in = j * grid.d_rho; // zero on the axis
    const double scale = 1.0 / (2.0 * r * h2);
    s.diag[j] = (r_out + r_in) * scale;
    if (j > 0)
      s.lower[j] = -r_in * scale;
    if (j + 1 < n)
      s.upper[j] = -r_out * scale;
  }
  return s;
}

RadialCrankNicolson::RadialCrankNicolson(const CylGrid& grid, cplx a)
    : n_rho_(grid.n_rho), n_z_(grid.n_z()), stencil_(radial_stencil(grid)), a_(a),
      c_prime_(grid.n_rho), inv_denom_(grid.n_rho), rhs_(grid.size()) {
  for (int j = 0; j < n_rho_; ++j) {
    cplx denom = 1.0 + a_ * stencil_.diag[j];
    if (j > 0)
      denom -= a_ * stencil_.lower[j] * c_prime_[j - 1];
    inv_denom_[j] = 1.0 / denom;
    c_prime_[j] = a_ * stencil_.upper[j] * inv_denom_[j];
  }
}

void RadialCrankNicolson::apply(std::span<cplx> field) const {
  const std::size_t nz = n_z_;
  // rhs = (I - a T) y, built row by row so the inner loop runs along z.
  for (int j = 0; j < n_rho_; ++j) {
    const cplx* y = field.data() + j * nz;
    const cplx* ym = j > 0 ? y - nz : nullptr;
    const cplx* yp = j + 1 < n_rho_ ? y + nz : nullptr;
    cplx* r = rhs_.data() + j * nz;
    const cplx d = 1.0 - a_ * stencil_.diag[j];
    const cplx l = -a_ * stencil_.lower[j];
    const cplx u = -a_ * stencil_.upper[j];
    for (std::size_t i = 0; i < nz; ++i) {
      cplx v = d * y[i];
      if (ym)
        v += l * ym[i];
      if (yp)
        v += u * yp[i];
      r[i] = v;
    }
  }
  // Forward elimination, in place in rhs.
  for (int j = 0; j < n_rho_; ++j) {
    cplx* r = rhs_.data() + j * nz;
    const cplx inv = inv_denom_[j];
    if (j == 0) {
      for (std::size_t i = 0; i < nz; ++i)
        r[i] *= inv;
    } else {
      const cplx* prev = r - nz;
      const cplx l = a_ * stencil_.lower[j];
      for (std::size_t i = 0; i < nz; ++i)
        r[i] = (r[i] - l * prev[i]) * inv;
    }
  }
  // Back substitution into the field.
  for (int j = n_rho_ - 1; j >= 0; --j) {
    const cplx* r = rhs_.data() + j * nz;
    cplx* x = field.data() + j * nz;
    if (j == n_rho_ - 1) {
      for (std::size_t i = 0; i < nz; ++i)
        x[i] = r[i];
    } else {
      const cplx* next = x + nz;
      const cplx c = c_prime_[j];
      for (std::size_t i = 0; i < nz; ++i)
        x[i] = r[i] - c * next[i];
    }
  }
}

KineticOperator::KineticOperator(const CylGrid& grid)
    : grid_(grid), stencil_(radial_stencil(grid)), kz_(wave_numbers(grid.n_z(), grid.d_z())),
      fft_(grid.n_rho, grid.n_z()), work_(grid.size()) {}

void KineticOperator::apply(const ComplexField& psi, ComplexField& out) const {
  if (!(psi.grid() == grid_))
    throw GridError("KineticOperator: grid mismatch");
  if (!(out.grid() == grid_))
    out = ComplexField(grid_);
  const std::size_t nz = grid_.n_z();
  const auto& in = psi.values();
  auto& res = out.values();

  // Longitudinal part through the spectrum.
  std::copy(in.begin(), in.end(), work_.begin());
  fft_.forward(work_);
  const double inv_n = 1.0 / static_cast<double>(nz);
  for (int j = 0; j < grid_.n_rho; ++j)
    for (std::size_t i = 0; i < nz; ++i)
      work_[j * nz + i] *= 0.5 * kz_[i] * kz_[i] * inv_n;
  fft_.backward(work_);

  for (int j = 0; j < grid_.n_rho; ++j) {
    const double l = stencil_.lower[j];
    const double d = stencil_.diag[j];
    const double u = stencil_.upper[j];
    for (std::size_t i = 0; i < nz; ++i) {
      const std::size_t idx = j * nz + i;
      cplx v = d * in[idx] + work_[idx];
      if (j > 0)
        v += l * in[idx - nz];
      if (j + 1 < grid_.n_rho)
        v += u * in[idx + nz];
      res[idx] = v;
    }
  }
}

double KineticOperator::expectation(const ComplexField& psi) const {
  ComplexField tpsi(grid_);
  apply(psi, tpsi);
  return overlap(tpsi, psi).real();
}

KineticPropagator::KineticPropagator(const CylGrid& grid, cplx tau)
    : grid_(grid), fft_(grid.n_rho, grid.n_z()), z_factor_(grid.n_z()), radial_(grid, 0.5 * tau) {
  const auto k = wave_numbers(grid.n_z(), grid.d_z());
  const double inv_n = 1.0 / grid.n_z();
  for (int i = 0; i < grid.n_z(); ++i)
    z_factor_[i] = std::exp(-tau * (0.5 * k[i] * k[i])) * inv_n;
}

void KineticPropagator::apply(ComplexField& psi) const {
  if (!(psi.grid() == grid_))
    throw GridError("KineticPropagator: grid mismatch");
  apply(std::span<cplx>(psi.values()));
}

void KineticPropagator::apply(std::span<cplx> values) const {
  const std::size_t nz = grid_.n_z();
  fft_.forward(values);
  for (int j = 0; j < grid_.n_rho; ++j) {
    cplx* row = values.data() + j * nz;
    for (std::size_t i = 0; i < nz; ++i)
      row[i] *= z_factor_[i];
  }
  fft_.backward(values);
  radial_.apply(values);
}

} // namespace bec
