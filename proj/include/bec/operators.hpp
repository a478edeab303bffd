#pragma once

// Discrete kinetic operator on a CylGrid and the propagators built from it.
//
// T = T_rho + T_z with T_z = -(1/2) d^2/dz^2 applied spectrally and
//   (T_rho psi)_j = -[r_{j+1/2}(psi_{j+1} - psi_j) - r_{j-1/2}(psi_j - psi_{j-1})]
//                   / (2 rho_j d_rho^2),
// r_{-1/2} = 0 and psi_{n_rho} = 0. T_rho is symmetric under the rho_j
// weight, so Crank-Nicolson steps preserve the grid norm exactly.

#include "bec/gridfield.hpp"

#include <memory>
#include <span>
#include <vector>

namespace bec {

/// Batched in-place FFT along z for every radial row. Plans are created with
/// FFTW_ESTIMATE so results are identical run to run.
class ZFourier {
public:
  ZFourier(int n_rows, int n_z);
  ~ZFourier();
  ZFourier(const ZFourier&) = delete;
  ZFourier& operator=(const ZFourier&) = delete;
  ZFourier(ZFourier&&) noexcept;
  ZFourier& operator=(ZFourier&&) noexcept;

  void forward(std::span<cplx> data) const;
  /// Unnormalized; caller folds 1/n_z into its multiplier.
  void backward(std::span<cplx> data) const;

  int rows() const { return rows_; }
  int n() const { return n_; }

private:
  struct Plans;
  int rows_;
  int n_;
  std::unique_ptr<Plans> plans_;
};

/// Angular wave numbers of an n-point periodic grid with spacing dz.
std::vector<double> wave_numbers(int n, double dz);

struct RadialStencil {
  std::vector<double> lower; // coefficient of psi_{j-1}
  std::vector<double> diag;
  std::vector<double> upper; // coefficient of psi_{j+1}
};

RadialStencil radial_stencil(const CylGrid& grid);

/// Solves (I + a T_rho) x = (I - a T_rho) y column by column for a fixed
/// complex a (a = i dt/2 in real time, dtau/2 in imaginary time).
class RadialCrankNicolson {
public:
  RadialCrankNicolson(const CylGrid& grid, cplx a);
  void apply(std::span<cplx> field) const;

private:
  int n_rho_;
  int n_z_;
  RadialStencil stencil_;
  cplx a_;
  std::vector<cplx> c_prime_; // forward-eliminated upper coefficients
  std::vector<cplx> inv_denom_;
  mutable std::vector<cplx> rhs_;
};

class KineticOperator {
public:
  explicit KineticOperator(const CylGrid& grid);

  /// out = T psi.
  void apply(const ComplexField& psi, ComplexField& out) const;
  /// <psi|T|psi> (not divided by the norm).
  double expectation(const ComplexField& psi) const;

  const CylGrid& grid() const { return grid_; }
  const std::vector<double>& kz() const { return kz_; }
  const ZFourier& fourier() const { return fft_; }

private:
  CylGrid grid_;
  RadialStencil stencil_;
  std::vector<double> kz_;
  ZFourier fft_;
  mutable std::vector<cplx> work_;
};

/// One full kinetic step exp(-tau_z T_z) followed by the radial CN step,
/// with tau = i dt (real time) or dtau (imaginary time).
class KineticPropagator {
public:
  KineticPropagator(const CylGrid& grid, cplx tau);
  void apply(ComplexField& psi) const;
  void apply(std::span<cplx> values) const;

private:
  CylGrid grid_;
  ZFourier fft_;
  std::vector<cplx> z_factor_;
  RadialCrankNicolson radial_;
};

} // namespace bec
