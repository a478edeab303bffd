#pragma once

// Cylindrically symmetric grids and complex fields in trap units.
//
// Radial nodes sit at (j + 1/2) d_rho so there is no node on the axis; the
// field obeys a Neumann condition at rho = 0 and vanishes one node beyond
// the last radial node. The z axis is uniform and periodic on
// [-extent_z, +extent_z) so the longitudinal kinetic term can be applied
// spectrally. Fields are stored row-major with z contiguous:
// index = j * n_z + i.

#include "bec/params.hpp"

#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bec {

using cplx = std::complex<double>;

class GridError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ZGrid {
  int n = 0;
  double extent = 0.0; // half length L, nodes on [-L, L)
  double dz = 0.0;

  double z(int i) const { return -extent + i * dz; }
  bool operator==(const ZGrid&) const = default;
};

ZGrid make_zgrid(double extent_z, int n_z);

struct CylGrid {
  int n_rho = 0;
  double extent_rho = 0.0;
  double d_rho = 0.0;
  ZGrid axis;

  int n_z() const { return axis.n; }
  double d_z() const { return axis.dz; }
  std::size_t size() const { return static_cast<std::size_t>(n_rho) * axis.n; }
  double rho(int j) const { return (j + 0.5) * d_rho; }
  double z(int i) const { return axis.z(i); }
  /// Volume weight 2 pi rho_j d_rho d_z of a node in row j.
  double weight(int j) const;
  bool operator==(const CylGrid&) const = default;
};

/// extent_rho and extent_z (half length) in trap units. n_z must be a power
/// of two; both counts at least 8.
CylGrid make_grid(double extent_rho, double extent_z, int n_rho, int n_z);

struct GridPolicy {
  int n_rho = 64;
  int n_z = 1024;
  double extent_rho = 6.0; // in rho0
  double z_margin = 1.5;   // times the Thomas-Fermi half length z_N
  double z0_margin = 8.0;  // times the bare width z0, used when larger

  bool operator==(const GridPolicy&) const = default;
};

/// Longitudinal half extent max(z_margin z_N, z0_margin z0) in trap units.
double auto_extent_z(const TrapModel& trap, double N, const GridPolicy& policy);
CylGrid grid_for(const TrapModel& trap, double N, const GridPolicy& policy);

class ComplexField {
public:
  ComplexField() = default;
  explicit ComplexField(const CylGrid& grid)
      : grid_(grid), values_(grid.size(), cplx{0.0, 0.0}) {}

  const CylGrid& grid() const { return grid_; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  cplx& operator()(int j, int i) { return values_[static_cast<std::size_t>(j) * grid_.n_z() + i]; }
  cplx operator()(int j, int i) const {
    return values_[static_cast<std::size_t>(j) * grid_.n_z() + i];
  }

  /// Sum of |psi|^2 weights.
  double norm_squared() const;
  void normalize();
  void scale(cplx c);
  bool all_finite() const;

private:
  CylGrid grid_;
  std::vector<cplx> values_;
};

template <class F>
ComplexField sample_field(const CylGrid& grid, F&& f) {
  ComplexField out(grid);
  for (int j = 0; j < grid.n_rho; ++j)
    for (int i = 0; i < grid.n_z(); ++i)
      out(j, i) = f(grid.rho(j), grid.z(i));
  return out;
}

/// Integral of |f|^(2p) over the grid, p in {1, 2}.
double density_moment(const ComplexField& f, int p);

/// <f2|f1> = integral of conj(f2) f1.
cplx overlap(const ComplexField& f1, const ComplexField& f2);

struct EnergyBreakdown {
  double kinetic = 0.0;
  double potential = 0.0;
  double interaction = 0.0;   // (gN/2) integral |psi|^4
  double single_particle = 0.0; // kinetic + potential
  double total = 0.0;           // single_particle + interaction
  double mu = 0.0;              // single_particle + 2 interaction
};

/// Energies per particle of a normalized field for H = T + V + gN|psi|^2.
EnergyBreakdown energy_breakdown(const ComplexField& f, const TrapModel& trap, double gN);

/// Text snapshot: "# key = value" header lines followed by one "re im" pair
/// per node in storage order (rho index outer, z index inner).
void write_snapshot(std::ostream& os, const ComplexField& f,
                    const std::map<std::string, std::string>& parameters = {});
ComplexField read_snapshot(std::istream& is, std::map<std::string, std::string>* parameters = nullptr);

} // namespace bec
