#include "bec/gridfield.hpp"

#include "bec/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bec {

ZGrid make_zgrid(double extent_z, int n_z) {
  if (!(extent_z > 0.0))
    throw GridError("grid: z extent must be positive");
  if (n_z < 8 || !std::has_single_bit(static_cast<unsigned>(n_z)))
    throw GridError("grid: n_z must be a power of two >= 8, got " + std::to_string(n_z));
  ZGrid g;
  g.n = n_z;
  g.extent = extent_z;
  g.dz = 2.0 * extent_z / n_z;
  return g;
}

double CylGrid::weight(int j) const { return 2.0 * std::numbers::pi * rho(j) * d_rho * axis.dz; }

CylGrid make_grid(double extent_rho, double extent_z, int n_rho, int n_z) {
  if (!(extent_rho > 0.0))
    throw GridError("grid: rho extent must be positive");
  if (n_rho < 8)
    throw GridError("grid: n_rho must be >= 8, got " + std::to_string(n_rho));
  CylGrid g;
  g.n_rho = n_rho;
  g.extent_rho = extent_rho;
  g.d_rho = extent_rho / n_rho;
  g.axis = make_zgrid(extent_z, n_z);
  return g;
}

double auto_extent_z(const TrapModel& trap, double N, const GridPolicy& policy) {
  const double z0 = std::pow(trap.k, -1.0 / (trap.q + 2.0));
  const double zN = N > 0.0 && trap.g11 > 0.0 ? tf_half_length(trap, N) : 0.0;
  return std::max(policy.z_margin * zN, policy.z0_margin * z0);
}

CylGrid grid_for(const TrapModel& trap, double N, const GridPolicy& policy) {
  return make_grid(policy.extent_rho, auto_extent_z(trap, N, policy), policy.n_rho, policy.n_z);
}

double ComplexField::norm_squared() const { return density_moment(*this, 1); }

void ComplexField::normalize() {
  const double n = std::sqrt(norm_squared());
  if (!(n > 0.0))
    throw std::runtime_error("ComplexField::normalize: zero field");
  scale(1.0 / n);
}

void ComplexField::scale(cplx c) {
  for (auto& v : values_)
    v *= c;
}

bool ComplexField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double density_moment(const ComplexField& f, int p) {
  if (p != 1 && p != 2)
    throw std::invalid_argument("density_moment: p must be 1 or 2");
  const CylGrid& g = f.grid();
  double total = 0.0;
  for (int j = 0; j < g.n_rho; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.n_z(); ++i) {
      const double d = std::norm(f(j, i));
      row += p == 1 ? d : d * d;
    }
    total += g.weight(j) * row;
  }
  return total;
}

cplx overlap(const ComplexField& f1, const ComplexField& f2) {
  if (!(f1.grid() == f2.grid()))
    throw GridError("overlap: grid mismatch");
  const CylGrid& g = f1.grid();
  cplx total{0.0, 0.0};
  for (int j = 0; j < g.n_rho; ++j) {
    cplx row{0.0, 0.0};
    for (int i = 0; i < g.n_z(); ++i)
      row += std::conj(f2(j, i)) * f1(j, i);
    total += g.weight(j) * row;
  }
  return total;
}

EnergyBreakdown energy_breakdown(const ComplexField& f, const TrapModel& trap, double gN) {
  const CylGrid& g = f.grid();
  const double norm = f.norm_squared();
  KineticOperator kinetic(g);

  EnergyBreakdown e;
  e.kinetic = kinetic.expectation(f) / norm;
  double pot = 0.0;
  for (int j = 0; j < g.n_rho; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.n_z(); ++i)
      row += trap.potential(g.rho(j), g.z(i)) * std::norm(f(j, i));
    pot += g.weight(j) * row;
  }
  e.potential = pot / norm;
  e.interaction = 0.5 * gN * density_moment(f, 2) / (norm * norm);
  e.single_particle = e.kinetic + e.potential;
  e.total = e.single_particle + e.interaction;
  e.mu = e.single_particle + 2.0 * e.interaction;
  return e;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void write_snapshot(std::ostream& os, const ComplexField& f,
                    const std::map<std::string, std::string>& parameters) {
  const CylGrid& g = f.grid();
  os << "# bec-field-snapshot 1\n";
  os << "# units = trap (length rho0, time 1/omega_T, energy hbar omega_T)\n";
  os << "# n_rho = " << g.n_rho << '\n';
  os << "# n_z = " << g.n_z() << '\n';
  os << "# extent_rho = " << format_double(g.extent_rho) << '\n';
  os << "# extent_z = " << format_double(g.axis.extent) << '\n';
  for (const auto& [key, value] : parameters)
    os << "# " << key << " = " << value << '\n';
  os << "# columns = re im (row-major, rho index outer, z index inner)\n";
  char buf[96];
  for (const cplx v : f.values()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.real(), v.imag());
    os << buf;
  }
}

ComplexField read_snapshot(std::istream& is, std::map<std::string, std::string>* parameters) {
  std::map<std::string, std::string> header;
  std::string line;
  while (is.peek() == '#' && std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos && line.size() > 2)
      header[line.substr(2, eq - 2)] = line.substr(eq + 3);
  }
  auto need = [&](const char* key) {
    auto it = header.find(key);
    if (it == header.end())
      throw std::runtime_error(std::string("read_snapshot: missing header key ") + key);
    return it->second;
  };
  const CylGrid grid = make_grid(std::stod(need("extent_rho")), std::stod(need("extent_z")),
                                 std::stoi(need("n_rho")), std::stoi(need("n_z")));
  ComplexField f(grid);
  for (auto& v : f.values()) {
    double re = 0.0, im = 0.0;
    if (!(is >> re >> im))
      throw std::runtime_error("read_snapshot: truncated data");
    v = {re, im};
  }
  if (parameters)
    *parameters = std::move(header);
  return f;
}

} // namespace bec
