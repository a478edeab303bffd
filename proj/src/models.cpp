#include "bec/models.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace bec {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// integral_0^1 (1 - u^q)^p du; the integrand is a polynomial of degree p q,
// integrated exactly by the 30-point Gauss rule for p q < 60.
double edge_integral(int q, int p) {
  auto f = [q, p](double u) { return std::pow(1.0 - std::pow(u, q), p); };
  return boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, 1.0);
}

void fill_times(FringeSeries& s, std::span<const double> times, double time_unit_s,
                const std::function<std::complex<double>(double)>& overlap) {
  for (double t : times)
    s.push(t, t * time_unit_s, overlap(t));
}

} // namespace

double TFQuantities::linear_density(double zz) const {
  // (mu_L - k z^q / 2) / (N g11 eta_T) with the normalization that fixes z_N.
  const double u = std::abs(zz) / z_N;
  if (u >= 1.0)
    return 0.0;
  return (q + 1.0) / (2.0 * q * z_N) * (1.0 - std::pow(u, q));
}

TFQuantities tf_quantities(const TrapModel& trap, double N, int profile_points) {
  if (!(N > 0.0))
    throw std::invalid_argument("tf_quantities: N must be positive");
  if (profile_points < 3)
    throw std::invalid_argument("tf_quantities: need at least 3 profile points");
  const double qd = trap.q;
  TFQuantities tf;
  tf.N = N;
  tf.q = trap.q;
  tf.k = trap.k;
  tf.eta_T = 1.0 / (2.0 * kPi);
  tf.z_N = tf_half_length(trap, N);
  tf.mu_L = 0.5 * trap.k * std::pow(tf.z_N, qd);
  tf.eta_L = qd / (2.0 * qd + 1.0) * std::pow((qd + 1.0) / qd, qd / (qd + 1.0)) *
             std::pow(trap.k / (N * trap.g11), 1.0 / (qd + 1.0)) *
             std::pow(2.0 * kPi, 1.0 / (qd + 1.0));
  tf.eta_TF = tf.eta_T * tf.eta_L;
  tf.z.resize(profile_points);
  tf.q0.resize(profile_points);
  const double dz = 2.0 * tf.z_N / (profile_points - 1);
  for (int i = 0; i < profile_points; ++i) {
    tf.z[i] = -tf.z_N + i * dz;
    tf.q0[i] = tf.linear_density(tf.z[i]);
  }
  return tf;
}

TF3D tf_3d(const TrapModel& trap, double N) {
  if (!(N > 0.0))
    throw std::invalid_argument("tf_3d: N must be positive");
  const double qd = trap.q;
  const double gN = trap.g11 * N;
  // With A(z) = mu - k z^q / 2 and edge Z = (2 mu / k)^(1/q), the transverse
  // disc integrals give  norm = (pi / gN) int A^2 dz  and
  // eta = (2 pi / (3 gN^2)) int A^3 dz, where int A^p dz = 2 mu^p Z I_p.
  const double I2 = edge_integral(trap.q, 2);
  const double I3 = edge_integral(trap.q, 3);
  TF3D out;
  out.mu = std::pow(gN / (2.0 * kPi * I2 * std::pow(2.0 / trap.k, 1.0 / qd)), qd / (2.0 * qd + 1.0));
  out.z_max = std::pow(2.0 * out.mu / trap.k, 1.0 / qd);
  out.eta = 2.0 * kPi / (3.0 * gN * gN) * 2.0 * std::pow(out.mu, 3) * out.z_max * I3;
  return out;
}

double tf_eta_3d(const TrapModel& trap, double N) { return tf_3d(trap, N).eta; }

std::string to_string(ModelId id) {
  switch (id) {
  case ModelId::josephson:
    return "josephson";
  case ModelId::improved_tf:
    return "improved_tf";
  case ModelId::improved_adhoc:
    return "improved_adhoc";
  case ModelId::quantum_exact:
    return "quantum_exact";
  }
  return "unknown";
}

ModelId model_from_string(const std::string& name) {
  for (ModelId id : {ModelId::josephson, ModelId::improved_tf, ModelId::improved_adhoc,
                     ModelId::quantum_exact})
    if (to_string(id) == name)
      return id;
  throw std::invalid_argument("unknown model: " + name);
}

ModelCurve josephson_fringe(double Omega, std::span<const double> times, double time_unit_s) {
  if (!(Omega >= 0.0))
    throw std::invalid_argument("josephson_fringe: Omega must be non-negative");
  ModelCurve c;
  c.id = ModelId::josephson;
  c.Omega = Omega;
  c.parameters["model"] = "josephson";
  c.parameters["Omega_trap"] = num(Omega);
  c.series.provenance = "josephson";
  fill_times(c.series, times, time_unit_s,
             [Omega](double t) { return std::polar(1.0, -Omega * t); });
  return c;
}

std::complex<double> profile_overlap(const std::function<double(double)>& q0, double z_lo,
                                     double z_hi, double beta_t, int min_intervals, double tol) {
  auto simpson = [&](int n) {
    const double h = (z_hi - z_lo) / n;
    std::complex<double> sum{0.0, 0.0};
    for (int i = 0; i <= n; ++i) {
      const double z = z_lo + i * h;
      const double d = q0(z);
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      sum += w * d * std::polar(1.0, -beta_t * d);
    }
    return sum * (h / 3.0);
  };
  int n = std::max(2, min_intervals + (min_intervals % 2));
  std::complex<double> prev = simpson(n);
  constexpr int kMaxIntervals = 1 << 24;
  while (n < kMaxIntervals) {
    n *= 2;
    const std::complex<double> next = simpson(n);
    if (std::abs(next - prev) < tol)
      return next;
    prev = next;
  }
  throw std::runtime_error("profile_overlap: quadrature did not converge");
}

ModelCurve improved_overlap_profile(const std::function<double(double)>& q0, double z_lo,
                                    double z_hi, double N, double eta_T, double gamma1,
                                    std::span<const double> times, int min_intervals, double tol,
                                    double time_unit_s) {
  const double beta = N * eta_T * gamma1;
  // eta_L = integral q0^2 dz, on the finest fixed grid the caller asked for.
  const int n = std::max(2, 8 * min_intervals);
  const double h = (z_hi - z_lo) / n;
  double eta_L = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double d = q0(z_lo + i * h);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    eta_L += w * d * d;
  }
  eta_L *= h / 3.0;

  ModelCurve c;
  c.id = ModelId::improved_tf;
  c.Omega = beta * eta_L;
  c.parameters["eta_T"] = num(eta_T);
  c.parameters["eta_L"] = num(eta_L);
  c.parameters["Omega_trap"] = num(c.Omega);
  c.series.provenance = "improved_profile";
  fill_times(c.series, times, time_unit_s, [&](double t) {
    return profile_overlap(q0, z_lo, z_hi, beta * t, min_intervals, tol);
  });
  return c;
}

ModelCurve improved_overlap(const TrapModel& trap, double N, std::span<const double> times,
                            const ImprovedOptions& opts, double time_unit_s) {
  const TFQuantities tf = tf_quantities(trap, N, 3);
  double eta_T = tf.eta_T;
  if (opts.source == EtaSource::adhoc_numeric) {
    if (!opts.eta_numeric)
      throw std::invalid_argument(
          "improved_overlap: the ad hoc variant needs a numerically computed eta_N");
    eta_T = *opts.eta_numeric / tf.eta_L;
  }
  const double beta = N * eta_T * trap.gamma1();
  ModelCurve c;
  c.id = opts.source == EtaSource::adhoc_numeric ? ModelId::improved_adhoc : ModelId::improved_tf;
  c.Omega = beta * tf.eta_L;
  c.parameters["model"] = to_string(c.id);
  c.parameters["eta_source"] =
      opts.source == EtaSource::adhoc_numeric ? "adhoc_numeric" : "thomas_fermi";
  c.parameters["eta_T"] = num(eta_T);
  c.parameters["eta_L"] = num(tf.eta_L);
  c.parameters["eta"] = num(eta_T * tf.eta_L);
  c.parameters["z_N"] = num(tf.z_N);
  c.parameters["Omega_trap"] = num(c.Omega);
  c.series.provenance = to_string(c.id);
  auto q0 = [&tf](double z) { return tf.linear_density(z); };
  // The integrand is even in z.
  fill_times(c.series, times, time_unit_s, [&](double t) {
    return 2.0 * profile_overlap(q0, 0.0, tf.z_N, beta * t, opts.min_intervals, opts.tol);
  });
  return c;
}

QuantumSignal exact_quantum_signal(int N, double gamma1, double gamma2, double eta,
                                   std::span<const double> times) {
  if (N < 1)
    throw std::invalid_argument("exact_quantum_signal: N must be >= 1");
  const double j = 0.5 * N;
  // Binomial weights P_n of the x-polarized coherent state, n = N/2 + m atoms
  // in mode 1, from log-gamma and renormalized to unit sum.
  std::vector<double> P(N + 1);
  const double log_norm = std::lgamma(N + 1.0) - N * std::log(2.0);
  double total = 0.0;
  for (int n = 0; n <= N; ++n) {
    P[n] = std::exp(log_norm - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0));
    total += P[n];
  }
  for (double& p : P)
    p /= total;
  double jz2 = 0.0;
  for (int n = 0; n <= N; ++n) {
    const double m = n - j;
    jz2 += P[n] * m * m;
  }

  const double a = gamma1 * eta * N;
  const double b = gamma2 * eta;
  QuantumSignal out;
  for (double t : times) {
    // <J+> = sum_m P_m (j - m) e^{i(a + b(2m+1))t}
    // <J+^2> = sum_m P_m (j - m)(j - m - 1) e^{i(2a + b(4m+4))t}
    std::complex<double> jp{0.0, 0.0}, jp2{0.0, 0.0};
    for (int n = 0; n < N; ++n) {
      const double m = n - j;
      jp += P[n] * (j - m) * std::polar(1.0, (a + b * (2.0 * m + 1.0)) * t);
      if (n + 2 <= N)
        jp2 += P[n] * (j - m) * (j - m - 1.0) * std::polar(1.0, (2.0 * a + b * (4.0 * m + 4.0)) * t);
    }
    const double jy = jp.imag();
    const double jy2 = 0.5 * (j * (j + 1.0) - jz2) - 0.5 * jp2.real();
    out.t.push_back(t);
    out.jy_mean.push_back(jy);
    out.jx_mean.push_back(jp.real());
    out.jy_std.push_back(std::sqrt(std::max(0.0, jy2 - jy * jy)));
    out.djy_dgamma1.push_back(eta * N * t * jp.real());
  }
  return out;
}

ModelCurve exact_quantum_josephson(int N, double gamma1, double gamma2, double eta,
                                   std::span<const double> times, double time_unit_s) {
  const QuantumSignal sig = exact_quantum_signal(N, gamma1, gamma2, eta, times);
  ModelCurve c;
  c.id = ModelId::quantum_exact;
  c.Omega = N * eta * gamma1;
  c.parameters["model"] = "quantum_exact";
  c.parameters["N"] = num(N);
  c.parameters["eta"] = num(eta);
  c.parameters["gamma1_trap"] = num(gamma1);
  c.parameters["gamma2_trap"] = num(gamma2);
  c.parameters["Omega_trap"] = num(c.Omega);
  c.series.provenance = "quantum_exact";
  for (std::size_t i = 0; i < sig.t.size(); ++i) {
    const std::complex<double> ov(2.0 * sig.jx_mean[i] / N, -2.0 * sig.jy_mean[i] / N);
    c.series.push(sig.t[i], sig.t[i] * time_unit_s, ov);
  }
  return c;
}

SensitivityCurve sensitivity(int N, double eta, double gamma1, double gamma2,
                             std::span<const double> times, SignalModel model) {
  SensitivityCurve out;
  out.N = N;
  out.eta = eta;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (model == SignalModel::ideal) {
    const double Omega = N * eta * gamma1;
    const double half = 0.5 * N;
    for (double t : times) {
      const double c = std::cos(Omega * t);
      const double spread = 0.5 * std::sqrt(static_cast<double>(N)) * std::abs(c);
      const double slope = std::abs(half * c * N * eta * t);
      out.t.push_back(t);
      out.delta_gamma1.push_back(slope > 1e-12 * half * N * eta * std::abs(t) && t != 0.0
                                     ? spread / slope
                                     : inf);
    }
    return out;
  }
  const QuantumSignal sig = exact_quantum_signal(N, gamma1, gamma2, eta, times);
  for (std::size_t i = 0; i < sig.t.size(); ++i) {
    const double slope = std::abs(sig.djy_dgamma1[i]);
    const double scale = 0.5 * N * N * eta * std::abs(sig.t[i]);
    out.t.push_back(sig.t[i]);
    out.delta_gamma1.push_back(slope > 1e-12 * scale && sig.t[i] != 0.0 ? sig.jy_std[i] / slope
                                                                         : inf);
  }
  return out;
}

double ideal_sensitivity(double N, double eta, double t) {
  return 1.0 / (std::pow(N, 1.5) * eta * t);
}

} // namespace bec
