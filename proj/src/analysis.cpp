#include "bec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bec {

namespace {

double interpolate(const std::vector<double>& t, const std::vector<double>& v, double x) {
  auto it = std::upper_bound(t.begin(), t.end(), x);
  if (it == t.begin())
    return v.front();
  if (it == t.end())
    return v.back();
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  const double f = (x - t[i - 1]) / (t[i] - t[i - 1]);
  return v[i - 1] + f * (v[i] - v[i - 1]);
}

} // namespace

FringeStats extract_fringe(const FringeSeries& s) {
  const std::size_t n = s.size();
  if (n < 3)
    throw AnalysisError("extract_fringe: series too short");
  FringeStats out;
  out.visibility = s.overlap_abs;
  const auto& y = s.overlap_im;
  const auto& t = s.t_trap;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (y[i] == 0.0) {
      // An exact zero on a sample counts once, as long as the signal moves off it.
      const bool before = i == 0 || y[i - 1] != 0.0;
      if (before)
        out.zero_crossings.push_back(t[i]);
    } else if ((y[i] < 0.0) != (y[i + 1] < 0.0) && y[i + 1] != 0.0) {
      out.zero_crossings.push_back(t[i] + (t[i + 1] - t[i]) * y[i] / (y[i] - y[i + 1]));
    }
  }
  if (y[n - 1] == 0.0 && y[n - 2] != 0.0)
    out.zero_crossings.push_back(t[n - 1]);

  const auto& zc = out.zero_crossings;
  if (zc.size() < 2)
    throw AnalysisError("extract_fringe: fewer than two zero crossings");
  const std::size_t m = zc.size() - 1;
  const double mean = (zc.back() - zc.front()) / static_cast<double>(m);
  out.frequency_trap = std::numbers::pi / mean;
  if (m >= 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = zc[i + 1] - zc[i] - mean;
      ss += d * d;
    }
    const double se = std::sqrt(ss / static_cast<double>(m - 1)) / std::sqrt(static_cast<double>(m));
    out.frequency_uncertainty_trap = out.frequency_trap * se / mean;
  }
  // Physical axis from the ratio of the two time columns.
  for (std::size_t i = 0; i < n; ++i)
    if (t[i] > 0.0 && s.t_s[i] > 0.0) {
      const double omega_T = t[i] / s.t_s[i];
      out.frequency_si = out.frequency_trap * omega_T;
      out.frequency_uncertainty_si = out.frequency_uncertainty_trap * omega_T;
      break;
    }
  return out;
}

double phase_frequency(const FringeSeries& s, double horizon) {
  std::vector<double> ts, ph;
  double offset = 0.0, last = 0.0;
  for (std::size_t i = 0; i < s.size() && s.t_trap[i] <= horizon; ++i) {
    const double a = std::arg(s.overlap(i));
    if (!ts.empty()) {
      double d = a - last;
      if (d > std::numbers::pi)
        offset -= 2.0 * std::numbers::pi;
      else if (d < -std::numbers::pi)
        offset += 2.0 * std::numbers::pi;
    }
    last = a;
    ts.push_back(s.t_trap[i]);
    ph.push_back(a + offset);
  }
  if (ts.size() < 2)
    throw AnalysisError("phase_frequency: fewer than two samples within horizon");
  const double n = static_cast<double>(ts.size());
  double st = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sp += ph[i];
  }
  st /= n;
  sp /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - st) * (ph[i] - sp);
    den += (ts[i] - st) * (ts[i] - st);
  }
  return -num / den;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, Window w) {
  if (x.size() != y.size())
    throw AnalysisError("fit_power_law: x and y differ in length");
  std::vector<double> lx, ly;
  PowerLawFit f;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= w.lo && x[i] <= w.hi))
      continue;
    if (!(x[i] > 0.0 && y[i] > 0.0))
      throw AnalysisError("fit_power_law: non-positive value in window");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  if (lx.size() < 3)
    throw AnalysisError("fit_power_law: fewer than three points in window");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0))
    throw AnalysisError("fit_power_law: degenerate window");
  f.exponent = sxy / sxx;
  const double c = my - f.exponent * mx;
  f.prefactor = std::exp(c);
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (c + f.exponent * lx[i]);
    rss += r * r;
  }
  f.residual_rms = std::sqrt(rss / n);
  f.x_min = std::exp(*std::min_element(lx.begin(), lx.end()));
  f.x_max = std::exp(*std::max_element(lx.begin(), lx.end()));
  f.points = static_cast<int>(lx.size());
  return f;
}

SeriesComparison compare_series(const FringeSeries& a, const FringeSeries& b, double horizon) {
  if (a.size() < 2 || b.size() < 2)
    throw AnalysisError("compare_series: series too short");
  const double lo = std::max(a.t_trap.front(), b.t_trap.front());
  const double hi = std::min({a.t_trap.back(), b.t_trap.back(), horizon});
  SeriesComparison c;
  double ss = 0.0;
  const double eps = 1e-12 * std::max(1.0, std::abs(hi));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a.t_trap[i];
    if (t < lo - eps || t > hi + eps)
      continue;
    const double d = std::abs(a.p1[i] - interpolate(b.t_trap, b.p1, t));
    c.max_dp1 = std::max(c.max_dp1, d);
    ss += d * d;
    ++c.samples;
  }
  if (c.samples == 0)
    throw AnalysisError("compare_series: no overlapping time range");
  c.rms_dp1 = std::sqrt(ss / c.samples);

  auto clip = [&](const FringeSeries& s) {
    FringeSeries r;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.t_trap[i] <= hi + eps)
        r.push(s.t_trap[i], s.t_s[i], s.overlap(i));
    return r;
  };
  const FringeSeries ca = clip(a), cb = clip(b);
  try {
    c.frequency_ratio = extract_fringe(ca).frequency_trap / extract_fringe(cb).frequency_trap;
  } catch (const AnalysisError&) {
    try {
      c.frequency_ratio = phase_frequency(ca) / phase_frequency(cb);
    } catch (const AnalysisError&) {
    }
  }
  return c;
}

} // namespace bec
