#pragma once

// Fringe statistics, power-law fits and series comparison.

#include "bec/series.hpp"

#include <limits>
#include <vector>

namespace bec {

class AnalysisError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct FringeStats {
  // Angular frequencies; "trap" in units of omega_T, "si" in rad/s (NaN when
  // the series carries no physical time axis).
  double frequency_trap = std::numeric_limits<double>::quiet_NaN();
  double frequency_si = std::numeric_limits<double>::quiet_NaN();
  double frequency_uncertainty_trap = std::numeric_limits<double>::quiet_NaN();
  double frequency_uncertainty_si = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> zero_crossings; // trap time units
  std::vector<double> visibility;     // |overlap| per sample
};

/// Frequency from the mean spacing of linearly interpolated zero crossings
/// of Im<psi2|psi1>. Needs at least two crossings.
FringeStats extract_fringe(const FringeSeries& series);

/// Accumulated-phase rate: -d arg<psi2|psi1>/dt from a least-squares line
/// through the unwrapped phase over t <= horizon (trap units). Works on
/// series shorter than one fringe period.
double phase_frequency(const FringeSeries& series,
                       double horizon = std::numeric_limits<double>::infinity());

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual_rms = 0.0; // in natural-log space
  double x_min = 0.0;
  double x_max = 0.0;
  int points = 0;
};

struct Window {
  double lo;
  double hi;
};

/// Least-squares line through (log x, log y) for the points with x in the
/// window. At least three points, all positive.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                          Window window = {0.0, std::numeric_limits<double>::infinity()});

struct SeriesComparison {
  double max_dp1 = 0.0;
  double rms_dp1 = 0.0;
  double frequency_ratio = std::numeric_limits<double>::quiet_NaN(); // a over b
  int samples = 0;
};

/// Compares b against a on a's sample times within [0, horizon] (trap
/// units), interpolating b linearly.
SeriesComparison compare_series(const FringeSeries& a, const FringeSeries& b,
                                double horizon = std::numeric_limits<double>::infinity());

} // namespace bec
