#pragma once

// Ramsey measurement records: the overlap <psi2|psi1> over time and the
// detection probabilities derived from it,
//   p1 = (1 - Im<psi2|psi1>) / 2,   p2 = (1 + Im<psi2|psi1>) / 2.

#include <complex>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace bec {

struct DetectionProbabilities {
  double p1;
  double p2;
};

DetectionProbabilities detection_probabilities(std::complex<double> overlap);

struct FringeSeries {
  std::string provenance; // "simulation" or a model id
  std::vector<double> t_trap;
  std::vector<double> t_s;
  std::vector<double> overlap_re;
  std::vector<double> overlap_im;
  std::vector<double> overlap_abs;
  std::vector<double> p1;
  std::vector<double> p2;

  std::size_t size() const { return t_trap.size(); }
  void push(double t_trap_value, double t_s_value, std::complex<double> overlap);
  std::complex<double> overlap(std::size_t i) const { return {overlap_re[i], overlap_im[i]}; }
};

/// CSV with "# key = value" provenance lines, then the header
/// t_s,t_trap,re_overlap,im_overlap,abs_overlap,p1,p2 and one row per sample.
void write_csv(std::ostream& os, const FringeSeries& series,
               const std::map<std::string, std::string>& parameters = {});
FringeSeries read_csv(std::istream& is, std::map<std::string, std::string>* parameters = nullptr);

} // namespace bec
