#include "bec/series.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bec {

DetectionProbabilities detection_probabilities(std::complex<double> overlap) {
  const double p1 = 0.5 * (1.0 - overlap.imag());
  return {p1, 1.0 - p1};
}

void FringeSeries::push(double t_trap_value, double t_s_value, std::complex<double> ov) {
  const auto p = detection_probabilities(ov);
  t_trap.push_back(t_trap_value);
  t_s.push_back(t_s_value);
  overlap_re.push_back(ov.real());
  overlap_im.push_back(ov.imag());
  overlap_abs.push_back(std::abs(ov));
  p1.push_back(p.p1);
  p2.push_back(p.p2);
}

namespace {
constexpr const char* kHeader = "t_s,t_trap,re_overlap,im_overlap,abs_overlap,p1,p2";
}

void write_csv(std::ostream& os, const FringeSeries& series,
               const std::map<std::string, std::string>& parameters) {
  os << "# provenance = " << series.provenance << '\n';
  for (const auto& [key, value] : parameters)
    os << "# " << key << " = " << value << '\n';
  os << kHeader << '\n';
  char buf[256];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", series.t_s[i],
                  series.t_trap[i], series.overlap_re[i], series.overlap_im[i],
                  series.overlap_abs[i], series.p1[i], series.p2[i]);
    os << buf;
  }
}

FringeSeries read_csv(std::istream& is, std::map<std::string, std::string>* parameters) {
  FringeSeries s;
  std::map<std::string, std::string> header;
  std::string line;
  bool seen_columns = false;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos && line.size() > 2)
        header[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    if (!seen_columns) {
      if (line.rfind(kHeader, 0) != 0)
        throw std::runtime_error("read_csv: unexpected column header: " + line);
      seen_columns = true;
      continue;
    }
    std::istringstream row(line);
    double v[7];
    char comma;
    for (int c = 0; c < 7; ++c) {
      if (!(row >> v[c]))
        throw std::runtime_error("read_csv: malformed row: " + line);
      if (c < 6)
        row >> comma;
    }
    s.t_s.push_back(v[0]);
    s.t_trap.push_back(v[1]);
    s.overlap_re.push_back(v[2]);
    s.overlap_im.push_back(v[3]);
    s.overlap_abs.push_back(v[4]);
    s.p1.push_back(v[5]);
    s.p2.push_back(v[6]);
  }
  if (!seen_columns)
    throw std::runtime_error("read_csv: no column header");
  if (auto it = header.find("provenance"); it != header.end())
    s.provenance = it->second;
  if (parameters)
    *parameters = std::move(header);
  return s;
}

} // namespace bec
