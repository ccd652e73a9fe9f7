#include <algorithm>

#include "ncr/kernels.hpp"

namespace ncr::kernels::scalar {

void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta) {
  out = in;
  const std::size_t n = in.count;
  for (std::size_t j = 0; j < n; ++j) {
    double d = sheet.eps[0] * in.at(sheet.coords[0], j);
    for (std::size_t k = 1; k < sheet.coords.size(); ++k) d = std::min(d, sheet.eps[k] * in.at(sheet.coords[k], j));
    delta[j] = d;
  }
  for (std::size_t k = 0; k < sheet.coords.size(); ++k) {
    const double* x = in.coord(sheet.coords[k]);
    double* y = out.coord(sheet.coords[k]);
    for (std::size_t j = 0; j < n; ++j) y[j] = x[j] - delta[j] * sheet.eps[k];
  }
}

void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  std::fill(out.begin(), out.end(), 1.0);
  for (std::size_t k = 0; k < sheet.coords.size(); ++k) {
    const double* x = in.coord(sheet.coords[k]);
    for (int e = 0; e < sheet.exponents[k]; ++e)
      for (std::size_t j = 0; j < in.count; ++j) out[j] = out[j] * x[j];
  }
}

void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < sheet.coords.size(); ++k) {
    const double* x = in.coord(sheet.coords[k]);
    const double a = sheet.exponents[k], e = sheet.eps[k];
    for (std::size_t j = 0; j < in.count; ++j) out[j] = out[j] + a / (e * x[j]);
  }
}

}  // namespace ncr::kernels::scalar
