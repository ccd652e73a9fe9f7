// Compiled with -mavx2 only (no FMA), so every lane performs exactly the
// scalar operation sequence.
#include <immintrin.h>

#include <algorithm>

#include "ncr/kernels.hpp"

namespace ncr::kernels::avx2 {

namespace {
constexpr std::size_t kLanes = 4;
}

void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta) {
  out = in;
  const std::size_t n = in.count;
  const std::size_t m = sheet.coords.size();
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    __m256d d = _mm256_mul_pd(_mm256_set1_pd(sheet.eps[0]), _mm256_loadu_pd(in.coord(sheet.coords[0]) + j));
    for (std::size_t k = 1; k < m; ++k) {
      __m256d v = _mm256_mul_pd(_mm256_set1_pd(sheet.eps[k]), _mm256_loadu_pd(in.coord(sheet.coords[k]) + j));
      // std::min(d, v) returns d unless v < d.
      d = _mm256_blendv_pd(d, v, _mm256_cmp_pd(v, d, _CMP_LT_OQ));
    }
    _mm256_storeu_pd(delta.data() + j, d);
    for (std::size_t k = 0; k < m; ++k) {
      __m256d x = _mm256_loadu_pd(in.coord(sheet.coords[k]) + j);
      __m256d y = _mm256_sub_pd(x, _mm256_mul_pd(d, _mm256_set1_pd(sheet.eps[k])));
      _mm256_storeu_pd(out.coord(sheet.coords[k]) + j, y);
    }
  }
  for (; j < n; ++j) {
    double d = sheet.eps[0] * in.at(sheet.coords[0], j);
    for (std::size_t k = 1; k < m; ++k) d = std::min(d, sheet.eps[k] * in.at(sheet.coords[k], j));
    delta[j] = d;
    for (std::size_t k = 0; k < m; ++k) out.at(sheet.coords[k], j) = in.at(sheet.coords[k], j) - d * sheet.eps[k];
  }
}

void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  const std::size_t n = in.count;
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    __m256d acc = _mm256_set1_pd(1.0);
    for (std::size_t k = 0; k < sheet.coords.size(); ++k) {
      __m256d x = _mm256_loadu_pd(in.coord(sheet.coords[k]) + j);
      for (int e = 0; e < sheet.exponents[k]; ++e) acc = _mm256_mul_pd(acc, x);
    }
    _mm256_storeu_pd(out.data() + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 1.0;
    for (std::size_t k = 0; k < sheet.coords.size(); ++k)
      for (int e = 0; e < sheet.exponents[k]; ++e) acc = acc * in.at(sheet.coords[k], j);
    out[j] = acc;
  }
}

void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  const std::size_t n = in.count;
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < sheet.coords.size(); ++k) {
      __m256d x = _mm256_loadu_pd(in.coord(sheet.coords[k]) + j);
      __m256d den = _mm256_mul_pd(_mm256_set1_pd(sheet.eps[k]), x);
      acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_set1_pd(static_cast<double>(sheet.exponents[k])), den));
    }
    _mm256_storeu_pd(out.data() + j, acc);
  }
  for (; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < sheet.coords.size(); ++k)
      acc = acc + static_cast<double>(sheet.exponents[k]) / (sheet.eps[k] * in.at(sheet.coords[k], j));
    out[j] = acc;
  }
}

}  // namespace ncr::kernels::avx2
