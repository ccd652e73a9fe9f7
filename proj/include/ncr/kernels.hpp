#pragma once

// Batch kernels over structure-of-arrays point blocks. Each kernel has a
// scalar reference and an AVX2 variant; the variants are bit-identical (same
// operation order, no fused multiply-add) and dispatch picks one at runtime.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ncr::kernels {

// Coordinate i of point j lives at data[i * count + j].
struct PointBlock {
  int dim = 0;
  std::size_t count = 0;
  std::vector<double> data;

  PointBlock() = default;
  PointBlock(int d, std::size_t n) : dim(d), count(n), data(static_cast<std::size_t>(d) * n) {}

  double* coord(int i) { return data.data() + static_cast<std::size_t>(i) * count; }
  const double* coord(int i) const { return data.data() + static_cast<std::size_t>(i) * count; }
  double& at(int i, std::size_t j) { return data[static_cast<std::size_t>(i) * count + j]; }
  double at(int i, std::size_t j) const { return data[static_cast<std::size_t>(i) * count + j]; }
};

// Divisor data of one sheet: coordinate indices, exponents and signs.
struct SheetData {
  std::vector<int> coords;
  std::vector<int> exponents;
  std::vector<double> eps;
};

enum class Backend { Scalar, Avx2 };

bool avx2_available();
Backend active_backend();
// Tests pin a backend; nullopt restores automatic selection.
void force_backend(std::optional<Backend> backend);
const char* backend_name(Backend backend);

// delta[j] = min_i eps_i x_ij ; out = x - delta * eps on divisor coordinates.
void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta);
// out[j] = prod_i x_ij^{a_i}
void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out);
// out[j] = sum_i a_i / (eps_i x_ij)
void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out);

namespace scalar {
void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta);
void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out);
void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out);
}  // namespace scalar

namespace avx2 {
void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta);
void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out);
void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out);
}  // namespace avx2

}  // namespace ncr::kernels
