#include <atomic>

#include "ncr/kernels.hpp"

namespace ncr::kernels {

namespace {
// 0 = automatic, 1 = scalar, 2 = avx2
std::atomic<int> forced{0};
}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
#else
  return false;
#endif
}

Backend active_backend() {
  int f = forced.load(std::memory_order_relaxed);
  if (f == 1) return Backend::Scalar;
  if (f == 2 && avx2_available()) return Backend::Avx2;
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

void force_backend(std::optional<Backend> backend) {
  forced.store(!backend ? 0 : (*backend == Backend::Scalar ? 1 : 2), std::memory_order_relaxed);
}

const char* backend_name(Backend backend) { return backend == Backend::Avx2 ? "avx2" : "scalar"; }

void min_retract(const PointBlock& in, const SheetData& sheet, PointBlock& out, std::span<double> delta) {
  if (active_backend() == Backend::Avx2)
    avx2::min_retract(in, sheet, out, delta);
  else
    scalar::min_retract(in, sheet, out, delta);
}

void monomial(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  if (active_backend() == Backend::Avx2)
    avx2::monomial(in, sheet, out);
  else
    scalar::monomial(in, sheet, out);
}

void log_rate(const PointBlock& in, const SheetData& sheet, std::span<double> out) {
  if (active_backend() == Backend::Avx2)
    avx2::log_rate(in, sheet, out);
  else
    scalar::log_rate(in, sheet, out);
}

}  // namespace ncr::kernels
