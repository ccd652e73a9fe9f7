#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ncr/flowretract.hpp"
#include "ncr/kernels.hpp"
#include "ncr/rng.hpp"

using namespace ncr;
using namespace ncr::kernels;

namespace {

// Bitwise equality, so signed zeros and NaN payloads count as differences.
bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

PointBlock random_block(int dim, std::size_t n, const SheetData& s, Rng& rng) {
  PointBlock b(dim, n);
  for (int i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < n; ++j) b.at(i, j) = rng.uniform(-1.0, 1.0);
  for (std::size_t k = 0; k < s.coords.size(); ++k)
    for (std::size_t j = 0; j < n; ++j) {
      double v = s.eps[k] * rng.uniform(0.0, 1.0);
      if (j % 17 == 3) v = 0.0;  // points already on X'
      b.at(s.coords[k], j) = v;
    }
  return b;
}

struct BackendGuard {
  ~BackendGuard() { force_backend(std::nullopt); }
};

}  // namespace

TEST_CASE("scalar and vector kernels agree bit for bit") {
  if (!avx2_available()) {
    MESSAGE("AVX2 not available on this machine; only the scalar path runs");
    return;
  }
  Rng rng(17);
  const std::vector<SheetData> sheets{{{0}, {6}, {1.0}},
                                      {{0, 1}, {2, 2}, {1.0, -1.0}},
                                      {{0, 2, 3}, {2, 3, 1}, {-1.0, 1.0, -1.0}}};
  for (const auto& s : sheets) {
    for (std::size_t n : {1u, 3u, 4u, 5u, 64u, 1001u}) {
      PointBlock in = random_block(4, n, s, rng);
      PointBlock o1(4, n), o2(4, n);
      std::vector<double> d1(n), d2(n), m1(n), m2(n), l1(n), l2(n);
      scalar::min_retract(in, s, o1, d1);
      avx2::min_retract(in, s, o2, d2);
      CHECK(same_bits(o1.data, o2.data));
      CHECK(same_bits(d1, d2));
      scalar::monomial(in, s, m1);
      avx2::monomial(in, s, m2);
      CHECK(same_bits(m1, m2));
      scalar::log_rate(in, s, l1);
      avx2::log_rate(in, s, l2);
      CHECK(same_bits(l1, l2));
    }
  }
}

TEST_CASE("dispatch honours a forced backend") {
  BackendGuard guard;
  force_backend(Backend::Scalar);
  CHECK(active_backend() == Backend::Scalar);
  if (avx2_available()) {
    force_backend(Backend::Avx2);
    CHECK(active_backend() == Backend::Avx2);
  }
  force_backend(std::nullopt);
  CHECK(active_backend() == (avx2_available() ? Backend::Avx2 : Backend::Scalar));
}

TEST_CASE("batch retraction matches the pointwise closed form") {
  BackendGuard guard;
  SignSheet sheet;
  sheet.signs = {{0, 1}, {2, -1}};
  SheetData sd{{0, 2}, {1, 1}, {1.0, -1.0}};
  Rng rng(3);
  PointBlock in = random_block(3, 257, sd, rng);
  for (Backend b : {Backend::Scalar, Backend::Avx2}) {
    if (b == Backend::Avx2 && !avx2_available()) continue;
    force_backend(b);
    PointBlock out(3, in.count);
    std::vector<double> delta(in.count);
    local_retract_batch(sheet, in, out, delta);
    for (std::size_t j = 0; j < in.count; ++j) {
      Point x{in.at(0, j), in.at(1, j), in.at(2, j)};
      RetractStep r = local_retract(sheet, x);
      CHECK(delta[j] == r.delta);
      for (int i = 0; i < 3; ++i) CHECK(out.at(i, j) == r.x[i]);
    }
  }
}
