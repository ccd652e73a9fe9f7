#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncr/complexretract.hpp"
#include "ncr/errors.hpp"
#include "ncr/model_io.hpp"
#include "ncr/rng.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ncr;
using testing_support::chart_model;

namespace {

CPoint random_cpoint(const ChartSpec& ch, Rng& rng, double scale) {
  CPoint z(ch.dim);
  for (auto& v : z) v = std::polar(rng.uniform(0.05, scale) * ch.domain_radius, rng.uniform(0.0, kTwoPi));
  return z;
}

// chi of the Milnor fibre of an isolated singularity in n variables.
int chi_from_mu(int n, int mu) { return 1 + ((n - 1) % 2 == 0 ? 1 : -1) * mu; }

}  // namespace

TEST_CASE("polar blow-up and the band map") {
  NCModel m = chart_model({2, 3}, "1", 2.0, "complex");
  const ChartSpec& ch = m.charts[0];
  CPoint z{{0.0, 0.5}, {-1.0, 0.0}};
  PolarPoint p = polar_blowup(ch, z);
  CHECK(p.rho == std::vector<double>{0.5, 1.0});
  CHECK(p.alpha[0] == doctest::Approx(kTwoPi / 4));
  CHECK(p.alpha[1] == doctest::Approx(kTwoPi / 2));
  BandPoint b = f_prime(p, ch.exponents);
  CHECK(b.rho == doctest::Approx(0.25));
  // 2 * pi/2 + 3 * pi = 4 pi = 0 mod 2 pi
  CHECK(angle_distance(b.alpha, 0.0) <= 1e-12);

  CPoint back = polar_down(ch, p);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(back[i] - z[i]) <= 1e-15);
}

TEST_CASE("angle-preserving retraction") {
  Rng rng(2);
  for (const char* name : {"z2z3", "z6", "x2y2g"}) {
    NCModel m = catalog_model(name);
    const ChartSpec& ch = m.charts[0];
    ComplexRetraction cr(ch);
    for (int k = 0; k < 200; ++k) {
      CPoint z = random_cpoint(ch, rng, 0.5);
      PolarPoint p = polar_blowup(ch, z);
      PolarPoint r = cr.retract(p);
      CAPTURE(name);
      CHECK(cr.level(r) <= 1e-12);
      CHECK(*std::min_element(r.rho.begin(), r.rho.end()) <= 1e-12);
      // The angle of f is read off the retracted point through its own angles.
      const std::complex<double> fz = eval_f(ch, std::span<const cplx>(z));
      CHECK(angle_distance(cr.alpha(r), wrap_angle(std::arg(fz))) <= 1e-9);
      PolarPoint again = cr.retract(r);
      for (std::size_t i = 0; i < r.rho.size(); ++i) CHECK(std::abs(again.rho[i] - r.rho[i]) <= 1e-12);
    }
  }
}

TEST_CASE("angle level sets on tori") {
  const std::vector<std::vector<int>> cases{{6}, {2, 2}, {2, 3}, {4, 6}, {1, 5}};
  for (const auto& a : cases) {
    const int n = a.size() == 1 ? 400 : 120;
    const int expected = oracle::torus_components_bfs(a, n, 0.7);
    CAPTURE(a.size());
    CHECK(alpha_fibre_components(a) == expected);
  }
  std::vector<int> none;
  CHECK(alpha_fibre_components(none) == 1);

  std::vector<int> six{6};
  CHECK(monodromy_permutation(six, 0.3) == std::vector<int>{1, 2, 3, 4, 5, 0});
  std::vector<int> two_three{2, 3};
  CHECK(monodromy_permutation(two_three, 0.3) == std::vector<int>{0});
}

TEST_CASE("fibre points follow the level around the circle") {
  NCModel m = catalog_model("z6");
  const ChartSpec& ch = m.charts[0];
  const std::vector<cplx> origin{cplx(0.0)};
  const double r = 0.01, theta0 = 0.3;
  std::vector<CPoint> start = complex_fibre_points(ch, origin, std::polar(r, theta0));
  REQUIRE(start.size() == 6);
  for (const auto& z : start) CHECK(std::abs(std::pow(z[0], 6) - std::polar(r, theta0)) <= 1e-14);

  // Continue each root of z^6 = c by nearest neighbours as c turns once.
  std::vector<cplx> track;
  for (const auto& z : start) track.push_back(z[0]);
  const int steps = 720;
  for (int s = 1; s <= steps; ++s) {
    const double th = theta0 + kTwoPi * s / steps;
    auto roots = complex_fibre_points(ch, origin, std::polar(r, th));
    for (auto& t : track) {
      auto best = std::min_element(roots.begin(), roots.end(),
                                   [&](const CPoint& x, const CPoint& y) { return std::abs(x[0] - t) < std::abs(y[0] - t); });
      t = (*best)[0];
    }
  }
  std::vector<int> six{6};
  auto perm = monodromy_permutation(six, theta0);
  for (std::size_t j = 0; j < start.size(); ++j) {
    std::vector<double> a0{wrap_angle(std::arg(start[j][0]))}, a1{wrap_angle(std::arg(track[j]))};
    const int from = alpha_component_index(six, a0, theta0);
    const int to = alpha_component_index(six, a1, theta0);
    CHECK(perm[from] == to);
  }
}

TEST_CASE("lifted angles and the deck group") {
  NCModel m = catalog_model("z6");
  const ChartSpec& ch = m.charts[0];
  ComplexRetraction cr(ch);

  // Once around the origin at radius 0.5: arg z^6 winds six times.
  std::vector<CPoint> loop;
  for (int s = 0; s <= 32; ++s) loop.push_back({std::polar(0.5, kTwoPi * s / 32)});
  UniversalPoint u = universal_trivialization(cr, loop, LiftedAngle{0, 0.0});
  CHECK(std::abs(u.angle.value() - 6 * kTwoPi) <= 1e-9);
  CHECK(u.rho == doctest::Approx(std::pow(0.5, 6)));

  PolarPoint end = complex_retract(ch, polar_blowup(ch, loop.back()));
  for (std::size_t i = 0; i < end.rho.size(); ++i) CHECK(std::abs(u.base.rho[i] - end.rho[i]) <= 1e-12);

  UniversalPoint d = deck_shift(u, 3);
  CHECK(d.angle == u.angle.shifted(3));
  CHECK(d.rho == u.rho);
  CHECK(deck_shift(d, -3).angle == u.angle);

  std::vector<CPoint> through{{cplx(0.5)}, {cplx(0.0)}};
  CHECK_THROWS_AS(universal_trivialization(cr, through, LiftedAngle{0, 0.0}), LiftError);
}

TEST_CASE("Milnor fibre invariants") {
  using oracle::Term;
  NCModel cusp = catalog_model("cusp");
  MilnorFibration c = milnor_fibration(cusp, "origin");
  CHECK(c.chi == chi_from_mu(2, oracle::milnor_number_2d({{1, 2, 0}, {1, 0, 3}})));
  CHECK(c.pi0 == 1);

  NCModel xy = catalog_model("xy");
  MilnorFibration x = milnor_fibration(xy, "origin");
  CHECK(x.chi == chi_from_mu(2, oracle::milnor_number_2d({{1, 1, 1}})));
  CHECK(x.pi0 == 1);

  // z^6 in one variable; the two-variable z^6 + w^2 has the same Milnor number.
  NCModel z6 = catalog_model("z6");
  MilnorFibration z = milnor_fibration(z6, "origin");
  CHECK(z.chi == chi_from_mu(1, oracle::milnor_number_2d({{1, 6, 0}, {1, 0, 2}})));
  CHECK(z.pi0 == 6);

  NCModel smooth = catalog_model("smooth");
  MilnorFibration s = milnor_fibration(smooth, "origin");
  CHECK(s.chi == 1);
  CHECK(s.pi0 == 1);

  // At a depth-two chart point of z1^2 z2^3 the fibre is a union of annuli.
  NCModel z2z3 = catalog_model("z2z3");
  std::vector<double> o{0.0, 0.0};
  MilnorFibration t = milnor_fibration_at(z2z3.charts[0], o);
  CHECK(t.chi == 0);
  CHECK(t.pi0 == std::gcd(2, 3));
}

TEST_CASE("stratification condition for the modification") {
  NCModel cusp = catalog_model("cusp");
  Condition3Report curated = condition3_check(cusp, "curated");
  CHECK(curated.pass);
  CHECK(curated.expect_pass);

  Condition3Report coarse = condition3_check(cusp, "coarse");
  CHECK_FALSE(coarse.pass);
  CHECK_FALSE(coarse.expect_pass);
  const bool has_witness = std::any_of(coarse.rows.begin(), coarse.rows.end(),
                                       [](const Condition3Row& r) { return !r.pass && !r.witness.empty(); });
  CHECK(has_witness);

  CHECK(condition3_check(catalog_model("xy"), "axes").pass);
  CHECK_THROWS(condition3_check(cusp, "missing"));
}
