#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ncr/cut.hpp"
#include "ncr/errors.hpp"
#include "ncr/flowretract.hpp"
#include "ncr/model_io.hpp"
#include "ncr/rng.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ncr;
using testing_support::chart_doc;
using testing_support::chart_model;

namespace {

SignSheet sheet_from(const ChartSpec& ch, std::initializer_list<int> signs) {
  SignSheet s;
  auto coords = ch.divisor_coords();
  auto it = signs.begin();
  for (int c : coords) s.signs[c] = *it++;
  return s;
}

double fprime(const ChartSpec& ch, std::span<const double> x) { return std::abs(eval_f(ch, x)); }

NCModel wide_model(const std::vector<int>& a, double radius, double level_bound) {
  auto d = chart_doc(a, "1", radius);
  d["level_bound"] = level_bound;
  return load_model(d.dump());
}

// Random point of the open sheet.
Point sheet_sample(const ChartSpec& ch, const SignSheet& s, Rng& rng, double lo = 0.02) {
  Point x(ch.dim);
  for (int i = 0; i < ch.dim; ++i) x[i] = rng.uniform(-0.9, 0.9) * ch.domain_radius;
  for (const auto& [i, e] : s.signs) x[i] = e * rng.uniform(lo, 0.9) * ch.domain_radius;
  return x;
}

}  // namespace

TEST_CASE("chart normalization") {
  NCModel mono = chart_model({2, 2});
  ChartNormalization n = normalize_chart(mono.charts[0], sheet_from(mono.charts[0], {1, -1}));
  CHECK(n.identity);
  Point x{0.3, -0.4};
  Point y = n.to_normalized(x);
  CHECK(y[0] == 0.3);
  CHECK(y[1] == 0.4);

  NCModel cst = chart_model({2}, "4");
  ChartNormalization c = normalize_chart(cst.charts[0], sheet_from(cst.charts[0], {1}));
  REQUIRE(c.normalizable);
  Point xc{0.25};
  CHECK(c.to_normalized(xc)[0] == doctest::Approx(0.5));

  // y = x (1 + x/10)^{1/2}: compare the inverse with a bisection oracle.
  NCModel g = chart_model({2}, "1+0.1*x1");
  ChartNormalization gn = normalize_chart(g.charts[0], sheet_from(g.charts[0], {1}));
  REQUIRE(gn.normalizable);
  for (int k = 0; k <= 1000; ++k) {
    const double x0 = 0.9 * k / 1000.0;
    Point xv{x0};
    const double yv = gn.to_normalized(xv)[0];
    CHECK(yv == doctest::Approx(x0 * std::sqrt(1.0 + x0 / 10.0)).epsilon(1e-13));
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (mid * std::sqrt(1.0 + mid / 10.0) < yv ? lo : hi) = mid;
    }
    Point yy{yv};
    CHECK(gn.from_normalized(yy)[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
  }
}

TEST_CASE("closed-form local retraction") {
  SignSheet ppp;
  ppp.signs = {{0, 1}, {1, 1}, {2, 1}};
  Point x{3.0, 1.0, 2.0};
  RetractStep r = local_retract(ppp, x);
  CHECK(r.delta == 1.0);
  CHECK(r.x == Point{2.0, 0.0, 1.0});

  Point on{3.0, 0.0, 2.0};
  RetractStep id = local_retract(ppp, on);
  CHECK(id.delta == 0.0);
  CHECK(id.x == on);

  // March along -eps until a signed coordinate reaches zero.
  SignSheet pm;
  pm.signs = {{0, 1}, {1, -1}};
  Point p{2.0, -3.0};
  double t = 0.0;
  const double dt = 1e-3;
  auto signed_min = [&](double s) { return std::min(p[0] - s, -(p[1] + s)); };
  while (signed_min(t + dt) > 0.0) t += dt;
  double lo = t, hi = t + dt;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (signed_min(mid) > 0.0 ? lo : hi) = mid;
  }
  RetractStep q = local_retract(pm, p);
  CHECK(q.delta == doctest::Approx(lo).epsilon(1e-12));
  CHECK(q.x[0] == doctest::Approx(p[0] - lo).scale(1.0));
  CHECK(q.x[1] == doctest::Approx(p[1] + lo).scale(1.0));
  CHECK(q.x == Point{0.0, -1.0});
}

TEST_CASE("local vector fields") {
  NCModel one = chart_model({2});
  const ChartSpec& c1 = one.charts[0];
  VField v3 = build_vfield(c1, sheet_from(c1, {1}), 0, 3);
  Point o{0.0};
  CHECK(v3.eval(o)[0] == doctest::Approx(0.5));

  NCModel two = chart_model({2, 2}, "1", 2.0);
  const ChartSpec& c2 = two.charts[0];
  VField v1 = build_vfield(c2, sheet_from(c2, {1, 1}), 0, 1);
  Point x11{1.0, 1.0};
  Point v = v1.eval(x11);
  CHECK(v[0] == doctest::Approx(0.25));
  CHECK(v[1] == doctest::Approx(0.25));

  // f_i0 * df'/dv = f' against finite differences, on every real catalog chart.
  Rng rng(11);
  for (const auto& name : catalog_names()) {
    NCModel m = catalog_model(name);
    for (const auto& ch : m.charts) {
      if (ch.field != FieldKind::Real || ch.divisor_coords().empty()) continue;
      int checked = 0;
      for (const SignSheet& s : cut_chart(ch))
        for (int i0 : ch.divisor_coords())
          for (int cs = 1; cs <= 3; ++cs) {
            VField f;
            try {
              f = build_vfield(ch, s, i0, cs);
            } catch (const ConstructionError&) {
              continue;  // field undefined on this chart
            }
            for (int k = 0; k < 1000 / 12 + 1; ++k) {
              Point x = sheet_sample(ch, s, rng, 0.05);
              if (cs == 3) x[i0] = s.at(i0) * rng.uniform(0.05, 0.25) * ch.domain_radius;
              Point dir = f.eval(x);
              auto phi = [&](std::span<const double> p) { return fprime(ch, p); };
              const double d = oracle::directional_derivative(phi, x, dir, 1e-6 * ch.domain_radius);
              const double lhs = s.at(i0) * x[i0] * d;
              CAPTURE(name);
              CAPTURE(cs);
              CHECK(std::abs(lhs - fprime(ch, x)) <= 1e-6 * std::max(1e-12, fprime(ch, x)));
              ++checked;
            }
          }
      CHECK(checked > 0);
    }
  }
}

TEST_CASE("assembled field") {
  NCModel two = chart_model({2, 2}, "1", 2.0);
  const ChartSpec& ch = two.charts[0];
  SignSheet pp = sheet_from(ch, {1, 1});
  VField w = assemble_w(normalize_chart(ch, pp), FieldMode::Normalized);
  Point x11{1.0, 1.0};
  CHECK(w.eval(x11) == Point{-1.0, -1.0});
  auto phi = [&](std::span<const double> p) { return fprime(ch, p); };
  CHECK(oracle::directional_derivative(phi, x11, w.eval(x11)) == doctest::Approx(-4.0).epsilon(1e-8));

  // Numeric field on X': every signed divisor component points inward.
  NCModel g = catalog_model("x2y2g");
  const ChartSpec& gc = g.charts[0];
  Rng rng(5);
  for (const SignSheet& s : cut_chart(gc)) {
    VField wn = assemble_w(normalize_chart(gc, s), FieldMode::Numeric);
    for (int k = 0; k < 50; ++k) {
      Point x = sheet_sample(gc, s, rng);
      x[rng.index(2)] = 0.0;
      Point v = wn.eval(x);
      for (const auto& [i, e] : s.signs) CHECK(e * v[i] < 0.0);
    }
  }
}

TEST_CASE("flows and hitting times") {
  NCModel m = wide_model({1, 1}, 5.0, 10.0);
  const ChartSpec& ch = m.charts[0];
  SignSheet pp = sheet_from(ch, {1, 1});
  VField w = assemble_w(normalize_chart(ch, pp), FieldMode::Normalized);
  FlowTrace t = flow(ch, CutPoint{ch.id, {3.0, 1.0}, pp}, w);
  CHECK(t.hit_time == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(t.terminal.x[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(t.terminal.x[1] == 0.0);

  FlowTrace z = flow(ch, CutPoint{ch.id, {3.0, 0.0}, pp}, w);
  CHECK(z.hit_time == 0.0);
  CHECK(z.points.size() <= 1);
  CHECK(z.terminal.x == Point{3.0, 0.0});

  // Perturbed unit factor: numeric hit point against the closed form, with a
  // tighter reference integration in between.
  NCModel g = catalog_model("x2y2g");
  const ChartSpec& gc = g.charts[0];
  Rng rng(9);
  for (const SignSheet& s : cut_chart(gc)) {
    ChartRetraction cr(g, gc.id, s);
    REQUIRE(cr.closed_form());
    VField wn = assemble_w(cr.normalization(), FieldMode::Normalized);
    FlowOptions loose, tight;
    loose.record = tight.record = false;
    tight.ode.tol = 1e-11;
    for (int k = 0; k < 20; ++k) {
      Point x = sheet_sample(gc, s, rng, 0.05);
      for (auto& v : x) v *= 0.5;
      Point closed = cr.retract(x).x;
      Point a = flow(gc, CutPoint{gc.id, x, s}, wn, loose).terminal.x;
      Point b = flow(gc, CutPoint{gc.id, x, s}, wn, tight).terminal.x;
      for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(a[i] - closed[i]) <= 1e-6);
        CHECK(std::abs(b[i] - closed[i]) <= 1e-7);
      }
    }
  }
}

TEST_CASE("decrease of f' along w") {
  NCModel two = chart_model({2, 2}, "1", 2.0);
  const ChartSpec& ch = two.charts[0];
  ChartNormalization n = normalize_chart(ch, sheet_from(ch, {1, 1}));
  VField w = assemble_w(n);
  std::vector<Point> pts{{1.0, 1.0}, {0.0, 0.5}};
  DecreaseReport r = check_decrease(w, n, pts);
  CHECK(r.rows[0].derivative == doctest::Approx(-4.0));
  CHECK(r.rows[0].expected == doctest::Approx(4.0));
  CHECK(r.rows[1].skipped);

  Rng rng(21);
  for (const auto& name : catalog_names()) {
    NCModel m = catalog_model(name);
    for (const auto& c : m.charts) {
      if (c.field != FieldKind::Real || c.divisor_coords().empty()) continue;
      for (const SignSheet& s : cut_chart(c)) {
        ChartNormalization cn = normalize_chart(c, s);
        std::vector<Point> samples;
        for (int k = 0; k < 1000; ++k) samples.push_back(sheet_sample(c, s, rng));
        DecreaseReport d = check_decrease(assemble_w(cn), cn, samples);
        CAPTURE(name);
        CHECK(d.all_negative);
      }
    }
  }
}

TEST_CASE("trivialization") {
  NCModel m = wide_model({2, 2, 0}, 6.0, 10.0);
  const ChartSpec& ch = m.charts[0];
  SignSheet pp = sheet_from(ch, {1, 1});
  ChartRetraction cr(m, ch.id, pp);
  Point x{2.0, 1.0, 5.0};
  Trivialization t = cr.trivialize(x);
  CHECK(t.base.x == Point{1.0, 0.0, 5.0});
  CHECK(t.level == doctest::Approx(4.0));
  CHECK(cr.untrivialize(t).x[0] == doctest::Approx(2.0));

  Trivialization zero{CutPoint{ch.id, {1.0, 0.0, 5.0}, pp}, 0.0, 1};
  CHECK(cr.untrivialize(zero).x == zero.base.x);

  // Round trip against an independent root-finder on the level.
  NCModel g = catalog_model("x2y2g");
  const ChartSpec& gc = g.charts[0];
  Rng rng(31);
  int n = 0;
  for (const SignSheet& s : cut_chart(gc)) {
    ChartRetraction gr(g, gc.id, s);
    while (n < 250 * (static_cast<int>(s.signs.begin()->second > 0) + 1)) {
      Point p = sheet_sample(gc, s, rng);
      if (fprime(gc, p) >= 0.9 * g.level_bound) continue;
      Trivialization tr = gr.trivialize(p);
      Point back = gr.untrivialize(tr).x;
      for (int i = 0; i < 2; ++i) CHECK(std::abs(back[i] - p[i]) <= 1e-9);
      CHECK(std::abs(tr.level - fprime(gc, p)) <= 1e-9);
      ++n;
    }
  }
}

TEST_CASE("ambient retraction") {
  NCModel x2 = catalog_model("x2y2");
  Point q{0.3, 0.3};
  AmbientRetraction a = retract(x2, q);
  CHECK(a.delta == doctest::Approx(0.3));
  CHECK(std::abs(a.target[0]) <= 1e-15);
  CHECK(std::abs(a.target[1]) <= 1e-15);

  Point on{0.0, 0.4};
  AmbientRetraction b = retract(x2, on);
  CHECK(b.on_central_fibre);
  CHECK(b.target == on);

  NCModel cusp = catalog_model("cusp");
  Rng rng(41);
  for (const auto& ch : cusp.charts) {
    if (!cusp.modification->sigma.count(ch.id)) continue;
    for (int k = 0; k < 5; ++k) {
      Point x{rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3)};
      Point qc = push_down(cusp, ch.id, x);
      AmbientRetraction r = retract(cusp, qc);
      CHECK(std::abs(cusp.modification->ambient_f.eval(r.target)) <= 1e-9);
    }
  }
}

TEST_CASE("real specialization fibres") {
  NCModel x2 = catalog_model("x2y2");
  Point origin{0.0, 0.0};
  auto pts = specialization_fibre_real(x2, "main", origin, 0.01);
  auto want = oracle::x2y2_fibre(0.01);
  REQUIRE(pts.size() == want.size());
  for (const auto& w : want) {
    bool hit = std::any_of(pts.begin(), pts.end(), [&](const CutPoint& p) {
      return std::abs(p.x[0] - w[0]) <= 1e-9 && std::abs(p.x[1] - w[1]) <= 1e-9;
    });
    CHECK(hit);
  }

  NCModel smooth = catalog_model("smooth");
  Point sp{0.0, 0.3};
  CHECK(specialization_fibre_real(smooth, "main", sp, 0.01).size() == 1);
  Point axis{0.0, 0.5};
  CHECK(specialization_fibre_real(x2, "main", axis, 0.01).size() == 2);
  CHECK_THROWS_AS(specialization_fibre_real(x2, "main", origin, 1.0), RangeError);
}

TEST_CASE("real Milnor fibre components") {
  NCModel x2 = catalog_model("x2y2");
  Point origin{0.0, 0.0};
  MilnorRealCount r = milnor_components_real(x2, "main", origin, 0.6, 0.01, 2000, 3);
  CHECK(r.conclusive);
  CHECK(r.components == 4);
  auto F = [](double x, double y) { return x * x * y * y; };
  CHECK(oracle::level_components_2d(F, 0.01, 0.6, 600) == 4);

  NCModel smooth = catalog_model("smooth");
  Point sp{0.0, 0.3};
  MilnorRealCount s = milnor_components_real(smooth, "main", sp, 0.2, 0.01, 2000, 3);
  CHECK(s.components == 1);

  Point axis{0.0, 0.5};
  MilnorRealCount a = milnor_components_real(x2, "main", axis, 0.2, 1e-4, 2000, 3);
  CHECK(a.components == 2);
  auto G = [](double x, double y) { return x * x * (y + 0.5) * (y + 0.5); };
  CHECK(oracle::level_components_2d(G, 1e-4, 0.2, 800) == 2);
}
