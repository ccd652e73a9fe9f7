#include <doctest.h>

#include <algorithm>

#include "ncr/model_io.hpp"
#include "ncr/rng.hpp"
#include "ncr/strat.hpp"
#include "support.hpp"

using namespace ncr;
using testing_support::chart_model;

namespace {

Constraint eq(std::vector<double> c, double off = 0.0) { return {std::move(c), off, Constraint::Kind::Eq}; }
Constraint le(std::vector<double> c, double off = 0.0) { return {std::move(c), off, Constraint::Kind::Le}; }
Constraint lt(std::vector<double> c, double off = 0.0) { return {std::move(c), off, Constraint::Kind::Lt}; }

int count_depth(const Stratification& s, int depth) {
  return static_cast<int>(std::count_if(s.strata.begin(), s.strata.end(), [&](const Stratum& st) { return st.depth == depth; }));
}

}  // namespace

TEST_CASE("quadrant of a point") {
  std::vector<double> a{1.0, 0.0, -2.0};
  Quadrant q = quadrant_of_point(a, 1e-9);
  CHECK(q.plus == std::vector<int>{0});
  CHECK(q.zero == std::vector<int>{1});
  CHECK(q.minus == std::vector<int>{2});

  std::vector<double> o{0.0, 0.0};
  CHECK(quadrant_of_point(o, 0.0).zero == std::vector<int>{0, 1});

  std::vector<double> tiny{1e-12, 1.0};
  Quadrant t = quadrant_of_point(tiny, 1e-9);
  CHECK(t.zero == std::vector<int>{0});
  CHECK(t.plus == std::vector<int>{1});
}

TEST_CASE("canonical stratification by component set") {
  Stratification s = canonical_stratification(chart_model({1, 1, 0}));
  CHECK(s.strata.size() == 3);
  CHECK(count_depth(s, 1) == 2);
  CHECK(count_depth(s, 2) == 1);
  const std::vector<double> p{0.0, 0.3, 0.2}, q{0.0, 0.0, -0.4};
  const int ip = s.locate("main", p, 1e-9), iq = s.locate("main", q, 1e-9);
  REQUIRE(ip >= 0);
  REQUIRE(iq >= 0);
  CHECK(s.strata[ip].components == std::vector<std::string>{"V1"});
  CHECK(s.strata[iq].depth == 2);

  Stratification smooth = canonical_stratification(catalog_model("smooth"));
  CHECK(smooth.strata.size() == 1);
  CHECK(smooth.strata[0].depth == 1);

  Stratification cusp = canonical_stratification(catalog_model("cusp"));
  CHECK(count_depth(cusp, 1) == 4);
  CHECK(count_depth(cusp, 2) == 3);
}

TEST_CASE("min substratification of sign quadrants") {
  std::vector<int> pp{1, 1};
  MinSubstratification s = min_substratification(pp, 2);
  CHECK(s.pieces.size() == 2);
  std::vector<double> below{0.2, 0.5}, diag{0.3, 0.3};
  CHECK(s.pieces_containing(below, 1e-12) == std::vector<int>{0});
  CHECK(s.pieces_containing(diag, 1e-12) == std::vector<int>{0, 1});
  CHECK(s.tie_set(diag, 1e-12) == std::vector<int>{0, 1});

  std::vector<int> one{1};
  CHECK(min_substratification(one, 3).pieces.size() == 1);

  // Flipping x2 carries U(+,-) onto U(+,+).
  std::vector<int> pm{1, -1};
  MinSubstratification f = min_substratification(pm, 2);
  Rng rng(4);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> x{rng.uniform(0.0, 1.0), -rng.uniform(0.0, 1.0)};
    if (k % 5 == 0) x[1] = -x[0];
    std::vector<double> flipped{x[0], -x[1]};
    CHECK(f.pieces_containing(x, 1e-12) == s.pieces_containing(flipped, 1e-12));
  }
}

TEST_CASE("piecewise analytic maps") {
  // Two half-axes mapped to the line by (x, y) -> x - y.
  PAMap m;
  m.dim = 2;
  m.radius = 1.0;
  m.pieces.push_back({Polyhedron{{eq({0, 1}), le({-1, 0})}}, {Expr::parse("x1-x2")}});
  m.pieces.push_back({Polyhedron{{eq({1, 0}), le({0, -1})}}, {Expr::parse("x1-x2")}});
  m.source_strata = {Polyhedron{{eq({0, 1}), lt({-1, 0})}}, Polyhedron{{eq({1, 0}), lt({0, -1})}},
                     Polyhedron{{eq({1, 0}), eq({0, 1})}}};
  m.target_strata = {Polyhedron{{lt({-1})}}, Polyhedron{{lt({1})}}, Polyhedron{{eq({1})}}};
  PACheck ok = is_piecewise_analytic(m, 50, 3);
  CHECK(ok.ok);

  for (const auto& name : {"xy", "cusp", "x2y2g"}) {
    NCModel model = catalog_model(name);
    Stratification s = canonical_stratification(model);
    for (const auto& ch : model.charts) CHECK(is_piecewise_analytic(identity_map(ch, s), 30, 1).ok);
  }

  // A unit jump across the diagonal of U(+,+).
  PAMap jump;
  jump.dim = 2;
  jump.radius = 1.0;
  jump.pieces.push_back({Polyhedron{{le({1, -1}), le({-1, 0})}}, {Expr::parse("0")}});
  jump.pieces.push_back({Polyhedron{{le({-1, 1}), le({0, -1})}}, {Expr::parse("1")}});
  jump.target_strata = {Polyhedron{{le({1}, -0.5)}}, Polyhedron{{lt({-1}, 0.5)}}};
  PACheck bad = is_piecewise_analytic(jump, 50, 3);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.witness);
  REQUIRE(bad.witness->point.size() == 2);
  CHECK(bad.witness->point[0] == doctest::Approx(bad.witness->point[1]).epsilon(1e-9));
}
