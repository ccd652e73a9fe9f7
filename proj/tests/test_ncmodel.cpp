#include <doctest.h>

#include <algorithm>
#include <complex>
#include <set>

#include "ncr/errors.hpp"
#include "ncr/model_io.hpp"
#include "ncr/ncmodel.hpp"
#include "support.hpp"

using namespace ncr;
using testing_support::chart_doc;
using testing_support::chart_model;

namespace {

std::set<std::vector<std::string>> edges(const DualComplex& dc) {
  std::set<std::vector<std::string>> out;
  for (const auto& s : dc.simplices)
    if (s.components.size() == 2) out.insert(s.components);
  return out;
}

bool has_kind(const std::vector<Diagnostic>& d, const std::string& kind) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.kind == kind; });
}

// Two charts covering a strip, glued by a shift; component V is {x2 = 0}.
std::string strip_doc(int sign) {
  nlohmann::ordered_json d = chart_doc({0, 1}, "1", 1.0);
  auto second = d["charts"][0];
  d["charts"][0]["id"] = "a";
  second["id"] = "b";
  d["charts"].push_back(second);
  d["components"][0]["id"] = "V";
  d["charts"][0]["divisor_labels"]["x2"] = "V";
  d["charts"][1]["divisor_labels"]["x2"] = "V";
  d["transitions"] = nlohmann::ordered_json::array(
      {{{"id", "a>b"}, {"source", "a"}, {"target", "b"}, {"inverse", "b>a"}, {"map", {"x1-0.5", "x2"}},
        {"overlap", {"x1"}}, {"sign_data", {{"V", sign}}}},
       {{"id", "b>a"}, {"source", "b"}, {"target", "a"}, {"inverse", "a>b"}, {"map", {"x1+0.5", "x2"}},
        {"overlap", {"x1+0.5", "0.5-x1"}}, {"sign_data", {{"V", sign}}}}});
  return d.dump();
}

}  // namespace

TEST_CASE("eval_f on real and complex charts") {
  NCModel m = chart_model({2, 3}, "1", 3.0);
  Point x{2.0, 1.0};
  CHECK(eval_f(m.charts[0], x) == doctest::Approx(4.0));

  NCModel g = chart_model({2, 3}, "1+0.1*x1", 2.0);
  Point y{1.0, 1.0};
  CHECK(eval_f(g.charts[0], y) == doctest::Approx(1.1));

  NCModel c = chart_model({2, 3}, "1", 2.0, "complex");
  std::vector<std::complex<double>> z{{0.0, 1.0}, {1.0, 0.0}};
  auto v = eval_f(c.charts[0], z);
  CHECK(v.real() == doctest::Approx(-1.0));
  CHECK(v.imag() == doctest::Approx(0.0));
}

TEST_CASE("multiplicity profile reads vanishing labeled coordinates") {
  NCModel m = chart_model({2, 3, 0}, "1", 6.0);
  const ChartSpec& ch = m.charts[0];
  Point a{0.0, 0.0, 0.5}, b{0.3, 0.4, 0.0}, c{0.0, 1.0, 5.0};
  Profile pa = multiplicity_profile(ch, a);
  CHECK(pa.k == 2);
  CHECK(pa.components == std::vector<std::string>{"V1", "V2"});
  CHECK(multiplicity_profile(ch, b).k == 0);
  Profile pc = multiplicity_profile(ch, c);
  CHECK(pc.k == 1);
  CHECK(pc.components == std::vector<std::string>{"V1"});
}

TEST_CASE("dual complex of catalog models") {
  DualComplex xy = build_dual_complex(catalog_model("xy"));
  CHECK(xy.vertices.size() == 2);
  CHECK(edges(xy).size() == 1);

  // Intersections read off the blow-up sequence of x^2 + y^3 (see tools/derive_cusp_resolution.py).
  DualComplex cusp = build_dual_complex(catalog_model("cusp"));
  CHECK(cusp.vertices.size() == 4);
  std::set<std::vector<std::string>> want{{"E1", "E3"}, {"E2", "E3"}, {"E3", "St"}};
  CHECK(edges(cusp) == want);
  NCModel cm = catalog_model("cusp");
  std::map<std::string, int> mult;
  for (const auto& c : cm.components) mult[c.id] = c.multiplicity;
  CHECK(mult == std::map<std::string, int>{{"E1", 2}, {"E2", 3}, {"E3", 6}, {"St", 1}});

  DualComplex smooth = build_dual_complex(catalog_model("smooth"));
  CHECK(smooth.vertices.size() == 1);
  CHECK(edges(smooth).empty());
}

TEST_CASE("normal crossings diagnostics") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    CHECK(check_normal_crossings(catalog_model(name)).empty());
  }
  auto vanishing = check_normal_crossings(chart_model({1, 1}, "x1"));
  REQUIRE(!vanishing.empty());
  CHECK(has_kind(vanishing, "unit_factor_vanishes"));
  const auto it = std::find_if(vanishing.begin(), vanishing.end(),
                               [](const Diagnostic& d) { return d.kind == "unit_factor_vanishes"; });
  REQUIRE(it->point.size() == 2);
  CHECK(it->point[0] == doctest::Approx(0.0));

  auto d = chart_doc({3, 1});
  d["components"][0]["multiplicity"] = 2;
  auto mismatch = check_normal_crossings(load_model(d.dump()));
  CHECK(has_kind(mismatch, "multiplicity_mismatch"));
  CHECK_THROWS_AS(require_valid(load_model(d.dump())), ModelError);
}

TEST_CASE("two-sidedness") {
  NCModel plus = load_model(strip_doc(1));
  REQUIRE(check_normal_crossings(plus).empty());
  CHECK(two_sidedness(plus, "V"));

  // Blow-up of the plane at a point: the exceptional curve is one-sided.
  CHECK_FALSE(two_sidedness(catalog_model("a1"), "E"));

  NCModel single = catalog_model("x2y2");
  for (const auto& c : single.components) CHECK(two_sidedness(single, c.id));
}

TEST_CASE("documents round-trip and reject bad input") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const std::string doc = catalog_document(name);
    CHECK(save_model(load_model(doc)) == doc);
  }
  auto neg = chart_doc({1, 1});
  neg["charts"][0]["exponents"][0] = -1;
  CHECK_THROWS_AS(load_model(neg.dump()), SchemaError);

  auto missing = chart_doc({1, 1});
  missing["charts"][0]["divisor_labels"].erase("x2");
  CHECK_THROWS_AS(load_model(missing.dump()), SchemaError);

  try {
    load_model("{\n  \"name\": \"t\",\n  \"charts\": 3\n}");
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.line() > 0);
  }
}
