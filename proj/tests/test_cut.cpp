#include <doctest.h>

#include <set>

#include "ncr/cut.hpp"
#include "ncr/model_io.hpp"
#include "ncr/strat.hpp"
#include "support.hpp"

using namespace ncr;
using testing_support::chart_doc;
using testing_support::chart_model;

TEST_CASE("sheets per chart") {
  CHECK(cut_chart(chart_model({2, 2}).charts[0]).size() == 4);
  CHECK(cut_chart(chart_model({0, 0}).charts[0]).size() == 1);
  CHECK(cut_chart(chart_model({2, 3, 6}).charts[0]).size() == 8);
}

TEST_CASE("fibre sizes") {
  NCModel m = catalog_model("x2y2");
  const ChartSpec& ch = m.charts[0];
  std::vector<double> origin{0.0, 0.0}, off{0.3, 0.4}, axis{0.0, 0.4};
  auto f0 = fibre(ch, origin);
  CHECK(f0.size() == 4);
  for (const auto& p : f0) CHECK(project(p) == origin);
  auto f1 = fibre(ch, off);
  REQUIRE(f1.size() == 1);
  CHECK(f1[0].sheet.label() == "++");
  CHECK(fibre(ch, axis).size() == 2);
}

TEST_CASE("deck actions") {
  NCModel m = catalog_model("x2y2");
  const ChartSpec& ch = m.charts[0];
  std::vector<double> origin{0.0, 0.0};
  auto fib = fibre(ch, origin);
  for (const auto& p : fib) {
    CHECK(deck_action(ch, "V1", deck_action(ch, "V1", p)) == p);
    CHECK(deck_action(ch, "V2", deck_action(ch, "V1", p)) == deck_action(ch, "V1", deck_action(ch, "V2", p)));
  }
  // Free and transitive: the four group elements send one point to four distinct points.
  std::set<SignSheet> images;
  const CutPoint& p = fib[0];
  images.insert(p.sheet);
  images.insert(deck_action(ch, "V1", p).sheet);
  images.insert(deck_action(ch, "V2", p).sheet);
  images.insert(deck_action(ch, "V1", deck_action(ch, "V2", p)).sheet);
  CHECK(images.size() == 4);
}

TEST_CASE("split into positive and negative sides") {
  // The split keeps a pointer to its model.
  NCModel x2 = catalog_model("x2y2");
  PmSplit nonneg = split_pm(x2);
  CHECK(nonneg.minus_sheets("main").empty());
  CHECK(nonneg.plus_sheets("main").size() == 4);

  NCModel negative = chart_model({2, 2}, "-1");
  PmSplit neg = split_pm(negative);
  CHECK(neg.plus_sheets("main").empty());

  // Two charts with unit factors of opposite sign; the oracle is the sign of f
  // at an interior point of each sheet.
  auto d = chart_doc({1, 0});
  auto b = d["charts"][0];
  d["charts"][0]["id"] = "a";
  b["id"] = "b";
  b["unit_factor"] = "-1-x2^2";
  b["exponents"] = {0, 1};
  b["divisor_labels"] = {{"x2", "V2"}};
  d["charts"].push_back(b);
  d["components"].push_back({{"id", "V2"}, {"multiplicity", 1}, {"connected", true}});
  NCModel m = load_model(d.dump());
  PmSplit s = split_pm(m);
  int plus = 0, minus = 0;
  for (const auto& ch : m.charts) {
    std::set<SignSheet> p, q;
    for (const auto& sh : s.plus_sheets(ch.id)) p.insert(sh);
    for (const auto& sh : s.minus_sheets(ch.id)) q.insert(sh);
    for (const auto& sh : cut_chart(ch)) {
      std::vector<double> x(ch.dim, 0.25);
      for (const auto& [i, e] : sh.signs) x[i] = 0.5 * e;
      const bool positive = eval_f(ch, x) > 0;
      CHECK(p.count(sh) == (positive ? 1u : 0u));
      CHECK(q.count(sh) == (positive ? 0u : 1u));
    }
    plus += static_cast<int>(p.size());
    minus += static_cast<int>(q.size());
  }
  CHECK(plus > 0);
  CHECK(minus > 0);
}

TEST_CASE("sheet transport along loops") {
  NCModel a1 = catalog_model("a1");
  // The two overlap pieces of the blow-up charts form a loop with sign -1.
  auto loops = cocycle_loops(a1, "E");
  REQUIRE(!loops.empty());
  bool found_negative = false;
  for (const auto& loop : loops) {
    CHECK(transport_sign(a1, "E", loop.transitions, 1) == loop.product);
    found_negative = found_negative || loop.product == -1;
  }
  CHECK(found_negative);

  // Transport through a transition and back restores the sheet.
  const Transition& t = a1.transition("u>v+");
  std::vector<double> x{0.0, 0.8};
  for (const auto& cp : fibre(a1.chart("u"), x)) {
    CutPoint there = transport(a1, t, cp);
    CHECK(transport(a1, a1.transition(t.inverse), there).sheet == cp.sheet);
  }
}
