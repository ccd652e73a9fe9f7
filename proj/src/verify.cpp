#include "ncr/verify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "ncr/complexretract.hpp"
#include "ncr/cut.hpp"
#include "ncr/errors.hpp"
#include "ncr/flowretract.hpp"
#include "ncr/model_io.hpp"
#include "ncr/rng.hpp"
#include "ncr/strat.hpp"

namespace ncr {

std::string format_point(const std::vector<double>& x) {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto r = std::to_chars(buf, buf + sizeof buf, x[i]);
    if (i) s += ", ";
    s.append(buf, r.ptr);
  }
  return s + ")";
}

bool Report::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

std::string Report::table() const {
  std::size_t w = 10;
  for (const auto& r : rows) w = std::max(w, r.id.size());
  std::ostringstream os;
  os << "model " << model << "  seed " << seed << "\n";
  for (const auto& r : rows) {
    os << (r.pass ? "PASS  " : "FAIL  ") << r.id << std::string(w + 2 - r.id.size(), ' ') << r.detail;
    if (!r.pass && !r.witness.empty()) os << "  [witness " << r.witness << "]";
    os << "\n";
  }
  os << (all_pass() ? "all checks passed" : "some checks failed") << "\n";
  return os.str();
}

std::string Report::csv_header() { return "model,check,pass,detail,witness"; }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string Report::csv() const {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows)
    out += csv_field(model) + "," + csv_field(r.id) + "," + (r.pass ? "1" : "0") + "," + csv_field(r.detail) + "," +
           csv_field(r.witness) + "\n";
  return out;
}

namespace {

struct Ctx {
  const NCModel& model;
  std::uint64_t seed;
  int samples;
  CheckRow* row;

  void fail(const std::string& chart, const Point& x, const std::string& why) {
    if (!row->pass) return;
    row->pass = false;
    row->detail = why;
    row->witness = chart + ";" + format_point(x) + ";seed=" + std::to_string(seed);
  }
};

using CheckFn = std::function<void(Ctx&)>;

std::uint64_t check_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ull;
  return seed ^ h;
}

std::vector<const ChartSpec*> real_charts(const NCModel& m) {
  std::vector<const ChartSpec*> out;
  for (const auto& c : m.charts)
    if (c.field == FieldKind::Real && !c.divisor_coords().empty()) out.push_back(&c);
  return out;
}

std::vector<const ChartSpec*> divisor_charts(const NCModel& m) {
  std::vector<const ChartSpec*> out;
  for (const auto& c : m.charts)
    if (!c.divisor_coords().empty()) out.push_back(&c);
  return out;
}

bool unit_one(const ChartSpec& c) {
  std::vector<double> z(c.dim, 0.0);
  return c.unit_factor.is_constant() && c.unit_factor.eval(z) == 1.0;
}

Point random_point(const ChartSpec& c, Rng& rng, double zero_prob) {
  const double r = c.domain_radius;
  Point x(c.dim);
  for (int i = 0; i < c.dim; ++i) x[i] = rng.uniform(-0.9 * r, 0.9 * r);
  for (int i : c.divisor_coords())
    if (rng.coin(zero_prob)) x[i] = 0.0;
  return x;
}

double fprime_abs(const ChartSpec& c, const Point& x) { return std::abs(eval_monomial(c, x) * c.unit_factor.eval(x)); }

// Point of the open sheet with |f| below the bound.
Point collar_point(const ChartSpec& c, const SignSheet& s, Rng& rng, double bound) {
  double scale = 0.9 * c.domain_radius;
  for (int attempt = 0;; ++attempt) {
    Point x(c.dim);
    for (int i = 0; i < c.dim; ++i) x[i] = rng.uniform(-0.9, 0.9) * c.domain_radius;
    for (const auto& [i, e] : s.signs) x[i] = e * rng.uniform(0.02, 1.0) * scale;
    if (fprime_abs(c, x) < 0.9 * bound) return x;
    if (attempt % 20 == 19) scale *= 0.8;
  }
}

Point on_boundary(const ChartSpec& c, const SignSheet& s, Rng& rng, double bound) {
  Point x = collar_point(c, s, rng, bound);
  auto it = s.signs.begin();
  std::advance(it, static_cast<long>(rng.index(s.signs.size())));
  x[it->first] = 0.0;
  return x;
}

double max_diff(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// ---- ncmodel ---------------------------------------------------------------

void nc_diagnostics(Ctx& c) {
  auto diags = check_normal_crossings(c.model);
  if (!diags.empty()) {
    const auto& d = diags.front();
    c.fail(d.chart, d.point, d.kind + ": " + d.message);
    return;
  }
  c.row->detail = "no diagnostics";
}

void nc_zero_set(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const auto& chart : c.model.charts) {
    std::vector<Point> pts = chart_grid(chart, 9);
    for (int s = 0; s < c.samples; ++s) pts.push_back(random_point(chart, rng, 0.3));
    for (const Point& x : pts) {
      bool zero;
      if (chart.field == FieldKind::Complex) {
        CPoint z(x.begin(), x.end());
        zero = eval_f(chart, z) == cplx(0.0);
      } else {
        zero = eval_f(chart, x) == 0.0;
      }
      if (zero != (multiplicity_profile(chart, x).k > 0)) c.fail(chart.id, x, "f = 0 disagrees with the profile");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " points";
}

void nc_dual_complex(Ctx& c) {
  DualComplex dc = build_dual_complex(c.model);
  for (const Simplex& s : dc.simplices) {
    if (s.depth != static_cast<int>(s.components.size())) c.fail(s.witness_chart, s.witness, "depth differs from size");
    const std::size_t k = s.components.size();
    for (unsigned mask = 1; mask + 1 < (1u << k); ++mask) {
      std::vector<std::string> face;
      for (std::size_t b = 0; b < k; ++b)
        if (mask >> b & 1u) face.push_back(s.components[b]);
      if (!dc.find(face)) c.fail(s.witness_chart, s.witness, "missing face of a simplex");
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(dc.simplices.size()) + " simplices, downward closed";
}

void nc_two_sided_stable(Ctx& c) {
  const NCModel& m = c.model;
  auto first = std::find_if(m.transitions.begin(), m.transitions.end(),
                            [](const Transition& t) { return t.id < t.inverse; });
  if (first == m.transitions.end()) {
    c.row->detail = "no transitions";
    return;
  }
  NCModel r = m;
  Transition a = *first, b = m.transition(first->inverse);
  a.id += "#r";
  a.inverse += "#r";
  b.id += "#r";
  b.inverse += "#r";
  r.transitions.push_back(a);
  r.transitions.push_back(b);
  std::string d;
  for (const auto& comp : m.components) {
    bool before = two_sidedness(m, comp.id), after = two_sidedness(r, comp.id);
    if (before != after) c.fail(first->source, {}, "two-sidedness of " + comp.id + " changed");
    d += comp.id + (before ? "+ " : "- ");
  }
  if (c.row->pass) c.row->detail = "unchanged with a redundant transition: " + d;
}

void nc_round_trip(Ctx& c) {
  std::string a = save_model(c.model);
  std::string b = save_model(load_model(a));
  if (a != b) c.fail("", {}, "saved document changes after reload");
  else c.row->detail = std::to_string(a.size()) + " bytes stable";
}

// ---- strat -------------------------------------------------------------------

void strat_partition(Ctx& c) {
  Stratification s = canonical_stratification(c.model);
  Rng rng(c.seed);
  int n = 0;
  for (const auto& chart : c.model.charts) {
    std::vector<Point> pts = chart_grid(chart, 9);
    for (int k = 0; k < c.samples; ++k) pts.push_back(random_point(chart, rng, 0.3));
    for (const Point& x : pts) {
      int hits = 0;
      for (const auto& st : s.strata) hits += st.contains(chart.id, x, chart.zero_tol());
      int expected = multiplicity_profile(chart, x).k > 0 ? 1 : 0;
      if (hits != expected) c.fail(chart.id, x, "point lies in " + std::to_string(hits) + " strata");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " points, disjoint cover of f = 0";
}

void strat_min_pieces(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const ChartSpec* chart : real_charts(c.model)) {
    const int k = static_cast<int>(chart->divisor_coords().size());
    for (const SignSheet& sheet : cut_chart(*chart)) {
      std::vector<int> eps;
      for (const auto& [i, e] : sheet.signs) eps.push_back(e);
      MinSubstratification ms = min_substratification(eps, chart->dim);
      for (int s = 0; s < c.samples; ++s) {
        Point y(chart->dim);
        for (int i = 0; i < chart->dim; ++i) y[i] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < k; ++i) y[i] = eps[i] * rng.uniform(0.0, 1.0);
        if (k >= 2 && rng.coin(0.3)) {
          int i = static_cast<int>(rng.index(k)), j = static_cast<int>(rng.index(k));
          y[j] = eps[j] * eps[i] * y[i];
        }
        auto pieces = ms.pieces_containing(y, 1e-12);
        auto ties = ms.tie_set(y, 1e-12);
        std::sort(pieces.begin(), pieces.end());
        std::sort(ties.begin(), ties.end());
        if (pieces.empty() || pieces != ties) c.fail(chart->id, y, "pieces containing the point differ from its tie set");
        ++n;
      }
    }
  }
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " points" : "no real charts";
}

void strat_identity_pa(Ctx& c) {
  Stratification s = canonical_stratification(c.model);
  int n = 0;
  for (const auto& chart : c.model.charts) {
    PACheck r = is_piecewise_analytic(identity_map(chart, s), 20, c.seed);
    if (!r.ok) c.fail(chart.id, r.witness ? r.witness->point : Point{}, r.witness ? r.witness->kind : "failed");
    n += r.boundary_samples;
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " boundary samples";
}

void strat_quadrants(Ctx& c) {
  Stratification s = canonical_stratification(c.model);
  int n = 0;
  for (const auto& st : s.strata)
    for (const auto& p : st.pieces) {
      ++n;
      if (!p.quadrant.is_partition(static_cast<int>(p.divisor_coords.size())) ||
          static_cast<int>(p.quadrant.zero.size()) != st.depth)
        c.fail(p.chart, {}, "piece of " + st.label + " is not a quadrant of the right depth");
    }
  if (c.row->pass) c.row->detail = std::to_string(n) + " pieces";
}

// ---- cut -----------------------------------------------------------------------

void cut_cardinality(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const auto& chart : c.model.charts) {
    std::vector<Point> pts = chart_grid(chart, 9);
    for (int k = 0; k < c.samples; ++k) pts.push_back(random_point(chart, rng, 0.3));
    for (const Point& x : pts) {
      std::size_t expected = std::size_t(1) << multiplicity_profile(chart, x).k;
      if (fibre(chart, x).size() != expected) c.fail(chart.id, x, "fibre size differs from 2^k");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " points";
}

void cut_deck(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const auto& chart : c.model.charts) {
    for (int k = 0; k < c.samples; ++k) {
      Point x = random_point(chart, rng, 0.4);
      Profile prof = multiplicity_profile(chart, x);
      auto fib = fibre(chart, x);
      std::set<SignSheet> want, orbit{fib[0].sheet};
      for (const auto& p : fib) {
        want.insert(p.sheet);
        for (int i : chart.divisor_coords())
          if (project(deck_action(chart, chart.divisor_labels.at(i), p)) != project(p))
            c.fail(chart.id, x, "deck action moves the projection");
      }
      for (const auto& comp : prof.components) {
        std::set<SignSheet> next = orbit;
        for (const auto& s : orbit) next.insert(deck_action(chart, comp, CutPoint{chart.id, x, s}).sheet);
        orbit = next;
      }
      if (orbit != want) c.fail(chart.id, x, "fibre is not one deck orbit");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " fibres";
}

void cut_gluing(Ctx& c) {
  const NCModel& m = c.model;
  int loops = 0;
  for (const auto& comp : m.components) {
    bool all_plus = true;
    for (const auto& loop : cocycle_loops(m, comp.id)) {
      ++loops;
      int s = transport_sign(m, comp.id, loop.transitions, 1);
      if (s != loop.product) c.fail("", {}, "loop product mismatch for " + comp.id);
      all_plus = all_plus && s == 1;
    }
    if (all_plus != two_sidedness(m, comp.id)) c.fail("", {}, "transport disagrees with two-sidedness of " + comp.id);
  }
  Rng rng(c.seed);
  int round_trips = 0;
  for (const auto& t : m.transitions) {
    const ChartSpec& src = m.chart(t.source);
    if (src.field != FieldKind::Real) continue;
    for (int k = 0, found = 0; k < 400 && found < 5; ++k) {
      Point x = random_point(src, rng, 0.0);
      if (!m.in_overlap(t, x)) continue;
      ++found;
      for (const auto& cp : fibre(src, x)) {
        CutPoint there = transport(m, t, cp);
        CutPoint back = transport(m, m.transition(t.inverse), there);
        if (back.sheet != cp.sheet) c.fail(src.id, x, "transport there and back changes the sheet via " + t.id);
        ++round_trips;
      }
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(loops) + " loops, " + std::to_string(round_trips) + " round trips";
}

void cut_covering_degree(Ctx& c) {
  Stratification s = canonical_stratification(c.model);
  Rng rng(c.seed);
  int n = 0;
  for (const auto& st : s.strata) {
    std::set<std::size_t> degrees;
    for (const auto& piece : st.pieces) {
      const ChartSpec& chart = c.model.chart(piece.chart);
      const double r = chart.domain_radius;
      for (int k = 0; k < std::max(4, c.samples / 10); ++k) {
        Point x(chart.dim);
        for (int i = 0; i < chart.dim; ++i) x[i] = rng.uniform(-0.9 * r, 0.9 * r);
        for (int z : piece.quadrant.zero) x[piece.divisor_coords[z]] = 0.0;
        for (int z : piece.quadrant.plus) x[piece.divisor_coords[z]] = rng.uniform(0.01 * r, 0.9 * r);
        for (int z : piece.quadrant.minus) x[piece.divisor_coords[z]] = -rng.uniform(0.01 * r, 0.9 * r);
        degrees.insert(fibre(chart, x).size());
        if (degrees.size() > 1) c.fail(chart.id, x, "covering degree varies over " + st.label);
        ++n;
      }
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " stratum samples, constant degree";
}

// ---- flowretract ---------------------------------------------------------------

template <class F>
void per_sheet(Ctx& c, F&& f) {
  for (const ChartSpec* chart : real_charts(c.model))
    for (const SignSheet& s : cut_chart(*chart)) f(*chart, s);
}

void no_real(Ctx& c, int n) {
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " samples" : "no real charts";
}

void flow_idempotent(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartRetraction cr(c.model, ch.id, s);
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      RetractStep a = cr.retract(x);
      RetractStep b = cr.retract(a.x);
      worst = std::max(worst, max_diff(a.x, b.x));
      if (a.x != b.x) c.fail(ch.id, x, "retract is not idempotent");
      ++n;
    }
  });
  no_real(c, n);
}

void flow_identity_on_x(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartRetraction cr(c.model, ch.id, s);
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = on_boundary(ch, s, rng, c.model.level_bound);
      if (cr.retract(x).x != x || local_retract(s, x).x != x) c.fail(ch.id, x, "retract moves a point of X'");
      ++n;
    }
  });
  no_real(c, n);
}

void flow_descent(Ctx& c) {
  Rng rng(c.seed);
  int n = 0, exits = 0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    for (FieldMode mode : {FieldMode::Auto, FieldMode::Numeric}) {
      ChartRetraction cr(c.model, ch.id, s, mode);
      for (int k = 0; k < std::max(2, c.samples / 40); ++k) {
        Point x = collar_point(ch, s, rng, c.model.level_bound);
        FlowTrace t;
        try {
          t = cr.flow_to_boundary(x);
        } catch (const FlowError&) {
          // The raw field may carry the trajectory out of the chart first.
          if (mode != FieldMode::Numeric) throw;
          ++exits;
          continue;
        }
        for (std::size_t i = 1; i < t.points.size(); ++i)
          if (!(t.points[i].fprime < t.points[i - 1].fprime)) c.fail(ch.id, x, "f' does not decrease along the trace");
        if (t.points.empty() || t.points.back().fprime > ch.zero_tol()) c.fail(ch.id, x, "terminal f' above tolerance");
        ++n;
      }
    }
  });
  no_real(c, n);
  if (c.row->pass && exits) c.row->detail += ", " + std::to_string(exits) + " raw-field flows left the chart";
}

void flow_deck(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      CutPoint p{ch.id, x, s};
      for (int i : ch.divisor_coords()) {
        const std::string& comp = ch.divisor_labels.at(i);
        CutPoint q = reflect_sheet(ch, comp, p);
        CutPoint rp{ch.id, local_retract(s, x).x, s};
        Point lhs = local_retract(q.sheet, q.x).x;
        if (lhs != reflect_sheet(ch, comp, rp).x) c.fail(ch.id, x, "reflection does not commute with the min formula");
        // On X' the plain deck action commutes as well.
        Point xb = rp.x;
        if (xb[i] == 0.0) {
          CutPoint d = deck_action(ch, comp, CutPoint{ch.id, xb, s});
          if (local_retract(d.sheet, d.x).x != xb) c.fail(ch.id, xb, "deck action does not commute on X'");
        }
      }
      ++n;
    }
  });
  no_real(c, n);
}

void flow_stratified_bijection(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartRetraction cr(c.model, ch.id, s);
    if (!cr.closed_form()) return;
    const auto& norm = cr.normalization();
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      Point y = norm.to_normalized(x);
      if (norm.coords.size() >= 2 && rng.coin(0.5)) {
        // Force a tie in normalized coordinates.
        int a = norm.coords[rng.index(norm.coords.size())], b = norm.coords[rng.index(norm.coords.size())];
        y[b] = y[a];
        try {
          x = norm.from_normalized(y);
        } catch (const RangeError&) {
          continue;
        }
        y = norm.to_normalized(x);
      }
      double ymin = std::numeric_limits<double>::infinity();
      for (int i : norm.coords) ymin = std::min(ymin, y[i]);
      const double tol = 1e-12 * ch.domain_radius;
      std::vector<int> ties, zeros;
      for (int i : norm.coords)
        if (y[i] - ymin <= tol) ties.push_back(i);
      Point yr = norm.to_normalized(cr.retract(x).x);
      for (int i : norm.coords)
        if (std::abs(yr[i]) <= tol) zeros.push_back(i);
      if (ties != zeros) c.fail(ch.id, x, "tie stratum does not map to the matching product stratum");
      ++n;
    }
  });
  no_real(c, n);
}

void flow_level_independence(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    if (!unit_one(ch)) return;
    ChartRetraction cr(c.model, ch.id, s);
    int asum = 0;
    for (int i : ch.divisor_coords()) asum += ch.exponents[i];
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      for (double lambda : {0.5, 0.125}) {
        const double mu = std::pow(lambda, 1.0 / asum);
        Point xs = x;
        for (int i : ch.divisor_coords()) xs[i] *= mu;
        if (std::abs(fprime_abs(ch, xs) - lambda * fprime_abs(ch, x)) > 1e-12 * fprime_abs(ch, x))
          c.fail(ch.id, x, "scaling does not carry the fibre over c to the fibre over lambda c");
        Point lhs = cr.retract(xs).x, rhs = cr.retract(x).x;
        for (int i : ch.divisor_coords()) rhs[i] *= mu;
        worst = std::max(worst, max_diff(lhs, rhs));
        if (max_diff(lhs, rhs) > 1e-8) c.fail(ch.id, x, "scaling does not commute with the retraction");
      }
      ++n;
    }
  });
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " samples, max " + fmt(worst) : "no monomial real charts";
}

void flow_transversality(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet&) {
    std::vector<int> coords = ch.divisor_coords();
    if (coords.size() < 2) return;
    const int dim = ch.dim;
    for (int k = 0; k < c.samples / 8; ++k) {
      // Normalized coordinates, with a tie set T of size >= 2.
      Point y(dim);
      for (int i = 0; i < dim; ++i) y[i] = rng.uniform(-0.5, 0.5);
      std::vector<int> T;
      double m = rng.uniform(0.05, 0.3);
      for (int i : coords) {
        if (T.size() < 2 || rng.coin(0.5)) {
          T.push_back(i);
          y[i] = m;
        } else {
          y[i] = m + rng.uniform(0.05, 0.5);
        }
      }
      Eigen::RowVectorXd grad(dim);
      grad.setZero();
      for (int i : coords) grad(i) = ch.exponents[i] / y[i];
      Eigen::MatrixXd ker = Eigen::FullPivLU<Eigen::MatrixXd>(grad).kernel();
      Eigen::MatrixXd tan(dim, dim - static_cast<int>(T.size()) + 1);
      tan.setZero();
      int col = 0;
      for (int i : T) tan(i, col) = 1.0;
      ++col;
      for (int i = 0; i < dim; ++i)
        if (std::find(T.begin(), T.end(), i) == T.end()) tan(i, col++) = 1.0;
      Eigen::MatrixXd both(dim, ker.cols() + tan.cols());
      both << ker, tan;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(both);
      int rank = 0;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-6;
      if (rank != dim) c.fail(ch.id, y, "fibre is not transverse to the tie stratum");
      ++n;
    }
  });
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " tie points" : "no real charts with two divisor coordinates";
}

void flow_decrease(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartNormalization norm = normalize_chart(ch, s);
    VField w = assemble_w(norm);
    std::vector<Point> pts;
    for (int k = 0; k < c.samples / 4; ++k) pts.push_back(collar_point(ch, s, rng, 1e300));
    DecreaseReport r = check_decrease(w, norm, pts);
    worst = std::max(worst, r.max_rel_error);
    for (const auto& row : r.rows)
      if (!row.skipped && !row.negative) c.fail(ch.id, row.x, "f' does not decrease along w");
    if (r.max_rel_error > 1e-9) c.fail(ch.id, pts.front(), "rate differs from (sum a_i / y_i) f'");
    n += static_cast<int>(pts.size());
  });
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " samples, max rel " + fmt(worst) : "no real charts";
}

void flow_trivialization(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartRetraction cr(c.model, ch.id, s);
    for (int k = 0; k < c.samples / 4; ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      Trivialization t = cr.trivialize(x);
      if (std::abs(t.level - fprime_abs(ch, x)) > 1e-9) c.fail(ch.id, x, "level differs from f'");
      Point back = cr.untrivialize(t).x;
      worst = std::max(worst, max_diff(back, x));
      if (max_diff(back, x) > 1e-9) c.fail(ch.id, x, "untrivialize(trivialize(x)) differs from x");
      ++n;
    }
  });
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " samples, max " + fmt(worst) : "no real charts";
}

void flow_numeric_vs_closed(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  per_sheet(c, [&](const ChartSpec& ch, const SignSheet& s) {
    ChartRetraction cr(c.model, ch.id, s);
    if (!cr.closed_form()) return;
    VField w = assemble_w(cr.normalization(), FieldMode::Normalized);
    FlowOptions opts;
    opts.record = false;
    for (int k = 0; k < std::max(2, c.samples / 20); ++k) {
      Point x = collar_point(ch, s, rng, c.model.level_bound);
      FlowTrace t = flow(ch, CutPoint{ch.id, x, s}, w, opts);
      RetractStep r = cr.retract(x);
      double d = std::max(max_diff(t.terminal.x, r.x), std::abs(t.hit_time - r.delta));
      worst = std::max(worst, d);
      if (d > 1e-6) c.fail(ch.id, x, "numeric hit point differs from the closed form");
      ++n;
    }
  });
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " flows, max " + fmt(worst) : "no real charts";
}

void flow_ambient(Ctx& c) {
  if (!c.model.modification) {
    c.row->detail = "no modification";
    return;
  }
  Rng rng(c.seed);
  int n = 0;
  for (const ChartSpec* ch : real_charts(c.model)) {
    if (!c.model.modification->sigma.count(ch->id)) continue;
    for (int k = 0; k < 4; ++k) {
      Point x = random_point(*ch, rng, 0.0);
      for (double& v : x) v *= 0.5;
      Point q = push_down(c.model, ch->id, x);
      AmbientRetraction a = retract(c.model, q);
      if (std::abs(c.model.modification->ambient_f.eval(a.target)) > 1e-10)
        c.fail(ch->id, x, "retracted point is not on the central fibre");
      if (max_diff(push_down(c.model, a.chart, a.lifted.x), q) > 1e-9) c.fail(ch->id, x, "lift does not push down to q");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " ambient points";
}

void flow_specialization(Ctx& c) {
  int n = 0;
  for (const auto& sp : c.model.special_points) {
    if (sp.chart.empty()) continue;
    const ChartSpec& ch = c.model.chart(sp.chart);
    if (ch.field != FieldKind::Real) continue;
    Profile prof = multiplicity_profile(ch, sp.coords);
    if (prof.k == 0) continue;
    for (double cval : {0.5 * c.model.level_bound, -0.5 * c.model.level_bound}) {
      std::size_t expected = 0;
      for (const auto& cp : fibre(ch, sp.coords)) expected += sheet_side(ch, cp.sheet) * cval > 0;
      auto pts = specialization_fibre_real(c.model, sp.chart, sp.coords, cval);
      if (pts.size() != expected) c.fail(ch.id, sp.coords, "wrong number of specialization points");
      for (const auto& p : pts) {
        if (std::abs(eval_f(ch, p.x) - cval) > 1e-12) c.fail(ch.id, p.x, "fibre point is off the level");
        Point r = ChartRetraction(c.model, ch.id, p.sheet).retract(p.x).x;
        if (max_diff(r, sp.coords) > 1e-9) c.fail(ch.id, p.x, "fibre point does not retract to the special point");
        ++n;
      }
    }
  }
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " fibre points" : "no real special points on X";
}

// ---- complexretract ------------------------------------------------------------

CPoint random_cpoint(const ChartSpec& ch, Rng& rng, double scale) {
  CPoint z(ch.dim);
  for (auto& v : z) v = {rng.uniform(-scale, scale) * ch.domain_radius, rng.uniform(-scale, scale) * ch.domain_radius};
  return z;
}

void complex_diagram(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    std::vector<int> ex;
    for (int i : ch->divisor_coords()) ex.push_back(ch->exponents[i]);
    for (int k = 0; k < c.samples / 2; ++k) {
      CPoint z = random_cpoint(*ch, rng, 0.9);
      PolarPoint p = polar_blowup(*ch, z);
      BandPoint b = f_prime(*ch, p);
      cplx f = eval_f(*ch, z);
      Point w(2 * ch->dim);
      for (int i = 0; i < ch->dim; ++i) w[2 * i] = z[i].real(), w[2 * i + 1] = z[i].imag();
      if (std::abs(b.rho - std::abs(f)) > 1e-10 * std::max(1.0, std::abs(f)) || angle_distance(b.alpha, std::arg(f)) > 1e-10)
        c.fail(ch->id, w, "band map disagrees with f");
      if (unit_one(*ch)) {
        BandPoint m = f_prime(p, ex);
        if (m.rho != b.rho || m.alpha != b.alpha) c.fail(ch->id, w, "monomial band map differs");
      }
      CPoint back = polar_down(*ch, p);
      for (int i = 0; i < ch->dim; ++i)
        if (std::abs(back[i] - z[i]) > 1e-12) c.fail(ch->id, w, "polar_down does not invert polar_blowup");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " samples";
}

void complex_alpha(Ctx& c, FieldMode mode, int samples) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    ComplexRetraction cr(*ch, mode);
    for (int k = 0; k < samples; ++k) {
      CPoint z = random_cpoint(*ch, rng, 0.4);
      PolarPoint p = polar_blowup(*ch, z);
      PolarPoint r = cr.retract(p);
      double d = angle_distance(cr.alpha(p), cr.alpha(r));
      worst = std::max(worst, d);
      double rmin = *std::min_element(r.rho.begin(), r.rho.end());
      Point w(2 * ch->dim);
      for (int i = 0; i < ch->dim; ++i) w[2 * i] = z[i].real(), w[2 * i + 1] = z[i].imag();
      if (d > 1e-8) c.fail(ch->id, w, "retraction changes the angle");
      if (rmin != 0.0) c.fail(ch->id, w, "retraction does not reach X'");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " retractions, max " + fmt(worst);
}

void complex_monodromy(Ctx& c) {
  std::set<std::vector<int>> tuples;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    std::vector<int> coords = ch->divisor_coords();
    for (unsigned mask = 1; mask < (1u << coords.size()); ++mask) {
      std::vector<int> ex;
      for (std::size_t b = 0; b < coords.size(); ++b)
        if (mask >> b & 1u) ex.push_back(ch->exponents[coords[b]]);
      tuples.insert(ex);
    }
  }
  std::string d;
  for (const auto& ex : tuples) {
    const int count = alpha_fibre_components(ex);
    std::vector<int> perm = monodromy_permutation(ex, 0.123);
    // Order of the permutation divides the component count.
    std::vector<int> cur(count);
    std::iota(cur.begin(), cur.end(), 0);
    for (int k = 0; k < count; ++k)
      for (int& v : cur) v = perm[v];
    for (int j = 0; j < count; ++j)
      if (cur[j] != j) c.fail("", {}, "monodromy order does not divide the component count");
    d += "(";
    for (std::size_t i = 0; i < ex.size(); ++i) d += (i ? "," : "") + std::to_string(ex[i]);
    d += ")->" + std::to_string(count) + " ";
  }
  if (c.row->pass) c.row->detail = d.empty() ? "no divisor" : d;
}

void complex_milnor(Ctx& c) {
  std::string d;
  for (const auto& sp : c.model.special_points) {
    if (sp.exceptional.empty() && sp.chart.empty()) continue;
    MilnorFibration mf = milnor_fibration(c.model, sp.name);
    d += sp.name + ": chi=" + std::to_string(mf.chi) + " pi0=" + std::to_string(mf.pi0) + " ";
    if (!sp.exceptional.empty()) {
      std::vector<MilnorRefinement> refs;
      for (const auto& e : sp.exceptional) refs.push_back({e.components, {e.chi - 1, 1}});
      if (milnor_fibration(c.model, sp.name, refs).chi != mf.chi) c.fail("", sp.ambient, "chi changes under refinement");
    }
  }
  if (c.row->pass) c.row->detail = d.empty() ? "no special points with data" : d;
}

void complex_rotation(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  double worst = 0.0;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    if (!unit_one(*ch)) continue;
    ComplexRetraction cr(*ch);
    const int i0 = ch->divisor_coords().front();
    for (int k = 0; k < c.samples / 4; ++k) {
      CPoint z = random_cpoint(*ch, rng, 0.4);
      const double theta = rng.uniform(-3.0, 3.0);
      const cplx rot = std::polar(1.0, theta / ch->exponents[i0]);
      CPoint zr = z;
      zr[i0] *= rot;
      if (std::abs(eval_f(*ch, zr) - std::polar(1.0, theta) * eval_f(*ch, z)) > 1e-12) {
        Point w{z[0].real(), z[0].imag()};
        c.fail(ch->id, w, "rotation does not carry the level c to e^{i theta} c");
      }
      CPoint lhs = polar_down(*ch, cr.retract(polar_blowup(*ch, zr)));
      CPoint rhs = polar_down(*ch, cr.retract(polar_blowup(*ch, z)));
      rhs[i0] *= rot;
      double d = 0.0;
      for (int i = 0; i < ch->dim; ++i) d = std::max(d, std::abs(lhs[i] - rhs[i]));
      worst = std::max(worst, d);
      if (d > 1e-8) c.fail(ch->id, {z[0].real(), z[0].imag()}, "rotation does not commute with the retraction");
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " samples, max " + fmt(worst) : "no monomial charts";
}

void complex_universal(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    ComplexRetraction cr(*ch);
    const int i0 = ch->divisor_coords().front();
    for (int k = 0; k < std::max(2, c.samples / 20); ++k) {
      CPoint z = random_cpoint(*ch, rng, 0.4);
      LiftedAngle start = LiftedAngle::from_value(wrap_angle(std::arg(eval_f(*ch, z))));
      std::vector<CPoint> path{z};
      UniversalPoint u = universal_trivialization(cr, path, start);
      UniversalPoint v = universal_trivialization(cr, path, start.shifted(1));
      Point w{z[0].real(), z[0].imag()};
      if (!(v.angle == deck_shift(u).angle) || v.rho != u.rho || polar_down(*ch, v.base) != polar_down(*ch, u.base))
        c.fail(ch->id, w, "deck shift does not commute with the trivialization");
      // Base equals the retraction.
      if (polar_down(*ch, u.base) != polar_down(*ch, cr.retract(polar_blowup(*ch, z))))
        c.fail(ch->id, w, "base differs from the retraction");
      if (unit_one(*ch)) {
        // Turning z_i0 by 2 pi / a winds f once.
        std::vector<CPoint> loop;
        for (int s = 0; s <= 8; ++s) {
          CPoint q = z;
          q[i0] *= std::polar(1.0, kTwoPi * s / (8.0 * ch->exponents[i0]));
          loop.push_back(q);
        }
        UniversalPoint e = universal_trivialization(cr, loop, start);
        if (e.angle.turns != u.angle.turns + 1 || angle_distance(e.angle.angle, u.angle.angle) > 1e-9)
          c.fail(ch->id, w, "winding once does not shift the lift by one turn");
      }
      ++n;
    }
  }
  if (c.row->pass) c.row->detail = std::to_string(n) + " lifts";
}

void complex_fibres(Ctx& c) {
  Rng rng(c.seed);
  int n = 0;
  for (const ChartSpec* ch : divisor_charts(c.model)) {
    if (!unit_one(*ch)) continue;
    for (int i0 : ch->divisor_coords()) {
      CPoint p = random_cpoint(*ch, rng, 0.3);
      p[i0] = 0.0;
      for (int i : ch->divisor_coords())
        if (i != i0 && std::abs(p[i]) < 0.1) p[i] += 0.2;
      const cplx cval = std::polar(0.5 * c.model.level_bound * 1e-2, rng.uniform(0.0, kTwoPi));
      ComplexRetraction cr(*ch);
      auto pts = complex_fibre_points(*ch, p, cval);
      const int a = ch->exponents[i0];
      std::vector<double> angles;
      for (const auto& q : pts) {
        Point w{q[0].real(), q[0].imag()};
        if (std::abs(eval_f(*ch, q) - cval) > 1e-12) c.fail(ch->id, w, "fibre point is off the level");
        CPoint r = polar_down(*ch, cr.retract(polar_blowup(*ch, q)));
        for (int i = 0; i < ch->dim; ++i)
          if (std::abs(r[i] - p[i]) > 1e-9) c.fail(ch->id, w, "fibre point does not retract to p");
        angles.push_back(wrap_angle(std::arg(q[i0])));
        ++n;
      }
      std::sort(angles.begin(), angles.end());
      bool distinct = true;
      for (std::size_t i = 0; i < angles.size(); ++i)
        distinct = distinct && angle_distance(angles[i], angles[(i + 1) % angles.size()]) > 1e-6;
      if (static_cast<int>(pts.size()) != a || (a > 1 && !distinct))
        c.fail(ch->id, {}, "fibre over a k = 1 point does not have a distinct points");
    }
  }
  if (c.row->pass) c.row->detail = n ? std::to_string(n) + " fibre points" : "no monomial charts";
}

void complex_condition3(Ctx& c) {
  if (!c.model.modification || c.model.stratifications.empty()) {
    c.row->detail = "no declared stratification";
    return;
  }
  std::string d;
  for (const auto& st : c.model.stratifications) {
    Condition3Report r = condition3_check(c.model, st.name, 20, c.seed);
    d += st.name + (r.pass ? ":pass " : ":fail ");
    if (r.pass != st.expect_pass) {
      const Condition3Row* bad = nullptr;
      for (const auto& row : r.rows)
        if (!row.pass) {
          bad = &row;
          break;
        }
      c.fail(bad ? bad->chart : "", bad ? bad->witness : Point{}, "stratification " + st.name + " result differs from its declaration");
    }
  }
  if (c.row->pass) c.row->detail = d + "(as declared)";
}

}  // namespace

Report verify_suite(const NCModel& model, const VerifyOptions& opts) {
  const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"complex.alpha_preserving", [](Ctx& c) { complex_alpha(c, FieldMode::Auto, c.samples / 2); }},
      {"complex.alpha_preserving_numeric", [](Ctx& c) { complex_alpha(c, FieldMode::Numeric, std::max(2, c.samples / 20)); }},
      {"complex.condition3", complex_condition3},
      {"complex.diagram", complex_diagram},
      {"complex.fibre_points", complex_fibres},
      {"complex.level_rotation", complex_rotation},
      {"complex.milnor", complex_milnor},
      {"complex.monodromy", complex_monodromy},
      {"complex.universal_deck", complex_universal},
      {"cut.cardinality", cut_cardinality},
      {"cut.covering_degree", cut_covering_degree},
      {"cut.deck_orbit", cut_deck},
      {"cut.gluing", cut_gluing},
      {"flow.ambient", flow_ambient},
      {"flow.decrease", flow_decrease},
      {"flow.deck_equivariance", flow_deck},
      {"flow.descent", flow_descent},
      {"flow.idempotent", flow_idempotent},
      {"flow.identity_on_x", flow_identity_on_x},
      {"flow.level_independence", flow_level_independence},
      {"flow.numeric_vs_closed", flow_numeric_vs_closed},
      {"flow.specialization", flow_specialization},
      {"flow.stratified_bijection", flow_stratified_bijection},
      {"flow.transversality", flow_transversality},
      {"flow.trivialization", flow_trivialization},
      {"ncmodel.diagnostics", nc_diagnostics},
      {"ncmodel.dual_complex", nc_dual_complex},
      {"ncmodel.round_trip", nc_round_trip},
      {"ncmodel.two_sided_stable", nc_two_sided_stable},
      {"ncmodel.zero_set", nc_zero_set},
      {"strat.identity_pa", strat_identity_pa},
      {"strat.min_pieces", strat_min_pieces},
      {"strat.partition", strat_partition},
      {"strat.quadrants", strat_quadrants},
  };
  Report rep;
  rep.model = model.name;
  rep.seed = opts.seed;
  const bool valid = check_normal_crossings(model).empty();
  for (const auto& [id, fn] : checks) {
    CheckRow row;
    row.id = id;
    Ctx ctx{model, check_seed(opts.seed, id), opts.samples, &row};
    if (!valid && id != "ncmodel.diagnostics" && id != "ncmodel.round_trip") {
      row.detail = "skipped: model fails validation";
      row.pass = false;
      rep.rows.push_back(std::move(row));
      continue;
    }
    try {
      fn(ctx);
    } catch (const std::exception& e) {
      row.pass = false;
      row.detail = std::string("error: ") + e.what();
      row.witness = "seed=" + std::to_string(ctx.seed);
    }
    rep.rows.push_back(std::move(row));
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const CheckRow& a, const CheckRow& b) { return a.id < b.id; });
  return rep;
}

}  // namespace ncr
