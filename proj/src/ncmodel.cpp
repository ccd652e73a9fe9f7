#include "ncr/ncmodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "ncr/errors.hpp"
#include "ncr/rng.hpp"

namespace ncr {

std::vector<int> ChartSpec::divisor_coords() const {
  std::vector<int> out;
  for (int i = 0; i < dim; ++i)
    if (exponents[i] > 0) out.push_back(i);
  return out;
}

int ChartSpec::coord_of(const std::string& component) const {
  for (const auto& [i, label] : divisor_labels)
    if (label == component) return i;
  return -1;
}

bool ChartSpec::in_domain(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim) return false;
  return std::all_of(x.begin(), x.end(), [&](double v) { return std::abs(v) < domain_radius; });
}

bool ChartSpec::in_domain(std::span<const std::complex<double>> z) const {
  if (static_cast<int>(z.size()) != dim) return false;
  return std::all_of(z.begin(), z.end(), [&](const std::complex<double>& v) {
    return std::abs(v.real()) < domain_radius && std::abs(v.imag()) < domain_radius;
  });
}

Point Transition::apply(std::span<const double> x) const {
  Point y(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) y[i] = map[i].eval(x);
  return y;
}

const ChartSpec& NCModel::chart(const std::string& id) const {
  for (const auto& c : charts)
    if (c.id == id) return c;
  throw ModelError("unknown chart '" + id + "'");
}

const DivisorComponent& NCModel::component(const std::string& id) const {
  for (const auto& c : components)
    if (c.id == id) return c;
  throw ModelError("unknown divisor component '" + id + "'");
}

const Transition& NCModel::transition(const std::string& id) const {
  for (const auto& t : transitions)
    if (t.id == id) return t;
  throw ModelError("unknown transition '" + id + "'");
}

const SpecialPoint* NCModel::special_point(const std::string& name) const {
  for (const auto& p : special_points)
    if (p.name == name) return &p;
  return nullptr;
}

bool NCModel::in_overlap(const Transition& t, std::span<const double> x) const {
  const ChartSpec& src = chart(t.source);
  if (!src.in_domain(x)) return false;
  for (const auto& e : t.overlap)
    if (!(e.eval(x) > 0.0)) return false;
  Point y = t.apply(x);
  if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) return false;
  return chart(t.target).in_domain(y);
}

double eval_monomial(const ChartSpec& chart, std::span<const double> x) {
  double m = 1.0;
  for (int i = 0; i < chart.dim; ++i)
    for (int e = 0; e < chart.exponents[i]; ++e) m *= x[i];
  return m;
}

double eval_f(const ChartSpec& chart, std::span<const double> x) {
  if (!chart.in_domain(x)) throw DomainError("point outside the domain of chart '" + chart.id + "'");
  return eval_monomial(chart, x) * chart.unit_factor.eval(x);
}

std::complex<double> eval_f(const ChartSpec& chart, std::span<const std::complex<double>> z) {
  if (!chart.in_domain(z)) throw DomainError("point outside the domain of chart '" + chart.id + "'");
  std::complex<double> m = 1.0;
  for (int i = 0; i < chart.dim; ++i)
    for (int e = 0; e < chart.exponents[i]; ++e) m *= z[i];
  return m * chart.unit_factor.eval(z);
}

namespace {

template <class T>
Profile profile_impl(const ChartSpec& chart, std::span<const T> x) {
  if (!chart.in_domain(x)) throw DomainError("point outside the domain of chart '" + chart.id + "'");
  Profile p;
  for (int i : chart.divisor_coords()) {
    if (std::abs(x[i]) <= chart.zero_tol()) {
      p.coords.push_back(i);
      p.components.push_back(chart.divisor_labels.at(i));
    }
  }
  std::sort(p.components.begin(), p.components.end());
  p.k = static_cast<int>(p.coords.size());
  return p;
}

}  // namespace

Profile multiplicity_profile(const ChartSpec& chart, std::span<const double> x) {
  return profile_impl(chart, x);
}

Profile multiplicity_profile(const ChartSpec& chart, std::span<const std::complex<double>> z) {
  return profile_impl(chart, z);
}

std::vector<Point> chart_grid(const ChartSpec& chart, int per_axis) {
  std::vector<double> axis(per_axis);
  const double r = chart.domain_radius;
  for (int j = 0; j < per_axis; ++j) axis[j] = -r + (j + 0.5) * (2.0 * r / per_axis);
  if (per_axis % 2 == 1) axis[per_axis / 2] = 0.0;
  std::vector<Point> out;
  std::vector<int> idx(chart.dim, 0);
  for (;;) {
    Point p(chart.dim);
    for (int i = 0; i < chart.dim; ++i) p[i] = axis[idx[i]];
    out.push_back(std::move(p));
    int d = 0;
    while (d < chart.dim && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == chart.dim) break;
  }
  return out;
}

std::vector<const Simplex*> DualComplex::of_depth(int depth) const {
  std::vector<const Simplex*> out;
  for (const auto& s : simplices)
    if (s.depth == depth) out.push_back(&s);
  return out;
}

const Simplex* DualComplex::find(std::vector<std::string> components) const {
  std::sort(components.begin(), components.end());
  for (const auto& s : simplices)
    if (s.components == components) return &s;
  return nullptr;
}

DualComplex build_dual_complex(const NCModel& model) {
  DualComplex dc;
  for (const auto& c : model.components) dc.vertices.push_back(c.id);
  std::sort(dc.vertices.begin(), dc.vertices.end());

  for (const auto& t : model.transitions) {
    const ChartSpec& src = model.chart(t.source);
    const ChartSpec& dst = model.chart(t.target);
    for (const auto& [comp, sign] : t.sign_data) {
      if (!src.has_component(comp) || !dst.has_component(comp))
        throw ModelError("transition '" + t.id + "' carries sign data for '" + comp +
                         "' which is not labeled in both charts");
    }
  }

  std::map<std::vector<std::string>, Simplex> found;
  for (const auto& chart : model.charts) {
    std::vector<int> coords = chart.divisor_coords();
    std::set<std::string> seen;
    for (int i : coords) {
      const std::string& label = chart.divisor_labels.at(i);
      if (!seen.insert(label).second)
        throw ModelError("chart '" + chart.id + "' labels two coordinates with '" + label + "'");
      if (!std::binary_search(dc.vertices.begin(), dc.vertices.end(), label))
        throw ModelError("chart '" + chart.id + "' uses undeclared component '" + label + "'");
    }
    const int m = static_cast<int>(coords.size());
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      Simplex s;
      s.witness_chart = chart.id;
      s.witness.assign(chart.dim, 0.0);
      for (int b = 0; b < m; ++b) {
        if (mask & (1u << b))
          s.components.push_back(chart.divisor_labels.at(coords[b]));
        else
          s.witness[coords[b]] = 0.5 * chart.domain_radius;
      }
      std::sort(s.components.begin(), s.components.end());
      s.depth = static_cast<int>(s.components.size());
      auto key = s.components;
      found.try_emplace(std::move(key), std::move(s));
    }
  }
  for (auto& [key, s] : found) dc.simplices.push_back(std::move(s));
  std::stable_sort(dc.simplices.begin(), dc.simplices.end(),
                   [](const Simplex& a, const Simplex& b) { return a.depth < b.depth; });
  return dc;
}

namespace {

void add(std::vector<Diagnostic>& out, std::string kind, std::string chart, Point p, std::string msg) {
  out.push_back({std::move(kind), std::move(chart), std::move(p), std::move(msg)});
}

void check_chart(const NCModel& model, const ChartSpec& chart, std::vector<Diagnostic>& out) {
  if (static_cast<int>(chart.exponents.size()) != chart.dim) {
    add(out, "dimension", chart.id, {}, "exponent vector length differs from chart dimension");
    return;
  }
  if (chart.unit_factor.max_var() >= chart.dim)
    add(out, "dimension", chart.id, {}, "unit factor uses a coordinate beyond the chart dimension");
  for (int i = 0; i < chart.dim; ++i) {
    if (chart.exponents[i] < 0) add(out, "exponent", chart.id, {}, "negative exponent");
    bool labeled = chart.divisor_labels.count(i) > 0;
    if (chart.exponents[i] > 0 && !labeled)
      add(out, "label_missing", chart.id, {},
          "coordinate " + std::to_string(i + 1) + " has positive exponent but no divisor label");
    if (chart.exponents[i] == 0 && labeled)
      add(out, "label_on_zero_exponent", chart.id, {},
          "coordinate " + std::to_string(i + 1) + " is labeled but has exponent 0");
  }
  for (const auto& [i, label] : chart.divisor_labels) {
    auto it = std::find_if(model.components.begin(), model.components.end(),
                           [&](const DivisorComponent& c) { return c.id == label; });
    if (it == model.components.end()) {
      add(out, "unknown_component", chart.id, {}, "label '" + label + "' is not a declared component");
    } else if (i < chart.dim && it->multiplicity != chart.exponents[i]) {
      add(out, "multiplicity_mismatch", chart.id, {},
          "component '" + label + "' has multiplicity " + std::to_string(it->multiplicity) +
              " but chart exponent " + std::to_string(chart.exponents[i]));
    }
  }
  if (model.sign_mode == SignMode::Nonnegative && chart.field == FieldKind::Real) {
    for (int i = 0; i < chart.dim; ++i)
      if (chart.exponents[i] % 2 != 0)
        add(out, "nonnegative_mode", chart.id, {},
            "odd exponent at coordinate " + std::to_string(i + 1) + " in nonnegative mode");
  }
  if (!out.empty() && out.back().kind == "dimension") return;

  // Unit factor: nonvanishing on the sample grid, no sign change (real), and
  // positive in nonnegative mode.
  const double tiny = 1e-12;
  int sign = 0;
  bool reported = false;
  Rng rng(0x5eed);
  for (const Point& p : chart_grid(chart)) {
    if (chart.field == FieldKind::Real) {
      double g = chart.unit_factor.eval(p);
      if (!(std::abs(g) > tiny)) {
        add(out, "unit_factor_vanishes", chart.id, p, "unit factor vanishes");
        reported = true;
        break;
      }
      int s = g > 0 ? 1 : -1;
      if (sign != 0 && s != sign) {
        add(out, "unit_factor_vanishes", chart.id, p, "unit factor changes sign, so it vanishes");
        reported = true;
        break;
      }
      sign = s;
    } else {
      CPoint z(p.size());
      for (std::size_t i = 0; i < p.size(); ++i)
        z[i] = {p[i], rng.uniform(-chart.domain_radius, chart.domain_radius) * (1.0 - 1e-9)};
      if (!(std::abs(chart.unit_factor.eval(z)) > tiny) || !(std::abs(chart.unit_factor.eval(std::span<const double>(p))) > tiny)) {
        add(out, "unit_factor_vanishes", chart.id, p, "unit factor vanishes");
        reported = true;
      }
      if (reported) break;
    }
  }
  if (!reported && model.sign_mode == SignMode::Nonnegative && chart.field == FieldKind::Real && sign < 0)
    add(out, "nonnegative_mode", chart.id, {}, "unit factor is negative in nonnegative mode");
}

void check_transition(const NCModel& model, const Transition& t, std::vector<Diagnostic>& out) {
  const ChartSpec* src = nullptr;
  const ChartSpec* dst = nullptr;
  for (const auto& c : model.charts) {
    if (c.id == t.source) src = &c;
    if (c.id == t.target) dst = &c;
  }
  if (!src || !dst) {
    add(out, "transition_unknown_chart", t.id, {}, "transition references an unknown chart");
    return;
  }
  if (static_cast<int>(t.map.size()) != dst->dim) {
    add(out, "transition_dimension", t.id, {}, "map length differs from target dimension");
    return;
  }
  const Transition* inv = nullptr;
  for (const auto& u : model.transitions)
    if (u.id == t.inverse) inv = &u;
  if (!inv || inv->inverse != t.id || inv->source != t.target || inv->target != t.source) {
    add(out, "transition_asymmetric", t.id, {}, "missing or inconsistent inverse transition");
  }
  for (const auto& [comp, s] : t.sign_data) {
    if ((s != 1 && s != -1) || !src->has_component(comp) || !dst->has_component(comp))
      add(out, "transition_sign", t.id, {}, "bad sign data for component '" + comp + "'");
  }
  if (src->field == FieldKind::Complex) return;

  int samples = 0;
  for (const Point& x : chart_grid(*src)) {
    if (!model.in_overlap(t, x)) continue;
    ++samples;
    Point y = t.apply(x);
    double fx = eval_f(*src, x), fy = eval_f(*dst, y);
    if (std::abs(fx - fy) > 1e-9 * std::max(1.0, std::abs(fx))) {
      add(out, "transition_f_mismatch", t.id, x, "f differs across the transition");
      return;
    }
    if (inv) {
      Point back = inv->apply(y);
      for (int i = 0; i < src->dim; ++i)
        if (std::abs(back[i] - x[i]) > 1e-9 * src->domain_radius) {
          add(out, "transition_inverse", t.id, x, "inverse transition does not undo the map");
          return;
        }
    }
    for (const auto& [comp, s] : t.sign_data) {
      int i = src->coord_of(comp), j = dst->coord_of(comp);
      if (i < 0 || j < 0) continue;
      if (std::abs(x[i]) > src->zero_tol()) {
        int observed = (y[j] / x[i]) > 0 ? 1 : -1;
        if (observed != s) {
          add(out, "transition_sign", t.id, x,
              "sign of '" + comp + "' across the transition is " + std::to_string(observed) +
                  " but declared " + std::to_string(s));
          return;
        }
      }
      Point h = x;
      h[i] = 0.0;
      if (model.in_overlap(t, h)) {
        Point yh = t.apply(h);
        if (std::abs(yh[j]) > 1e-9 * dst->domain_radius) {
          add(out, "transition_hyperplane", t.id, h,
              "hyperplane of '" + comp + "' is not mapped onto the matching hyperplane");
          return;
        }
      }
    }
  }
  if (samples == 0) add(out, "transition_empty_overlap", t.id, {}, "no sample point lies in the overlap");
}

}  // namespace

std::vector<Diagnostic> check_normal_crossings(const NCModel& model) {
  std::vector<Diagnostic> out;
  std::set<std::string> ids;
  for (const auto& c : model.charts) {
    if (!ids.insert(c.id).second) add(out, "duplicate_chart", c.id, {}, "duplicate chart id");
    check_chart(model, c, out);
  }
  for (const auto& t : model.transitions) check_transition(model, t, out);
  return out;
}

void require_valid(const NCModel& model) {
  auto diags = check_normal_crossings(model);
  if (!diags.empty()) {
    std::ostringstream os;
    os << "model '" << model.name << "' fails normal-crossings checks: " << diags.front().kind << " ("
       << diags.front().chart << "): " << diags.front().message;
    if (diags.size() > 1) os << " [+" << diags.size() - 1 << " more]";
    throw ModelError(os.str());
  }
}

std::vector<CocycleLoop> cocycle_loops(const NCModel& model, const std::string& component) {
  model.component(component);
  std::vector<std::string> nodes;
  for (const auto& c : model.charts)
    if (c.has_component(component)) nodes.push_back(c.id);
  if (nodes.empty()) throw ModelError("component '" + component + "' is not covered by any chart");

  // One undirected edge per transition/inverse pair.
  struct Edge {
    std::string id, a, b;
    int sign;
  };
  std::vector<Edge> edges;
  for (const auto& t : model.transitions) {
    auto it = t.sign_data.find(component);
    if (it == t.sign_data.end()) continue;
    if (!t.inverse.empty() && t.inverse < t.id) continue;
    edges.push_back({t.id, t.source, t.target, it->second});
  }

  // Spanning forest with potentials; tree path from the root is kept so that
  // each non-tree edge yields an explicit loop.
  std::map<std::string, int> potential;
  std::map<std::string, std::vector<std::string>> path;  // transitions from root
  std::set<std::string> tree_edges;
  potential[nodes.front()] = 1;
  path[nodes.front()] = {};
  std::deque<std::string> queue{nodes.front()};
  while (!queue.empty()) {
    std::string u = queue.front();
    queue.pop_front();
    for (const auto& e : edges) {
      std::string v;
      if (e.a == u)
        v = e.b;
      else if (e.b == u)
        v = e.a;
      else
        continue;
      if (potential.count(v)) continue;
      potential[v] = potential[u] * e.sign;
      path[v] = path[u];
      path[v].push_back(e.id);
      tree_edges.insert(e.id);
      queue.push_back(v);
    }
  }
  if (potential.size() != nodes.size())
    throw ModelError("transition graph of charts meeting '" + component + "' is not connected");

  std::vector<CocycleLoop> loops;
  for (const auto& e : edges) {
    if (tree_edges.count(e.id)) continue;
    CocycleLoop loop;
    loop.transitions = path[e.a];
    loop.transitions.push_back(e.id);
    const auto& back = path[e.b];
    loop.transitions.insert(loop.transitions.end(), back.rbegin(), back.rend());
    loop.product = potential[e.a] * e.sign * potential[e.b];
    loops.push_back(std::move(loop));
  }
  return loops;
}

bool two_sidedness(const NCModel& model, const std::string& component) {
  auto loops = cocycle_loops(model, component);
  return std::all_of(loops.begin(), loops.end(), [](const CocycleLoop& l) { return l.product == 1; });
}

}  // namespace ncr
