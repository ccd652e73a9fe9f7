#include "ncr/flowretract.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ncr/errors.hpp"
#include "ncr/rng.hpp"

namespace ncr {

namespace {

std::vector<Point> sheet_grid(const ChartSpec& chart, const SignSheet& sheet, int per_axis) {
  std::vector<Point> out;
  for (Point& p : chart_grid(chart, per_axis))
    if (sheet_compatible(chart, sheet, p)) out.push_back(std::move(p));
  return out;
}

int grid_density(const ChartSpec& chart) { return chart.dim <= 2 ? 33 : (chart.dim == 3 ? 17 : 9); }

double min_signed(const SignSheet& sheet, std::span<const double> x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [c, e] : sheet.signs) m = std::min(m, e * x[c]);
  return m;
}

double abs_f(const ChartSpec& chart, std::span<const double> x) {
  return std::abs(eval_monomial(chart, x) * chart.unit_factor.eval(x));
}

kernels::SheetData sheet_data(const SignSheet& sheet) {
  kernels::SheetData d;
  for (const auto& [c, e] : sheet.signs) {
    d.coords.push_back(c);
    d.exponents.push_back(1);
    d.eps.push_back(e);
  }
  return d;
}

}  // namespace

Expr f_prime_expr(const ChartSpec& chart, const SignSheet& sheet) {
  Expr m = Expr::constant(static_cast<double>(sheet_side(chart, sheet)));
  for (int i = 0; i < chart.dim; ++i) m = m * pow(Expr::var(i), chart.exponents[i]);
  return m * chart.unit_factor;
}

ChartNormalization normalize_chart(const ChartSpec& chart, const SignSheet& sheet) {
  ChartNormalization n;
  n.chart = chart;
  n.sheet = sheet;
  n.coords = chart.divisor_coords();
  if (n.coords.empty()) throw DomainError("chart '" + chart.id + "' does not meet X");
  for (int c : n.coords) sheet.at(c);
  std::vector<double> centre(chart.dim, 0.0);
  n.g_sign = chart.unit_factor.eval(centre) > 0 ? 1 : -1;

  const Expr& g = chart.unit_factor;
  if (g.is_constant() && g.eval(centre) == 1.0) {
    n.identity = true;
    n.normalizable = true;
    n.absorb = n.coords.back();
    n.y_absorb = Expr::constant(sheet.at(n.absorb)) * Expr::var(n.absorb);
    return n;
  }
  const std::vector<Point> grid = sheet_grid(chart, sheet, grid_density(chart));
  for (auto it = n.coords.rbegin(); it != n.coords.rend(); ++it) {
    const int l = *it;
    const double e = sheet.at(l);
    Expr y = Expr::constant(e) * Expr::var(l) *
             pow_real(Expr::constant(static_cast<double>(n.g_sign)) * g, 1.0 / chart.exponents[l]);
    Expr dy = y.diff(l);
    bool monotone = std::all_of(grid.begin(), grid.end(), [&](const Point& x) {
      double d = e * dy.eval(x);
      return std::isfinite(d) && d > 0.0;
    });
    if (monotone) {
      n.normalizable = true;
      n.absorb = l;
      n.y_absorb = y;
      return n;
    }
  }
  n.fallback_reason = "no divisor coordinate absorbs the unit factor monotonically";
  return n;
}

Point ChartNormalization::to_normalized(std::span<const double> x) const {
  Point y(x.begin(), x.end());
  for (int c : coords) y[c] = sheet.at(c) * x[c];
  if (!identity) y[absorb] = y_absorb.eval(x);
  return y;
}

Point ChartNormalization::from_normalized(std::span<const double> y) const {
  Point x(y.begin(), y.end());
  for (int c : coords) x[c] = sheet.at(c) * y[c];
  const double r = chart.domain_radius;
  for (int i = 0; i < chart.dim; ++i)
    if (i != absorb && !(std::abs(x[i]) < r)) throw RangeError("point leaves the domain of chart '" + chart.id + "'");
  if (identity) {
    if (!(std::abs(x[absorb]) < r)) throw RangeError("point leaves the domain of chart '" + chart.id + "'");
    return x;
  }
  const double target = y[absorb];
  const double e = sheet.at(absorb);
  if (target <= 0.0) {
    if (target < -chart.zero_tol()) throw DomainError("normalized coordinate is negative on the sheet");
    x[absorb] = 0.0;
    return x;
  }
  auto h = [&](double u) {
    x[absorb] = e * u;
    return y_absorb.eval(x);
  };
  double lo = 0.0, hi = r * (1.0 - 1e-12);
  if (h(hi) < target) throw RangeError("point leaves the domain of chart '" + chart.id + "'");
  for (int it = 0; it < 200 && hi - lo > 1e-16 * r; ++it) {
    double mid = 0.5 * (lo + hi);
    (h(mid) < target ? lo : hi) = mid;
  }
  x[absorb] = e * 0.5 * (lo + hi);
  return x;
}

RetractStep local_retract(const SignSheet& sheet, std::span<const double> x) {
  RetractStep s;
  s.x.assign(x.begin(), x.end());
  if (sheet.signs.empty()) return s;
  auto it = sheet.signs.begin();
  double d = it->second * x[it->first];
  for (++it; it != sheet.signs.end(); ++it) d = std::min(d, it->second * x[it->first]);
  s.delta = d;
  for (const auto& [c, e] : sheet.signs) s.x[c] = x[c] - d * e;
  return s;
}

void local_retract_batch(const SignSheet& sheet, const kernels::PointBlock& in, kernels::PointBlock& out,
                         std::span<double> delta) {
  if (sheet.signs.empty()) {
    out = in;
    std::fill(delta.begin(), delta.end(), 0.0);
    return;
  }
  kernels::min_retract(in, sheet_data(sheet), out, delta);
}

Point VField::eval(std::span<const double> x) const {
  Point v(components.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = components[i].eval(x);
  return v;
}

namespace {

Expr case3_component(const ChartSpec& chart, const SignSheet& sheet, int i0) {
  const Expr& g = chart.unit_factor;
  Expr h = Expr::constant(chart.exponents[i0]) + Expr::var(i0) * g.diff(i0) / g;
  return Expr::constant(sheet.at(i0)) / h;
}

void check_denominators(const VField& v, const std::vector<Point>& samples, const std::string& what) {
  std::vector<Expr> dens;
  for (const auto& c : v.components)
    for (auto& d : c.denominators()) dens.push_back(std::move(d));
  for (const Point& x : samples) {
    for (const auto& d : dens) {
      double val = d.eval(x);
      if (!(std::abs(val) > 1e-12)) throw ConstructionError(what + ": denominator vanishes", x);
    }
    for (const auto& c : v.components)
      if (!std::isfinite(c.eval(x))) throw ConstructionError(what + ": field is not finite", x);
  }
}

}  // namespace

VField build_vfield(const ChartSpec& chart, const SignSheet& sheet, int i0, int case_no) {
  if (i0 < 0 || i0 >= chart.dim || chart.exponents[i0] == 0)
    throw DomainError("coordinate " + std::to_string(i0 + 1) + " is not a divisor coordinate of '" + chart.id + "'");
  VField v;
  v.chart = chart.id;
  v.i0 = i0;
  v.components.assign(chart.dim, Expr::constant(0.0));
  const std::vector<int> coords = chart.divisor_coords();
  const Expr& g = chart.unit_factor;
  const Expr f_i0 = Expr::constant(sheet.at(i0)) * Expr::var(i0);
  const double tol = 1e-3 * chart.domain_radius;
  std::vector<Point> grid = sheet_grid(chart, sheet, 17);
  std::vector<Point> region;

  switch (case_no) {
    case 1: {
      v.kind = "case1";
      Expr fp = f_prime_expr(chart, sheet);
      std::vector<Expr> grad;
      Expr norm2 = Expr::constant(0.0);
      for (int j = 0; j < chart.dim; ++j) {
        grad.push_back(fp.diff(j));
        norm2 = norm2 + grad.back() * grad.back();
      }
      for (int j = 0; j < chart.dim; ++j) v.components[j] = fp * grad[j] / (f_i0 * norm2);
      for (Point& x : grid)
        if (min_signed(sheet, x) > tol) region.push_back(std::move(x));
      break;
    }
    case 2: {
      v.kind = "case2";
      Expr s = Expr::constant(0.0);
      for (int j : coords) s = s + Expr::constant(chart.exponents[j]) + Expr::var(j) * g.diff(j) / g;
      for (int j : coords) v.components[j] = Expr::var(j) / (f_i0 * s);
      for (Point& x : grid)
        if (sheet.at(i0) * x[i0] > tol) region.push_back(std::move(x));
      break;
    }
    case 3: {
      v.kind = "case3";
      v.components[i0] = case3_component(chart, sheet, i0);
      for (Point& x : grid)
        if (std::abs(x[i0]) <= 0.25 * chart.domain_radius) region.push_back(std::move(x));
      break;
    }
    default:
      throw DomainError("vector field case must be 1, 2 or 3");
  }
  check_denominators(v, region, "case " + std::to_string(case_no) + " field on chart '" + chart.id + "'");
  return v;
}

VField assemble_w(const ChartNormalization& norm, FieldMode mode) {
  const ChartSpec& chart = norm.chart;
  if (mode == FieldMode::Auto) mode = norm.normalizable ? FieldMode::Normalized : FieldMode::Numeric;
  if (mode == FieldMode::Normalized && !norm.normalizable)
    throw DomainError("chart '" + chart.id + "' does not normalize: " + norm.fallback_reason);
  VField w;
  w.chart = chart.id;
  w.components.assign(chart.dim, Expr::constant(0.0));
  if (mode == FieldMode::Normalized) {
    w.kind = "w-normalized";
    for (int c : norm.coords) w.components[c] = Expr::constant(-norm.sheet.at(c));
    if (!norm.identity) {
      const int l = norm.absorb;
      Expr rhs = Expr::constant(-1.0);
      for (int c : norm.coords)
        if (c != l) rhs = rhs - norm.y_absorb.diff(c) * Expr::constant(-norm.sheet.at(c));
      w.components[l] = rhs / norm.y_absorb.diff(l);
    }
  } else {
    w.kind = "w-numeric";
    for (int c : norm.coords)
      w.components[c] = Expr::constant(-chart.exponents[c]) * case3_component(chart, norm.sheet, c);
  }
  for (const Point& x : sheet_grid(chart, norm.sheet, 17)) {
    Point v = w.eval(x);
    double n2 = 0.0;
    for (double c : v) n2 += c * c;
    if (!(n2 > 1e-24) || !std::isfinite(n2)) throw ConstructionError("assembled field vanishes on chart '" + chart.id + "'", x);
  }
  return w;
}

namespace {

double bump(std::span<const double> y, double r) {
  double w = 1.0;
  for (double v : y) {
    double s = v / r;
    if (std::abs(s) >= 1.0) return 0.0;
    w *= std::exp(1.0 - 1.0 / (1.0 - s * s));
  }
  return w;
}

}  // namespace

BlendedField::BlendedField(const NCModel& model, const std::string& chart, const SignSheet& sheet)
    : model_(&model), chart_(model.chart(chart)), sheet_(sheet) {
  own_ = assemble_w(normalize_chart(chart_, sheet_), FieldMode::Numeric);
  fp_ = f_prime_expr(chart_, sheet_);
  for (int j = 0; j < chart_.dim; ++j) grad_.push_back(fp_.diff(j));
  for (const auto& t : model.transitions) {
    if (t.source != chart) continue;
    const ChartSpec& dst = model.chart(t.target);
    Link link{&t, {}, {}, dst.domain_radius};
    link.jac.assign(dst.dim, std::vector<Expr>(chart_.dim));
    for (int r = 0; r < dst.dim; ++r)
      for (int c = 0; c < chart_.dim; ++c) link.jac[r][c] = t.map[r].diff(c);
    links_.push_back(std::move(link));
  }
}

Point BlendedField::operator()(std::span<const double> x) const {
  const int n = chart_.dim;
  double wsum = bump(x, chart_.domain_radius);
  Point own = own_.eval(x);
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(own.data(), n) * wsum;
  for (const auto& link : links_) {
    if (!model_->in_overlap(*link.t, x)) continue;
    CutPoint cp = transport(*model_, *link.t, CutPoint{chart_.id, Point(x.begin(), x.end()), sheet_});
    double phi = bump(cp.x, link.radius);
    if (phi <= 0.0) continue;
    const ChartSpec& dst = model_->chart(link.t->target);
    VField wt = assemble_w(normalize_chart(dst, cp.sheet), FieldMode::Numeric);
    Point wy = wt.eval(cp.x);
    Eigen::MatrixXd J(dst.dim, n);
    for (int r = 0; r < dst.dim; ++r)
      for (int c = 0; c < n; ++c) J(r, c) = link.jac[r][c].eval(x);
    Eigen::VectorXd u = J.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(wy.data(), dst.dim));
    v += phi * u;
    wsum += phi;
  }
  if (wsum <= 0.0) throw FlowError("no chart weight at the current point");
  v /= wsum;
  // Restore the chart's own descent rate.
  if (min_signed(sheet_, x) > 0.0) {
    double fp = fp_.eval(x);
    double target = 0.0;
    for (const auto& [c, e] : sheet_.signs) target -= chart_.exponents[c] / (e * x[c]);
    target *= fp;
    double actual = 0.0;
    for (int j = 0; j < n; ++j) actual += grad_[j].eval(x) * v(j);
    if (actual < 0.0) v *= target / actual;
  }
  return Point(v.data(), v.data() + n);
}

FlowTrace flow(const ChartSpec& chart, const CutPoint& p, const FieldFn& field, const FlowOptions& opts) {
  if (!sheet_compatible(chart, p.sheet, p.x)) throw DomainError("cut point is not on its sheet");
  if (!chart.in_domain(p.x)) throw DomainError("point outside the domain of chart '" + chart.id + "'");
  FlowTrace trace;
  trace.terminal = p;
  if (min_signed(p.sheet, p.x) <= chart.zero_tol()) {
    for (const auto& [c, e] : p.sheet.signs)
      if (e * p.x[c] <= chart.zero_tol()) trace.terminal.x[c] = 0.0;
    return trace;
  }
  Rhs rhs = [&](const State& x) {
    if (!chart.in_domain(x)) throw FlowError("trajectory left the domain of chart '" + chart.id + "'");
    Point v = field(x);
    if (opts.tangency) {
      const auto& s = *opts.tangency;
      double r2 = 0.0, dot = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - s.centre[i]) * (x[i] - s.centre[i]);
      double r = std::sqrt(r2);
      if (r > 0 && std::abs(r - s.radius) < s.collar) {
        for (std::size_t i = 0; i < x.size(); ++i) dot += v[i] * (x[i] - s.centre[i]) / r;
        if (dot > 0)
          for (std::size_t i = 0; i < x.size(); ++i) v[i] -= dot * (x[i] - s.centre[i]) / r;
      }
    }
    return v;
  };
  auto event = [&](const State& x) { return min_signed(p.sheet, x); };
  OdeResult res = integrate(rhs, p.x, opts.ode, event);
  if (!res.event_hit) throw FlowError("flow did not reach X' within the time limit");
  trace.steps = res.steps;
  trace.hit_time = res.t.back();
  Point term = res.y.back();
  const double snap = 1e-8 * chart.domain_radius;
  for (const auto& [c, e] : p.sheet.signs)
    if (e * term[c] <= snap) term[c] = 0.0;
  trace.terminal.x = term;
  if (opts.record) {
    for (std::size_t i = 0; i + 1 < res.t.size(); ++i) trace.points.push_back({res.t[i], res.y[i], abs_f(chart, res.y[i])});
    trace.points.push_back({trace.hit_time, term, abs_f(chart, term)});
  }
  return trace;
}

FlowTrace flow(const ChartSpec& chart, const CutPoint& p, const VField& w, const FlowOptions& opts) {
  return flow(chart, p, [&w](std::span<const double> x) { return w.eval(x); }, opts);
}

DecreaseReport check_decrease(const VField& w, const ChartNormalization& norm, std::span<const Point> samples) {
  const ChartSpec& chart = norm.chart;
  Expr fp = f_prime_expr(chart, norm.sheet);
  std::vector<Expr> grad;
  for (int j = 0; j < chart.dim; ++j) grad.push_back(fp.diff(j));
  const bool normalized = w.kind == "w-normalized";
  DecreaseReport rep;
  for (const Point& x : samples) {
    DecreaseRow row;
    row.x = x;
    if (min_signed(norm.sheet, x) <= chart.zero_tol()) {
      row.skipped = true;
      rep.rows.push_back(std::move(row));
      continue;
    }
    Point v = w.eval(x);
    for (int j = 0; j < chart.dim; ++j) row.derivative += grad[j].eval(x) * v[j];
    Point y = normalized ? norm.to_normalized(x) : x;
    double f = fp.eval(x), s = 0.0;
    for (int c : norm.coords) s += chart.exponents[c] / (normalized ? y[c] : norm.sheet.at(c) * x[c]);
    row.expected = s * f;
    row.negative = row.derivative < 0.0;
    rep.all_negative = rep.all_negative && row.negative;
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(std::abs(row.derivative) - row.expected) / row.expected);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

ChartRetraction::ChartRetraction(const NCModel& model, const std::string& chart, const SignSheet& sheet,
                                 FieldMode mode)
    : model_(&model), level_bound_(model.level_bound) {
  const ChartSpec& c = model.chart(chart);
  if (c.field != FieldKind::Real) throw DomainError("real retraction needs a real chart");
  norm_ = normalize_chart(c, sheet);
  if (mode == FieldMode::Auto) mode = norm_.normalizable ? FieldMode::Normalized : FieldMode::Numeric;
  closed_ = mode == FieldMode::Normalized;
  w_ = assemble_w(norm_, mode);
}

RetractStep ChartRetraction::retract(std::span<const double> x) const {
  const ChartSpec& c = norm_.chart;
  if (!c.in_domain(x)) throw DomainError("point outside the domain of chart '" + c.id + "'");
  if (!sheet_compatible(c, norm_.sheet, x)) throw DomainError("point is not on the sheet " + norm_.sheet.label());
  // Already on X': nothing moves.
  for (const auto& [i, e] : norm_.sheet.signs)
    if (e * x[i] <= 0.0) return {Point(x.begin(), x.end()), 0.0};
  if (closed_) {
    SignSheet plus = norm_.sheet;
    for (auto& [c, e] : plus.signs) e = 1;
    RetractStep s = local_retract(plus, norm_.to_normalized(x));
    s.x = norm_.from_normalized(s.x);
    return s;
  }
  FlowOptions opts;
  opts.record = false;
  FlowTrace t = flow(c, CutPoint{c.id, Point(x.begin(), x.end()), norm_.sheet}, w_, opts);
  return {t.terminal.x, t.hit_time};
}

FlowTrace ChartRetraction::flow_to_boundary(std::span<const double> x, const FlowOptions& opts) const {
  const ChartSpec& c = norm_.chart;
  return flow(c, CutPoint{c.id, Point(x.begin(), x.end()), norm_.sheet}, w_, opts);
}

Trivialization ChartRetraction::trivialize(std::span<const double> x) const {
  const ChartSpec& c = norm_.chart;
  RetractStep s = retract(x);
  Trivialization t;
  t.base = CutPoint{c.id, s.x, norm_.sheet};
  t.level = abs_f(c, x);
  t.side = sheet_side(c, norm_.sheet);
  if (!(t.level < level_bound_)) throw RangeError("point lies outside the trivialization collar");
  return t;
}

CutPoint ChartRetraction::untrivialize(const Trivialization& t) const {
  const ChartSpec& c = norm_.chart;
  if (!(t.level >= 0.0 && t.level < level_bound_))
    throw RangeError("level " + std::to_string(t.level) + " outside [0, " + std::to_string(level_bound_) + ")");
  if (t.base.chart != c.id || !(t.base.sheet == norm_.sheet)) throw DomainError("base is on a different sheet");
  if (!c.in_domain(t.base.x)) throw DomainError("base outside the domain of chart '" + c.id + "'");
  if (!sheet_compatible(c, norm_.sheet, t.base.x) || min_signed(norm_.sheet, t.base.x) > c.zero_tol())
    throw DomainError("base is not on X'");
  if (t.level == 0.0) return t.base;

  if (closed_) {
    Point yb = norm_.to_normalized(t.base.x);
    for (int i : norm_.coords) yb[i] = std::max(0.0, yb[i]);
    auto P = [&](double d) {
      double p = 1.0;
      for (int i : norm_.coords) p *= std::pow(yb[i] + d, c.exponents[i]);
      return p;
    };
    double lo = 0.0, hi = c.domain_radius;
    for (int it = 0; P(hi) < t.level; ++it) {
      if (it > 60) throw RangeError("level cannot be reached on this sheet");
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 300 && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (P(mid) < t.level ? lo : hi) = mid;
    }
    const double d = 0.5 * (lo + hi);
    for (int i : norm_.coords) yb[i] += d;
    Point x = norm_.from_normalized(yb);
    if (!c.in_domain(x)) throw RangeError("untrivialized point leaves the chart domain");
    return CutPoint{c.id, x, norm_.sheet};
  }

  // Numeric: integrate -w from the base until f' reaches the level.
  Rhs rhs = [&](const State& x) {
    if (!c.in_domain(x)) throw RangeError("untrivialized point leaves the chart domain");
    Point v = w_.eval(x);
    for (double& e : v) e = -e;
    return v;
  };
  auto event = [&](const State& x) { return t.level - abs_f(c, x); };
  OdeResult res = integrate(rhs, t.base.x, OdeOptions{}, event);
  if (!res.event_hit) throw FlowError("level not reached");
  return CutPoint{c.id, res.y.back(), norm_.sheet};
}

Point push_down(const NCModel& model, const std::string& chart, std::span<const double> x) {
  if (!model.modification) throw ConfigError("model '" + model.name + "' has no modification data");
  auto it = model.modification->sigma.find(chart);
  if (it == model.modification->sigma.end()) throw ConfigError("no sigma for chart '" + chart + "'");
  Point q(it->second.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = it->second[i].eval(x);
  return q;
}

std::optional<Point> lift_to_chart(const NCModel& model, const std::string& chart, std::span<const double> q) {
  if (!model.modification) throw ConfigError("model '" + model.name + "' has no modification data");
  auto it = model.modification->sigma.find(chart);
  if (it == model.modification->sigma.end()) return std::nullopt;
  const ChartSpec& c = model.chart(chart);
  const auto& sigma = it->second;
  const int n = c.dim, m = static_cast<int>(sigma.size());
  std::vector<std::vector<Expr>> jac(m, std::vector<Expr>(n));
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < n; ++k) jac[r][k] = sigma[r].diff(k);
  double qn = 1.0;
  for (double v : q) qn = std::max(qn, std::abs(v));

  // Geometric seeds reach preimages of targets close to the centre.
  std::vector<double> axis{0.0};
  const int decades = n <= 2 ? 7 : 3;
  for (int j = 0; j < decades; ++j) {
    const double v = c.domain_radius * 0.9 * std::pow(10.0, -0.5 * j);
    axis.push_back(v);
    axis.push_back(-v);
  }
  const int per_axis = static_cast<int>(axis.size());
  auto residual = [&](std::span<const double> xv) {
    double r = 0.0;
    for (int k = 0; k < m; ++k) r = std::max(r, std::abs(sigma[k].eval(xv) - q[k]));
    return r;
  };
  // Seeds ordered by their starting residual.
  std::vector<std::pair<double, Point>> seeds;
  std::vector<int> idx(n, 0);
  for (;;) {
    Point x(n);
    for (int i = 0; i < n; ++i) x[i] = axis[idx[i]];
    const double r = residual(x);
    if (std::isfinite(r)) seeds.emplace_back(r, std::move(x));
    int d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  std::stable_sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [r0_seed, seed] : seeds) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(seed.data(), n);
    for (int iter = 0; iter < 60; ++iter) {
      std::vector<double> xv(x.data(), x.data() + n);
      Eigen::VectorXd res(m);
      for (int r = 0; r < m; ++r) res(r) = sigma[r].eval(xv) - q[r];
      if (res.cwiseAbs().maxCoeff() <= 1e-14 * qn) {
        if (c.in_domain(xv)) return xv;
        break;
      }
      Eigen::MatrixXd J(m, n);
      for (int r = 0; r < m; ++r)
        for (int k = 0; k < n; ++k) J(r, k) = jac[r][k].eval(xv);
      Eigen::VectorXd dx = J.colPivHouseholderQr().solve(res);
      if (!dx.allFinite()) break;
      // Backtrack until the residual drops.
      const double r0 = res.norm();
      double t = 1.0;
      Eigen::VectorXd trial = x - dx;
      for (int b = 0; b < 30; ++b) {
        std::vector<double> tv(trial.data(), trial.data() + n);
        Eigen::VectorXd rt(m);
        for (int r = 0; r < m; ++r) rt(r) = sigma[r].eval(tv) - q[r];
        if (rt.allFinite() && rt.norm() < r0) break;
        t *= 0.5;
        trial = x - t * dx;
      }
      if (t < 1e-6) break;  // stalled
      x = trial;
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 10 * c.domain_radius) break;
    }
  }
  return std::nullopt;
}

AmbientRetraction retract(const NCModel& model, std::span<const double> q, FieldMode mode) {
  if (!model.modification) throw ConfigError("model '" + model.name + "' has no modification data");
  AmbientRetraction out;
  out.target.assign(q.begin(), q.end());
  if (std::abs(model.modification->ambient_f.eval(q)) <= 1e-300) {
    out.on_central_fibre = true;
    return out;
  }
  double best = -1.0;
  for (const auto& chart : model.charts) {
    auto x = lift_to_chart(model, chart.id, q);
    if (!x) continue;
    double margin = 1.0;
    for (double v : *x) margin = std::min(margin, 1.0 - std::abs(v) / chart.domain_radius);
    if (margin > best) {
      best = margin;
      out.chart = chart.id;
      out.lifted.x = *x;
    }
  }
  if (best < 0) throw DomainError("point has no lift into any chart");
  const ChartSpec& c = model.chart(out.chart);
  out.lifted.chart = c.id;
  for (int i : c.divisor_coords()) out.lifted.sheet.signs[i] = out.lifted.x[i] < 0 ? -1 : 1;
  ChartRetraction cr(model, c.id, out.lifted.sheet, mode);
  RetractStep s = cr.retract(out.lifted.x);
  out.retracted = CutPoint{c.id, s.x, out.lifted.sheet};
  out.delta = s.delta;
  out.target = push_down(model, c.id, s.x);
  return out;
}

std::vector<CutPoint> specialization_fibre_real(const NCModel& model, const std::string& chart,
                                                std::span<const double> p, double c) {
  const ChartSpec& ch = model.chart(chart);
  if (c == 0.0 || !(std::abs(c) < model.level_bound))
    throw RangeError("level must satisfy 0 < |c| < " + std::to_string(model.level_bound));
  Profile prof = multiplicity_profile(ch, p);
  if (prof.k == 0) throw DomainError("point is not on X");
  std::vector<CutPoint> out;
  for (const CutPoint& cp : fibre(ch, p)) {
    int side = sheet_side(ch, cp.sheet);
    if (side * c <= 0) continue;
    ChartRetraction cr(model, chart, cp.sheet);
    Point base = cp.x;
    for (int i : prof.coords) base[i] = 0.0;
    out.push_back(cr.untrivialize({CutPoint{chart, base, cp.sheet}, std::abs(c), side}));
  }
  return out;
}

MilnorRealCount milnor_components_real(const NCModel& model, const std::string& chart, std::span<const double> p,
                                       double ball, double c, int samples, std::uint64_t seed) {
  const ChartSpec& ch = model.chart(chart);
  MilnorRealCount out;
  for (const CutPoint& q : specialization_fibre_real(model, chart, p, c)) {
    double d2 = 0.0;
    for (int i = 0; i < ch.dim; ++i) d2 += (q.x[i] - p[i]) * (q.x[i] - p[i]);
    if (std::sqrt(d2) < ball) ++out.expected;
  }

  Expr f = ch.unit_factor;
  for (int i = 0; i < ch.dim; ++i) f = f * pow(Expr::var(i), ch.exponents[i]);
  std::vector<Expr> grad;
  for (int i = 0; i < ch.dim; ++i) grad.push_back(f.diff(i));

  std::map<std::string, ChartRetraction> retractions;
  FlowOptions opts;
  opts.record = false;
  opts.tangency = SphereConstraint{Point(p.begin(), p.end()), ball, 0.1 * ball};
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    Point x(ch.dim);
    double r2;
    do {
      r2 = 0.0;
      for (int i = 0; i < ch.dim; ++i) {
        double u = rng.uniform(-1.0, 1.0);
        x[i] = p[i] + ball * u;
        r2 += u * u;
      }
    } while (r2 > 1.0);
    bool ok = false;
    for (int it = 0; it < 50 && ch.in_domain(x); ++it) {
      double v = f.eval(x) - c;
      if (std::abs(v) <= 1e-13 * std::max(1.0, std::abs(c))) {
        ok = true;
        break;
      }
      double g2 = 0.0;
      Point gr(ch.dim);
      for (int i = 0; i < ch.dim; ++i) {
        gr[i] = grad[i].eval(x);
        g2 += gr[i] * gr[i];
      }
      if (!(g2 > 0)) break;
      for (int i = 0; i < ch.dim; ++i) x[i] -= v * gr[i] / g2;
    }
    if (!ok || !ch.in_domain(x)) continue;
    double d2 = 0.0;
    for (int i = 0; i < ch.dim; ++i) d2 += (x[i] - p[i]) * (x[i] - p[i]);
    if (std::sqrt(d2) >= ball) continue;
    SignSheet sheet;
    for (int i : ch.divisor_coords()) sheet.signs[i] = x[i] < 0 ? -1 : 1;
    auto it = retractions.find(sheet.label());
    if (it == retractions.end()) it = retractions.emplace(sheet.label(), ChartRetraction(model, chart, sheet)).first;
    FlowTrace t;
    try {
      t = it->second.flow_to_boundary(x, opts);
    } catch (const FlowError&) {
      continue;
    }
    ++out.accepted_samples;
    ++out.clusters[t.terminal.sheet.label()];
  }
  constexpr int min_cluster = 5;
  int smallest = samples;
  for (const auto& [label, n] : out.clusters) {
    if (n >= min_cluster) ++out.components;
    smallest = std::min(smallest, n);
  }
  out.conclusive = out.accepted_samples >= 50 && smallest >= min_cluster;
  return out;
}

}  // namespace ncr
