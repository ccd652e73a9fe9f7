#include "ncr/complexretract.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "ncr/errors.hpp"
#include "ncr/rng.hpp"
#include "ncr/strat.hpp"

namespace ncr {

double wrap_angle(double a) {
  if (a >= 0.0 && a < kTwoPi) return a;
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

double angle_distance(double a, double b) {
  double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

LiftedAngle LiftedAngle::from_value(double v) {
  double t = std::floor(v / kTwoPi);
  LiftedAngle out{static_cast<std::int64_t>(t), v - kTwoPi * t};
  if (out.angle >= kTwoPi || out.angle < 0) {
    out.turns += static_cast<std::int64_t>(std::floor(out.angle / kTwoPi));
    out.angle = wrap_angle(out.angle);
  }
  return out;
}

namespace {

bool unit_is_one(const ChartSpec& chart) {
  std::vector<double> c(chart.dim, 0.0);
  return chart.unit_factor.is_constant() && chart.unit_factor.eval(c) == 1.0;
}

}  // namespace

PolarPoint polar_blowup(const ChartSpec& chart, std::span<const cplx> z) {
  if (static_cast<int>(z.size()) != chart.dim) throw DomainError("point has the wrong dimension");
  PolarPoint p;
  for (int i = 0; i < chart.dim; ++i) {
    if (chart.exponents[i] > 0) {
      p.coords.push_back(i);
      p.rho.push_back(std::abs(z[i]));
      p.alpha.push_back(wrap_angle(std::arg(z[i])));
    } else {
      p.other_coords.push_back(i);
      p.other.push_back(z[i]);
    }
  }
  return p;
}

CPoint polar_down(const ChartSpec& chart, const PolarPoint& p) {
  CPoint z(chart.dim);
  for (std::size_t j = 0; j < p.coords.size(); ++j) z[p.coords[j]] = std::polar(p.rho[j], p.alpha[j]);
  for (std::size_t j = 0; j < p.other_coords.size(); ++j) z[p.other_coords[j]] = p.other[j];
  return z;
}

BandPoint f_prime(const PolarPoint& p, std::span<const int> exponents) {
  if (exponents.size() != p.coords.size()) throw DomainError("exponents do not match the polar point");
  double rho = 1.0, a = 0.0;
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    rho *= std::pow(p.rho[j], exponents[j]);
    a += exponents[j] * p.alpha[j];
  }
  return {rho, wrap_angle(a)};
}

cplx continued_log_unit(const ChartSpec& chart, std::span<const cplx> z) {
  const Expr& g = chart.unit_factor;
  CPoint zs(chart.dim, 0.0);
  cplx prev = g.eval(std::span<const cplx>(zs));
  cplx l = std::log(prev);
  if (g.is_constant()) return l;
  constexpr int steps = 32;
  for (int s = 1; s <= steps; ++s) {
    for (int i = 0; i < chart.dim; ++i) zs[i] = z[i] * (static_cast<double>(s) / steps);
    cplx gs = g.eval(std::span<const cplx>(zs));
    if (!(std::abs(gs) > 1e-300)) throw DomainError("unit factor vanishes on the segment to the point");
    l += std::log(gs / prev);
    prev = gs;
  }
  return l;
}

BandPoint f_prime(const ChartSpec& chart, const PolarPoint& p) {
  std::vector<int> ex;
  for (int c : p.coords) ex.push_back(chart.exponents[c]);
  BandPoint b = f_prime(p, ex);
  if (unit_is_one(chart)) return b;
  CPoint z = polar_down(chart, p);
  cplx l = continued_log_unit(chart, z);
  double a = 0.0;
  for (std::size_t j = 0; j < p.coords.size(); ++j) a += ex[j] * p.alpha[j];
  return {b.rho * std::exp(l.real()), wrap_angle(a + l.imag())};
}

ComplexRetraction::ComplexRetraction(const ChartSpec& chart, FieldMode mode) : chart_(chart) {
  coords_ = chart.divisor_coords();
  if (coords_.empty()) throw DomainError("chart '" + chart.id + "' does not meet X");
  identity_ = unit_is_one(chart);
  closed_ = mode != FieldMode::Numeric;
  absorb_ = coords_.back();
  for (int m = 0; m < chart.dim; ++m) dg_.push_back(chart.unit_factor.diff(m));
  if (identity_) return;
  // Absorbing coordinate: d z'_l / d z_l must stay away from zero.
  const int per_axis = chart.dim <= 2 ? 9 : 5;
  std::vector<double> axis(per_axis);
  for (int j = 0; j < per_axis; ++j) axis[j] = chart.domain_radius * 0.98 * (2.0 * j / (per_axis - 1) - 1.0);
  for (auto it = coords_.rbegin(); it != coords_.rend(); ++it) {
    const int l = *it;
    bool ok = true;
    std::vector<int> idx(2 * chart.dim, 0);
    for (;;) {
      CPoint z(chart.dim);
      for (int i = 0; i < chart.dim; ++i) z[i] = {axis[idx[2 * i]], axis[idx[2 * i + 1]]};
      cplx g = chart.unit_factor.eval(std::span<const cplx>(z));
      cplx d = 1.0 + z[l] * dg_[l].eval(std::span<const cplx>(z)) / (static_cast<double>(chart.exponents[l]) * g);
      if (!(std::abs(d) > 1e-6)) {
        ok = false;
        break;
      }
      int k = 0;
      while (k < 2 * chart.dim && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == 2 * chart.dim) break;
    }
    if (ok) {
      absorb_ = l;
      return;
    }
  }
  throw DomainError("chart '" + chart.id + "' does not normalize over the complex numbers");
}

CPoint ComplexRetraction::to_normalized(std::span<const cplx> z) const {
  CPoint zn(z.begin(), z.end());
  if (!identity_) zn[absorb_] = z[absorb_] * std::exp(continued_log_unit(chart_, z) / double(chart_.exponents[absorb_]));
  return zn;
}

CPoint ComplexRetraction::from_normalized(std::span<const cplx> zn, std::span<const cplx> guess) const {
  CPoint z(zn.begin(), zn.end());
  auto leave = [&] { return RangeError("point leaves the domain of chart '" + chart_.id + "'"); };
  if (identity_ || zn[absorb_] == cplx(0.0)) {
    if (!chart_.in_domain(z)) throw leave();
    return z;
  }
  const double a = chart_.exponents[absorb_];
  const cplx target = zn[absorb_];
  cplx w = guess[absorb_];
  if (w == cplx(0.0)) w = target;
  bool converged = false;
  for (int it = 0; it < 80; ++it) {
    z[absorb_] = w;
    if (!chart_.in_domain(z)) break;
    cplx root = std::exp(continued_log_unit(chart_, z) / a);
    cplx F = w * root - target;
    if (std::abs(F) <= 4e-16 * std::abs(target)) {
      converged = true;
      break;
    }
    cplx g = chart_.unit_factor.eval(std::span<const cplx>(z));
    cplx dF = root * (1.0 + w * dg_[absorb_].eval(std::span<const cplx>(z)) / (a * g));
    cplx step = F / dF;
    w -= step;
    if (std::abs(step) <= 1e-17 * std::abs(w)) {
      converged = true;
      break;
    }
  }
  if (!converged || !chart_.in_domain(z)) throw leave();
  return z;
}

void ComplexRetraction::normalized_polar(const PolarPoint& p, std::vector<double>& rho,
                                         std::vector<double>& alpha) const {
  rho = p.rho;
  alpha = p.alpha;
  if (identity_) return;
  CPoint z = polar_down(chart_, p);
  cplx l = continued_log_unit(chart_, z) / double(chart_.exponents[absorb_]);
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    if (p.coords[j] != absorb_) continue;
    rho[j] *= std::exp(l.real());
    alpha[j] += l.imag();
  }
}

PolarPoint ComplexRetraction::from_normalized_polar(const PolarPoint& p, const std::vector<double>& rho,
                                                    const std::vector<double>& alpha) const {
  PolarPoint out = p;
  if (identity_) {
    out.rho = rho;
    for (std::size_t j = 0; j < rho.size(); ++j) out.alpha[j] = wrap_angle(alpha[j]);
    if (!chart_.in_domain(polar_down(chart_, out))) throw RangeError("point leaves the domain of chart '" + chart_.id + "'");
    return out;
  }
  CPoint guess = polar_down(chart_, p);
  CPoint zn = guess;
  for (std::size_t j = 0; j < p.coords.size(); ++j) zn[p.coords[j]] = std::polar(rho[j], alpha[j]);
  CPoint z = from_normalized(zn, guess);
  cplx l = continued_log_unit(chart_, z) / double(chart_.exponents[absorb_]);
  for (std::size_t j = 0; j < p.coords.size(); ++j) {
    if (p.coords[j] == absorb_) {
      out.rho[j] = rho[j] == 0.0 ? 0.0 : std::abs(z[absorb_]);
      out.alpha[j] = wrap_angle(alpha[j] - l.imag());
    } else {
      out.rho[j] = rho[j];
      out.alpha[j] = wrap_angle(alpha[j]);
    }
  }
  return out;
}

PolarPoint ComplexRetraction::retract(const PolarPoint& p) const {
  if (p.coords != coords_) throw DomainError("polar point does not belong to chart '" + chart_.id + "'");
  if (!chart_.in_domain(polar_down(chart_, p))) throw DomainError("point outside the domain of chart '" + chart_.id + "'");
  return closed_ ? retract_closed(p) : retract_numeric(p);
}

PolarPoint ComplexRetraction::retract_closed(const PolarPoint& p) const {
  std::vector<double> rho, alpha;
  normalized_polar(p, rho, alpha);
  double d = *std::min_element(rho.begin(), rho.end());
  for (double& r : rho) r -= d;
  return from_normalized_polar(p, rho, alpha);
}

PolarPoint ComplexRetraction::retract_numeric(const PolarPoint& p) const {
  std::vector<double> rho, alpha;
  normalized_polar(p, rho, alpha);
  const double tol = chart_.zero_tol();
  if (*std::min_element(rho.begin(), rho.end()) <= tol) return retract_closed(p);
  const int n = chart_.dim;
  const std::size_t m = coords_.size();
  std::vector<cplx> u(m);
  for (std::size_t j = 0; j < m; ++j) u[j] = std::polar(1.0, alpha[j]);

  auto unpack = [n](const State& y) {
    CPoint z(n);
    for (int i = 0; i < n; ++i) z[i] = {y[2 * i], y[2 * i + 1]};
    return z;
  };
  // dz'/dt = -u on divisor coordinates, pulled back through d z'/d z.
  Rhs rhs = [&](const State& y) {
    CPoint z = unpack(y);
    if (!chart_.in_domain(z)) throw FlowError("trajectory left the domain of chart '" + chart_.id + "'");
    CPoint dz(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) dz[coords_[j]] = -u[j];
    if (!identity_) {
      const double a = chart_.exponents[absorb_];
      cplx g = chart_.unit_factor.eval(std::span<const cplx>(z));
      cplx root = std::exp(continued_log_unit(chart_, z) / a);
      cplx rhs_l = dz[absorb_];
      for (int c = 0; c < n; ++c)
        if (c != absorb_) rhs_l -= root * z[absorb_] * dg_[c].eval(std::span<const cplx>(z)) / (a * g) * dz[c];
      cplx jll = root * (1.0 + z[absorb_] * dg_[absorb_].eval(std::span<const cplx>(z)) / (a * g));
      dz[absorb_] = rhs_l / jll;
    }
    State out(2 * n);
    for (int i = 0; i < n; ++i) {
      out[2 * i] = dz[i].real();
      out[2 * i + 1] = dz[i].imag();
    }
    return out;
  };
  auto signed_rho = [&](const CPoint& zn, std::size_t j) { return (zn[coords_[j]] * std::conj(u[j])).real(); };
  auto event = [&](const State& y) {
    CPoint zn = to_normalized(unpack(y));
    double e = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) e = std::min(e, signed_rho(zn, j));
    return e;
  };
  CPoint z0 = polar_down(chart_, p);
  State y0(2 * n);
  for (int i = 0; i < n; ++i) {
    y0[2 * i] = z0[i].real();
    y0[2 * i + 1] = z0[i].imag();
  }
  OdeOptions opts;
  opts.tol = 1e-13;
  OdeResult res = integrate(rhs, y0, opts, event);
  if (!res.event_hit) throw FlowError("flow did not reach X'");
  CPoint z = unpack(res.y.back());
  CPoint zn = to_normalized(z);
  const double snap = 1e-8 * chart_.domain_radius;

  PolarPoint out = p;
  cplx l = identity_ ? cplx(0.0) : continued_log_unit(chart_, z) / double(chart_.exponents[absorb_]);
  for (std::size_t j = 0; j < m; ++j) {
    const int c = coords_[j];
    if (signed_rho(zn, j) <= snap) {
      out.rho[j] = 0.0;
      out.alpha[j] = wrap_angle(c == absorb_ ? alpha[j] - l.imag() : alpha[j]);
    } else {
      out.rho[j] = std::abs(z[c]);
      out.alpha[j] = wrap_angle(std::arg(z[c]));
    }
  }
  for (std::size_t j = 0; j < p.other_coords.size(); ++j) out.other[j] = z[p.other_coords[j]];
  return out;
}

PolarPoint ComplexRetraction::untrivialize(const PolarPoint& base, double level) const {
  if (!(level >= 0.0) || !std::isfinite(level)) throw RangeError("level must be nonnegative");
  std::vector<double> rho, alpha;
  normalized_polar(base, rho, alpha);
  if (*std::min_element(rho.begin(), rho.end()) > chart_.zero_tol()) throw DomainError("base is not on X'");
  if (level == 0.0) return base;
  for (double& r : rho) r = std::max(0.0, r);
  auto P = [&](double d) {
    double v = 1.0;
    for (std::size_t j = 0; j < rho.size(); ++j) v *= std::pow(rho[j] + d, chart_.exponents[coords_[j]]);
    return v;
  };
  double lo = 0.0, hi = chart_.domain_radius;
  for (int it = 0; P(hi) < level; ++it) {
    if (it > 60) throw RangeError("level cannot be reached from this base");
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 300; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (P(mid) < level ? lo : hi) = mid;
  }
  const double d = 0.5 * (lo + hi);
  for (double& r : rho) r += d;
  return from_normalized_polar(base, rho, alpha);
}

double ComplexRetraction::alpha(const PolarPoint& p) const { return f_prime(chart_, p).alpha; }
double ComplexRetraction::level(const PolarPoint& p) const { return f_prime(chart_, p).rho; }

PolarPoint complex_retract(const ChartSpec& chart, const PolarPoint& p, FieldMode mode) {
  return ComplexRetraction(chart, mode).retract(p);
}

TorusFibre torus_fibre(const ChartSpec& chart, std::span<const cplx> z) {
  Profile prof = multiplicity_profile(chart, z);
  TorusFibre t;
  t.k = prof.k;
  for (int c : prof.coords) t.exponents.push_back(chart.exponents[c]);
  return t;
}

int alpha_fibre_components(std::span<const int> exponents) {
  int d = 0;
  for (int a : exponents) {
    if (a <= 0) throw DomainError("exponents must be positive");
    d = std::gcd(d, a);
  }
  return exponents.empty() ? 1 : d;
}

int alpha_component_index(std::span<const int> exponents, std::span<const double> alpha, double theta) {
  if (alpha.size() != exponents.size()) throw DomainError("angle count does not match the exponents");
  const int d = alpha_fibre_components(exponents);
  double s = -theta;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += exponents[i] * wrap_angle(alpha[i]);
  const double turns = s / kTwoPi;
  const long long m = std::llround(turns);
  if (std::abs(turns - static_cast<double>(m)) > 1e-6) throw DomainError("angles are not on the level set");
  return static_cast<int>(((m % d) + d) % d);
}

std::vector<int> monodromy_permutation(std::span<const int> exponents, double theta) {
  const int d = alpha_fibre_components(exponents);
  std::vector<int> perm(d, 0);
  if (exponents.empty()) return perm;
  const std::size_t k = exponents.size();
  for (int j = 0; j < d; ++j) {
    std::vector<double> a(k, 0.0);
    a[0] = (theta + kTwoPi * j) / exponents[0];
    int from = alpha_component_index(exponents, a, theta);
    // Follow the level once around: the first angle turns by 2pi / a_1.
    a[0] += kTwoPi / exponents[0];
    perm[from] = alpha_component_index(exponents, a, theta);
  }
  return perm;
}

std::vector<std::vector<double>> alpha_level_set(std::span<const int> exponents, double theta, int n) {
  const std::size_t k = exponents.size();
  if (k == 0 || k > 2) throw DomainError("level-set sampling supports one or two exponents");
  alpha_fibre_components(exponents);
  std::vector<std::vector<double>> rows;
  if (k == 1) {
    for (int j = 0; j < exponents[0]; ++j) {
      double a = wrap_angle((theta + kTwoPi * j) / exponents[0]);
      std::vector<double> al{a};
      rows.push_back({a, double(alpha_component_index(exponents, al, theta))});
    }
    return rows;
  }
  for (int i = 0; i < n; ++i) {
    const double a1 = kTwoPi * i / n;
    for (int j = 0; j < exponents[1]; ++j) {
      double a2 = wrap_angle((theta - exponents[0] * a1 + kTwoPi * j) / exponents[1]);
      std::vector<double> al{a1, a2};
      rows.push_back({a1, a2, double(alpha_component_index(exponents, al, theta))});
    }
  }
  return rows;
}

std::vector<CPoint> complex_fibre_points(const ChartSpec& chart, std::span<const cplx> p, cplx c) {
  if (c == cplx(0.0)) throw RangeError("level must be nonzero");
  ComplexRetraction cr(chart);
  PolarPoint base = polar_blowup(chart, p);
  Profile prof = multiplicity_profile(chart, p);
  if (prof.k != 1) throw DomainError("the fibre is a finite set only when k(p) = 1");
  const int i0 = prof.coords[0];
  std::size_t j0 = 0;
  while (base.coords[j0] != i0) ++j0;
  base.rho[j0] = 0.0;
  base.alpha[j0] = 0.0;
  const double rest = cr.alpha(base);
  const int a = chart.exponents[i0];
  std::vector<CPoint> out;
  for (int j = 0; j < a; ++j) {
    PolarPoint b = base;
    b.alpha[j0] = wrap_angle((std::arg(c) - rest + kTwoPi * j) / a);
    out.push_back(polar_down(chart, cr.untrivialize(b, std::abs(c))));
  }
  return out;
}

UniversalPoint universal_trivialization(const ComplexRetraction& cr, std::span<const CPoint> path,
                                        LiftedAngle start) {
  if (path.empty()) throw DomainError("empty path");
  const ChartSpec& chart = cr.chart();
  auto f_at = [&](std::span<const cplx> z) {
    cplx v = eval_f(chart, z);
    if (!(std::abs(v) > 1e-12)) throw LiftError("path meets the central fibre");
    return v;
  };
  cplx prev = f_at(path[0]);
  if (angle_distance(start.angle, std::arg(prev)) > 1e-9) throw DomainError("start angle does not lie over arg f");
  double total = 0.0;
  constexpr int substeps = 64;
  for (std::size_t s = 1; s < path.size(); ++s) {
    for (int q = 1; q <= substeps; ++q) {
      const double t = static_cast<double>(q) / substeps;
      CPoint z(chart.dim);
      for (int i = 0; i < chart.dim; ++i) z[i] = path[s - 1][i] * (1.0 - t) + path[s][i] * t;
      cplx v = f_at(z);
      total += std::arg(v / prev);
      prev = v;
    }
  }
  UniversalPoint u;
  u.base = cr.retract(polar_blowup(chart, path.back()));
  u.rho = std::abs(prev);
  const double a = wrap_angle(std::arg(prev));
  const double v = start.value() + total;
  u.angle = {std::llround((v - a) / kTwoPi), a};
  return u;
}

UniversalPoint deck_shift(const UniversalPoint& u, std::int64_t k) {
  UniversalPoint out = u;
  out.angle = u.angle.shifted(k);
  return out;
}

namespace {

int gcd_of(const std::vector<int>& v) {
  int d = 0;
  for (int a : v) d = std::gcd(d, a);
  return d;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

bool subset_of(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

MilnorFibration milnor_fibration_at(const ChartSpec& chart, std::span<const double> x) {
  Profile prof = multiplicity_profile(chart, x);
  if (prof.k == 0) throw DomainError("point is not on the central fibre");
  MilnorStratum s;
  s.components = prof.components;
  s.torus.k = prof.k;
  for (int c : prof.coords) s.torus.exponents.push_back(chart.exponents[c]);
  s.chi_stratum = 1;
  s.chi_level = prof.k == 1 ? s.torus.exponents[0] : 0;
  s.contribution = s.chi_stratum * s.chi_level;
  s.level_components = alpha_fibre_components(s.torus.exponents);
  MilnorFibration out;
  out.pi0 = s.level_components;
  out.chi = s.contribution;
  out.strata.push_back(std::move(s));
  return out;
}

MilnorFibration milnor_fibration(const NCModel& model, const std::string& point,
                                 const std::vector<MilnorRefinement>& refinements) {
  const SpecialPoint* sp = model.special_point(point);
  if (!sp) throw ConfigError("model '" + model.name + "' has no special point '" + point + "'");
  if (model.modification && !sp->ambient.empty() &&
      std::abs(model.modification->ambient_f.eval(sp->ambient)) > 1e-12)
    throw DomainError("special point '" + point + "' is not on the central fibre");
  if (sp->exceptional.empty()) {
    if (sp->chart.empty()) throw ConfigError("special point '" + point + "' has neither exceptional data nor a chart");
    MilnorFibration out = milnor_fibration_at(model.chart(sp->chart), sp->coords);
    out.point = point;
    return out;
  }

  std::set<std::string> exceptional;
  for (const auto& e : sp->exceptional)
    for (const auto& c : e.components) exceptional.insert(c);
  DualComplex dual = build_dual_complex(model);

  MilnorFibration out;
  out.point = point;
  std::vector<const Simplex*> used;
  for (const Simplex& s : dual.simplices) {
    if (std::none_of(s.components.begin(), s.components.end(), [&](const std::string& c) { return exceptional.count(c); }))
      continue;
    used.push_back(&s);
    MilnorStratum row;
    row.components = s.components;
    row.torus.k = static_cast<int>(s.components.size());
    for (const auto& c : s.components) row.torus.exponents.push_back(model.component(c).multiplicity);
    row.level_components = alpha_fibre_components(row.torus.exponents);
    row.chi_level = row.torus.k == 1 ? row.torus.exponents[0] : 0;

    std::vector<int> chis;
    auto ref = std::find_if(refinements.begin(), refinements.end(),
                            [&](const MilnorRefinement& r) { return r.components == s.components; });
    if (ref != refinements.end()) {
      chis = ref->piece_chis;
    } else if (row.torus.k == 1) {
      auto e = std::find_if(sp->exceptional.begin(), sp->exceptional.end(),
                            [&](const ExceptionalStratum& x) { return x.components == s.components; });
      if (e == sp->exceptional.end())
        throw ConfigError("no Euler characteristic for stratum " + s.components[0] + " of point '" + point + "'");
      chis.push_back(e->chi);
    } else {
      chis.push_back(1);
    }
    for (int chi : chis) {
      MilnorStratum piece = row;
      piece.chi_stratum = chi;
      piece.contribution = chi * row.chi_level;
      out.chi += piece.contribution;
      out.strata.push_back(std::move(piece));
    }
  }

  // Connected pieces of the exceptional set: strata linked by the face relation.
  std::vector<int> parent(used.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < used.size(); ++i)
    for (std::size_t j = i + 1; j < used.size(); ++j)
      if (subset_of(used[i]->components, used[j]->components) || subset_of(used[j]->components, used[i]->components))
        parent[find_root(parent, int(i))] = find_root(parent, int(j));
  std::map<int, std::set<std::string>> groups;
  for (std::size_t i = 0; i < used.size(); ++i)
    for (const auto& c : used[i]->components) groups[find_root(parent, int(i))].insert(c);
  for (const auto& [root, comps] : groups) {
    std::vector<int> ms;
    for (const auto& c : comps) ms.push_back(model.component(c).multiplicity);
    out.pi0 += gcd_of(ms);
  }
  return out;
}

Condition3Report condition3_check(const NCModel& model, const std::string& stratification, int samples,
                                  std::uint64_t seed) {
  if (!model.modification) throw ConfigError("model '" + model.name + "' has no modification data");
  auto st = std::find_if(model.stratifications.begin(), model.stratifications.end(),
                         [&](const DeclaredStratification& s) { return s.name == stratification; });
  if (st == model.stratifications.end())
    throw ConfigError("model '" + model.name + "' has no stratification '" + stratification + "'");
  const auto& sigma = model.modification->sigma;

  Condition3Report rep;
  rep.stratification = stratification;
  rep.expect_pass = st->expect_pass;

  auto locate = [&](std::span<const double> q) -> const DeclaredStratum* {
    const DeclaredStratum* rest = nullptr;
    for (const auto& s : st->strata) {
      if (s.points.empty()) {
        rest = &s;
        continue;
      }
      for (const Point& pt : s.points) {
        double d = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) d = std::max(d, std::abs(q[i] - pt[i]));
        if (d <= 1e-9) return &s;
      }
    }
    return rest;
  };

  Rng rng(seed);
  Stratification canon = canonical_stratification(model);
  // stratum label -> declared targets of its samples
  std::map<std::string, std::set<std::string>> hits;
  for (const Stratum& S : canon.strata) {
    for (const StratumPiece& piece : S.pieces) {
      auto sg = sigma.find(piece.chart);
      if (sg == sigma.end()) throw ConfigError("no sigma for chart '" + piece.chart + "'");
      const ChartSpec& c = model.chart(piece.chart);
      const double r = c.domain_radius;
      std::vector<std::vector<Expr>> jac(sg->second.size(), std::vector<Expr>(c.dim));
      for (std::size_t i = 0; i < sg->second.size(); ++i)
        for (int k = 0; k < c.dim; ++k) jac[i][k] = sg->second[i].diff(k);
      std::vector<int> free_cols;
      std::vector<bool> vanish(c.dim, false);
      for (int z : piece.quadrant.zero) vanish[piece.divisor_coords[z]] = true;
      for (int k = 0; k < c.dim; ++k)
        if (!vanish[k]) free_cols.push_back(k);

      Condition3Row row;
      row.stratum = S.label;
      row.chart = c.id;
      std::set<std::string> targets;
      bool have_witness = false;
      for (int s = 0; s < samples; ++s) {
        Point x(c.dim);
        for (int k = 0; k < c.dim; ++k) x[k] = rng.uniform(-0.9 * r, 0.9 * r);
        for (int k : piece.quadrant.zero) x[piece.divisor_coords[k]] = 0.0;
        for (int k : piece.quadrant.plus) x[piece.divisor_coords[k]] = rng.uniform(0.05 * r, 0.9 * r);
        for (int k : piece.quadrant.minus) x[piece.divisor_coords[k]] = -rng.uniform(0.05 * r, 0.9 * r);
        Point q(sg->second.size());
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = sg->second[i].eval(x);
        const DeclaredStratum* t = locate(q);
        std::string label = t ? t->label : std::string("(none)");
        targets.insert(label);
        Eigen::MatrixXd J(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(free_cols.size()));
        for (std::size_t i = 0; i < q.size(); ++i)
          for (std::size_t k = 0; k < free_cols.size(); ++k) J(i, k) = jac[i][free_cols[k]].eval(x);
        int rank = 0;
        if (J.size() > 0) {
          Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
          for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-6) ++rank;
        }
        const int expected = t ? t->dim : -1;
        const bool ok = t && rank == expected;
        if (!have_witness || (!ok && row.pass)) {
          row.witness = x;
          row.target = label;
          row.rank = rank;
          row.expected = expected;
          have_witness = true;
        }
        row.pass = row.pass && ok;
      }
      row.pure = targets.size() <= 1;
      row.pass = row.pass && row.pure;
      hits[S.label].insert(targets.begin(), targets.end());
      rep.pass = rep.pass && row.pass;
      rep.rows.push_back(std::move(row));
    }
  }

  // Strict form: each point stratum pulls back to whole components.
  for (const Stratum& S : canon.strata) {
    for (const auto& target : hits[S.label]) {
      auto decl = std::find_if(st->strata.begin(), st->strata.end(),
                               [&](const DeclaredStratum& d) { return d.label == target; });
      if (decl == st->strata.end() || decl->points.empty()) continue;
      bool covered = std::any_of(S.components.begin(), S.components.end(), [&](const std::string& comp) {
        const auto& h = hits[comp];
        return h.size() == 1 && *h.begin() == target;
      });
      if (!covered) rep.strict_union = false;
    }
  }
  return rep;
}

}  // namespace ncr
