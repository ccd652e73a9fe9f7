#include "ncr/strat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "ncr/errors.hpp"
#include "ncr/rng.hpp"

namespace ncr {

bool Quadrant::is_partition(int n) const {
  std::vector<int> all;
  all.insert(all.end(), zero.begin(), zero.end());
  all.insert(all.end(), plus.begin(), plus.end());
  all.insert(all.end(), minus.begin(), minus.end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != n) return false;
  for (int i = 0; i < n; ++i)
    if (all[i] != i) return false;
  return true;
}

bool Quadrant::contains(std::span<const double> x, double tol) const {
  for (int i : zero)
    if (std::abs(x[i]) > tol) return false;
  for (int i : plus)
    if (!(x[i] > tol)) return false;
  for (int i : minus)
    if (!(x[i] < -tol)) return false;
  return true;
}

std::string Quadrant::label() const {
  std::string s(size(), '?');
  for (int i : zero) s[i] = '0';
  for (int i : plus) s[i] = '+';
  for (int i : minus) s[i] = '-';
  return s;
}

Quadrant quadrant_of_point(std::span<const double> x, double tol) {
  Quadrant q;
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    if (std::abs(x[i]) <= tol)
      q.zero.push_back(i);
    else if (x[i] > 0)
      q.plus.push_back(i);
    else
      q.minus.push_back(i);
  }
  return q;
}

bool StratumPiece::contains(std::span<const double> x, double tol) const {
  std::vector<double> y(divisor_coords.size());
  for (std::size_t p = 0; p < divisor_coords.size(); ++p) y[p] = x[divisor_coords[p]];
  return quadrant.contains(y, tol);
}

bool Stratum::contains(const std::string& chart, std::span<const double> x, double tol) const {
  return std::any_of(pieces.begin(), pieces.end(),
                     [&](const StratumPiece& p) { return p.chart == chart && p.contains(x, tol); });
}

int Stratification::locate(const std::string& chart, std::span<const double> x, double tol) const {
  for (std::size_t i = 0; i < strata.size(); ++i)
    if (strata[i].contains(chart, x, tol)) return static_cast<int>(i);
  return -1;
}

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// Pieces of one chart where the divisor positions in `zero_pos` vanish and
// every other divisor position has a definite sign.
std::vector<StratumPiece> sign_pieces(const ChartSpec& chart, const std::vector<int>& zero_pos) {
  std::vector<int> coords = chart.divisor_coords();
  std::vector<int> rest;
  for (int p = 0; p < static_cast<int>(coords.size()); ++p)
    if (std::find(zero_pos.begin(), zero_pos.end(), p) == zero_pos.end()) rest.push_back(p);
  std::vector<StratumPiece> out;
  for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
    StratumPiece piece;
    piece.chart = chart.id;
    piece.divisor_coords = coords;
    piece.quadrant.zero = zero_pos;
    for (std::size_t b = 0; b < rest.size(); ++b)
      ((mask >> b) & 1u ? piece.quadrant.minus : piece.quadrant.plus).push_back(rest[b]);
    std::sort(piece.quadrant.plus.begin(), piece.quadrant.plus.end());
    std::sort(piece.quadrant.minus.begin(), piece.quadrant.minus.end());
    out.push_back(std::move(piece));
  }
  return out;
}

}  // namespace

Stratification canonical_stratification(const NCModel& model) {
  DualComplex dc = build_dual_complex(model);
  Stratification s;
  for (const Simplex& simplex : dc.simplices) {
    Stratum st;
    st.components = simplex.components;
    st.depth = simplex.depth;
    st.label = join(simplex.components, "&");
    for (const auto& chart : model.charts) {
      std::vector<int> coords = chart.divisor_coords();
      std::vector<int> zero_pos;
      for (const auto& comp : simplex.components) {
        int c = chart.coord_of(comp);
        if (c < 0) break;
        zero_pos.push_back(static_cast<int>(std::find(coords.begin(), coords.end(), c) - coords.begin()));
      }
      if (zero_pos.size() != simplex.components.size()) continue;
      std::sort(zero_pos.begin(), zero_pos.end());
      for (auto& piece : sign_pieces(chart, zero_pos)) st.pieces.push_back(std::move(piece));
    }
    s.strata.push_back(std::move(st));
  }
  return s;
}

Stratification associated_stratification(const NCModel& model) {
  Stratification s = canonical_stratification(model);
  Stratum open;
  open.label = "M\\X";
  for (const auto& chart : model.charts)
    for (auto& piece : sign_pieces(chart, {})) open.pieces.push_back(std::move(piece));
  s.strata.insert(s.strata.begin(), std::move(open));
  return s;
}

double Constraint::value(std::span<const double> x) const {
  double v = offset;
  for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * x[i];
  return v;
}

bool Constraint::holds(std::span<const double> x, double tol) const {
  double v = value(x);
  switch (kind) {
    case Kind::Eq:
      return std::abs(v) <= tol;
    case Kind::Le:
      return v <= tol;
    case Kind::Lt:
      return v < -tol;
  }
  return false;
}

bool Polyhedron::contains(std::span<const double> x, double tol) const {
  return std::all_of(constraints.begin(), constraints.end(), [&](const Constraint& c) { return c.holds(x, tol); });
}

bool Polyhedron::closure_contains(std::span<const double> x, double tol) const {
  return std::all_of(constraints.begin(), constraints.end(), [&](const Constraint& c) {
    return c.kind == Constraint::Kind::Eq ? std::abs(c.value(x)) <= tol : c.value(x) <= tol;
  });
}

namespace {

Constraint diff_constraint(int n, int i, double ei, int j, double ej, Constraint::Kind kind) {
  // ei x_i - ej x_j (kind) 0
  Constraint c;
  c.coeffs.assign(n, 0.0);
  c.coeffs[i] += ei;
  c.coeffs[j] -= ej;
  c.kind = kind;
  return c;
}

Constraint sign_constraint(int n, int i, double ei) {
  Constraint c;
  c.coeffs.assign(n, 0.0);
  c.coeffs[i] = -ei;
  c.kind = Constraint::Kind::Le;
  return c;
}

}  // namespace

MinSubstratification min_substratification(std::span<const int> eps, int n) {
  const int k = static_cast<int>(eps.size());
  if (k > n) throw DomainError("more signed coordinates than dimensions");
  for (int e : eps)
    if (e != 1 && e != -1) throw DomainError("signs must be +1 or -1");
  MinSubstratification m;
  m.eps.assign(eps.begin(), eps.end());
  m.n = n;
  Polyhedron quadrant;
  for (int j = 0; j < k; ++j) quadrant.constraints.push_back(sign_constraint(n, j, eps[j]));
  if (k == 0) {
    m.pieces.push_back(quadrant);
    return m;
  }
  for (int i = 0; i < k; ++i) {
    Polyhedron p = quadrant;
    for (int j = 0; j < k; ++j)
      if (j != i) p.constraints.push_back(diff_constraint(n, i, eps[i], j, eps[j], Constraint::Kind::Le));
    m.pieces.push_back(std::move(p));
  }
  std::vector<std::vector<int>> subsets;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> t;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) t.push_back(i);
    subsets.push_back(std::move(t));
  }
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  for (const auto& t : subsets) {
    Polyhedron p = quadrant;
    for (std::size_t q = 1; q < t.size(); ++q)
      p.constraints.push_back(diff_constraint(n, t[0], eps[t[0]], t[q], eps[t[q]], Constraint::Kind::Eq));
    for (int j = 0; j < k; ++j)
      if (std::find(t.begin(), t.end(), j) == t.end())
        p.constraints.push_back(diff_constraint(n, t[0], eps[t[0]], j, eps[j], Constraint::Kind::Lt));
    m.tie_sets.push_back(t);
    m.strata.push_back(std::move(p));
  }
  return m;
}

std::vector<int> MinSubstratification::pieces_containing(std::span<const double> x, double tol) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (pieces[i].closure_contains(x, tol)) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> MinSubstratification::tie_set(std::span<const double> x, double tol) const {
  const int k = static_cast<int>(eps.size());
  std::vector<int> out;
  if (k == 0) return out;
  double m = eps[0] * x[0];
  for (int i = 1; i < k; ++i) m = std::min(m, eps[i] * x[i]);
  for (int i = 0; i < k; ++i)
    if (eps[i] * x[i] - m <= tol) out.push_back(i);
  return out;
}

std::vector<double> MinSubstratification::rotated(int piece, std::span<const double> x) const {
  const int k = static_cast<int>(eps.size());
  std::vector<double> y(x.begin(), x.end());
  if (k == 0) return y;
  const double base = eps[piece] * x[piece];
  for (int j = 0; j < k; ++j) y[j] = j == piece ? base : eps[j] * x[j] - base;
  return y;
}

std::vector<std::vector<double>> sample_polyhedron(const Polyhedron& poly, int n, double r, int count,
                                                   std::uint64_t seed, int max_attempts) {
  std::vector<const Constraint*> eqs;
  for (const auto& c : poly.constraints)
    if (c.kind == Constraint::Kind::Eq) eqs.push_back(&c);
  Eigen::MatrixXd A(eqs.size(), n);
  Eigen::VectorXd b(eqs.size());
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = eqs[i]->coeffs[j];
    b(i) = -eqs[i]->offset;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  if (!eqs.empty()) cod.compute(A);

  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x(j) = rng.uniform(-r, r);
    if (!eqs.empty()) x -= cod.solve(A * x - b);
    std::vector<double> p(x.data(), x.data() + n);
    if (std::any_of(p.begin(), p.end(), [&](double v) { return std::abs(v) > r; })) continue;
    if (!poly.contains(p, 1e-9)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::vector<double> apply_piece(const PAMap::Piece& piece, std::span<const double> x) {
  std::vector<double> y(piece.map.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = piece.map[i].eval(x);
  return y;
}

}  // namespace

PACheck is_piecewise_analytic(const PAMap& map, int samples_per_boundary, std::uint64_t seed) {
  if (map.pieces.empty()) throw ConfigError("piecewise map has no pieces");
  const double tol = 1e-9;
  PACheck res;
  std::uint64_t stream = seed;

  // Boundary agreement: sample every facet of every piece.
  for (std::size_t i = 0; i < map.pieces.size(); ++i) {
    const auto& dom = map.pieces[i].domain;
    for (std::size_t c = 0; c < dom.constraints.size(); ++c) {
      if (dom.constraints[c].kind == Constraint::Kind::Eq) continue;
      Polyhedron facet = dom;
      facet.constraints[c].kind = Constraint::Kind::Eq;
      for (auto& fc : facet.constraints)
        if (fc.kind == Constraint::Kind::Lt) fc.kind = Constraint::Kind::Le;
      for (const auto& x : sample_polyhedron(facet, map.dim, map.radius, samples_per_boundary, ++stream)) {
        std::vector<double> yi = apply_piece(map.pieces[i], x);
        bool shared = false;
        for (std::size_t j = 0; j < map.pieces.size(); ++j) {
          if (j == i || !map.pieces[j].domain.closure_contains(x, tol)) continue;
          shared = true;
          std::vector<double> yj = apply_piece(map.pieces[j], x);
          double d = 0.0, s = 1.0;
          for (std::size_t q = 0; q < yi.size(); ++q) {
            d = std::max(d, std::abs(yi[q] - yj[q]));
            s = std::max(s, std::abs(yi[q]));
          }
          if (d > tol * s) {
            res.ok = false;
            res.witness = PAWitness{"boundary_mismatch", x, static_cast<int>(i), static_cast<int>(j)};
            return res;
          }
        }
        if (shared) ++res.boundary_samples;
      }
    }
  }

  // Each source stratum must land in the closure of one target stratum.
  if (!map.target_strata.empty()) {
    for (std::size_t s = 0; s < map.source_strata.size(); ++s) {
      std::vector<int> candidates(map.target_strata.size());
      std::iota(candidates.begin(), candidates.end(), 0);
      for (const auto& x : sample_polyhedron(map.source_strata[s], map.dim, map.radius, samples_per_boundary, ++stream)) {
        const PAMap::Piece* piece = nullptr;
        for (const auto& p : map.pieces)
          if (p.domain.closure_contains(x, tol)) {
            piece = &p;
            break;
          }
        if (!piece) continue;
        ++res.stratum_samples;
        std::vector<double> y = apply_piece(*piece, x);
        std::vector<int> keep;
        bool any = false;
        for (std::size_t t = 0; t < map.target_strata.size(); ++t) {
          if (!map.target_strata[t].closure_contains(y, tol)) continue;
          any = true;
          if (std::find(candidates.begin(), candidates.end(), static_cast<int>(t)) != candidates.end())
            keep.push_back(static_cast<int>(t));
        }
        if (!any || keep.empty()) {
          res.ok = false;
          res.witness = PAWitness{any ? "stratum_split" : "no_target", x, static_cast<int>(s), -1};
          return res;
        }
        candidates = std::move(keep);
      }
    }
  }
  return res;
}

PAMap identity_map(const ChartSpec& chart, const Stratification& strat) {
  PAMap m;
  m.dim = chart.dim;
  m.radius = chart.domain_radius * (1.0 - 1e-9);
  std::vector<Expr> id;
  for (int i = 0; i < chart.dim; ++i) id.push_back(Expr::var(i));
  auto coord_constraint = [&](int coord, double coeff, Constraint::Kind kind) {
    Constraint c;
    c.coeffs.assign(chart.dim, 0.0);
    c.coeffs[coord] = coeff;
    c.kind = kind;
    return c;
  };
  for (const auto& st : strat.strata) {
    for (const auto& piece : st.pieces) {
      if (piece.chart != chart.id) continue;
      Polyhedron open, closed;
      for (int p : piece.quadrant.zero) {
        open.constraints.push_back(coord_constraint(piece.divisor_coords[p], 1.0, Constraint::Kind::Eq));
        closed.constraints.push_back(open.constraints.back());
      }
      for (int p : piece.quadrant.plus) {
        open.constraints.push_back(coord_constraint(piece.divisor_coords[p], -1.0, Constraint::Kind::Lt));
        closed.constraints.push_back(coord_constraint(piece.divisor_coords[p], -1.0, Constraint::Kind::Le));
      }
      for (int p : piece.quadrant.minus) {
        open.constraints.push_back(coord_constraint(piece.divisor_coords[p], 1.0, Constraint::Kind::Lt));
        closed.constraints.push_back(coord_constraint(piece.divisor_coords[p], 1.0, Constraint::Kind::Le));
      }
      m.pieces.push_back({closed, id});
      m.source_strata.push_back(open);
      m.target_strata.push_back(open);
    }
  }
  return m;
}

std::string stratification_to_json(const Stratification& s) {
  nlohmann::ordered_json root;
  root["strata"] = nlohmann::ordered_json::array();
  for (const auto& st : s.strata) {
    nlohmann::ordered_json j;
    j["label"] = st.label;
    j["depth"] = st.depth;
    j["components"] = st.components;
    j["pieces"] = nlohmann::ordered_json::array();
    for (const auto& p : st.pieces) {
      nlohmann::ordered_json pj;
      pj["chart"] = p.chart;
      pj["divisor_coords"] = p.divisor_coords;
      pj["quadrant"] = p.quadrant.label();
      j["pieces"].push_back(pj);
    }
    root["strata"].push_back(j);
  }
  return root.dump(2) + "\n";
}

std::string witness_csv_header() { return "chart,coordinates,violation\n"; }

std::string witness_csv_row(const std::string& chart, std::span<const double> x, const std::string& kind) {
  std::string row = chart + ",";
  char buf[40];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", x[i]);
    row += buf;
  }
  return row + "," + kind + "\n";
}

}  // namespace ncr
