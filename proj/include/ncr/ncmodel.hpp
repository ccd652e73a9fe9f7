#pragma once

// Normal-crossings models: chart atlases where the function is locally a
// monomial times a nonvanishing unit factor, together with the divisor
// components, the transition maps between charts and the sign cocycle that
// records how local defining functions compare on overlaps.

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncr/expr.hpp"

namespace ncr {

using Point = std::vector<double>;
using CPoint = std::vector<std::complex<double>>;

enum class FieldKind { Real, Complex };

// Nonnegative: f >= 0 everywhere (even exponents, positive unit factor).
// General: f takes both signs; the cut space splits into M'+ and M'-.
enum class SignMode { Nonnegative, General };

struct ChartSpec {
  std::string id;
  FieldKind field = FieldKind::Real;
  int dim = 0;
  std::vector<int> exponents;
  Expr unit_factor = Expr::constant(1.0);
  double domain_radius = 1.0;
  std::map<int, std::string> divisor_labels;  // 0-based coordinate -> component id

  // Coordinates with positive exponent, ascending.
  std::vector<int> divisor_coords() const;
  // Coordinate carrying the given component, -1 if absent.
  int coord_of(const std::string& component) const;
  bool has_component(const std::string& component) const { return coord_of(component) >= 0; }

  // Relative 1e-9 of the domain half-width.
  double zero_tol() const { return 1e-9 * domain_radius; }

  bool in_domain(std::span<const double> x) const;
  bool in_domain(std::span<const std::complex<double>> z) const;
  char var_prefix() const { return field == FieldKind::Complex ? 'z' : 'x'; }
};

struct DivisorComponent {
  std::string id;
  int multiplicity = 1;
  bool connected = true;
};

struct Transition {
  std::string id;
  std::string source;
  std::string target;
  std::string inverse;  // id of the reverse transition
  std::vector<Expr> map;
  std::vector<Expr> overlap;  // each expression must be > 0 on the overlap
  std::map<std::string, int> sign_data;

  Point apply(std::span<const double> x) const;
};

// sigma: M -> ambient space, one coordinate list per chart.
struct Modification {
  int ambient_dim = 0;
  Expr ambient_f;
  std::map<std::string, std::vector<Expr>> sigma;
};

// Open stratum of the exceptional fibre over a special point, with the
// complex Euler characteristic of that stratum.
struct ExceptionalStratum {
  std::vector<std::string> components;
  int chi = 0;
};

struct SpecialPoint {
  std::string name;
  std::string chart;  // optional chart lift, empty if none
  Point coords;
  Point ambient;
  std::vector<ExceptionalStratum> exceptional;
};

struct DeclaredStratum {
  std::string label;
  int dim = 0;
  std::vector<Point> points;  // empty: the remainder of the central fibre
};

struct DeclaredStratification {
  std::string name;
  bool expect_pass = true;
  std::vector<DeclaredStratum> strata;
};

struct NCModel {
  std::string name;
  SignMode sign_mode = SignMode::General;
  double level_bound = 0.1;  // trivialization collar: levels in [0, level_bound)
  std::vector<ChartSpec> charts;
  std::vector<Transition> transitions;
  std::vector<DivisorComponent> components;
  std::optional<Modification> modification;
  std::vector<SpecialPoint> special_points;
  std::vector<DeclaredStratification> stratifications;

  const ChartSpec& chart(const std::string& id) const;
  const DivisorComponent& component(const std::string& id) const;
  const Transition& transition(const std::string& id) const;
  const SpecialPoint* special_point(const std::string& name) const;
  bool in_overlap(const Transition& t, std::span<const double> x) const;
};

struct Profile {
  int k = 0;
  std::vector<std::string> components;  // sorted
  std::vector<int> coords;              // chart coordinates that vanish
};

struct Simplex {
  std::vector<std::string> components;  // sorted
  int depth = 0;
  std::string witness_chart;
  Point witness;
};

struct DualComplex {
  std::vector<std::string> vertices;
  std::vector<Simplex> simplices;  // every nonempty face, deduplicated

  std::vector<const Simplex*> of_depth(int depth) const;
  const Simplex* find(std::vector<std::string> components) const;
};

struct Diagnostic {
  std::string kind;
  std::string chart;
  Point point;
  std::string message;
};

// One fundamental cycle of the transition graph of charts meeting a component.
struct CocycleLoop {
  std::vector<std::string> transitions;  // traversed in order
  int product = 1;
};

double eval_f(const ChartSpec& chart, std::span<const double> x);
std::complex<double> eval_f(const ChartSpec& chart, std::span<const std::complex<double>> z);

// Monomial part only: prod x_i^{a_i}.
double eval_monomial(const ChartSpec& chart, std::span<const double> x);

Profile multiplicity_profile(const ChartSpec& chart, std::span<const double> x);
Profile multiplicity_profile(const ChartSpec& chart, std::span<const std::complex<double>> z);

DualComplex build_dual_complex(const NCModel& model);

// Sampled checks; an empty result means the model passes.
std::vector<Diagnostic> check_normal_crossings(const NCModel& model);

// Throws ModelError when any diagnostic is reported.
void require_valid(const NCModel& model);

std::vector<CocycleLoop> cocycle_loops(const NCModel& model, const std::string& component);
bool two_sidedness(const NCModel& model, const std::string& component);

// 17 points per axis, symmetric about the centre (which is included).
std::vector<Point> chart_grid(const ChartSpec& chart, int per_axis = 17);

}  // namespace ncr
