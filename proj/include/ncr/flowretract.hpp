#pragma once

// Real retraction of the cut space onto X': normalized closed form, the local
// vector fields v_i, the assembled field w, numeric flows with hitting times,
// trivialization, pushdown through the modification and fibre counts.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncr/cut.hpp"
#include "ncr/expr.hpp"
#include "ncr/kernels.hpp"
#include "ncr/ncmodel.hpp"
#include "ncr/ode.hpp"

namespace ncr {

// Coordinates in which f' = prod y_i^{a_i} on a sheet: y_i = eps_i x_i on
// divisor coordinates, with |g|^{1/a_l} absorbed into one of them.
struct ChartNormalization {
  ChartSpec chart;
  SignSheet sheet;
  std::vector<int> coords;  // divisor coordinates
  bool normalizable = false;
  bool identity = false;  // g == 1, so y_i = eps_i x_i exactly
  int absorb = -1;        // coordinate carrying |g|^{1/a}
  int g_sign = 1;
  Expr y_absorb;          // y_absorb as an expression in x
  std::string fallback_reason;

  Point to_normalized(std::span<const double> x) const;
  // Inverse map; the absorbed coordinate is found by a monotone 1-D solve.
  // Throws RangeError when the preimage leaves the chart box.
  Point from_normalized(std::span<const double> y) const;
};

ChartNormalization normalize_chart(const ChartSpec& chart, const SignSheet& sheet);

// f' = |f| on the sheet, as an expression.
Expr f_prime_expr(const ChartSpec& chart, const SignSheet& sheet);

struct RetractStep {
  Point x;
  double delta = 0.0;
};

// Closed form in normalized coordinates: delta = min eps_i x_i over the
// sheet's coordinates, result x - delta * eps.
RetractStep local_retract(const SignSheet& sheet, std::span<const double> x);

// Same over a block of points (SIMD kernel).
void local_retract_batch(const SignSheet& sheet, const kernels::PointBlock& in, kernels::PointBlock& out,
                         std::span<double> delta);

struct VField {
  std::string chart;
  std::string kind;  // case1 | case2 | case3 | w-normalized | w-numeric
  int i0 = -1;
  std::vector<Expr> components;

  Point eval(std::span<const double> x) const;
};

// Local field for divisor coordinate i0 (cases 1-3). Sample-checks the
// denominators over the case's validity region.
VField build_vfield(const ChartSpec& chart, const SignSheet& sheet, int i0, int case_no);

enum class FieldMode { Auto, Normalized, Numeric };

// Normalized: pullback of -sum d/dy_i. Numeric: -sum a_i v_i (case 3 fields).
VField assemble_w(const ChartNormalization& norm, FieldMode mode = FieldMode::Auto);

// Numeric-mode field blended with neighbouring charts through transitions
// using bump weights, rescaled so df'/dw equals the chart's own rate.
class BlendedField {
 public:
  BlendedField(const NCModel& model, const std::string& chart, const SignSheet& sheet);
  Point operator()(std::span<const double> x) const;
  int neighbours() const { return static_cast<int>(links_.size()); }

 private:
  struct Link {
    const Transition* t;
    VField w;
    std::vector<std::vector<Expr>> jac;  // d(target)/d(source)
    double radius;
  };
  const NCModel* model_;
  ChartSpec chart_;
  SignSheet sheet_;
  VField own_;
  Expr fp_;
  std::vector<Expr> grad_;
  std::vector<Link> links_;
};

struct SphereConstraint {
  Point centre;
  double radius = 1.0;
  double collar = 0.1;
};

struct FlowOptions {
  OdeOptions ode;
  bool record = true;
  std::optional<SphereConstraint> tangency;
};

struct TracePoint {
  double t;
  Point x;
  double fprime;
};

struct FlowTrace {
  std::vector<TracePoint> points;
  double hit_time = 0.0;
  CutPoint terminal;
  int steps = 0;
};

using FieldFn = std::function<Point(std::span<const double>)>;

// Integrates the field from p until a divisor coordinate reaches zero on the
// sheet. The terminal point is snapped onto X'.
FlowTrace flow(const ChartSpec& chart, const CutPoint& p, const FieldFn& field, const FlowOptions& opts = {});
FlowTrace flow(const ChartSpec& chart, const CutPoint& p, const VField& w, const FlowOptions& opts = {});

struct DecreaseRow {
  Point x;
  double derivative = 0.0;  // df'/dw
  double expected = 0.0;    // (sum a_i / y_i) f', a magnitude
  bool negative = false;
  bool skipped = false;     // on X'
};

struct DecreaseReport {
  std::vector<DecreaseRow> rows;
  bool all_negative = true;
  double max_rel_error = 0.0;  // | |df'/dw| - expected | / expected
};

DecreaseReport check_decrease(const VField& w, const ChartNormalization& norm, std::span<const Point> samples);

struct Trivialization {
  CutPoint base;
  double level = 0.0;
  int side = 1;
};

// Retraction of one chart sheet, closed form when the chart normalizes and
// numeric flow otherwise.
class ChartRetraction {
 public:
  ChartRetraction(const NCModel& model, const std::string& chart, const SignSheet& sheet,
                  FieldMode mode = FieldMode::Auto);

  const ChartNormalization& normalization() const { return norm_; }
  const VField& field() const { return w_; }
  bool closed_form() const { return closed_; }
  const ChartSpec& chart() const { return norm_.chart; }

  RetractStep retract(std::span<const double> x) const;
  FlowTrace flow_to_boundary(std::span<const double> x, const FlowOptions& opts = {}) const;
  Trivialization trivialize(std::span<const double> x) const;
  CutPoint untrivialize(const Trivialization& t) const;

 private:
  const NCModel* model_;
  ChartNormalization norm_;
  VField w_;
  bool closed_ = false;
  double level_bound_ = 0.0;
};

struct AmbientRetraction {
  Point target;
  double delta = 0.0;
  bool on_central_fibre = false;
  std::string chart;
  CutPoint lifted;
  CutPoint retracted;
};

// Lift q through sigma (Newton, deepest lift over all charts), retract in
// the cut space and push down.
AmbientRetraction retract(const NCModel& model, std::span<const double> q, FieldMode mode = FieldMode::Auto);

// Solves sigma_chart(x) = q; nullopt if no lift in the chart's box.
std::optional<Point> lift_to_chart(const NCModel& model, const std::string& chart, std::span<const double> q);

Point push_down(const NCModel& model, const std::string& chart, std::span<const double> x);

// Points of f^{-1}(c) retracting to p, one per sheet on the side of sign(c).
std::vector<CutPoint> specialization_fibre_real(const NCModel& model, const std::string& chart,
                                                std::span<const double> p, double c);

struct MilnorRealCount {
  int components = 0;
  int expected = 0;  // fibre points of the specialization inside the ball
  bool conclusive = false;
  int accepted_samples = 0;
  std::map<std::string, int> clusters;  // sheet label -> samples
};

MilnorRealCount milnor_components_real(const NCModel& model, const std::string& chart, std::span<const double> p,
                                       double ball, double c, int samples = 2000, std::uint64_t seed = 1);

}  // namespace ncr
