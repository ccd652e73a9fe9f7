#pragma once

// Complex case: the polar oriented blow-up of a chart, the band map, the
// angle-preserving retraction, torus fibres and their angle levels, lifted
// angles on the universal cover, Milnor-fibration invariants and the
// stratification checker for the modification map.
//
// Real charts are treated through their complexification.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncr/flowretract.hpp"
#include "ncr/ncmodel.hpp"

namespace ncr {

using cplx = std::complex<double>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reduces to [0, 2pi).
double wrap_angle(double a);
// Distance on the circle, in [0, pi].
double angle_distance(double a, double b);

struct PolarPoint {
  std::vector<int> coords;  // divisor coordinates, ascending
  std::vector<double> rho;
  std::vector<double> alpha;  // in [0, 2pi)
  std::vector<int> other_coords;
  std::vector<cplx> other;
};

struct BandPoint {
  double rho = 0.0;
  double alpha = 0.0;
};

// Integer turns plus an angle in [0, 2pi): deck shifts stay exact.
struct LiftedAngle {
  std::int64_t turns = 0;
  double angle = 0.0;

  double value() const { return kTwoPi * static_cast<double>(turns) + angle; }
  static LiftedAngle from_value(double v);
  LiftedAngle shifted(std::int64_t k) const { return {turns + k, angle}; }
  friend bool operator==(const LiftedAngle&, const LiftedAngle&) = default;
};

struct TorusFibre {
  int k = 0;
  std::vector<int> exponents;
};

PolarPoint polar_blowup(const ChartSpec& chart, std::span<const cplx> z);
CPoint polar_down(const ChartSpec& chart, const PolarPoint& p);

// Monomial part: (prod rho_i^{a_i}, sum a_i alpha_i mod 2pi).
BandPoint f_prime(const PolarPoint& p, std::span<const int> exponents);
// Includes the unit factor: (|f|, arg f) with arg g continued from the centre.
BandPoint f_prime(const ChartSpec& chart, const PolarPoint& p);

// log g(z) continued along the segment from the chart centre.
cplx continued_log_unit(const ChartSpec& chart, std::span<const cplx> z);

// Normalized coordinates z'_l = z_l g^{1/a_l}; retraction shrinks the moduli
// of the normalized divisor coordinates by their minimum and freezes every
// normalized angle.
class ComplexRetraction {
 public:
  explicit ComplexRetraction(const ChartSpec& chart, FieldMode mode = FieldMode::Auto);

  const ChartSpec& chart() const { return chart_; }
  bool closed_form() const { return closed_; }
  bool identity() const { return identity_; }
  int absorb() const { return absorb_; }

  CPoint to_normalized(std::span<const cplx> z) const;
  // Newton solve for the absorbed coordinate; RangeError outside the box.
  CPoint from_normalized(std::span<const cplx> zn, std::span<const cplx> guess) const;

  PolarPoint retract(const PolarPoint& p) const;
  // Inverse of the retraction along one fibre: base on X'_R, level > 0.
  PolarPoint untrivialize(const PolarPoint& base, double level) const;

  double alpha(const PolarPoint& p) const;  // arg f
  double level(const PolarPoint& p) const;  // |f|

 private:
  PolarPoint retract_closed(const PolarPoint& p) const;
  PolarPoint retract_numeric(const PolarPoint& p) const;
  // Normalized polar data: moduli and angles of z' on divisor coordinates.
  void normalized_polar(const PolarPoint& p, std::vector<double>& rho, std::vector<double>& alpha) const;
  PolarPoint from_normalized_polar(const PolarPoint& p, const std::vector<double>& rho,
                                   const std::vector<double>& alpha) const;

  ChartSpec chart_;
  std::vector<int> coords_;
  bool identity_ = false;
  bool closed_ = true;
  int absorb_ = -1;
  std::vector<Expr> dg_;  // partial derivatives of g
};

PolarPoint complex_retract(const ChartSpec& chart, const PolarPoint& p, FieldMode mode = FieldMode::Auto);

TorusFibre torus_fibre(const ChartSpec& chart, std::span<const cplx> z);

// Components of {sum a_i alpha_i = const} in the k-torus (gcd; 1 when k = 0).
int alpha_fibre_components(std::span<const int> exponents);

// Component of the level set containing the angles.
int alpha_component_index(std::span<const int> exponents, std::span<const double> alpha, double theta);

// Permutation of level-set components after the level goes once around the
// circle: component j goes to perm[j].
std::vector<int> monodromy_permutation(std::span<const int> exponents, double theta);

// Sample of the level set for plotting (k <= 2): rows (alpha_1[, alpha_2], component).
std::vector<std::vector<double>> alpha_level_set(std::span<const int> exponents, double theta, int n);

// Points of the fibre of r_c over p when k(p) = 1: a_i points.
std::vector<CPoint> complex_fibre_points(const ChartSpec& chart, std::span<const cplx> p, cplx c);

struct UniversalPoint {
  PolarPoint base;
  double rho = 0.0;
  LiftedAngle angle;
};

// Lifts arg f continuously along the path (64 substeps per segment). The
// start angle must lie over arg f(path[0]). LiftError if |f| gets too small.
UniversalPoint universal_trivialization(const ComplexRetraction& cr, std::span<const CPoint> path,
                                        LiftedAngle start);
UniversalPoint deck_shift(const UniversalPoint& u, std::int64_t k = 1);

struct MilnorStratum {
  std::vector<std::string> components;
  TorusFibre torus;
  int chi_stratum = 0;
  int chi_level = 0;  // m points when k = 1, 0 otherwise
  int contribution = 0;
  int level_components = 1;
};

struct MilnorFibration {
  std::string point;
  std::vector<MilnorStratum> strata;
  int pi0 = 0;
  int chi = 0;
};

// Optional subdivision of one stratum into pieces with the given Euler
// characteristics.
struct MilnorRefinement {
  std::vector<std::string> components;
  std::vector<int> piece_chis;
};

MilnorFibration milnor_fibration(const NCModel& model, const std::string& point,
                                 const std::vector<MilnorRefinement>& refinements = {});
// At a chart point where the model itself is the resolution.
MilnorFibration milnor_fibration_at(const ChartSpec& chart, std::span<const double> x);

struct Condition3Row {
  std::string stratum;  // canonical stratum of X
  std::string chart;
  Point witness;
  std::string target;  // declared stratum hit
  int rank = 0;
  int expected = 0;
  bool pure = true;  // all samples in one declared stratum
  bool pass = true;
};

struct Condition3Report {
  std::string stratification;
  bool pass = true;
  bool expect_pass = true;
  bool strict_union = true;  // preimages are unions of whole components
  std::vector<Condition3Row> rows;
};

Condition3Report condition3_check(const NCModel& model, const std::string& stratification, int samples = 20,
                                  std::uint64_t seed = 7);

}  // namespace ncr
