#pragma once

// Quadrants, stratifications with normal crossings and sampled verification
// of piecewise analytic maps.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncr/expr.hpp"
#include "ncr/ncmodel.hpp"

namespace ncr {

// Partition of the coordinate indices (0-based) by sign.
struct Quadrant {
  std::vector<int> zero, plus, minus;

  int size() const { return static_cast<int>(zero.size() + plus.size() + minus.size()); }
  // Disjoint and covering {0..n-1}.
  bool is_partition(int n) const;
  bool contains(std::span<const double> x, double tol) const;
  std::string label() const;  // e.g. "+0-"
  friend bool operator==(const Quadrant&, const Quadrant&) = default;
};

Quadrant quadrant_of_point(std::span<const double> x, double tol);

// One chart-local piece of a stratum: the quadrant over the chart's divisor
// coordinates (re-indexed 0..m-1 in ascending coordinate order); every other
// coordinate is free.
struct StratumPiece {
  std::string chart;
  std::vector<int> divisor_coords;
  Quadrant quadrant;

  bool contains(std::span<const double> x, double tol) const;
};

struct Stratum {
  std::string label;
  int depth = 0;
  std::vector<std::string> components;  // sorted, empty for the open stratum
  std::vector<StratumPiece> pieces;

  bool contains(const std::string& chart, std::span<const double> x, double tol) const;
};

struct Stratification {
  std::vector<Stratum> strata;

  // Index of the stratum containing (chart, x); -1 if none.
  int locate(const std::string& chart, std::span<const double> x, double tol) const;
};

// Strata of X by component set. Component sets come from the dual complex.
Stratification canonical_stratification(const NCModel& model);
// Adds the open stratum M \ X.
Stratification associated_stratification(const NCModel& model);

// Affine constraint  coeffs . x + offset  (== 0 | <= 0 | < 0).
struct Constraint {
  enum class Kind { Eq, Le, Lt };
  std::vector<double> coeffs;
  double offset = 0.0;
  Kind kind = Kind::Le;

  double value(std::span<const double> x) const;
  bool holds(std::span<const double> x, double tol) const;
};

struct Polyhedron {
  std::vector<Constraint> constraints;

  bool contains(std::span<const double> x, double tol) const;
  // Strict inequalities relaxed.
  bool closure_contains(std::span<const double> x, double tol) const;
};

// The closed pieces {eps_i x_i <= eps_j x_j for all j} of the sign quadrant
// U(eps) = {eps_i x_i >= 0}, together with the lattice of tie strata. The
// first k coordinates carry the signs; the remaining n - k are free.
struct MinSubstratification {
  std::vector<int> eps;
  int n = 0;
  std::vector<Polyhedron> pieces;
  // One stratum per nonempty subset T of {0..k-1}: the points where exactly
  // the coordinates in T achieve the minimum.
  std::vector<std::vector<int>> tie_sets;
  std::vector<Polyhedron> strata;

  std::vector<int> pieces_containing(std::span<const double> x, double tol) const;
  // Coordinates achieving the minimum of eps_i x_i (within tol).
  std::vector<int> tie_set(std::span<const double> x, double tol) const;
  // Coordinates of piece i in which it is the closed positive quadrant:
  // y_i = eps_i x_i, y_j = eps_j x_j - eps_i x_i (j != i, j < k), rest unchanged.
  std::vector<double> rotated(int piece, std::span<const double> x) const;
};

MinSubstratification min_substratification(std::span<const int> eps, int n);

// A map defined piecewise on closed polyhedra by polynomial expressions.
struct PAMap {
  int dim = 0;
  double radius = 1.0;  // sampling box half-width
  struct Piece {
    Polyhedron domain;  // closed
    std::vector<Expr> map;
  };
  std::vector<Piece> pieces;
  std::vector<Polyhedron> source_strata;
  std::vector<Polyhedron> target_strata;
};

struct PAWitness {
  std::string kind;  // "boundary_mismatch" | "stratum_split" | "no_target"
  std::vector<double> point;
  int piece = -1;
  int other = -1;
};

struct PACheck {
  bool ok = true;
  std::optional<PAWitness> witness;
  int boundary_samples = 0;
  int stratum_samples = 0;
};

PACheck is_piecewise_analytic(const PAMap& map, int samples_per_boundary = 100, std::uint64_t seed = 1);

// Identity map on the closed pieces of the quadrant decomposition of a chart.
PAMap identity_map(const ChartSpec& chart, const Stratification& strat);

// Rejection sampling of a polyhedron inside the box [-r, r]^n; equalities are
// enforced by projecting onto their affine span.
std::vector<std::vector<double>> sample_polyhedron(const Polyhedron& poly, int n, double r, int count,
                                                   std::uint64_t seed, int max_attempts = 20000);

std::string stratification_to_json(const Stratification& s);
std::string witness_csv_header();
std::string witness_csv_row(const std::string& chart, std::span<const double> x, const std::string& kind);

}  // namespace ncr
