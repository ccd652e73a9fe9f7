#pragma once

// Independent reference computations used by the tests. None of them calls
// into the library's own formulas for the quantity being checked.

#include <functional>
#include <span>
#include <vector>

namespace oracle {

// Components of {sum a_i t_i = theta mod 2pi} on the k-torus, found by a
// breadth-first search over an N^k grid of cells. Each cell is tagged with the
// lifted sheet index m of every plane h = theta + 2pi m meeting it; wrapping
// around the torus in direction i shifts m by a_i.
int torus_components_bfs(std::span<const int> exponents, int n, double theta);

// Milnor number of an isolated singularity at the origin of a polynomial in
// two variables, given as {coefficient, i, j} terms: dim of the quotient of
// polynomials of degree <= D by the span of monomial multiples of the partials,
// increased in D until the value stabilizes. Assumes the origin is the only
// critical point.
struct Term {
  double c;
  int i;
  int j;
};
int milnor_number_2d(const std::vector<Term>& f, int max_degree = 14);

// Connected pieces of {F = c} inside the disc of radius r around the origin,
// counted by marching squares on a grid with union-find over cells whose
// corners change sign.
int level_components_2d(const std::function<double(double, double)>& F, double c, double r, int grid);

// Central finite difference of phi along v at x.
double directional_derivative(const std::function<double(std::span<const double>)>& phi, std::span<const double> x,
                              std::span<const double> v, double h = 1e-6);

// All points x in the rectangle with x1^2 x2^2 = c, x1 = +-x2 (closed-form solve).
std::vector<std::vector<double>> x2y2_fibre(double c);

}  // namespace oracle
