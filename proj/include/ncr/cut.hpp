#pragma once

// The cut of M along X: one sign sheet per choice of sign for the divisor
// coordinates of a chart. Sheets are kept chart-local and transported lazily
// through transitions.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ncr/ncmodel.hpp"

namespace ncr {

struct SignSheet {
  std::map<int, int> signs;  // divisor coordinate -> +1 / -1

  int at(int coord) const;
  std::string label() const;  // e.g. "+-"
  friend bool operator==(const SignSheet&, const SignSheet&) = default;
  friend auto operator<=>(const SignSheet&, const SignSheet&) = default;
};

struct CutPoint {
  std::string chart;
  Point x;
  SignSheet sheet;
  friend bool operator==(const CutPoint&, const CutPoint&) = default;
};

// All 2^m sheets, m = number of divisor coordinates; "+" before "-" per
// coordinate, first coordinate slowest.
std::vector<SignSheet> cut_chart(const ChartSpec& chart);

// eps_i x_i >= -tol for every divisor coordinate.
bool sheet_compatible(const ChartSpec& chart, const SignSheet& sheet, std::span<const double> x);

Point project(const CutPoint& p);
std::vector<CutPoint> fibre(const ChartSpec& chart, std::span<const double> x);

CutPoint deck_action(const ChartSpec& chart, const std::string& component, const CutPoint& p);

// Deck action composed with the reflection x_c -> -x_c, so that points of the
// open sheet go to points of the open sheet.
CutPoint reflect_sheet(const ChartSpec& chart, const std::string& component, const CutPoint& p);

// Sign of f on the interior of the sheet: sign(g) * prod eps_i^{a_i}.
int sheet_side(const ChartSpec& chart, const SignSheet& sheet);

struct PmSplit {
  const NCModel* model = nullptr;
  bool plus(const CutPoint& p) const;
  bool minus(const CutPoint& p) const;
  // Sheets of a chart on each side.
  std::vector<SignSheet> plus_sheets(const std::string& chart) const;
  std::vector<SignSheet> minus_sheets(const std::string& chart) const;
};

// Requires a real model; checks the unit factor sign on the sample grid.
PmSplit split_pm(const NCModel& model);

// Move a cut point through a transition; shared components follow the sign
// data, the others take the sign forced by the image point.
CutPoint transport(const NCModel& model, const Transition& t, const CutPoint& p);

// Sign of one component after following a loop of transitions.
int transport_sign(const NCModel& model, const std::string& component, const std::vector<std::string>& loop,
                   int sign);

}  // namespace ncr
