#include "ncr/cut.hpp"

#include <cmath>

#include "ncr/errors.hpp"

namespace ncr {

int SignSheet::at(int coord) const {
  auto it = signs.find(coord);
  if (it == signs.end()) throw DomainError("sheet has no sign for coordinate " + std::to_string(coord + 1));
  return it->second;
}

std::string SignSheet::label() const {
  std::string s;
  for (const auto& [c, e] : signs) s += e > 0 ? '+' : '-';
  return s;
}

std::vector<SignSheet> cut_chart(const ChartSpec& chart) {
  std::vector<int> coords = chart.divisor_coords();
  const std::size_t m = coords.size();
  std::vector<SignSheet> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    SignSheet s;
    for (std::size_t b = 0; b < m; ++b) s.signs[coords[b]] = (mask >> (m - 1 - b)) & 1u ? -1 : 1;
    out.push_back(std::move(s));
  }
  return out;
}

bool sheet_compatible(const ChartSpec& chart, const SignSheet& sheet, std::span<const double> x) {
  for (const auto& [c, e] : sheet.signs)
    if (e * x[c] < -chart.zero_tol()) return false;
  return true;
}

Point project(const CutPoint& p) { return p.x; }

std::vector<CutPoint> fibre(const ChartSpec& chart, std::span<const double> x) {
  if (!chart.in_domain(x)) throw DomainError("point outside the domain of chart '" + chart.id + "'");
  std::vector<CutPoint> out;
  for (auto& s : cut_chart(chart))
    if (sheet_compatible(chart, s, x)) out.push_back({chart.id, Point(x.begin(), x.end()), std::move(s)});
  return out;
}

CutPoint deck_action(const ChartSpec& chart, const std::string& component, const CutPoint& p) {
  int c = chart.coord_of(component);
  if (c < 0) throw DomainError("component '" + component + "' does not meet chart '" + chart.id + "'");
  CutPoint q = p;
  q.sheet.signs[c] = -q.sheet.at(c);
  return q;
}

CutPoint reflect_sheet(const ChartSpec& chart, const std::string& component, const CutPoint& p) {
  CutPoint q = deck_action(chart, component, p);
  int c = chart.coord_of(component);
  q.x[c] = -q.x[c];
  return q;
}

int sheet_side(const ChartSpec& chart, const SignSheet& sheet) {
  std::vector<double> centre(chart.dim, 0.0);
  int s = chart.unit_factor.eval(centre) > 0 ? 1 : -1;
  for (const auto& [c, e] : sheet.signs)
    if (chart.exponents[c] % 2 == 1) s *= e;
  return s;
}

bool PmSplit::plus(const CutPoint& p) const { return sheet_side(model->chart(p.chart), p.sheet) > 0; }
bool PmSplit::minus(const CutPoint& p) const { return sheet_side(model->chart(p.chart), p.sheet) < 0; }

std::vector<SignSheet> PmSplit::plus_sheets(const std::string& chart) const {
  std::vector<SignSheet> out;
  const ChartSpec& c = model->chart(chart);
  for (auto& s : cut_chart(c))
    if (sheet_side(c, s) > 0) out.push_back(std::move(s));
  return out;
}

std::vector<SignSheet> PmSplit::minus_sheets(const std::string& chart) const {
  std::vector<SignSheet> out;
  const ChartSpec& c = model->chart(chart);
  for (auto& s : cut_chart(c))
    if (sheet_side(c, s) < 0) out.push_back(std::move(s));
  return out;
}

PmSplit split_pm(const NCModel& model) {
  for (const auto& chart : model.charts) {
    if (chart.field != FieldKind::Real) throw DomainError("the +/- split needs a real model");
    int sign = 0;
    for (const Point& p : chart_grid(chart)) {
      double g = chart.unit_factor.eval(p);
      int s = g > 1e-12 ? 1 : (g < -1e-12 ? -1 : 0);
      if (s == 0 || (sign != 0 && s != sign))
        throw ModelError("unit factor of chart '" + chart.id + "' vanishes on the sample grid");
      sign = s;
    }
  }
  return PmSplit{&model};
}

CutPoint transport(const NCModel& model, const Transition& t, const CutPoint& p) {
  if (p.chart != t.source) throw DomainError("cut point is not in the source chart of '" + t.id + "'");
  if (!model.in_overlap(t, p.x)) throw DomainError("cut point is outside the overlap of '" + t.id + "'");
  const ChartSpec& src = model.chart(t.source);
  const ChartSpec& dst = model.chart(t.target);
  CutPoint q;
  q.chart = dst.id;
  q.x = t.apply(p.x);
  for (int c : dst.divisor_coords()) {
    const std::string& comp = dst.divisor_labels.at(c);
    auto sd = t.sign_data.find(comp);
    int src_coord = src.coord_of(comp);
    if (sd != t.sign_data.end() && src_coord >= 0)
      q.sheet.signs[c] = p.sheet.at(src_coord) * sd->second;
    else
      q.sheet.signs[c] = q.x[c] < 0 ? -1 : 1;
  }
  return q;
}

int transport_sign(const NCModel& model, const std::string& component, const std::vector<std::string>& loop,
                   int sign) {
  for (const auto& id : loop) {
    const Transition& t = model.transition(id);
    auto it = t.sign_data.find(component);
    if (it == t.sign_data.end())
      throw DomainError("transition '" + id + "' carries no sign for '" + component + "'");
    sign *= it->second;
  }
  return sign;
}

}  // namespace ncr
