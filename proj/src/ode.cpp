#include "ncr/ode.hpp"

#include <algorithm>
#include <cmath>

#include "ncr/errors.hpp"

namespace ncr {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Step {
  State y;
  double err;
};

State axpy(const State& y, double h, std::initializer_list<std::pair<double, const State*>> terms) {
  State out = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = 0.0;
    for (const auto& [c, k] : terms) s += c * (*k)[i];
    out[i] += h * s;
  }
  return out;
}

Step dp_step(const Rhs& f, const State& y, double h, double tol) {
  State k1 = f(y);
  State k2 = f(axpy(y, h, {{a21, &k1}}));
  State k3 = f(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
  State k4 = f(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  State k5 = f(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  State k6 = f(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  State y5 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  State k7 = f(y5);
  double err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    double scale = tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
    err = std::max(err, std::abs(e) / scale);
  }
  return {std::move(y5), err};
}

bool finite(const State& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

OdeResult integrate(const Rhs& rhs, const State& y0, const OdeOptions& opts,
                    const std::function<double(const State&)>& event) {
  OdeResult res;
  res.t.push_back(0.0);
  res.y.push_back(y0);
  if (event && event(y0) <= 0.0) {
    res.event_hit = true;
    return res;
  }
  double t = 0.0, h = std::min(opts.h0, opts.h_max);
  State y = y0;
  while (t < opts.t_max) {
    if (res.steps >= opts.max_steps) throw FlowError("step budget exhausted");
    h = std::min(h, opts.t_max - t);
    Step s = dp_step(rhs, y, h, opts.tol);
    ++res.steps;
    if (!finite(s.y) || !std::isfinite(s.err)) {
      h *= 0.25;
      if (h < 1e-15) throw FlowError("field evaluation is not finite");
      continue;
    }
    if (s.err > 1.0) {
      h *= std::max(0.1, 0.9 * std::pow(s.err, -0.2));
      if (h < 1e-15) throw FlowError("step size underflow");
      continue;
    }
    if (event && event(s.y) <= 0.0) {
      // Bisection on the step length; each trial is a fresh step from y.
      double lo = 0.0, hi = h;
      State y_hi = s.y;
      while (hi - lo > opts.event_tol) {
        double mid = 0.5 * (lo + hi);
        State ym = dp_step(rhs, y, mid, opts.tol).y;
        if (event(ym) <= 0.0) {
          hi = mid;
          y_hi = std::move(ym);
        } else {
          lo = mid;
        }
      }
      res.t.push_back(t + hi);
      res.y.push_back(std::move(y_hi));
      res.event_hit = true;
      return res;
    }
    t += h;
    y = std::move(s.y);
    res.t.push_back(t);
    res.y.push_back(y);
    double grow = s.err > 0 ? 0.9 * std::pow(s.err, -0.2) : 5.0;
    h = std::min(opts.h_max, h * std::clamp(grow, 0.2, 5.0));
  }
  return res;
}

}  // namespace ncr
