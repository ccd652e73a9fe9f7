#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace ncr {

using State = std::vector<double>;
using Rhs = std::function<State(const State&)>;

struct OdeOptions {
  double tol = 1e-10;        // local error per step, mixed absolute/relative
  double event_tol = 1e-12;  // bisection width in time
  int max_steps = 100000;
  double h0 = 1e-3;
  double h_max = 0.05;
  double t_max = std::numeric_limits<double>::infinity();
};

// The integration stops the first time `event` changes from > 0 to <= 0.
struct OdeResult {
  std::vector<double> t;
  std::vector<State> y;
  bool event_hit = false;
  int steps = 0;
};

// Autonomous Dormand-Prince 5(4). Throws FlowError on budget exhaustion or a
// non-finite state. `event` may be empty.
OdeResult integrate(const Rhs& rhs, const State& y0, const OdeOptions& opts,
                    const std::function<double(const State&)>& event = {});

}  // namespace ncr
