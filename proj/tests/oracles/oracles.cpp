#include "oracles.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

namespace {
constexpr double kTau = 6.283185307179586476925286766559;
}

int torus_components_bfs(std::span<const int> a, int n, double theta) {
  const int k = static_cast<int>(a.size());
  if (k == 0) return 1;
  std::size_t cells = 1;
  for (int i = 0; i < k; ++i) cells *= static_cast<std::size_t>(n);
  const double w = kTau / n;

  // Range of h(t) = sum a_i t_i - theta over a closed cell, in units of 2pi.
  auto sheets_in = [&](const std::vector<int>& idx) {
    double lo = -theta, hi = -theta;
    for (int i = 0; i < k; ++i) {
      double e0 = a[i] * idx[i] * w, e1 = a[i] * (idx[i] + 1) * w;
      lo += std::min(e0, e1);
      hi += std::max(e0, e1);
    }
    std::vector<long> out;
    for (long m = static_cast<long>(std::ceil(lo / kTau)); m * kTau <= hi; ++m) out.push_back(m);
    return out;
  };
  auto decode = [&](std::size_t c) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) {
      idx[i] = static_cast<int>(c % n);
      c /= n;
    }
    return idx;
  };
  auto encode = [&](const std::vector<int>& idx) {
    std::size_t c = 0;
    for (int i = k - 1; i >= 0; --i) c = c * n + idx[i];
    return c;
  };

  // State (cell, m); m is the sheet index in the cell's own lift.
  std::set<std::pair<std::size_t, long>> seen;
  int components = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    for (long m : sheets_in(decode(c))) {
      if (seen.count({c, m})) continue;
      ++components;
      std::queue<std::pair<std::size_t, long>> q;
      q.push({c, m});
      seen.insert({c, m});
      while (!q.empty()) {
        auto [cc, mm] = q.front();
        q.pop();
        const std::vector<int> idx = decode(cc);
        // Every neighbour sharing at least a vertex.
        std::vector<int> step(k, -1);
        for (;;) {
          bool zero = std::all_of(step.begin(), step.end(), [](int s) { return s == 0; });
          if (!zero) {
            std::vector<int> nb(k);
            long shift = 0;
            for (int i = 0; i < k; ++i) {
              int v = idx[i] + step[i];
              if (v < 0) {
                v += n;
                shift += a[i];  // t_i jumped up by 2pi
              } else if (v >= n) {
                v -= n;
                shift -= a[i];
              }
              nb[i] = v;
            }
            const long target = mm + shift;
            auto ms = sheets_in(nb);
            if (std::find(ms.begin(), ms.end(), target) != ms.end()) {
              std::pair<std::size_t, long> s{encode(nb), target};
              if (seen.insert(s).second) q.push(s);
            }
          }
          int d = 0;
          while (d < k && ++step[d] == 2) step[d++] = -1;
          if (d == k) break;
        }
      }
    }
  }
  return components;
}

int milnor_number_2d(const std::vector<Term>& f, int max_degree) {
  std::vector<Term> fx, fy;
  for (const auto& t : f) {
    if (t.i > 0) fx.push_back({t.c * t.i, t.i - 1, t.j});
    if (t.j > 0) fy.push_back({t.c * t.j, t.i, t.j - 1});
  }
  auto degree = [](const std::vector<Term>& p) {
    int d = 0;
    for (const auto& t : p) d = std::max(d, t.i + t.j);
    return d;
  };
  int last = -1, stable = 0;
  for (int D = 2; D <= max_degree; ++D) {
    std::map<std::pair<int, int>, int> col;
    for (int s = 0; s <= D; ++s)
      for (int i = 0; i <= s; ++i) col[{i, s - i}] = static_cast<int>(col.size());
    std::vector<Eigen::VectorXd> rows;
    for (const auto* p : {&fx, &fy}) {
      const int dp = degree(*p);
      for (int s = 0; s + dp <= D; ++s)
        for (int i = 0; i <= s; ++i) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(col.size()));
          for (const auto& t : *p) r(col[{t.i + i, t.j + s - i}]) += t.c;
          rows.push_back(r);
        }
    }
    int rank = 0;
    if (!rows.empty()) {
      Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(col.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) M.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      lu.setThreshold(1e-10);
      rank = static_cast<int>(lu.rank());
    }
    const int mu = static_cast<int>(col.size()) - rank;
    stable = mu == last ? stable + 1 : 0;
    last = mu;
    if (stable >= 3) return mu;
  }
  throw std::runtime_error("Milnor number did not stabilize");
}

int level_components_2d(const std::function<double(double, double)>& F, double c, double r, int grid) {
  const double h = 2.0 * r / grid;
  auto val = [&](int i, int j) { return F(-r + i * h, -r + j * h) - c; };
  std::vector<double> v(static_cast<std::size_t>(grid + 1) * (grid + 1));
  for (int i = 0; i <= grid; ++i)
    for (int j = 0; j <= grid; ++j) v[static_cast<std::size_t>(i) * (grid + 1) + j] = val(i, j);
  auto at = [&](int i, int j) { return v[static_cast<std::size_t>(i) * (grid + 1) + j]; };

  std::vector<int> parent(static_cast<std::size_t>(grid) * grid, -1);
  auto cell = [&](int i, int j) { return i * grid + j; };
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  auto active = [&](int i, int j) {
    const double cx = -r + (i + 0.5) * h, cy = -r + (j + 0.5) * h;
    if (cx * cx + cy * cy > r * r) return false;
    double lo = std::min({at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)});
    double hi = std::max({at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)});
    return lo <= 0.0 && hi > 0.0;
  };
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      if (active(i, j)) parent[cell(i, j)] = cell(i, j);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      if (parent[cell(i, j)] < 0) continue;
      // Joined through a shared edge that itself changes sign.
      if (i + 1 < grid && parent[cell(i + 1, j)] >= 0 && std::min(at(i + 1, j), at(i + 1, j + 1)) <= 0.0 &&
          std::max(at(i + 1, j), at(i + 1, j + 1)) > 0.0)
        parent[find(cell(i, j))] = find(cell(i + 1, j));
      if (j + 1 < grid && parent[cell(i, j + 1)] >= 0 && std::min(at(i, j + 1), at(i + 1, j + 1)) <= 0.0 &&
          std::max(at(i, j + 1), at(i + 1, j + 1)) > 0.0)
        parent[find(cell(i, j))] = find(cell(i, j + 1));
    }
  std::set<int> roots;
  for (int x = 0; x < grid * grid; ++x)
    if (parent[x] >= 0) roots.insert(find(x));
  return static_cast<int>(roots.size());
}

double directional_derivative(const std::function<double(std::span<const double>)>& phi, std::span<const double> x,
                              std::span<const double> v, double h) {
  std::vector<double> p(x.begin(), x.end()), m(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] += h * v[i];
    m[i] -= h * v[i];
  }
  return (phi(p) - phi(m)) / (2.0 * h);
}

std::vector<std::vector<double>> x2y2_fibre(double c) {
  const double s = std::sqrt(std::sqrt(c));
  return {{s, s}, {s, -s}, {-s, s}, {-s, -s}};
}

}  // namespace oracle
