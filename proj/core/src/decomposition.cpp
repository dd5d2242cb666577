#include "ozlab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "ozlab/error.hpp"

namespace oz {

namespace {

double height(const DualVector& t, const Site& x) { return dot(t.t, to_vec(x)); }

// s_t(w) - delta xi(w); negative iff w in Y.
double cone_gap(const Vec& w, const DualVector& t, double delta, const NormModel& norm) {
  double xi = norm(w);
  if (!(xi > 0)) return 0.0;
  return xi - dot(t.t, w) - delta * xi;
}

Vec sphere_point(const Vec& dir, double radius, const NormModel& norm) {
  double s = radius / norm(dir);
  return {dir[0] * s, dir[1] * s, dir[2] * s};
}

bool suffix_inside(const Line& line, int from, int to, const DualVector& t, double K, double delta,
                   const NormModel& norm) {
  const Site& base = line.vertices[from];
  for (int k = from + 1; k <= to; ++k)
    if (!in_inflated_cone(to_vec(line.vertices[k] - base), t, K, delta, norm)) return false;
  return true;
}

bool has_correct_break(const Line& line, const DualVector& t, double K, double delta, const NormModel& norm) {
  for (const auto& b : find_break_points(line, t))
    if (suffix_inside(line, b.index, line.length(), t, K, delta, norm)) return true;
  return false;
}

Line slice(const Line& line, int a, int b) {
  Line out;
  out.vertices.assign(line.vertices.begin() + a, line.vertices.begin() + b + 1);
  return out;
}

}  // namespace

std::vector<BreakPoint> find_break_points(const Line& line, const DualVector& t) {
  std::vector<BreakPoint> out;
  const int n = line.length();
  if (n < 2) return out;
  std::vector<double> h(n + 1);
  for (int k = 0; k <= n; ++k) h[k] = height(t, line.vertices[k]);
  std::vector<double> prefix_max(n + 1), suffix_min(n + 1);
  prefix_max[0] = -INFINITY;
  for (int k = 1; k <= n; ++k) prefix_max[k] = std::max(prefix_max[k - 1], h[k - 1]);
  suffix_min[n] = INFINITY;
  for (int k = n - 1; k >= 0; --k) suffix_min[k] = std::min(suffix_min[k + 1], h[k + 1]);
  for (int l = 1; l < n; ++l) {
    if (!(prefix_max[l] < h[l] && h[l] < suffix_min[l])) continue;
    // strict heights already force a single visit
    out.push_back({l, line.vertices[l], false});
  }
  return out;
}

bool in_inflated_cone(const Vec& v, const DualVector& t, double K, double delta, const NormModel& norm) {
  const double R = 2.0 * K;
  if (norm(v) <= R) return true;
  if (cone_gap(v, t, delta, norm) < 0) return true;
  auto gap_at = [&](const Vec& dir) {
    Vec u = sphere_point(dir, R, norm);
    return cone_gap(v - u, t, delta, norm);
  };
  if (norm.dim() == 2) {
    auto f = [&](double phi) { return gap_at({std::cos(phi), std::sin(phi), 0.0}); };
    const int n = 64;
    const double step = 2.0 * std::numbers::pi / n;
    int best = 0;
    double fbest = INFINITY;
    for (int k = 0; k < n; ++k) {
      double val = f(k * step);
      if (val < 0) return true;
      if (val < fbest) fbest = val, best = k;
    }
    auto r = boost::math::tools::brent_find_minima(f, (best - 1) * step, (best + 1) * step, 26);
    return r.second < 0;
  }
  const int n = 256;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    double z = 1.0 - 2.0 * (k + 0.5) / n;
    double r = std::sqrt(1.0 - z * z);
    if (gap_at({r * std::cos(golden * k), r * std::sin(golden * k), z}) < 0) return true;
  }
  return false;
}

bool is_correct_break(const Line& line, int l, const DualVector& t, double K, double delta, const NormModel& norm) {
  auto bps = find_break_points(line, t);
  bool is_break = std::any_of(bps.begin(), bps.end(), [&](const BreakPoint& b) { return b.index == l; });
  if (!is_break) return false;
  return suffix_inside(line, l, line.length(), t, K, delta, norm);
}

IrreducibleDecomposition irreducible_decompose(const Line& line, const DualVector& t, double K, double delta,
                                               const NormModel& norm) {
  IrreducibleDecomposition dec;
  auto bps = find_break_points(line, t);
  std::vector<int> C;  // right to left
  int next = line.length();
  for (auto it = bps.rbegin(); it != bps.rend(); ++it) {
    if (suffix_inside(line, it->index, next, t, K, delta, norm)) {
      C.push_back(it->index);
      next = it->index;
    }
  }
  if (C.empty()) {
    dec.mu = line;
    dec.eta.vertices = {line.back()};
    dec.degenerate = true;
    return dec;
  }
  std::reverse(C.begin(), C.end());
  dec.mu = slice(line, 0, C.front());
  for (std::size_t i = 0; i + 1 < C.size(); ++i) dec.gammas.push_back(slice(line, C[i], C[i + 1]));
  dec.eta = slice(line, C.back(), line.length());
  for (int c : C) dec.breaks.push_back(line.vertices[c]);
  return dec;
}

Line reconstruct(const IrreducibleDecomposition& dec) {
  Line out = dec.mu;
  for (const auto& g : dec.gammas) out = concat(out, g);
  return concat(out, dec.eta);
}

bool is_irreducible(const Line& gamma, const DualVector& t, double K, double delta, const NormModel& norm) {
  if (gamma.trivial()) return false;
  const int k = gamma.length();
  double h0 = height(t, gamma.front()), hk = height(t, gamma.back());
  if (!(h0 < hk)) return false;
  for (int l = 1; l < k; ++l) {
    double h = height(t, gamma.vertices[l]);
    if (!(h0 < h && h < hk)) return false;
  }
  if (!suffix_inside(gamma, 0, k, t, K, delta, norm)) return false;
  return !has_correct_break(gamma, t, K, delta, norm);
}

bool satisfies_p4(const Line& mu, const DualVector& t, double K, double delta, const NormModel& norm) {
  return !has_correct_break(mu, t, K, delta, norm);
}

bool satisfies_p2(const Line& eta, const DualVector& t, double K, double delta, const NormModel& norm) {
  if (eta.trivial()) return true;
  return suffix_inside(eta, 0, eta.length(), t, K, delta, norm) && !has_correct_break(eta, t, K, delta, norm);
}

RepresentationCheck verify_irreducible_representation(const LatticeGraph& g, const Site& x, const Site& y,
                                                      double beta, const DualVector& t, double K, double delta,
                                                      const NormModel& norm) {
  RepresentationCheck rc;
  std::map<std::vector<std::vector<Site>>, double> groups;
  for (const auto& term : enumerate_lines(g, x, y, beta)) {
    rc.lhs += term.group_weight;
    ++rc.lines;
    if (term.line.trivial()) continue;
    auto dec = irreducible_decompose(term.line, t, K, delta, norm);
    if (dec.degenerate) {
      rc.degenerate_mass += term.q;
      ++rc.degenerate_lines;
      continue;
    }
    std::vector<std::vector<Site>> key{dec.mu.vertices};
    for (const auto& gm : dec.gammas) {
      key.push_back(gm.vertices);
      ++rc.pieces[displacement(gm)];
    }
    key.push_back(dec.eta.vertices);
    groups[key] += term.q;
  }
  for (const auto& [k, w] : groups) rc.rhs += w;
  rc.groups = long(groups.size());
  rc.defect = std::abs(rc.lhs - rc.rhs - rc.degenerate_mass);
  return rc;
}

}  // namespace oz
