#include "ozlab/random_line.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/special_functions/legendre.hpp>

#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"

namespace oz {

bool Line::contains(const Site& z) const { return std::find(vertices.begin(), vertices.end(), z) != vertices.end(); }

Line translate(const Line& l, const Site& offset) {
  Line out = l;
  for (Site& v : out.vertices) v = v + offset;
  return out;
}

Site displacement(const Line& l) { return l.vertices.empty() ? Site{0, 0, 0} : l.back() - l.front(); }

std::vector<int> line_edges(const LatticeGraph& g, const Line& l) {
  std::vector<int> out;
  EdgeSet seen = 0;
  bool small = g.edge_count() <= 64;
  for (int i = 0; i + 1 < int(l.vertices.size()); ++i) {
    int a = g.index(l.vertices[i]), b = g.index(l.vertices[i + 1]);
    int e = (a < 0 || b < 0) ? -1 : g.edge_between(a, b);
    if (e < 0) throw ValidationError("line step " + to_string(l.vertices[i], g.dim()) + "->" +
                                     to_string(l.vertices[i + 1], g.dim()) + " is not an edge of the graph");
    if (small) {
      if (has_edge(seen, e)) throw ValidationError("line repeats an edge");
      seen |= edge_bit(e);
    } else if (std::find(out.begin(), out.end(), e) != out.end()) {
      throw ValidationError("line repeats an edge");
    }
    out.push_back(e);
  }
  return out;
}

EdgeSet line_edge_set(const LatticeGraph& g, const Line& l) {
  g.all_edges();
  EdgeSet s = 0;
  for (int e : line_edges(g, l)) s |= edge_bit(e);
  return s;
}

EdgeSet compute_delta(const LatticeGraph& g, const Line& l) {
  if (l.trivial()) return 0;
  std::vector<int> edges = line_edges(g, l);
  EdgeSet on_line = 0;
  for (int e : edges) on_line |= edge_bit(e);
  for (std::size_t i = 1; i < l.vertices.size(); ++i)
    if (l.vertices[i] == l.front()) throw ValidationError("not a backward line: revisits its start");
  EdgeSet delta = 0;
  for (int j = int(edges.size()) - 1; j >= 0; --j) {
    int cur = g.index(l.vertices[j + 1]);
    int chosen = edges[j];
    for (int e : g.incident(cur)) {
      if (e == chosen) break;
      if (!has_edge(delta, e) && has_edge(on_line, e))
        throw ValidationError("not a backward line: an earlier edge of the line is still free");
    }
    if (has_edge(delta, chosen)) throw ValidationError("not a backward line: step uses a consumed edge");
    for (int e : g.incident(cur)) {
      delta |= edge_bit(e);
      if (e == chosen) break;
    }
  }
  return delta;
}

ExtractedLine extract_line(const LatticeGraph& g, EdgeSet D, const Site& x, const Site& y) {
  g.all_edges();
  int xi = g.index(x), yi = g.index(y);
  if (xi < 0 || yi < 0) throw ValidationError("endpoint not in graph");
  if (xi == yi) throw ValidationError("extraction needs x != y");
  auto bd = boundary(g, D);
  std::vector<Site> want{x, y};
  std::sort(want.begin(), want.end());
  if (bd != want) throw ValidationError("boundary mismatch");
  ExtractedLine out;
  std::vector<Site> seq{y};
  int cur = yi;
  for (int steps = 0; cur != xi; ++steps) {
    if (steps > g.edge_count()) throw ValidationError("malformed D");
    int found = -1;
    for (int e : g.incident(cur))
      if (!has_edge(out.delta, e) && has_edge(D, e)) {
        found = e;
        break;
      }
    if (found < 0) throw ValidationError("malformed D");
    for (int e : g.incident(cur)) {
      out.delta |= edge_bit(e);
      if (e == found) break;
    }
    cur = g.other(found, cur);
    seq.push_back(g.vertex(cur));
  }
  std::reverse(seq.begin(), seq.end());
  out.line.vertices = std::move(seq);
  return out;
}

// ------------------------------------------------------------ cycle space

namespace {

struct CycleSpace {
  std::vector<EdgeSet> basis;
  std::vector<EdgeSet> root_path;  // per vertex, tree path to its root
  std::vector<int> component;
};

CycleSpace cycle_space(const LatticeGraph& g, EdgeSet allowed) {
  CycleSpace cs;
  int n = g.vertex_count();
  cs.root_path.assign(n, 0);
  cs.component.assign(n, -1);
  EdgeSet tree = 0;
  int comp = 0;
  for (int r = 0; r < n; ++r) {
    if (cs.component[r] >= 0) continue;
    std::vector<int> queue{r};
    cs.component[r] = comp;
    for (std::size_t k = 0; k < queue.size(); ++k) {
      int v = queue[k];
      for (int e : g.incident(v)) {
        if (!has_edge(allowed, e)) continue;
        int w = g.other(e, v);
        if (cs.component[w] >= 0) continue;
        cs.component[w] = comp;
        cs.root_path[w] = cs.root_path[v] ^ edge_bit(e);
        tree |= edge_bit(e);
        queue.push_back(w);
      }
    }
    ++comp;
  }
  for (int e = 0; e < g.edge_count(); ++e)
    if (has_edge(allowed, e) && !has_edge(tree, e))
      cs.basis.push_back(edge_bit(e) ^ cs.root_path[g.edge(e).u] ^ cs.root_path[g.edge(e).v]);
  return cs;
}

std::vector<double> tanh_weights(const LatticeGraph& g, double beta) {
  std::vector<double> u(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) u[e] = std::tanh(beta * g.edge(e).J);
  return u;
}

double product(EdgeSet s, const std::vector<double>& u) {
  double p = 1.0;
  while (s) {
    int e = __builtin_ctzll(s);
    p *= u[e];
    s &= s - 1;
  }
  return p;
}

// Calls f(D) for every D in start + span(basis), Gray-code order.
template <class F>
void walk_coset(EdgeSet start, const std::vector<EdgeSet>& basis, int max_rank, F&& f) {
  if (int(basis.size()) > max_rank)
    throw ValidationError("too many edges: cycle rank " + std::to_string(basis.size()) + " exceeds " +
                          std::to_string(max_rank));
  EdgeSet D = start;
  f(D);
  const unsigned long long count = 1ULL << basis.size();
  for (unsigned long long k = 1; k < count; ++k) {
    D ^= basis[__builtin_ctzll(k)];
    f(D);
  }
}

}  // namespace

double even_polynomial(const LatticeGraph& g, EdgeSet allowed, double beta) {
  allowed &= g.all_edges();
  if (beta == 0.0) return 1.0;
  auto cs = cycle_space(g, allowed);
  auto u = tanh_weights(g, beta);
  double sum = 0.0;
  walk_coset(0, cs.basis, 30, [&](EdgeSet D) { sum += product(D, u); });
  return sum;
}

LineWeight line_weight(const LatticeGraph& g, const Line& l, double beta) {
  LineWeight out;
  EdgeSet all = g.all_edges();
  out.delta = compute_delta(g, l);
  out.w = 1.0;
  for (int e : line_edges(g, l)) out.w *= std::tanh(beta * g.edge(e).J);
  out.ratio = even_polynomial(g, all & ~out.delta, beta) / even_polynomial(g, all, beta);
  out.q = out.w * out.ratio;
  return out;
}

std::vector<LineTerm> enumerate_lines(const LatticeGraph& g, const Site& x, const Site& y, double beta) {
  EdgeSet all = g.all_edges();
  int xi = g.index(x), yi = g.index(y);
  if (xi < 0 || yi < 0) throw ValidationError("endpoint not in graph");
  if (xi == yi) {
    LineTerm t;
    t.line.vertices = {x};
    t.q = t.group_weight = 1.0;
    t.group_size = 1;
    return {t};
  }
  auto cs = cycle_space(g, all);
  if (cs.component[xi] != cs.component[yi]) return {};
  auto u = tanh_weights(g, beta);
  std::map<std::vector<Site>, LineTerm> groups;
  walk_coset(cs.root_path[xi] ^ cs.root_path[yi], cs.basis, 24, [&](EdgeSet D) {
    auto ex = extract_line(g, D, x, y);
    auto& t = groups[ex.line.vertices];
    if (t.group_size == 0) {
      t.line = ex.line;
      t.delta = ex.delta;
    }
    t.group_weight += product(D, u);
    ++t.group_size;
  });
  double Z = even_polynomial(g, all, beta);
  std::vector<LineTerm> out;
  for (auto& [k, t] : groups) {
    t.group_weight /= Z;
    t.q = line_weight(g, t.line, beta).q;
    out.push_back(std::move(t));
  }
  return out;
}

double representation_sum(const LatticeGraph& g, const Site& x, const Site& y, double beta) {
  double s = 0.0;
  for (const auto& t : enumerate_lines(g, x, y, beta)) s += t.q;
  return s;
}

std::pair<Line, Line> split_at(const Line& l, const Site& z) {
  int k = -1;
  for (int i = 0; i < int(l.vertices.size()); ++i)
    if (l.vertices[i] == z) k = i;
  if (k < 0) throw ValidationError("split vertex not on line");
  Line a, b;
  a.vertices.assign(l.vertices.begin(), l.vertices.begin() + k + 1);
  b.vertices.assign(l.vertices.begin() + k, l.vertices.end());
  return {a, b};
}

Line concat(const Line& a, const Line& b) {
  if (a.vertices.empty()) return b;
  if (b.vertices.empty()) return a;
  if (a.back() != b.front()) throw ValidationError("concatenation needs matching endpoints");
  Line out = a;
  out.vertices.insert(out.vertices.end(), b.vertices.begin() + 1, b.vertices.end());
  return out;
}

BKResult bk_check(const LatticeGraph& g, const Site& x, const Site& y, const Site& through, double beta) {
  BKResult r;
  for (const auto& t : enumerate_lines(g, x, y, beta))
    if (t.line.contains(through)) r.lhs += t.q;
  r.rhs = representation_sum(g, x, through, beta) * representation_sum(g, through, y, beta);
  r.ok = r.lhs <= r.rhs + 1e-12;
  return r;
}

double conditional_weight(const LatticeGraph& g, const Line& gamma, const Line& lambda, double beta) {
  Line joint = concat(gamma, lambda);
  double den = line_weight(g, lambda, beta).q;
  if (!(den > 0)) throw ValidationError("conditioning line has zero weight");
  return line_weight(g, joint, beta).q / den;
}

double decoupling_ratio(const LatticeGraph& g, const Line& gamma, const Line& eta, const Line& lambda1,
                        const Line& lambda2, double beta) {
  EdgeSet dg = compute_delta(g, gamma);
  EdgeSet d12 = compute_delta(g, lambda1) | compute_delta(g, lambda2);
  if (dg & d12) throw ValidationError("incompatible lines: Delta(gamma) meets Delta(lambda1) or Delta(lambda2)");
  Line l1 = concat(eta, lambda1), l2 = concat(eta, lambda2);
  return conditional_weight(g, gamma, l1, beta) / conditional_weight(g, gamma, l2, beta);
}

ExplicitWeightCheck explicit_weight_check(const LatticeGraph& g, const Line& l, double beta, int quad_points) {
  if (quad_points < 8) throw ValidationError("need at least 8 quadrature points");
  ExplicitWeightCheck out;
  out.direct = line_weight(g, l, beta).q;
  EdgeSet delta = compute_delta(g, l);
  double w = 1.0;
  for (int e : line_edges(g, l)) w *= std::tanh(beta * g.edge(e).J);
  double cosh_prod = 1.0;
  for (int e = 0; e < g.edge_count(); ++e)
    if (has_edge(delta, e)) cosh_prod *= std::cosh(beta * g.edge(e).J);

  // Gauss-Legendre on [0,1] from the nonnegative zeros of P_n.
  auto zeros = boost::math::legendre_p_zeros<double>(quad_points);
  std::vector<std::pair<double, double>> nodes;
  for (double z : zeros) {
    double dp = boost::math::legendre_p_prime<double>(quad_points, z);
    double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes.push_back({z, wt});
    if (z != 0.0) nodes.push_back({-z, wt});
  }
  double integral = 0.0;
  for (const auto& [z, wt] : nodes) {
    double s = 0.5 * (z + 1.0);
    std::vector<double> scale(g.edge_count(), 1.0);
    for (int e = 0; e < g.edge_count(); ++e)
      if (has_edge(delta, e)) scale[e] = s;
    double f = 0.0;
    for (int e = 0; e < g.edge_count(); ++e)
      if (has_edge(delta, e)) f += beta * g.edge(e).J * exact_correlation(g, beta, g.edge(e).u, g.edge(e).v, scale);
    integral += 0.5 * wt * f;
  }
  out.via_formula = w * cosh_prod * std::exp(-integral);
  out.ok = std::abs(out.direct - out.via_formula) <= 1e-6;
  return out;
}

CauchyCheck box_cauchy(const CouplingField& couplings, const Line& l, double beta, const Box& small, const Box& large) {
  for (const Site& v : l.vertices)
    if (!small.contains(v) || !large.contains(v)) throw ValidationError("line leaves a box");
  CauchyCheck c;
  c.q_small = line_weight(build_graph(couplings, small), l, beta).q;
  c.q_large = line_weight(build_graph(couplings, large), l, beta).q;
  c.difference = std::abs(c.q_large - c.q_small);
  return c;
}

}  // namespace oz
