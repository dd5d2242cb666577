#pragma once

#include <utility>
#include <vector>

#include "ozlab/lattice.hpp"

namespace oz {

// Edge-self-avoiding path t_0, ..., t_n in Z^d.
struct Line {
  std::vector<Site> vertices;

  int length() const { return vertices.empty() ? 0 : int(vertices.size()) - 1; }
  bool trivial() const { return vertices.size() <= 1; }
  const Site& front() const { return vertices.front(); }
  const Site& back() const { return vertices.back(); }
  bool contains(const Site& z) const;
  bool operator==(const Line& o) const { return vertices == o.vertices; }
  bool operator<(const Line& o) const { return vertices < o.vertices; }
};

Line translate(const Line& l, const Site& offset);
Site displacement(const Line& l);

// Edge ids of the line in g; throws if a step is not an edge or an edge repeats.
std::vector<int> line_edges(const LatticeGraph& g, const Line& l);
EdgeSet line_edge_set(const LatticeGraph& g, const Line& l);

// Delta(lambda) from the backward construction run along the line itself.
// Throws if the line is not a backward line: it revisits t_0, or at some
// t_j the line's edge is not the first edge of B_{t_j} \ Delta lying on
// the line.
EdgeSet compute_delta(const LatticeGraph& g, const Line& l);

struct ExtractedLine {
  Line line;
  EdgeSet delta = 0;
};

// Backward extraction lambda(D) for an edge set D with boundary {x, y}.
ExtractedLine extract_line(const LatticeGraph& g, EdgeSet D, const Site& x, const Site& y);

// Even-subgraph polynomial sum_{D subset allowed, dD = empty} prod tanh(beta J_e),
// enumerated over the cycle space of `allowed`.
double even_polynomial(const LatticeGraph& g, EdgeSet allowed, double beta);

struct LineWeight {
  double w = 0.0;      // prod over the line of tanh(beta J)
  double ratio = 0.0;  // Z~(B \ Delta) / Z~(B)
  double q = 0.0;
  EdgeSet delta = 0;
};

LineWeight line_weight(const LatticeGraph& g, const Line& l, double beta);

struct LineTerm {
  Line line;
  EdgeSet delta = 0;
  double q = 0.0;
  // sum over D with lambda(D) = line of prod tanh, divided by Z~(B)
  double group_weight = 0.0;
  long group_size = 0;
};

// All lines x -> y obtained from edge sets D with boundary {x, y}, grouped by
// lambda(D).  The D are enumerated as a coset of the cycle space.
std::vector<LineTerm> enumerate_lines(const LatticeGraph& g, const Site& x, const Site& y, double beta);

double representation_sum(const LatticeGraph& g, const Site& x, const Site& y, double beta);

// Splits at the last visit of z.
std::pair<Line, Line> split_at(const Line& l, const Site& z);
Line concat(const Line& a, const Line& b);

struct BKResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};
BKResult bk_check(const LatticeGraph& g, const Site& x, const Site& y, const Site& through, double beta);

// q(gamma ⨿ lambda) / q(lambda).
double conditional_weight(const LatticeGraph& g, const Line& gamma, const Line& lambda, double beta);

// q_{eta ⨿ lambda1}(gamma) / q_{eta ⨿ lambda2}(gamma).
double decoupling_ratio(const LatticeGraph& g, const Line& gamma, const Line& eta, const Line& lambda1,
                        const Line& lambda2, double beta);

struct ExplicitWeightCheck {
  double direct = 0.0;
  double via_formula = 0.0;
  bool ok = false;
};

// prod tanh * prod_{Delta} cosh(beta J) * exp(-sum_{Delta} beta J int_0^1 <s s>^{J_s} ds),
// with J_s = s J on Delta, integrated by Gauss-Legendre.
ExplicitWeightCheck explicit_weight_check(const LatticeGraph& g, const Line& l, double beta, int quad_points);

struct CauchyCheck {
  double q_small = 0.0;
  double q_large = 0.0;
  double difference = 0.0;
};
// Weight of the same line in two nested boxes.
CauchyCheck box_cauchy(const CouplingField& couplings, const Line& l, double beta, const Box& small, const Box& large);

}  // namespace oz
