#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace oz {

// Lattice points live in Z^d with d <= 3; unused components stay 0.
using Site = std::array<int, 3>;
using Vec = std::array<double, 3>;

inline Site operator+(Site a, const Site& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline Site operator-(Site a, const Site& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}
inline Site operator-(Site a) {
  for (int& c : a) c = -c;
  return a;
}
inline Vec to_vec(const Site& s) { return {double(s[0]), double(s[1]), double(s[2])}; }
inline Vec operator+(Vec a, const Vec& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline Vec operator-(Vec a, const Vec& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}
inline Vec operator*(double s, Vec a) {
  for (double& c : a) c *= s;
  return a;
}
inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double euclid(const Vec& x);
inline double euclid(const Site& x) { return euclid(to_vec(x)); }
Vec normalized(const Vec& x);

std::string to_string(const Site& s, int dim);

struct CouplingField {
  int dim = 2;
  std::map<Site, double> J;

  // Stores J at x and -x.
  void set(const Site& x, double j);
  double at(const Site& x) const;
  double range() const;
  bool nearest_neighbor_only() const;

  static CouplingField nearest_neighbor(int dim, double j = 1.0);
};

struct Box {
  int dim = 2;
  Site lo{0, 0, 0};
  Site hi{0, 0, 0};

  bool contains(const Site& x) const;
  bool empty() const;
  long long volume() const;
};

// Edge subsets of small graphs; bit e is edge id e.
using EdgeSet = std::uint64_t;
inline bool has_edge(EdgeSet s, int e) { return (s >> e) & 1u; }
inline EdgeSet edge_bit(int e) { return EdgeSet(1) << e; }

struct Edge {
  int u = 0;
  int v = 0;
  double J = 0.0;
};

// Finite edge set B with per-vertex incident orders.  Vertices are the
// endpoints of B, sorted lexicographically; edges are sorted by their
// (smaller, larger) endpoint pair; incident(v) is sorted by the other
// endpoint's coordinates.
class LatticeGraph {
 public:
  LatticeGraph() = default;
  LatticeGraph(int dim, const std::vector<std::pair<Site, Site>>& pairs, const std::vector<double>& J);

  int dim() const { return dim_; }
  int vertex_count() const { return int(vertices_.size()); }
  int edge_count() const { return int(edges_.size()); }
  const Site& vertex(int i) const { return vertices_[i]; }
  const std::vector<Site>& vertices() const { return vertices_; }
  int index(const Site& x) const;
  const Edge& edge(int e) const { return edges_[e]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& incident(int v) const { return incident_[v]; }
  int edge_between(int u, int v) const;
  int other(int e, int v) const { return edges_[e].u == v ? edges_[e].v : edges_[e].u; }

  // Position of edge e in the order at vertex v.
  int rank_at(int v, int e) const;

  // All edges as a bitmask; throws for more than 64 edges.
  EdgeSet all_edges() const;
  LatticeGraph subgraph(EdgeSet keep) const;

 private:
  int dim_ = 2;
  std::vector<Site> vertices_;
  std::map<Site, int> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
  std::map<std::pair<int, int>, int> edge_index_;
};

LatticeGraph build_graph(const CouplingField& couplings, const Box& box);

// Odd-degree vertices of an edge subset.
std::vector<Site> boundary(const LatticeGraph& g, EdgeSet edges);

// Direction-dependent norm xi on R^d.
class NormModel {
 public:
  enum class Kind { Euclidean, L1, CoshCurve, Function, Sampled };

  static NormModel euclidean(int dim, double scale = 1.0);
  static NormModel l1(int dim, double scale = 1.0);
  // Support function of {t : cosh t1 + cosh t2 <= c}, c > 2.
  static NormModel cosh_curve(double c);
  // Exact inverse correlation length of the 2D nearest-neighbour Ising
  // model above the critical temperature (cosh curve with
  // c = cosh(2 beta J) coth(2 beta J)).
  static NormModel ising_square(double beta, double J = 1.0);
  // d = 2, xi given on unit directions as a function of the angle.
  static NormModel from_function(std::function<double(double)> xi_of_angle, int samples = 720);
  // d = 2, xi sampled on the uniform grid 2 pi k / n.
  static NormModel sampled(std::vector<double> xi_on_grid);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double operator()(const Vec& x) const;
  double operator()(const Site& x) const { return (*this)(to_vec(x)); }
  // Gradient of xi at x != 0, i.e. the dual vector of direction x.
  Vec gradient(const Vec& x) const;
  double min_unit() const;
  double max_unit() const;
  // Largest xi(u+v) - xi(u) - xi(v) over sampled pairs of directions.
  double convexity_defect(int samples = 90) const;
  double cosh_constant() const { return c_; }

 private:
  Kind kind_ = Kind::Euclidean;
  int dim_ = 2;
  double scale_ = 1.0;
  double c_ = 0.0;
  std::function<double(double)> fn_;
  struct Spline;
  std::shared_ptr<const Spline> spline_;

  double unit_angle(double phi) const;
  double unit_angle_prime(double phi) const;
  static NormModel from_samples(Kind kind, std::vector<double> samples);
};

struct DualVector {
  Vec t{};
  Vec n{};
  double residual = 0.0;
};

DualVector dual_vector(const NormModel& norm, const Vec& direction);
// Wraps a user-supplied t; residual measures the support inequality.
DualVector make_dual(const NormModel& norm, const Vec& t, const Vec& direction);
double support_residual(const NormModel& norm, const Vec& t, const Vec& direction);

double surcharge(const DualVector& t, const Vec& x, const NormModel& norm);
inline double surcharge(const DualVector& t, const Site& x, const NormModel& norm) {
  return surcharge(t, to_vec(x), norm);
}
bool in_forward_cone(const DualVector& t, double delta, const Site& x, const NormModel& norm);
bool ball_membership(const Site& center, double K, const Site& x, const NormModel& norm);

// Model config: `key = value` lines.
struct ModelConfig {
  int dim = 2;
  double beta = 0.0;
  CouplingField couplings;
  Box box;
};
ModelConfig parse_model_config(std::istream& in);
ModelConfig load_model_config(const std::string& path);

}  // namespace oz
