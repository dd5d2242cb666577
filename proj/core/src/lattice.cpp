#include "ozlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/roots.hpp>

#include "ozlab/error.hpp"

namespace oz {

double euclid(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec normalized(const Vec& x) {
  double n = euclid(x);
  if (n == 0.0) throw ValidationError("cannot normalize the zero vector");
  return (1.0 / n) * x;
}

std::string to_string(const Site& s, int dim) {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------- couplings

void CouplingField::set(const Site& x, double j) {
  if (x == Site{0, 0, 0}) throw ValidationError("coupling at offset 0 is not allowed");
  if (!(j > 0.0)) throw ValidationError("couplings must be strictly positive");
  for (int i = dim; i < 3; ++i)
    if (x[i] != 0) throw ValidationError("coupling offset exceeds dimension");
  auto it = J.find(-x);
  if (it != J.end() && it->second != j) throw ValidationError("coupling not symmetric: J(x) != J(-x)");
  J[x] = j;
  J[-x] = j;
}

double CouplingField::at(const Site& x) const {
  auto it = J.find(x);
  return it == J.end() ? 0.0 : it->second;
}

double CouplingField::range() const {
  double r = 0.0;
  for (const auto& [x, j] : J) r = std::max(r, euclid(x));
  return r;
}

bool CouplingField::nearest_neighbor_only() const {
  for (const auto& [x, j] : J)
    if (std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2]) != 1) return false;
  return true;
}

CouplingField CouplingField::nearest_neighbor(int dim, double j) {
  CouplingField c;
  c.dim = dim;
  for (int i = 0; i < dim; ++i) {
    Site e{0, 0, 0};
    e[i] = 1;
    c.set(e, j);
  }
  return c;
}

bool Box::contains(const Site& x) const {
  for (int i = 0; i < dim; ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

bool Box::empty() const {
  for (int i = 0; i < dim; ++i)
    if (hi[i] < lo[i]) return true;
  return false;
}

long long Box::volume() const {
  if (empty()) return 0;
  long long v = 1;
  for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i] + 1;
  return v;
}

// ------------------------------------------------------------------- graphs

LatticeGraph::LatticeGraph(int dim, const std::vector<std::pair<Site, Site>>& pairs,
                           const std::vector<double>& J)
    : dim_(dim) {
  if (pairs.size() != J.size()) throw ValidationError("edge and coupling lists differ in length");
  for (const auto& [a, b] : pairs) {
    if (a == b) throw ValidationError("self-loop in edge list");
    index_[a] = 0;
    index_[b] = 0;
  }
  for (auto& [s, i] : index_) {
    i = int(vertices_.size());
    vertices_.push_back(s);
  }
  std::vector<std::tuple<int, int, double>> tmp;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    int u = index_[pairs[k].first], v = index_[pairs[k].second];
    if (u > v) std::swap(u, v);
    tmp.emplace_back(u, v, J[k]);
  }
  std::sort(tmp.begin(), tmp.end());
  for (const auto& [u, v, j] : tmp) {
    if (edge_index_.count({u, v})) throw ValidationError("duplicate edge");
    if (!(j > 0.0)) throw ValidationError("edge with non-positive coupling");
    edge_index_[{u, v}] = int(edges_.size());
    edges_.push_back({u, v, j});
  }
  incident_.assign(vertices_.size(), {});
  for (int e = 0; e < int(edges_.size()); ++e) {
    incident_[edges_[e].u].push_back(e);
    incident_[edges_[e].v].push_back(e);
  }
  for (int v = 0; v < int(vertices_.size()); ++v) {
    auto& inc = incident_[v];
    std::sort(inc.begin(), inc.end(), [&](int a, int b) {
      return vertices_[other(a, v)] < vertices_[other(b, v)];
    });
  }
}

int LatticeGraph::index(const Site& x) const {
  auto it = index_.find(x);
  return it == index_.end() ? -1 : it->second;
}

int LatticeGraph::edge_between(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = edge_index_.find({u, v});
  return it == edge_index_.end() ? -1 : it->second;
}

int LatticeGraph::rank_at(int v, int e) const {
  const auto& inc = incident_[v];
  auto it = std::find(inc.begin(), inc.end(), e);
  if (it == inc.end()) throw ValidationError("edge not incident to vertex");
  return int(it - inc.begin());
}

EdgeSet LatticeGraph::all_edges() const {
  if (edges_.size() > 64) throw ValidationError("graph too large for edge-set operations (more than 64 edges)");
  return edges_.size() == 64 ? ~EdgeSet(0) : (EdgeSet(1) << edges_.size()) - 1;
}

LatticeGraph LatticeGraph::subgraph(EdgeSet keep) const {
  std::vector<std::pair<Site, Site>> pairs;
  std::vector<double> J;
  for (int e = 0; e < edge_count(); ++e) {
    if (!has_edge(keep, e)) continue;
    pairs.emplace_back(vertices_[edges_[e].u], vertices_[edges_[e].v]);
    J.push_back(edges_[e].J);
  }
  return LatticeGraph(dim_, pairs, J);
}

LatticeGraph build_graph(const CouplingField& couplings, const Box& box) {
  if (box.empty()) throw ValidationError("empty region");
  if (box.dim != couplings.dim) throw ValidationError("box and couplings differ in dimension");
  std::vector<Site> sites;
  Site x = box.lo;
  for (int i = box.dim; i < 3; ++i) x[i] = 0;
  while (true) {
    sites.push_back(x);
    int k = 0;
    for (; k < box.dim; ++k) {
      if (++x[k] <= box.hi[k]) break;
      x[k] = box.lo[k];
    }
    if (k == box.dim) break;
  }
  std::vector<std::pair<Site, Site>> pairs;
  std::vector<double> J;
  for (const Site& a : sites)
    for (const auto& [off, j] : couplings.J) {
      Site b = a + off;
      if (a < b && box.contains(b)) {
        pairs.emplace_back(a, b);
        J.push_back(j);
      }
    }
  return LatticeGraph(box.dim, pairs, J);
}

std::vector<Site> boundary(const LatticeGraph& g, EdgeSet edges) {
  std::vector<int> deg(g.vertex_count(), 0);
  for (int e = 0; e < g.edge_count(); ++e)
    if (has_edge(edges, e)) {
      ++deg[g.edge(e).u];
      ++deg[g.edge(e).v];
    }
  std::vector<Site> out;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (deg[v] % 2) out.push_back(g.vertex(v));
  return out;
}

// --------------------------------------------------------------------- norms

// Periodic cubic B-spline of xi on [0, 2 pi), padded by one period on each
// side so the evaluation window never sees the end conditions.
struct NormModel::Spline {
  int n = 0;
  double step = 0.0;
  boost::math::interpolators::cardinal_cubic_b_spline<double> s;

  explicit Spline(const std::vector<double>& samples)
      : n(int(samples.size())), step(2.0 * std::numbers::pi / samples.size()), s(make(samples)) {}

  boost::math::interpolators::cardinal_cubic_b_spline<double> make(const std::vector<double>& v) const {
    std::vector<double> ext;
    ext.reserve(3 * v.size() + 1);
    for (int rep = 0; rep < 3; ++rep) ext.insert(ext.end(), v.begin(), v.end());
    ext.push_back(v.front());
    return {ext.begin(), ext.end(), -2.0 * std::numbers::pi, step};
  }
  static double wrap(double phi) {
    double p = std::fmod(phi, 2.0 * std::numbers::pi);
    return p < 0 ? p + 2.0 * std::numbers::pi : p;
  }
  double value(double phi) const { return s(wrap(phi)); }
  double prime(double phi) const { return s.prime(wrap(phi)); }
};

NormModel NormModel::euclidean(int dim, double scale) {
  if (dim < 1 || dim > 3) throw ValidationError("dimension must be 1, 2 or 3");
  if (!(scale > 0)) throw ValidationError("norm scale must be positive");
  NormModel m;
  m.kind_ = Kind::Euclidean;
  m.dim_ = dim;
  m.scale_ = scale;
  return m;
}

NormModel NormModel::l1(int dim, double scale) {
  NormModel m = euclidean(dim, scale);
  m.kind_ = Kind::L1;
  return m;
}

NormModel NormModel::cosh_curve(double c) {
  if (!(c > 2.0)) throw ValidationError("cosh curve needs c > 2");
  NormModel m;
  m.kind_ = Kind::CoshCurve;
  m.dim_ = 2;
  m.c_ = c;
  return m;
}

NormModel NormModel::ising_square(double beta, double J) {
  double k = 2.0 * beta * J;
  if (!(k > 0)) throw ValidationError("beta J must be positive");
  double c = std::cosh(k) / std::tanh(k);
  if (!(c > 2.0)) throw ValidationError("beta is not below the critical point");
  return cosh_curve(c);
}

NormModel NormModel::from_samples(Kind kind, std::vector<double> samples) {
  if (samples.size() < 16) throw ValidationError("too few norm samples");
  for (double v : samples)
    if (!(v > 0)) throw ValidationError("xi must be positive on every direction");
  NormModel m;
  m.kind_ = kind;
  m.dim_ = 2;
  m.spline_ = std::make_shared<const Spline>(samples);
  return m;
}

NormModel NormModel::from_function(std::function<double(double)> xi_of_angle, int samples) {
  std::vector<double> v(samples);
  for (int k = 0; k < samples; ++k) v[k] = xi_of_angle(2.0 * std::numbers::pi * k / samples);
  NormModel m = from_samples(Kind::Function, std::move(v));
  m.fn_ = std::move(xi_of_angle);
  return m;
}

NormModel NormModel::sampled(std::vector<double> xi_on_grid) {
  return from_samples(Kind::Sampled, std::move(xi_on_grid));
}

namespace {

// Lagrange point of max (t,u) on cosh t1 + cosh t2 = c: t_i = asinh(u_i / lam).
double cosh_lambda(double c, const Vec& u) {
  auto f = [&](double loglam) {
    double lam = std::exp(loglam);
    return std::hypot(1.0, u[0] / lam) + std::hypot(1.0, u[1] / lam) - c;
  };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, -60.0, 60.0, tol, it);
  return std::exp(0.5 * (a + b));
}

}  // namespace

double NormModel::unit_angle(double phi) const {
  if (kind_ == Kind::Function && fn_) return fn_(phi);
  return spline_->value(phi);
}

double NormModel::unit_angle_prime(double phi) const { return spline_->prime(phi); }

double NormModel::operator()(const Vec& x) const {
  switch (kind_) {
    case Kind::Euclidean:
      return scale_ * euclid(x);
    case Kind::L1:
      return scale_ * (std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2]));
    case Kind::CoshCurve: {
      double r = euclid(x);
      if (r == 0.0) return 0.0;
      Vec u = (1.0 / r) * x;
      double lam = cosh_lambda(c_, u);
      return r * (u[0] * std::asinh(u[0] / lam) + u[1] * std::asinh(u[1] / lam));
    }
    case Kind::Function:
    case Kind::Sampled: {
      double r = euclid(x);
      if (r == 0.0) return 0.0;
      return r * unit_angle(std::atan2(x[1], x[0]));
    }
  }
  return 0.0;
}

Vec NormModel::gradient(const Vec& x) const {
  if (euclid(x) == 0.0) throw ValidationError("gradient undefined at the origin");
  switch (kind_) {
    case Kind::Euclidean:
      return scale_ * normalized(x);
    case Kind::L1: {
      Vec g{};
      for (int i = 0; i < 3; ++i) g[i] = x[i] > 0 ? scale_ : (x[i] < 0 ? -scale_ : 0.0);
      return g;
    }
    case Kind::CoshCurve: {
      Vec u = normalized(x);
      double lam = cosh_lambda(c_, u);
      return {std::asinh(u[0] / lam), std::asinh(u[1] / lam), 0.0};
    }
    case Kind::Function:
    case Kind::Sampled: {
      double phi = std::atan2(x[1], x[0]);
      double h = unit_angle(phi), hp = unit_angle_prime(phi);
      double c = std::cos(phi), s = std::sin(phi);
      return {h * c - hp * s, h * s + hp * c, 0.0};
    }
  }
  return {};
}

namespace {

std::vector<Vec> direction_grid(int dim, int n) {
  std::vector<Vec> out;
  if (dim == 1) return {{1, 0, 0}, {-1, 0, 0}};
  if (dim == 2) {
    for (int k = 0; k < n; ++k) {
      double p = 2.0 * std::numbers::pi * k / n;
      out.push_back({std::cos(p), std::sin(p), 0.0});
    }
    return out;
  }
  // Fibonacci sphere.
  double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    double z = 1.0 - 2.0 * (k + 0.5) / n;
    double r = std::sqrt(1.0 - z * z);
    out.push_back({r * std::cos(ga * k), r * std::sin(ga * k), z});
  }
  return out;
}

}  // namespace

double NormModel::min_unit() const {
  double m = 1e300;
  for (const Vec& u : direction_grid(dim_, dim_ == 3 ? 2000 : 720)) m = std::min(m, (*this)(u));
  return m;
}

double NormModel::max_unit() const {
  double m = 0.0;
  for (const Vec& u : direction_grid(dim_, dim_ == 3 ? 2000 : 720)) m = std::max(m, (*this)(u));
  return m;
}

double NormModel::convexity_defect(int samples) const {
  auto dirs = direction_grid(dim_, samples);
  double worst = -1e300;
  for (const Vec& u : dirs)
    for (const Vec& v : dirs)
      for (double a : {0.5, 1.0, 2.0}) {
        Vec w = a * v;
        worst = std::max(worst, (*this)(u + w) - (*this)(u) - (*this)(w));
      }
  return worst;
}

double support_residual(const NormModel& norm, const Vec& t, const Vec& direction) {
  double r = std::abs(dot(t, normalized(direction)) - norm(normalized(direction)));
  for (const Vec& u : direction_grid(norm.dim(), norm.dim() == 3 ? 2000 : 720))
    r = std::max(r, dot(t, u) - norm(u));
  return r;
}

DualVector dual_vector(const NormModel& norm, const Vec& direction) {
  DualVector d;
  d.n = normalized(direction);
  d.t = norm.gradient(d.n);
  d.residual = support_residual(norm, d.t, d.n);
  return d;
}

DualVector make_dual(const NormModel& norm, const Vec& t, const Vec& direction) {
  DualVector d;
  d.t = t;
  d.n = normalized(direction);
  d.residual = support_residual(norm, t, d.n);
  return d;
}

double surcharge(const DualVector& t, const Vec& x, const NormModel& norm) {
  return norm(x) - dot(t.t, x);
}

bool in_forward_cone(const DualVector& t, double delta, const Site& x, const NormModel& norm) {
  if (x == Site{0, 0, 0}) throw ValidationError("cone membership undefined at origin");
  return surcharge(t, x, norm) < delta * norm(x);
}

bool ball_membership(const Site& center, double K, const Site& x, const NormModel& norm) {
  if (!(K > 0)) throw ValidationError("ball radius must be positive");
  return norm(x - center) <= K;
}

// -------------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ModelConfig parse_model_config(std::istream& in) {
  ModelConfig cfg;
  bool have_dim = false, have_beta = false, have_box = false;
  std::vector<std::pair<Site, double>> couplings;
  std::string line;
  int lineno = 0;
  static const std::regex coupling_re(R"(\(\s*(-?\d+)\s*(?:,\s*(-?\d+)\s*)?(?:,\s*(-?\d+)\s*)?\)\s*:\s*(\S+))");
  static const std::regex range_re(R"((-?\d+)\s*\.\.\s*(-?\d+))");
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    auto where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ValidationError(where + "expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    try {
      if (key == "dimension") {
        cfg.dim = std::stoi(value);
        if (cfg.dim < 1 || cfg.dim > 3) throw ValidationError(where + "dimension must be 1, 2 or 3");
        have_dim = true;
      } else if (key == "beta") {
        cfg.beta = std::stod(value);
        if (!(cfg.beta >= 0)) throw ValidationError(where + "beta must be non-negative");
        have_beta = true;
      } else if (key == "coupling") {
        std::smatch m;
        if (!std::regex_match(value, m, coupling_re)) throw ValidationError(where + "bad coupling, expected (dx,dy) : J");
        Site x{0, 0, 0};
        for (int i = 0; i < 3; ++i)
          if (m[i + 1].matched) x[i] = std::stoi(m[i + 1]);
        couplings.emplace_back(x, std::stod(m[4]));
      } else if (key == "box") {
        Box b;
        int k = 0;
        for (auto it = std::sregex_iterator(value.begin(), value.end(), range_re); it != std::sregex_iterator(); ++it) {
          if (k == 3) throw ValidationError(where + "box has more than 3 ranges");
          b.lo[k] = std::stoi((*it)[1]);
          b.hi[k] = std::stoi((*it)[2]);
          ++k;
        }
        if (k == 0) throw ValidationError(where + "bad box, expected x0..x1, y0..y1");
        b.dim = k;
        cfg.box = b;
        have_box = true;
      } else {
        throw ValidationError(where + "unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ValidationError(where + "cannot parse value '" + value + "'");
    }
  }
  if (!have_dim || !have_beta || !have_box) throw ValidationError("config needs dimension, beta and box");
  if (cfg.box.dim != cfg.dim) throw ValidationError("box dimension differs from 'dimension'");
  if (couplings.empty()) throw ValidationError("config has no couplings");
  cfg.couplings.dim = cfg.dim;
  for (const auto& [x, j] : couplings) cfg.couplings.set(x, j);
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file " + path);
  return parse_model_config(f);
}

}  // namespace oz
