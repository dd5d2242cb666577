#include "ozlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

#include "json.hpp"

#include "ozlab/decomposition.hpp"
#include "ozlab/error.hpp"
#include "ozlab/local_limit.hpp"

namespace oz {

RuelleOperator step_walk(int dim, const std::vector<Site>& steps, const std::vector<double>& weights) {
  if (steps.empty() || steps.size() != weights.size()) throw ValidationError("one weight per step expected");
  Alphabet a;
  a.dim = dim;
  for (const Site& s : steps) a.add(s);
  return RuelleOperator::iid(std::move(a), weights);
}

RuelleOperator diagonal_walk(double w) { return step_walk(2, {{1, 0, 0}, {0, 1, 0}}, {w, w}); }

RuelleOperator nearest_neighbor_walk(double w) {
  return step_walk(2, {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}, {w, w, w, w});
}

namespace {

// Root of a function increasing through lo < hi, f(lo) < 0 < f(hi):
// 60 bisections then up to 5 Newton steps that must not increase |f|.
double bisect_newton(const std::function<double(double)>& f, double lo, double hi) {
  for (int k = 0; k < 60; ++k) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi), fx = f(x);
  for (int k = 0; k < 5 && fx != 0.0; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    double d = (f(x + h) - f(x - h)) / (2 * h);
    if (!(d > 0)) break;
    double y = x - fx / d, fy = f(y);
    if (!(std::abs(fy) < std::abs(fx))) break;
    x = y, fx = fy;
  }
  return x;
}

// Crossing of a convex function along the increasing side, starting from 0.
double outer_root(const std::function<double(double)>& f, double scale) {
  double lo = 0.0, step = scale;
  int k = 0;
  while (f(lo) >= 0) {
    lo -= step, step *= 2;
    if (++k > 60) throw NumericalError("bracket failure");
  }
  double hi = lo + scale;
  step = scale;
  k = 0;
  while (f(hi) <= 0) {
    hi += step, step *= 2;
    if (++k > 60) throw NumericalError("bracket failure");
  }
  return bisect_newton(f, lo, hi);
}

}  // namespace

double solve_tilt(const RuelleOperator& op, const Vec& u) {
  auto f = [&](double a) { return log_rho(op, a * u); };
  return outer_root(f, 0.5);
}

namespace {

// Lattice edges among the sites within sup-distance halo of the line.
std::vector<std::pair<Site, Site>> region_edges(const Line& l, int halo) {
  std::set<Site> sites;
  for (const Site& v : l.vertices)
    for (int dx = -halo; dx <= halo; ++dx)
      for (int dy = -halo; dy <= halo; ++dy) sites.insert({v[0] + dx, v[1] + dy, 0});
  std::vector<std::pair<Site, Site>> out;
  for (const Site& v : sites)
    for (Site e : {Site{1, 0, 0}, Site{0, 1, 0}})
      if (sites.count(v + e)) out.push_back({v, v + e});
  return out;
}

long region_rank(const Line& l, int halo) {
  auto e = region_edges(l, halo);
  std::set<Site> v;
  for (const auto& [a, b] : e) v.insert(a), v.insert(b);
  return long(e.size()) - long(v.size()) + 1;
}

struct LineWeights {
  double J;
  double beta;
  int halo;
  std::map<std::pair<Line, Line>, double> cache;

  // q of the line in the region around `around`; 0 when it is not a
  // backward line there.
  double q(const Line& l, const Line& around) {
    auto key = std::make_pair(l, around);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto pairs = region_edges(around, halo);
    if (pairs.size() > 64) throw ValidationError("enumeration overflow: region has " + std::to_string(pairs.size()) +
                                                 " edges, limit 64");
    double v = 0.0;
    try {
      v = line_weight(LatticeGraph(2, pairs, std::vector<double>(pairs.size(), J)), l, beta).q;
    } catch (const ValidationError&) {
      v = 0.0;
    }
    return cache[key] = v;
  }

  // q(gamma lambda) / q(lambda) in the region of the joint line.
  double conditional(const Line& gamma, const Line& lambda) {
    Line joint = concat(gamma, lambda);
    double den = q(lambda, joint);
    if (!(den > 0)) return 0.0;
    return q(joint, joint) / den;
  }
};

}  // namespace

IrreducibleAlphabet build_ising_alphabet(const AlphabetOptions& opt) {
  if (opt.extent < 1) throw ValidationError("extent must be positive");
  if (opt.depth < 0 || opt.depth > 2) throw ValidationError("depth must be 0, 1 or 2");
  NormModel norm = NormModel::ising_square(opt.beta, opt.J);
  DualVector t0 = dual_vector(norm, {1, 0, 0});
  LineWeights lw{opt.J, opt.beta, opt.halo, {}};

  std::set<Line> found;
  for (int k = 1; k <= opt.extent; ++k)
    for (int side : {1, -1})
      for (int b : {0, side}) {
        Box box;
        box.dim = 2;
        box.lo = {0, std::min(0, side), 0};
        box.hi = {k, std::max(0, side), 0};
        auto g = build_graph(CouplingField::nearest_neighbor(2, opt.J), box);
        for (const auto& term : enumerate_lines(g, {0, 0, 0}, {k, b, 0}, opt.beta))
          if (term.q > 0 && is_irreducible(term.line, t0, opt.K, opt.delta, norm)) found.insert(term.line);
      }

  IrreducibleAlphabet out;
  Alphabet a;
  a.dim = 2;
  for (const Line& l : found) {
    double q = lw.q(l, l);
    if (!(q > 0)) continue;
    out.entries.push_back({l, displacement(l), q});
    a.add(displacement(l), std::to_string(out.entries.size()));
  }
  if (out.entries.empty()) throw NumericalError("empty alphabet");
  const auto& E = out.entries;

  // context pieces follow gamma_z along the line
  auto context_line = [&](const Site& start, const Context& ctx) {
    Line l;
    Site at = start;
    for (int c : ctx) {
      if (c == 0) break;
      l = concat(l, translate(E[c - 1].gamma, at));
      at = at + E[c - 1].V;
    }
    return l;
  };
  auto weight = [&](int z, const Context& ctx) {
    const AlphabetEntry& e = E[z - 1];
    if (ctx.empty() || ctx[0] == 0) return e.q;
    return lw.conditional(e.gamma, context_line(e.V, ctx));
  };

  out.base = RuelleOperator::from_function(a, opt.depth, weight);
  const int S = int(E.size());
  double c2 = 1.0;
  for (int z = 1; z <= S; ++z) {
    double lo1 = INFINITY, hi1 = -INFINITY;
    for (int x = 1; x <= S; ++x) {
      double w1 = weight(z, {x});
      double r = w1 / E[z - 1].q;
      if (!(r > 0)) {
        c2 = INFINITY;
        continue;
      }
      c2 = std::max({c2, r, 1.0 / r});
      lo1 = std::min(lo1, std::log(w1)), hi1 = std::max(hi1, std::log(w1));
      if (!opt.fit_theta) continue;
      double lo2 = INFINITY, hi2 = -INFINITY;
      for (int y = 1; y <= S; ++y) {
        Line ctx = context_line(E[z - 1].V, {x, y});
        Line joint = concat(E[z - 1].gamma, ctx);
        if (region_edges(joint, opt.halo).size() > 64 || region_rank(joint, opt.halo) > opt.max_rank) continue;
        double w2 = weight(z, {x, y});
        if (!(w2 > 0)) continue;
        lo2 = std::min(lo2, std::log(w2)), hi2 = std::max(hi2, std::log(w2));
        ++out.depth2_samples;
      }
      if (hi2 >= lo2) out.diff2 = std::max(out.diff2, hi2 - lo2);
    }
    if (hi1 >= lo1) out.diff1 = std::max(out.diff1, hi1 - lo1);
  }
  out.c2 = c2;
  if (out.diff1 > 0) out.theta = out.diff2 / out.diff1;

  double a1 = solve_tilt(out.base, {1, 0, 0});
  out.t = {a1, 0, 0};
  out.op = out.base.tilted(out.t);
  return out;
}

WulffBoundary wulff_boundary(const LogRho& f, const Vec& t, const Vec& normal, const WulffOptions& opt) {
  if (opt.samples < 1) throw ValidationError("need at least one sample");
  WulffBoundary b;
  b.t = t;
  b.normal = normalized(normal);
  b.tangent = {-b.normal[1], b.normal[0], 0};
  b.options = opt;
  for (int k = 0; k < opt.samples; ++k) {
    double p = opt.samples == 1 ? opt.lo : opt.lo + (opt.hi - opt.lo) * k / (opt.samples - 1);
    WulffSample s;
    s.param = p;
    if (opt.mode == WulffMode::Tangential) {
      Vec base = p * b.tangent;
      double r = outer_root([&](double x) { return f(base + x * b.normal); }, 0.25);
      s.s = base + r * b.normal;
    } else {
      if (!(f(opt.center) < 0)) throw ValidationError("center must satisfy log rho < 0");
      Vec u{std::cos(p), std::sin(p), 0};
      auto g = [&](double r) { return f(opt.center + r * u); };
      double hi = 0.25;
      int n = 0;
      while (g(hi) <= 0) {
        hi *= 2;
        if (++n > 60) throw NumericalError("bracket failure");
      }
      s.s = opt.center + bisect_newton(g, 0.0, hi) * u;
    }
    Vec ts = t + s.s;
    s.angle = std::atan2(ts[1], ts[0]);
    s.residual = std::abs(std::expm1(f(s.s)));
    b.max_residual = std::max(b.max_residual, s.residual);
    b.samples.push_back(s);
  }
  return b;
}

WulffBoundary wulff_boundary(const RuelleOperator& op, const Vec& t, const WulffOptions& opt) {
  if (op.alphabet().dim != 2) throw ValidationError("Wulff boundary needs d = 2");
  LogRho f = [&](const Vec& s) { return log_rho(op, s); };
  return wulff_boundary(f, t, duality_direction(op), opt);
}

namespace {

// First and second derivative at x0 of the polynomial through (x, y).
std::pair<double, double> poly_derivs(const std::vector<double>& x, const std::vector<double>& y, double x0) {
  const int n = int(x.size());
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) V(i, j) = p, p *= x[i] - x0;
    rhs(i) = y[i];
  }
  Eigen::VectorXd c = V.fullPivLu().solve(rhs);
  return {c(1), 2 * c(2)};
}

}  // namespace

void curvature(WulffBoundary& b) {
  const int n = int(b.samples.size());
  if (n < 5) throw ValidationError("curvature needs at least 5 samples");
  b.kappa_bar = INFINITY;
  b.kappa_max = -INFINITY;
  const bool tangential = b.options.mode == WulffMode::Tangential;
  for (int k = 0; k < n; ++k) {
    int j0 = std::clamp(k - 2, 0, n - 5);
    std::vector<double> xs, ys;
    for (int j = j0; j < j0 + 5; ++j) {
      const auto& s = b.samples[j];
      xs.push_back(s.param);
      Vec d = tangential ? s.s : s.s - b.options.center;
      ys.push_back(tangential ? dot(d, b.normal) : euclid(d));
    }
    auto [d1, d2] = poly_derivs(xs, ys, b.samples[k].param);
    double kappa;
    if (tangential) {
      kappa = -d2 / std::pow(1 + d1 * d1, 1.5);
    } else {
      double r = ys[k - j0];
      kappa = (r * r + 2 * d1 * d1 - r * d2) / std::pow(r * r + d1 * d1, 1.5);
    }
    b.samples[k].kappa = kappa;
    b.kappa_bar = std::min(b.kappa_bar, kappa);
    b.kappa_max = std::max(b.kappa_max, kappa);
  }
}

bool boundary_convex(const WulffBoundary& b) {
  int sign = 0;
  for (std::size_t k = 2; k < b.samples.size(); ++k) {
    Vec u = b.samples[k - 1].s - b.samples[k - 2].s, v = b.samples[k].s - b.samples[k - 1].s;
    double c = u[0] * v[1] - u[1] * v[0];
    int s = c > 0 ? 1 : (c < 0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

void write_wulff_csv(const WulffBoundary& b, std::ostream& out) {
  auto old = out.precision(17);
  out << "angle,s1,s2,kappa,residual\n";
  for (const auto& s : b.samples)
    out << s.angle << ',' << s.s[0] << ',' << s.s[1] << ',' << s.kappa << ',' << s.residual << '\n';
  out.precision(old);
}

Vec duality_direction(const RuelleOperator& op, double h) {
  const int d = op.alphabet().dim;
  Vec g{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    auto D = [&](double s) {
      Vec a{0, 0, 0}, b{0, 0, 0};
      a[i] = s, b[i] = -s;
      return (log_rho(op, a) - log_rho(op, b)) / (2 * s);
    };
    g[i] = (4 * D(h / 2) - D(h)) / 3;
  }
  double n = euclid(g);
  if (!(n > 1e-12)) throw NumericalError("zero gradient of log rho");
  return (1.0 / n) * g;
}

namespace {

Eigen::MatrixXd adjugate(const Eigen::MatrixXd& A) {
  const int d = int(A.rows());
  Eigen::MatrixXd adj(d, d);
  if (d == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Eigen::MatrixXd m(d - 1, d - 1);
      for (int r = 0, rr = 0; r < d; ++r) {
        if (r == j) continue;
        for (int c = 0, cc = 0; c < d; ++c) {
          if (c == i) continue;
          m(rr, cc++) = A(r, c);
        }
        ++rr;
      }
      adj(i, j) = ((i + j) % 2 ? -1.0 : 1.0) * m.determinant();
    }
  return adj;
}

}  // namespace

PrefactorReport oz_prefactor(const RuelleOperator& op, const std::vector<BoundaryTerm>& terms) {
  if (terms.empty()) throw ValidationError("no boundary terms");
  std::vector<double> ones(op.code_count(), 1.0);
  auto model = hessian_at_zero(op, ones, 1e-4, {}, false);
  if (std::abs(model.rho - 1.0) > 1e-8) throw ValidationError("operator not tilted to rho = 1");
  const int d = model.dim;
  PrefactorReport r;
  r.A = model.A;
  for (int i = 0; i < d; ++i) r.v[i] = model.drift(i);
  r.adj_form = model.drift.dot(adjugate(model.A) * model.drift);
  if (!(r.adj_form > 0)) throw NumericalError("degenerate prefactor: v^T adj(A) v <= 0");
  double base = std::pow(euclid(r.v), 0.5 * (d - 1)) / std::sqrt(std::pow(2 * std::numbers::pi, d - 1) * r.adj_form);
  for (const auto& term : terms) {
    double chi = boundary_factor(op, term.g.empty() ? ones : term.g);
    r.chi.push_back(chi);
    r.phi += term.weight * chi * base;
  }
  return r;
}

OZFit oz_fit(const CorrelationTable& table, const Vec& direction, FitWindow window, int d, std::optional<double> xi) {
  auto prof = table.profile(direction, window.rmin, window.rmax);
  std::erase_if(prof, [](const auto& p) { return !(p.g > 0); });
  if (prof.size() < 6) throw ValidationError("insufficient points: need 6 with g > 0");
  const int m = int(prof.size());
  const int k = xi ? 2 : 3;
  Eigen::MatrixXd X(m, k);
  Eigen::VectorXd y(m), w(m);
  bool weighted = true;
  for (const auto& p : prof)
    if (!(p.stderr_ > 0)) weighted = false;
  for (int i = 0; i < m; ++i) {
    const auto& p = prof[i];
    y(i) = std::log(p.g) + (xi ? *xi * p.r : 0.0);
    X(i, 0) = 1.0;
    X(i, 1) = -std::log(p.r);
    if (!xi) X(i, 2) = -p.r;
    double sy = weighted ? p.stderr_ / p.g : 1.0;
    w(i) = 1.0 / (sy * sy);
  }
  Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
  Eigen::MatrixXd N = XtW * X;
  Eigen::VectorXd beta = N.ldlt().solve(XtW * y);
  Eigen::VectorXd res = y - X * beta;
  double chi2 = res.dot(w.asDiagonal() * res);
  double scale = m > k ? chi2 / (m - k) : 0.0;
  if (weighted) scale = std::max(1.0, scale);
  Eigen::MatrixXd cov = N.inverse() * scale;

  OZFit f;
  f.direction = normalized(direction);
  f.xi_fixed = bool(xi);
  f.xi = xi ? *xi : beta(2);
  f.p_hat = beta(1);
  f.p_stderr = std::sqrt(std::max(0.0, cov(1, 1)));
  f.phi_hat = std::exp(beta(0));
  f.window = window;
  f.residual = std::sqrt(res.squaredNorm() / m);
  f.points = m;
  (void)d;
  return f;
}

void write_ozfit_json(const OZFit& fit, std::ostream& out) {
  nlohmann::json j;
  j["xi"] = fit.xi;
  j["p_hat"] = fit.p_hat;
  j["p_stderr"] = fit.p_stderr;
  j["phi_hat"] = fit.phi_hat;
  j["window"] = {fit.window.rmin, fit.window.rmax};
  j["residual"] = fit.residual;
  j["points"] = fit.points;
  j["xi_fixed"] = fit.xi_fixed;
  out << std::setprecision(17) << j.dump(2) << '\n';
}

CorrelationTable diagonal_walk_table(double w, int nmax) {
  if (!(w > 0 && w < 0.5)) throw ValidationError("diagonal walk needs 0 < w < 1/2");
  CorrelationTable t;
  t.dim = 2;
  t.method = Method::ToyModel;
  for (int n = 0; n <= nmax; ++n) {
    double lg = std::lgamma(2.0 * n + 1) - 2 * std::lgamma(n + 1.0) + 2.0 * n * std::log(w);
    t.entries.push_back({{0, 0, 0}, {n, n, 0}, std::exp(lg), 0.0});
  }
  return t;
}

double toy_green(const RuelleOperator& op, const Site& x, int nmax) {
  if (op.depth() != 0) throw ValidationError("toy Green function needs an i.i.d. operator");
  std::vector<double> ones(op.code_count(), 1.0);
  double sum = x == Site{0, 0, 0} ? 1.0 : 0.0;
  for (int n = 1; n <= nmax; ++n) {
    auto q = qn_distribution(op, ones, n);
    sum += q.at(x);
  }
  return sum;
}

TriangleReport strict_triangle_check(const NormModel& norm, double r_bar,
                                     const std::vector<std::pair<Vec, Vec>>& pairs) {
  TriangleReport r;
  r.r_bar = r_bar;
  r.min_slack = INFINITY;
  for (const auto& [u, v] : pairs) {
    Vec s = u + v;
    double lhs = norm(u) + norm(v) - norm(s);
    double rhs = r_bar * (euclid(u) + euclid(v) - euclid(s));
    double slack = lhs - rhs;
    ++r.pairs;
    if (slack < r.min_slack) r.min_slack = slack, r.worst_u = u, r.worst_v = v;
  }
  return r;
}

std::vector<std::pair<Vec, Vec>> triangle_grid(int angles, int ratios) {
  std::vector<std::pair<Vec, Vec>> out;
  for (int i = 0; i < angles; ++i)
    for (int j = 0; j < angles; ++j)
      for (int k = 1; k <= ratios; ++k) {
        double a = 2 * std::numbers::pi * i / angles + 0.1, b = 2 * std::numbers::pi * j / angles + 0.1;
        double len = double(k) / ratios;
        out.push_back({{std::cos(a), std::sin(a), 0}, {len * std::cos(b), len * std::sin(b), 0}});
      }
  return out;
}

}  // namespace oz
