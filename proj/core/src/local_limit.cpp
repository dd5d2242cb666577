#include "ozlab/local_limit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ozlab/error.hpp"

namespace oz {

namespace {

// Empty g stands for g = 1.
std::vector<double> unit_or(const RuelleOperator& op, const std::vector<double>& g) {
  if (g.empty()) return std::vector<double>(op.code_count(), 1.0);
  if (long(g.size()) != op.code_count()) throw ValidationError("depth mismatch: function size");
  return g;
}

struct Layout {
  int dim = 1;
  Site vmin{}, vmax{};
  Site width{};  // cells per axis
  long cells = 1;
  Site stride{};
};

Layout make_layout(const RuelleOperator& op, int n) {
  const Alphabet& a = op.alphabet();
  Layout L;
  L.dim = a.dim;
  for (int i = 0; i < L.dim; ++i) {
    int lo = a.V[1][i], hi = a.V[1][i];
    for (int z = 2; z <= a.size(); ++z) lo = std::min(lo, a.V[z][i]), hi = std::max(hi, a.V[z][i]);
    L.vmin[i] = lo;
    L.vmax[i] = hi;
    L.width[i] = n * (hi - lo) + 1;
  }
  L.cells = 1;
  for (int i = L.dim - 1; i >= 0; --i) {
    L.stride[i] = int(L.cells);
    L.cells *= L.width[i];
  }
  return L;
}

std::vector<long> valid_codes(const RuelleOperator& op) {
  std::vector<long> out;
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c)) out.push_back(c);
  return out;
}

void finish_moments(DisplacementDistribution& d) {
  const int D = d.dim;
  double total = 0.0;
  Vec m{0, 0, 0};
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
  auto sup = d.support();
  for (const Site& r : sup) {
    double q = d.table[d.index(r)];
    total += q;
    for (int i = 0; i < D; ++i) m[i] += q * r[i];
  }
  if (!(total > 0)) throw NumericalError("displacement distribution has zero mass");
  for (int i = 0; i < D; ++i) m[i] /= total;
  for (const Site& r : sup) {
    double q = d.table[d.index(r)] / total;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) S(i, j) += q * (r[i] - m[i]) * (r[j] - m[j]);
  }
  d.mass = total * std::exp(d.log_scale);
  d.mean = m;
  d.cov = S;
}

}  // namespace

long DisplacementDistribution::index(const Site& r) const {
  long idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * (hi[i] - lo[i] + 1) + (r[i] - lo[i]);
  return idx;
}

bool DisplacementDistribution::in_box(const Site& r) const {
  for (int i = 0; i < dim; ++i)
    if (r[i] < lo[i] || r[i] > hi[i]) return false;
  return true;
}

double DisplacementDistribution::at(const Site& r) const {
  if (!in_box(r)) return 0.0;
  return table[index(r)] * std::exp(log_scale);
}

std::vector<Site> DisplacementDistribution::support() const {
  std::vector<Site> out;
  Site r = lo;
  while (true) {
    out.push_back(r);
    int i = dim - 1;
    while (i >= 0 && ++r[i] > hi[i]) r[i] = lo[i], --i;
    if (i < 0) break;
  }
  return out;
}

DisplacementDistribution qn_distribution(const RuelleOperator& op, const std::vector<double>& g_in, int n,
                                         const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  if (n < 1) throw ValidationError("n must be positive");
  Layout L = make_layout(op, n);
  auto codes = valid_codes(op);
  const long states = long(codes.size());
  if (double(states) * double(L.cells) > 5e7)
    throw ValidationError("displacement box overflow: need " + std::to_string(states * L.cells) + " cells");
  std::vector<long> state_of(op.code_count(), -1);
  for (long s = 0; s < states; ++s) state_of[codes[s]] = s;
  struct Move {
    long to;
    double w;
    long shift;
  };
  std::vector<std::vector<Move>> moves(states);
  const Alphabet& a = op.alphabet();
  for (long s = 0; s < states; ++s)
    for (int z = 1; z <= op.symbols(); ++z) {
      double w = op.weight(z, codes[s]);
      if (w == 0.0) continue;
      long shift = 0;
      for (int i = 0; i < L.dim; ++i) shift += long(a.V[z][i] - L.vmin[i]) * L.stride[i];
      moves[s].push_back({state_of[op.prepend(z, codes[s])], w, shift});
    }

  std::vector<double> cur(states * L.cells, 0.0), next(states * L.cells);
  cur[state_of[op.code(x)] * L.cells] = 1.0;
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (long s = 0; s < states; ++s) {
      const double* src = &cur[s * L.cells];
      for (const Move& mv : moves[s]) {
        double* dst = &next[mv.to * L.cells + mv.shift];
        const long len = L.cells - mv.shift;
        for (long c = 0; c < len; ++c) dst[c] += mv.w * src[c];
      }
    }
    double mx = *std::max_element(next.begin(), next.end());
    if (!(mx > 0)) throw NumericalError("all weight vanished");
    for (double& v : next) v /= mx;
    log_scale += std::log(mx);
    std::swap(cur, next);
  }

  DisplacementDistribution d;
  d.n = n;
  d.dim = L.dim;
  for (int i = 0; i < L.dim; ++i) {
    d.lo[i] = n * L.vmin[i];
    d.hi[i] = n * L.vmax[i];
  }
  d.table.assign(L.cells, 0.0);
  for (long s = 0; s < states; ++s) {
    double gv = g[codes[s]];
    if (gv == 0.0) continue;
    for (long c = 0; c < L.cells; ++c) d.table[c] += cur[s * L.cells + c] * gv;
  }
  d.log_scale = log_scale;
  finish_moments(d);
  return d;
}

double log_laplace(const RuelleOperator& op, const std::vector<double>& g_in, int n, const Vec& xi, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  if (n < 1) throw ValidationError("n must be positive");
  auto T = op.tilted(xi);
  auto f = g;
  double log_scale = 0.0;
  for (int k = 0; k < n; ++k) {
    f = T.apply(f);
    double mx = 0.0;
    for (double v : f) mx = std::max(mx, std::abs(v));
    if (!(mx > 0)) throw NumericalError("log-Laplace transform of zero");
    for (double& v : f) v /= mx;
    log_scale += std::log(mx);
  }
  double val = f[op.code(x)];
  if (!(val > 0)) throw NumericalError("log-Laplace transform of zero");
  return (std::log(val) + log_scale) / n;
}

double boundary_factor(const RuelleOperator& op, const std::vector<double>& g_in, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  double rho = spectral_data(op).rho;
  auto f = g;
  const long cx = op.code(x);
  for (int it = 0; it < 100000; ++it) {
    auto nf = op.apply(f);
    for (double& v : nf) v /= rho;
    double diff = std::abs(nf[cx] - f[cx]);
    f = std::move(nf);
    if (diff <= 1e-14 * std::abs(f[cx])) return f[cx];
  }
  throw NumericalError("boundary factor did not converge");
}

double log_rho(const RuelleOperator& op, const Vec& xi) {
  auto T = op.tilted(xi);
  try {
    return std::log(spectral_data(T, 1e-14, 20000).rho);
  } catch (const NumericalError&) {
    return std::log(spectral_data(T).rho);
  }
}

LaplaceConvergence laplace_convergence(const RuelleOperator& op, const std::vector<double>& g_in, const Vec& xi,
                                       int nmin, int nmax, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  if (nmin < 1 || nmax < nmin) throw ValidationError("bad n range");
  LaplaceConvergence lc;
  double lr = log_rho(op, xi);
  lc.chi = boundary_factor(op.tilted(xi), g, x);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int n = nmin; n <= nmax; ++n) {
    double d = std::abs(log_laplace(op, g, n, xi, x) - lr - std::log(lc.chi) / n);
    lc.n.push_back(n);
    lc.defect.push_back(d);
    if (d > 1e-13) {
      double y = std::log(d);
      sx += n, sy += y, sxx += double(n) * n, sxy += n * y;
      ++m;
    }
  }
  if (m >= 2) {
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    lc.c = -slope;
    lc.C = std::exp((sy - slope * sx) / m);
  }
  return lc;
}

GaussianModel hessian_at_zero(const RuelleOperator& op, const std::vector<double>& g_in, double fd_step,
                              const Context& x, bool require_pd) {
  const std::vector<double> g = unit_or(op, g_in);
  if (!(fd_step > 0)) throw ValidationError("fd step must be positive");
  const int d = op.alphabet().dim;
  GaussianModel m;
  m.dim = d;
  const Vec zero{0, 0, 0};
  const double f0 = log_rho(op, zero);
  auto at = [&](double a, int i, double b, int j) {
    Vec v{0, 0, 0};
    v[i] += a;
    v[j] += b;
    return log_rho(op, v);
  };
  auto grad = [&](int i, double h) { return (at(h, i, 0, i) - at(-h, i, 0, i)) / (2 * h); };
  auto diag = [&](int i, double h) { return (at(h, i, 0, i) - 2 * f0 + at(-h, i, 0, i)) / (h * h); };
  auto cross = [&](int i, int j, double h) {
    return (at(h, i, h, j) - at(h, i, -h, j) - at(-h, i, h, j) + at(-h, i, -h, j)) / (4 * h * h);
  };
  auto richardson = [&](auto&& D) { return (4.0 * D(fd_step / 2) - D(fd_step)) / 3.0; };
  m.drift = Eigen::VectorXd(d);
  m.A = Eigen::MatrixXd(d, d);
  for (int i = 0; i < d; ++i) {
    m.drift(i) = richardson([&](double h) { return grad(i, h); });
    m.A(i, i) = richardson([&](double h) { return diag(i, h); });
    for (int j = 0; j < i; ++j) m.A(i, j) = m.A(j, i) = richardson([&](double h) { return cross(i, j, h); });
  }
  m.rho = std::exp(f0);
  m.d_g = boundary_factor(op, g, x);
  if (require_pd) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.A);
    if (es.eigenvalues().minCoeff() <= 1e-12) throw NumericalError("degenerate observable");
  }
  return m;
}

namespace {

void require_interior(const Alphabet& a, const Vec& target) {
  const int d = a.dim;
  std::vector<Vec> dirs;
  if (d == 1) {
    dirs = {{1, 0, 0}, {-1, 0, 0}};
  } else if (d == 2) {
    for (int k = 0; k < 3600; ++k) {
      double p = 2 * std::numbers::pi * k / 3600;
      dirs.push_back({std::cos(p), std::sin(p), 0});
    }
  } else {
    const int n = 4000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / n, r = std::sqrt(1 - z * z);
      dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
  }
  for (const Vec& u : dirs) {
    double best = -INFINITY;
    for (int z = 1; z <= a.size(); ++z) best = std::max(best, dot(u, to_vec(a.V[z])));
    if (best - dot(u, target) <= 1e-9) throw ValidationError("unreachable mean");
  }
}

}  // namespace

TiltSolution tilt_solve(const RuelleOperator& op, const std::vector<double>& g_in, int n, const Vec& target,
                        const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  const int d = op.alphabet().dim;
  require_interior(op.alphabet(), target);
  TiltSolution s;
  auto moments = [&](const Vec& xi, Eigen::VectorXd& resid, Eigen::MatrixXd& J) {
    auto q = qn_distribution(op.tilted(xi), g, n, x);
    resid = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) resid(i) = q.mean[i] / n - target[i];
    J = q.cov / n;
  };
  Vec xi{0, 0, 0};
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  moments(xi, r, J);
  for (int it = 1; it <= 200; ++it) {
    s.iterations = it;
    if (r.cwiseAbs().maxCoeff() <= 1e-12) break;
    Eigen::VectorXd step = J.ldlt().solve(r);
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, lambda /= 2) {
      Vec trial = xi;
      for (int i = 0; i < d; ++i) trial[i] -= lambda * step(i);
      Eigen::VectorXd r2;
      Eigen::MatrixXd J2;
      moments(trial, r2, J2);
      if (r2.norm() < r.norm()) {
        xi = trial, r = r2, J = J2;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  s.xi = xi;
  s.residual = r.cwiseAbs().maxCoeff();
  if (s.residual > 1e-10) throw NumericalError("tilt solve stalled at residual " + std::to_string(s.residual));
  auto model = hessian_at_zero(op, g, 1e-4, x, false);
  Eigen::VectorXd rhs(d);
  for (int i = 0; i < d; ++i) rhs(i) = target[i] - model.drift(i);
  Eigen::VectorXd lin = model.A.ldlt().solve(rhs);
  for (int i = 0; i < d; ++i) s.linear_guess[i] = lin(i);
  return s;
}

Vec laplace_gradient_fd(const RuelleOperator& op, const std::vector<double>& g_in, int n, const Vec& xi, double h,
                        const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  Vec out{0, 0, 0};
  for (int i = 0; i < op.alphabet().dim; ++i) {
    Vec a = xi, b = xi;
    a[i] += h;
    b[i] -= h;
    out[i] = (log_laplace(op, g, n, a, x) - log_laplace(op, g, n, b, x)) / (2 * h);
  }
  return out;
}

double gaussian_llt(const GaussianModel& model, int n, const Site& r, const Vec& v) {
  const int d = model.dim;
  Eigen::VectorXd y(d);
  for (int i = 0; i < d; ++i) y(i) = r[i] - n * v[i];
  auto ldlt = model.A.ldlt();
  double quad = y.dot(ldlt.solve(y));
  double det = model.A.determinant();
  return model.d_g * std::pow(model.rho, n) / std::sqrt(std::pow(2 * std::numbers::pi * n, d) * det) *
         std::exp(-quad / (2.0 * n));
}

FourierTable fourier_invert(const RuelleOperator& op, const std::vector<double>& g_in, int n, int M, double eps,
                            double delta, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  if (n < 1) throw ValidationError("n must be positive");
  Layout L = make_layout(op, n);
  for (int i = 0; i < L.dim; ++i)
    if (M < L.width[i]) throw ValidationError("aliasing: grid " + std::to_string(M) + " below support width " +
                                              std::to_string(L.width[i]));
  const int d = L.dim;
  const Alphabet& a = op.alphabet();
  const long cx = op.code(x);
  auto codes = valid_codes(op);
  long total = 1;
  for (int i = 0; i < d; ++i) total *= M;

  FourierTable out;
  out.grid = M;
  out.regions.eps_radius = std::pow(double(n), -0.5 + eps);
  out.regions.delta = delta;
  std::vector<std::complex<double>> F(total);
  std::vector<Vec> taus(total);
  for (long k = 0; k < total; ++k) {
    Vec tau{0, 0, 0};
    long r = k;
    for (int i = d - 1; i >= 0; --i) {
      tau[i] = 2 * std::numbers::pi * double(r % M) / M;
      if (tau[i] >= std::numbers::pi) tau[i] -= 2 * std::numbers::pi;
      r /= M;
    }
    taus[k] = tau;
    std::vector<std::complex<double>> phase(op.symbols() + 1);
    for (int z = 1; z <= op.symbols(); ++z) {
      double p = dot(tau, to_vec(a.V[z]));
      phase[z] = {std::cos(p), std::sin(p)};
    }
    std::vector<std::complex<double>> f(g.begin(), g.end()), nf(f.size());
    for (int s = 0; s < n; ++s) {
      for (long c : codes) {
        std::complex<double> acc = 0.0;
        for (int z = 1; z <= op.symbols(); ++z) acc += op.weight(z, c) * phase[z] * f[op.prepend(z, c)];
        nf[c] = acc;
      }
      std::swap(f, nf);
    }
    F[k] = f[cx];
    double sup = 0.0;
    for (int i = 0; i < d; ++i) sup = std::max(sup, std::abs(tau[i]));
    double mag = std::abs(F[k]) / double(total);
    if (sup < out.regions.eps_radius) out.regions.mass_inner += mag;
    else if (sup < delta) out.regions.mass_middle += mag;
    else {
      out.regions.mass_outer += mag;
      out.regions.max_outer = std::max(out.regions.max_outer, std::abs(F[k]));
    }
  }

  DisplacementDistribution& q = out.q;
  q.n = n;
  q.dim = d;
  for (int i = 0; i < d; ++i) q.lo[i] = n * L.vmin[i], q.hi[i] = n * L.vmax[i];
  q.table.assign(L.cells, 0.0);
  auto sup = q.support();
  for (const Site& r : sup) {
    std::complex<double> acc = 0.0;
    for (long k = 0; k < total; ++k) {
      double p = -dot(taus[k], to_vec(r));
      acc += std::complex<double>(std::cos(p), std::sin(p)) * F[k];
    }
    q.table[q.index(r)] = acc.real() / double(total);
  }
  q.log_scale = 0.0;
  // moments ignore tiny negative round-off
  q.mass = 0.0;
  for (double v : q.table) q.mass += v;
  return out;
}

TailReport tail_check(const RuelleOperator& op, const std::vector<double>& g_in, int n, double nu, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  if (!(nu > 0 && nu < 0.5)) throw ValidationError("nu must lie in (0, 1/2)");
  auto q = qn_distribution(op, g, n, x);
  TailReport t;
  t.n = n;
  t.nu = nu;
  t.radius = std::pow(double(n), 1.0 - nu);
  double total = 0.0, tail = 0.0;
  for (const Site& r : q.support()) {
    double v = q.table[q.index(r)];
    total += v;
    double dist = 0.0;
    for (int i = 0; i < q.dim; ++i) dist += (r[i] - q.mean[i]) * (r[i] - q.mean[i]);
    if (std::sqrt(dist) >= t.radius) tail += v;
  }
  t.tail = tail / total;
  return t;
}

TailEnvelope tail_envelope(const RuelleOperator& op, const std::vector<double>& g_in, const std::vector<int>& ns,
                           double nu, const Context& x) {
  const std::vector<double> g = unit_or(op, g_in);
  TailEnvelope e;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int n : ns) {
    e.reports.push_back(tail_check(op, g, n, nu, x));
    double t = e.reports.back().tail;
    if (t > 0) {
      double X = std::pow(double(n), 1 - 2 * nu), Y = std::log(t);
      sx += X, sy += Y, sxx += X * X, sxy += X * Y;
      ++m;
    }
  }
  // leading zero tails come from windows wider than the support
  std::size_t first = 0;
  while (first < e.reports.size() && e.reports[first].tail == 0.0) ++first;
  for (std::size_t i = first + 1; i < e.reports.size(); ++i)
    if (e.reports[i].tail > e.reports[i - 1].tail * (1 + 1e-12)) e.monotone = false;
  if (m >= 2) {
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    e.c3 = -slope;
    e.c2 = std::exp((sy - slope * sx) / m);
    // lift the fitted line to an envelope over all points
    for (const auto& r : e.reports)
      if (r.tail > 0) e.c2 = std::max(e.c2, r.tail * std::exp(e.c3 * std::pow(double(r.n), 1 - 2 * nu)));
  }
  for (const auto& r : e.reports)
    if (r.tail > e.c2 * std::exp(-e.c3 * std::pow(double(r.n), 1 - 2 * nu)) * (1 + 1e-9)) e.below = false;
  return e;
}

LltComparison llt_compare(const RuelleOperator& op, const std::vector<double>& g_in, int n, double nu,
                          const Context& x, bool with_saddle) {
  const std::vector<double> g = unit_or(op, g_in);
  auto q = qn_distribution(op, g, n, x);
  auto model = hessian_at_zero(op, g, 1e-4, x);
  Vec v{0, 0, 0};
  for (int i = 0; i < q.dim; ++i) v[i] = q.mean[i] / n;
  const double radius = std::pow(double(n), 1.0 - nu);
  LltComparison out;
  for (const Site& r : q.support()) {
    LltRow row;
    row.r = r;
    row.exact = q.at(r);
    if (!(row.exact > 0)) continue;
    row.gauss = gaussian_llt(model, n, r, v);
    row.rel_err = std::abs(row.exact / row.gauss - 1.0);
    double dist = 0.0;
    for (int i = 0; i < q.dim; ++i) dist += (r[i] - n * v[i]) * (r[i] - n * v[i]);
    row.in_window = std::sqrt(dist) < radius;
    if (row.in_window) {
      ++out.window_points;
      out.max_rel_err = std::max(out.max_rel_err, row.rel_err);
      if (with_saddle) {
        Vec target{0, 0, 0};
        for (int i = 0; i < q.dim; ++i) target[i] = double(r[i]) / n;
        try {
          auto ts = tilt_solve(op, g, n, target, x);
          auto qt = qn_distribution(op.tilted(ts.xi), g, n, x);
          double Hn = std::log(qt.mass) / n;
          double det = (qt.cov / n).determinant();
          row.saddle = std::exp(-dot(ts.xi, to_vec(r)) + n * Hn) /
                       std::sqrt(std::pow(2 * std::numbers::pi * n, q.dim) * det);
          row.saddle_rel_err = std::abs(row.exact / row.saddle - 1.0);
          out.max_saddle_err = std::max(out.max_saddle_err, row.saddle_rel_err);
        } catch (const ValidationError&) {
          row.saddle = 0.0;
        }
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace oz
