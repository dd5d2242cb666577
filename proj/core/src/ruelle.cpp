#include "ozlab/ruelle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "ozlab/error.hpp"

namespace oz {

void Alphabet::add(const Site& v, std::string label) {
  V.push_back(v);
  labels.push_back(label.empty() ? std::to_string(V.size() - 1) : std::move(label));
}

bool truly_d_dimensional(const Alphabet& a) {
  if (a.size() < 2) return false;
  Eigen::MatrixXd M(a.dim, a.size() - 1);
  for (int z = 2; z <= a.size(); ++z)
    for (int i = 0; i < a.dim; ++i) M(i, z - 2) = a.V[z][i] - a.V[1][i];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  return lu.rank() == a.dim;
}

// ------------------------------------------------------------ operator

RuelleOperator::RuelleOperator(Alphabet alphabet, int depth, std::vector<double> weights, double theta)
    : alphabet_(std::move(alphabet)), depth_(depth), theta_(theta), weights_(std::move(weights)) {
  init();
}

void RuelleOperator::init() {
  const int S = alphabet_.size();
  if (S < 1) throw ValidationError("alphabet has no symbols");
  if (depth_ < 0) throw ValidationError("negative depth");
  if (!(theta_ > 0 && theta_ < 1)) throw ValidationError("theta must lie in (0,1)");
  const int D = context_length();
  pow_.assign(std::max(D, depth_) + 1, 1);
  for (std::size_t k = 1; k < pow_.size(); ++k) pow_[k] = pow_[k - 1] * (S + 1);
  if (long(weights_.size()) != S * pow_[depth_]) throw ValidationError("weight table has the wrong size");
  for (double w : weights_)
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("weights must be finite and nonnegative");
  long n = full_size();
  full_tab_.resize(n);
  for (long idx = 0; idx < n; ++idx) full_tab_[idx] = table_column(full_to_code(idx));
}

RuelleOperator RuelleOperator::from_function(Alphabet alphabet, int depth, const WeightFn& w, double theta) {
  const int S = alphabet.size();
  long cols = 1;
  for (int k = 0; k < depth; ++k) cols *= S + 1;
  std::vector<double> weights(S * cols, 0.0);
  for (long c = 0; c < cols; ++c) {
    Context ctx(depth);
    long r = c;
    for (int k = depth - 1; k >= 0; --k) ctx[k] = int(r % (S + 1)), r /= S + 1;
    bool ok = true;
    for (int k = 1; k < depth; ++k)
      if (ctx[k - 1] == 0 && ctx[k] != 0) ok = false;
    if (!ok) continue;
    for (int z = 1; z <= S; ++z) weights[(z - 1) * cols + c] = w(z, ctx);
  }
  return RuelleOperator(std::move(alphabet), depth, std::move(weights), theta);
}

RuelleOperator RuelleOperator::iid(Alphabet alphabet, const std::vector<double>& p, double theta) {
  if (int(p.size()) != alphabet.size()) throw ValidationError("one weight per symbol expected");
  return RuelleOperator(std::move(alphabet), 0, p, theta);
}

long RuelleOperator::code(const Context& ctx) const {
  const int D = context_length();
  if (int(ctx.size()) > D) throw ValidationError("depth mismatch: context longer than " + std::to_string(D));
  long c = 0;
  bool empty_seen = false;
  for (int k = 0; k < D; ++k) {
    int s = k < int(ctx.size()) ? ctx[k] : 0;
    if (s < 0 || s > symbols()) throw ValidationError("symbol out of range");
    if (empty_seen && s != 0) throw ValidationError("empty symbol must be absorbing");
    if (s == 0) empty_seen = true;
    c = c * (symbols() + 1) + s;
  }
  return c;
}

Context RuelleOperator::decode(long c) const {
  const int D = context_length();
  Context ctx(D);
  for (int k = D - 1; k >= 0; --k) ctx[k] = int(c % (symbols() + 1)), c /= symbols() + 1;
  return ctx;
}

bool RuelleOperator::valid(long c) const {
  auto ctx = decode(c);
  for (std::size_t k = 1; k < ctx.size(); ++k)
    if (ctx[k - 1] == 0 && ctx[k] != 0) return false;
  return true;
}

int RuelleOperator::level(long c) const {
  auto ctx = decode(c);
  return int(std::count_if(ctx.begin(), ctx.end(), [](int s) { return s != 0; }));
}

double RuelleOperator::weight(int z, long c) const { return weights_[(z - 1) * pow_[depth_] + table_column(c)]; }

std::vector<double> RuelleOperator::apply(const std::vector<double>& f) const {
  if (long(f.size()) != code_count()) throw ValidationError("depth mismatch: function size");
  std::vector<double> out(f.size(), 0.0);
  for (long c = 0; c < code_count(); ++c) {
    if (!valid(c)) continue;
    double s = 0.0;
    for (int z = 1; z <= symbols(); ++z) s += weight(z, c) * f[prepend(z, c)];
    out[c] = s;
  }
  return out;
}

double RuelleOperator::apply_at(const std::vector<double>& f, const Context& ctx) const {
  if (long(f.size()) != code_count()) throw ValidationError("depth mismatch: function size");
  long c = code(ctx);
  double s = 0.0;
  for (int z = 1; z <= symbols(); ++z) s += weight(z, c) * f[prepend(z, c)];
  return s;
}

long RuelleOperator::full_size() const {
  long n = 1;
  for (int k = 0; k < context_length(); ++k) n *= symbols();
  return n;
}

long RuelleOperator::full_to_code(long idx) const {
  const int D = context_length(), S = symbols();
  Context ctx(D);
  for (int k = D - 1; k >= 0; --k) ctx[k] = int(idx % S) + 1, idx /= S;
  long c = 0;
  for (int s : ctx) c = c * (S + 1) + s;
  return c;
}

std::vector<double> RuelleOperator::full_apply(const std::vector<double>& v) const {
  const long n = full_size(), block = n / symbols(), stride = pow_[depth_];
  std::vector<double> out(n, 0.0);
  for (long x = 0; x < n; ++x) {
    const long col = full_tab_[x], tail = x / symbols();
    double s = 0.0;
    for (int z = 0; z < symbols(); ++z) s += weights_[z * stride + col] * v[z * block + tail];
    out[x] = s;
  }
  return out;
}

std::vector<double> RuelleOperator::full_apply_transpose(const std::vector<double>& v) const {
  const long n = full_size(), block = n / symbols(), stride = pow_[depth_];
  std::vector<double> out(n, 0.0);
  for (long x = 0; x < n; ++x) {
    const long col = full_tab_[x], tail = x / symbols();
    for (int z = 0; z < symbols(); ++z) out[z * block + tail] += weights_[z * stride + col] * v[x];
  }
  return out;
}

Eigen::MatrixXd RuelleOperator::full_matrix() const {
  const long n = full_size(), block = n / symbols(), stride = pow_[depth_];
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (long x = 0; x < n; ++x)
    for (int z = 0; z < symbols(); ++z) M(x, z * block + x / symbols()) += weights_[z * stride + full_tab_[x]];
  return M;
}

Eigen::MatrixXcd RuelleOperator::full_matrix_complex(const Vec& tau) const {
  const long n = full_size(), block = n / symbols(), stride = pow_[depth_];
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (int z = 0; z < symbols(); ++z) {
    double phase = dot(tau, to_vec(alphabet_.V[z + 1]));
    std::complex<double> e(std::cos(phase), std::sin(phase));
    for (long x = 0; x < n; ++x) M(x, z * block + x / symbols()) += weights_[z * stride + full_tab_[x]] * e;
  }
  return M;
}

RuelleOperator RuelleOperator::tilted(const Vec& xi) const {
  auto w = weights_;
  const long stride = pow_[depth_];
  for (int z = 0; z < symbols(); ++z) {
    double f = std::exp(dot(xi, to_vec(alphabet_.V[z + 1])));
    for (long c = 0; c < stride; ++c) w[z * stride + c] *= f;
  }
  return RuelleOperator(alphabet_, depth_, std::move(w), theta_);
}

RuelleOperator RuelleOperator::truncate(int N) const {
  if (N < 1) throw ValidationError("truncation needs N >= 1");
  if (N > symbols()) throw ValidationError("truncation beyond alphabet size");
  Alphabet a;
  a.dim = alphabet_.dim;
  for (int z = 1; z <= N; ++z) a.add(alphabet_.V[z], alphabet_.labels[z]);
  const RuelleOperator& self = *this;
  return from_function(
      a, depth_,
      [&](int z, const Context& ctx) {
        long c = 0;
        for (int k = 0; k < self.context_length(); ++k) c = c * (self.symbols() + 1) + (k < depth_ ? ctx[k] : 0);
        return self.weight(z, c);
      },
      theta_);
}

RuelleOperator RuelleOperator::with_depth(int depth) const {
  if (depth < depth_) throw ValidationError("cannot reduce depth");
  const RuelleOperator& self = *this;
  return from_function(
      alphabet_, depth,
      [&](int z, const Context& ctx) {
        long c = 0;
        for (int k = 0; k < self.context_length(); ++k) c = c * (self.symbols() + 1) + (k < depth_ ? ctx[k] : 0);
        return self.weight(z, c);
      },
      theta_);
}

RuelleOperator RuelleOperator::scaled(double factor) const {
  auto w = weights_;
  for (double& x : w) x *= factor;
  return RuelleOperator(alphabet_, depth_, std::move(w), theta_);
}

double RuelleOperator::holder_seminorm() const {
  const int S = symbols();
  double best = 0.0;
  for (int k = 2; k <= depth_ + 1; ++k) {
    // group by z and the first k-2 context symbols
    const long group = pow_[depth_ - (k - 2)];
    double var = 0.0;
    for (int z = 1; z <= S; ++z)
      for (long g0 = 0; g0 < pow_[depth_]; g0 += group) {
        double lo = INFINITY, hi = -INFINITY;
        for (long c = g0; c < g0 + group; ++c) {
          long full = c * pow_[context_length() - depth_];
          if (!valid(full)) continue;
          double w = weights_[(z - 1) * pow_[depth_] + c];
          if (!(w > 0)) return INFINITY;
          double p = std::log(w);
          lo = std::min(lo, p);
          hi = std::max(hi, p);
        }
        if (hi >= lo) var = std::max(var, hi - lo);
      }
    best = std::max(best, var / std::pow(theta_, k));
  }
  return best;
}

double RuelleOperator::summability() const {
  double best = 0.0;
  for (long c = 0; c < code_count(); ++c) {
    if (!valid(c)) continue;
    double s = 0.0;
    for (int z = 1; z <= symbols(); ++z) s += weight(z, c);
    best = std::max(best, s);
  }
  return best;
}

// ------------------------------------------------------------ spectra

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Power {
  std::vector<double> v;
  double rho = 0.0;
  int iterations = 0;
  double residual = INFINITY;
};

template <class Apply>
Power power_iterate(Apply&& A, long n, double tol, int max_iter) {
  Power p;
  p.v.assign(n, 1.0);
  for (int it = 1; it <= max_iter; ++it) {
    auto u = A(p.v);
    double r = dotv(p.v, u) / dotv(p.v, p.v);
    double res = 0.0;
    for (long i = 0; i < n; ++i) res = std::max(res, std::abs(u[i] - r * p.v[i]));
    double scale = inf_norm(u);
    if (!(scale > 0)) throw NumericalError("operator annihilates the positive cone");
    p.rho = r;
    p.iterations = it;
    p.residual = res / inf_norm(p.v);
    for (double& x : u) x /= scale;
    p.v = std::move(u);
    if (p.residual <= tol * std::max(1.0, std::abs(r))) return p;
  }
  throw NumericalError("power iteration did not converge: residual " + std::to_string(p.residual));
}

}  // namespace

SpectralData spectral_data(const RuelleOperator& op, double tol, int max_iter) {
  if (!std::isfinite(op.summability())) throw ValidationError("potential not summable");
  SpectralData sd;
  const long n = op.full_size();
  auto right = power_iterate([&](const std::vector<double>& v) { return op.full_apply(v); }, n, tol, max_iter);
  auto left = power_iterate([&](const std::vector<double>& v) { return op.full_apply_transpose(v); }, n, tol, max_iter);
  auto Bh = op.full_apply(right.v);
  sd.rho = dotv(left.v, Bh) / dotv(left.v, right.v);
  sd.iterations = std::max(right.iterations, left.iterations);
  if (!(sd.rho > 0)) throw NumericalError("nonpositive spectral radius");

  // eigenfunction on every code, lower levels by back substitution
  const int D = op.context_length();
  sd.h.assign(op.code_count(), 0.0);
  for (long i = 0; i < n; ++i) sd.h[op.full_to_code(i)] = right.v[i];
  std::vector<std::vector<long>> by_level(D + 1);
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c)) by_level[op.level(c)].push_back(c);
  for (int lv = D - 1; lv >= 0; --lv)
    for (long c : by_level[lv]) {
      double s = 0.0;
      for (int z = 1; z <= op.symbols(); ++z) s += op.weight(z, c) * sd.h[op.prepend(z, c)];
      sd.h[c] = s / sd.rho;
    }
  double h0 = sd.h[op.empty_code()];
  if (!(h0 > 0)) throw NumericalError("eigenfunction vanishes at the empty context");
  for (double& x : sd.h) x /= h0;
  sd.left = left.v;
  auto Lh = op.apply(sd.h);
  sd.residual = 0.0;
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c)) sd.residual = std::max(sd.residual, std::abs(Lh[c] - sd.rho * sd.h[c]));

  // second eigenvalue from the deflated iteration
  std::vector<double> hf(n);
  for (long i = 0; i < n; ++i) hf[i] = sd.h[op.full_to_code(i)];
  const double lh = dotv(left.v, hf);
  auto project = [&](std::vector<double>& v) {
    double a = dotv(left.v, v) / lh;
    for (long i = 0; i < n; ++i) v[i] -= a * hf[i];
  };
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  project(v);
  double nv = std::sqrt(dotv(v, v));
  if (!(nv > 0)) {
    sd.lambda2 = 0.0;
  } else {
    for (double& x : v) x /= nv;
    const double work = double(n) * op.symbols();
    const int cap = int(std::clamp(2e8 / work, 200.0, 20000.0));
    std::vector<double> logs;
    bool done = false;
    for (int it = 0; it < cap && !done; ++it) {
      auto u = op.full_apply(v);
      project(u);
      double nu = std::sqrt(dotv(u, u));
      if (nu <= 1e-15 * sd.rho) {
        sd.lambda2 = 0.0;
        done = true;
        break;
      }
      double lr = dotv(v, u);
      double res = 0.0;
      for (long i = 0; i < n; ++i) res += (u[i] - lr * v[i]) * (u[i] - lr * v[i]);
      if (std::sqrt(res) <= 1e-13 * sd.rho) {
        sd.lambda2 = std::abs(lr);
        done = true;
        break;
      }
      logs.push_back(std::log(nu));
      for (long i = 0; i < n; ++i) v[i] = u[i] / nu;
    }
    if (!done) {
      std::size_t from = logs.size() / 2;
      double s = 0.0;
      for (std::size_t i = from; i < logs.size(); ++i) s += logs[i];
      sd.lambda2 = std::exp(s / double(logs.size() - from));
    }
  }
  sd.gap = sd.lambda2 / sd.rho;
  return sd;
}

std::vector<std::complex<double>> dense_spectrum(const RuelleOperator& op) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(op.full_matrix(), false);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  return ev;
}

RuelleOperator normalize(const RuelleOperator& op, const SpectralData& sd) {
  const int D = op.context_length();
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c) && !(sd.h[c] > 0)) throw NumericalError("eigenfunction touches zero");
  auto out = RuelleOperator::from_function(
      op.alphabet(), D,
      [&](int z, const Context& ctx) {
        long c = op.code(ctx);
        return op.weight(z, c) * sd.h[op.prepend(z, c)] / (sd.rho * sd.h[c]);
      },
      op.theta());
  double defect = normalization_defect(out);
  if (defect > 1e-10) throw NumericalError("normalization defect " + std::to_string(defect));
  return out;
}

double normalization_defect(const RuelleOperator& op) {
  double d = 0.0;
  for (long c = 0; c < op.code_count(); ++c) {
    if (!op.valid(c)) continue;
    double s = 0.0;
    for (int z = 1; z <= op.symbols(); ++z) s += op.weight(z, c);
    d = std::max(d, std::abs(s - 1.0));
  }
  return d;
}

double fourier_radius(const RuelleOperator& op, const Vec& tau) {
  auto M = op.full_matrix_complex(tau);
  if (M.rows() <= 700) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(M.rows());
  v.normalize();
  double acc = 0.0;
  int count = 0;
  for (int it = 0; it < 2000; ++it) {
    v = M * v;
    double nv = v.norm();
    if (!(nv > 0)) return 0.0;
    v /= nv;
    if (it >= 1000) acc += std::log(nv), ++count;
  }
  return std::exp(acc / count);
}

OffAxisResult off_axis_scan(const RuelleOperator& op, double delta, int grid) {
  const Alphabet& a = op.alphabet();
  if (!truly_d_dimensional(a)) throw ValidationError("observable not truly d-dimensional");
  if (!(delta > 0 && delta < std::numbers::pi)) throw ValidationError("delta must lie in (0, pi)");
  if (grid < 4) throw ValidationError("grid too coarse");
  const int d = a.dim;
  std::vector<double> axis;
  for (int k = 0; k < grid; ++k) axis.push_back(-std::numbers::pi + 2.0 * std::numbers::pi * k / grid);
  axis.push_back(delta);
  axis.push_back(-delta);
  std::sort(axis.begin(), axis.end());
  OffAxisResult r;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec tau{0, 0, 0};
    double m = 0.0;
    for (int i = 0; i < d; ++i) tau[i] = axis[idx[i]], m = std::max(m, std::abs(tau[i]));
    if (m >= delta - 1e-15) {
      double rad = fourier_radius(op, tau);
      ++r.points;
      if (rad > r.max_radius) r.max_radius = rad, r.argmax = tau;
    }
    int i = 0;
    while (i < d && ++idx[i] == int(axis.size())) idx[i++] = 0;
    if (i == d) break;
  }
  r.eta = 1.0 - r.max_radius;
  return r;
}

ProjectorResult projector_coefficient(const RuelleOperator& op, const std::vector<double>& g, double tol,
                                      int max_iter) {
  if (normalization_defect(op) > 1e-8) throw ValidationError("operator is not normalized");
  if (long(g.size()) != op.code_count()) throw ValidationError("depth mismatch: function size");
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c) && !(g[c] > 0)) throw ValidationError("g must be positive");
  ProjectorResult r;
  auto f = g;
  double prev = -1.0;
  double scale = inf_norm(g);
  for (int it = 1; it <= max_iter; ++it) {
    auto nf = op.apply(f);
    double diff = 0.0;
    for (long c = 0; c < op.code_count(); ++c)
      if (op.valid(c)) diff = std::max(diff, std::abs(nf[c] - f[c]));
    if (prev > 0 && diff > 1e-9 * scale) r.rate = diff / prev;
    prev = diff;
    f = std::move(nf);
    r.iterations = it;
    if (diff <= tol * scale) {
      r.per_context = f;
      r.c = f[op.empty_code()];
      double lo = INFINITY, hi = -INFINITY;
      for (long c = 0; c < op.code_count(); ++c)
        if (op.valid(c)) lo = std::min(lo, f[c]), hi = std::max(hi, f[c]);
      r.spread = hi - lo;
      return r;
    }
  }
  throw NumericalError("projector iteration did not converge");
}

double apriori_sum(const RuelleOperator& op, int n) {
  if (n < 1) throw ValidationError("n must be positive");
  const int S = op.symbols();
  std::vector<long> contexts;
  for (long c = 0; c < op.code_count(); ++c)
    if (op.valid(c)) contexts.push_back(c);
  double strings = std::pow(double(S), n);
  if (strings * contexts.size() * n > 2e8) throw ValidationError("apriori sum too large to enumerate");
  double total = 0.0;
  std::vector<int> z(n, 1);
  while (true) {
    double best = 0.0;
    for (long x : contexts) {
      double w = 1.0;
      long c = x;
      for (int k = n - 1; k >= 0; --k) {
        w *= op.weight(z[k], c);
        c = op.prepend(z[k], c);
      }
      best = std::max(best, w);
    }
    total += best;
    int i = 0;
    while (i < n && ++z[i] > S) z[i++] = 1;
    if (i == n) break;
  }
  return total;
}

// ------------------------------------------------------------ files

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RuelleOperator parse_alphabet(std::istream& in) {
  int dim = -1, depth = -1;
  double theta = 0.5;
  struct Row {
    std::string id;
    Site v{};
    std::vector<std::pair<std::string, double>> entries;
  };
  std::vector<Row> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto where = " (line " + std::to_string(lineno) + ")";
    if (line.find(':') == std::string::npos) {
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ValidationError("malformed line" + where);
      std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
      try {
        if (key == "dimension") dim = std::stoi(val);
        else if (key == "depth") depth = std::stoi(val);
        else if (key == "theta") theta = std::stod(val);
        else throw ValidationError("unknown key '" + key + "'" + where);
      } catch (const std::invalid_argument&) {
        throw ValidationError("bad value for " + key + where);
      }
      continue;
    }
    if (dim < 1 || dim > 3) throw ValidationError("dimension must be set to 1, 2 or 3 before symbols" + where);
    if (depth < 0) throw ValidationError("depth must be set before symbols" + where);
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(trim(part));
    if (parts.size() != 3) throw ValidationError("symbol line needs `id : V : weights`" + where);
    Row row;
    row.id = parts[0];
    if (row.id.empty() || row.id == "_" || row.id == "*") throw ValidationError("bad symbol id" + where);
    std::stringstream vs(parts[1]);
    for (int i = 0; i < dim; ++i)
      if (!(vs >> row.v[i])) throw ValidationError("V needs " + std::to_string(dim) + " components" + where);
    std::string extra;
    if (vs >> extra) throw ValidationError("too many V components" + where);
    std::stringstream ws(parts[2]);
    std::string tok;
    while (ws >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw ValidationError("weight entry needs ctx=weight" + where);
      double w;
      try {
        w = std::stod(tok.substr(eq + 1));
      } catch (const std::exception&) {
        throw ValidationError("bad weight" + where);
      }
      row.entries.push_back({tok.substr(0, eq), w});
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("alphabet has no symbols");
  Alphabet a;
  a.dim = dim;
  std::map<std::string, int> index;
  for (const auto& r : rows) {
    if (index.count(r.id)) throw ValidationError("duplicate symbol " + r.id);
    a.add(r.v, r.id);
    index[r.id] = a.size();
  }
  auto parse_ctx = [&](const std::string& s) {
    Context ctx;
    if (s == "_") return Context(depth, 0);
    std::stringstream cs(s);
    std::string id;
    while (std::getline(cs, id, ',')) {
      id = trim(id);
      if (id == "_") ctx.push_back(0);
      else if (index.count(id)) ctx.push_back(index[id]);
      else throw ValidationError("unknown symbol '" + id + "' in context");
    }
    if (int(ctx.size()) > depth) throw ValidationError("depth mismatch: context '" + s + "'");
    ctx.resize(depth, 0);
    return ctx;
  };
  std::vector<std::map<Context, double>> table(a.size() + 1);
  std::vector<double> fallback(a.size() + 1, -1.0);
  for (const auto& r : rows) {
    int z = index[r.id];
    for (const auto& [ctx, w] : r.entries) {
      if (ctx == "*") fallback[z] = w;
      else table[z][parse_ctx(ctx)] = w;
    }
  }
  return RuelleOperator::from_function(
      a, depth,
      [&](int z, const Context& ctx) {
        auto it = table[z].find(ctx);
        if (it != table[z].end()) return it->second;
        if (fallback[z] >= 0) return fallback[z];
        throw ValidationError("missing weight for symbol " + a.labels[z]);
      },
      theta);
}

RuelleOperator load_alphabet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open alphabet file " + path);
  return parse_alphabet(in);
}

void write_alphabet(const RuelleOperator& op, std::ostream& out) {
  const Alphabet& a = op.alphabet();
  out << "dimension = " << a.dim << "\ndepth = " << op.depth() << "\ntheta = " << std::setprecision(17)
      << op.theta() << "\n";
  const int S = op.symbols();
  long cols = 1;
  for (int k = 0; k < op.depth(); ++k) cols *= S + 1;
  for (int z = 1; z <= S; ++z) {
    out << a.labels[z] << " :";
    for (int i = 0; i < a.dim; ++i) out << ' ' << a.V[z][i];
    out << " :";
    for (long c = 0; c < cols; ++c) {
      Context ctx(op.depth());
      long r = c;
      for (int k = op.depth() - 1; k >= 0; --k) ctx[k] = int(r % (S + 1)), r /= S + 1;
      bool ok = true;
      for (int k = 1; k < op.depth(); ++k)
        if (ctx[k - 1] == 0 && ctx[k] != 0) ok = false;
      if (!ok) continue;
      std::string key;
      if (op.depth() == 0 || ctx[0] == 0) {
        key = op.depth() == 0 ? "*" : "_";
      } else {
        for (int s : ctx) {
          if (s == 0) break;
          if (!key.empty()) key += ',';
          key += a.labels[s];
        }
      }
      out << ' ' << key << '=' << op.table()[(z - 1) * cols + c];
    }
    out << '\n';
  }
}

}  // namespace oz
