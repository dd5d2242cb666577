#include "ozlab/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "ozlab/error.hpp"

namespace oz {

std::string method_name(Method m) {
  switch (m) {
    case Method::Brute: return "brute";
    case Method::Strip: return "strip";
    case Method::MonteCarlo: return "monte-carlo";
    case Method::ToyModel: return "toy-model";
  }
  return "?";
}

double CorrelationTable::at(const Site& x, const Site& y) const {
  for (const auto& e : entries)
    if ((e.x == x && e.y == y) || (e.x == y && e.y == x)) return e.g;
  if (x == y) return 1.0;
  throw ValidationError("pair not in correlation table");
}

std::vector<CorrelationTable::ProfilePoint> CorrelationTable::profile(const Vec& direction, double rmin,
                                                                      double rmax) const {
  Vec u = normalized(direction);
  std::map<Site, std::tuple<double, double, int>> acc;
  for (const auto& e : entries) {
    Site d = e.y - e.x;
    Vec v = to_vec(d);
    double r = euclid(v);
    if (r == 0.0 || r < rmin - 1e-9 || r > rmax + 1e-9) continue;
    double along = dot(v, u);
    if (along <= 0 || std::abs(along - r) > 1e-9 * r) continue;
    auto& [g, s, n] = acc[d];
    g += e.g;
    s += e.stderr_;
    ++n;
  }
  std::vector<ProfilePoint> out;
  for (const auto& [d, t] : acc) {
    const auto& [g, s, n] = t;
    out.push_back({euclid(d), g / n, s / n});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
  return out;
}

// ------------------------------------------------------------- brute force

namespace {

struct SpinSum {
  const LatticeGraph& g;
  std::vector<double> coupling;  // beta * J_e * scale_e

  SpinSum(const LatticeGraph& graph, double beta, const std::vector<double>& scale) : g(graph) {
    if (g.vertex_count() > 24) throw ValidationError("graph too large for enumeration");
    if (!scale.empty() && int(scale.size()) != g.edge_count())
      throw ValidationError("edge scale has wrong length");
    for (int e = 0; e < g.edge_count(); ++e)
      coupling.push_back(beta * g.edge(e).J * (scale.empty() ? 1.0 : scale[e]));
  }

  // Gray-code walk over the configurations with spin 0 fixed to +1.  Calls
  // f(weight, spins) with weight relative to the all-plus configuration.
  template <class F>
  void run(F&& f) const {
    int n = g.vertex_count();
    std::vector<int> s(n, 1);
    double top = 0.0;
    for (double c : coupling) top += c;
    double energy = top;
    long long count = n > 0 ? (1LL << (n - 1)) : 1;
    f(1.0, s);
    for (long long k = 1; k < count; ++k) {
      int bit = __builtin_ctzll(k) + 1;
      double local = 0.0;
      for (int e : g.incident(bit)) local += coupling[e] * s[g.other(e, bit)];
      energy -= 2.0 * s[bit] * local;
      s[bit] = -s[bit];
      f(std::exp(energy - top), s);
    }
  }
};

}  // namespace

CorrelationTable exact_two_point(const LatticeGraph& g, double beta) {
  SpinSum sum(g, beta, {});
  int n = g.vertex_count();
  std::vector<double> acc(std::size_t(n) * n, 0.0);
  double Z = 0.0;
  sum.run([&](double w, const std::vector<int>& s) {
    Z += w;
    for (int i = 0; i < n; ++i) {
      double wi = w * s[i];
      for (int j = i + 1; j < n; ++j) acc[i * n + j] += wi * s[j];
    }
  });
  CorrelationTable t;
  t.dim = g.dim();
  t.beta = beta;
  t.method = Method::Brute;
  for (int i = 0; i < n; ++i) {
    t.entries.push_back({g.vertex(i), g.vertex(i), 1.0, 0.0});
    for (int j = i + 1; j < n; ++j) t.entries.push_back({g.vertex(i), g.vertex(j), acc[i * n + j] / Z, 0.0});
  }
  return t;
}

double exact_correlation(const LatticeGraph& g, double beta, int x, int y, const std::vector<double>& edge_scale) {
  if (x == y) return 1.0;
  SpinSum sum(g, beta, edge_scale);
  double Z = 0.0, C = 0.0;
  sum.run([&](double w, const std::vector<int>& s) {
    Z += w;
    C += w * s[x] * s[y];
  });
  return C / Z;
}

double log_partition(const LatticeGraph& g, double beta, const std::vector<double>& edge_scale) {
  SpinSum sum(g, beta, edge_scale);
  double Z = 0.0;
  sum.run([&](double w, const std::vector<int>&) { Z += w; });
  double top = 0.0;
  for (double c : sum.coupling) top += c;
  return std::log(2.0 * Z) + top;
}

// ----------------------------------------------------------- transfer matrix

CorrelationTable strip_two_point(int width, int length, double beta, const CouplingField& couplings, bool periodic) {
  if (width < 1 || width > 10) throw ValidationError("strip width must be in 1..10");
  if (length < 2) throw ValidationError("strip length must be at least 2");
  if (couplings.dim != 2 || !couplings.nearest_neighbor_only())
    throw ValidationError("transfer matrix supports n.n. only");
  if (periodic && width < 3) throw ValidationError("periodic strips need width >= 3");
  double Kh = beta * couplings.at({1, 0, 0});
  double Kv = beta * couplings.at({0, 1, 0});
  const int S = 1 << width;
  auto spin = [](int s, int r) { return (s >> r) & 1 ? 1.0 : -1.0; };

  std::vector<double> W(S);
  for (int s = 0; s < S; ++s) {
    double e = 0.0;
    for (int r = 0; r + 1 < width; ++r) e += spin(s, r) * spin(s, r + 1);
    if (periodic) e += spin(s, width - 1) * spin(s, 0);
    W[s] = std::exp(Kv * e);
  }
  const double a = std::exp(Kh), b = std::exp(-Kh);
  auto applyT = [&](std::vector<double>& v) {
    for (int r = 0; r < width; ++r) {
      int m = 1 << r;
      for (int s = 0; s < S; ++s)
        if (!(s & m)) {
          double x = v[s], y = v[s | m];
          v[s] = a * x + b * y;
          v[s | m] = b * x + a * y;
        }
    }
  };
  auto scale_by = [](std::vector<double>& v, double c) {
    for (double& x : v) x *= c;
  };

  std::vector<std::vector<double>> B(length, std::vector<double>(S, 1.0));
  for (int c = length - 2; c >= 0; --c) {
    auto& v = B[c];
    for (int s = 0; s < S; ++s) v[s] = W[s] * B[c + 1][s];
    applyT(v);
    double m = *std::max_element(v.begin(), v.end());
    scale_by(v, 1.0 / m);
  }

  std::vector<double> F = W;
  std::vector<std::vector<double>> G(width, std::vector<double>(S));
  for (int r = 0; r < width; ++r)
    for (int s = 0; s < S; ++s) G[r][s] = W[s] * spin(s, r);

  CorrelationTable t;
  t.dim = 2;
  t.beta = beta;
  t.method = Method::Strip;
  for (int c = 0; c < length; ++c) {
    double Z = 0.0;
    for (int s = 0; s < S; ++s) Z += F[s] * B[c][s];
    for (int r = 0; r < width; ++r) {
      double num = 0.0;
      for (int s = 0; s < S; ++s) num += G[r][s] * spin(s, r) * B[c][s];
      t.entries.push_back({{0, r, 0}, {c, r, 0}, c == 0 ? 1.0 : num / Z, 0.0});
    }
    if (c + 1 == length) break;
    applyT(F);
    for (int s = 0; s < S; ++s) F[s] *= W[s];
    for (auto& v : G) {
      applyT(v);
      for (int s = 0; s < S; ++s) v[s] *= W[s];
    }
    double m = *std::max_element(F.begin(), F.end());
    scale_by(F, 1.0 / m);
    for (auto& v : G) scale_by(v, 1.0 / m);
  }
  return t;
}

// -------------------------------------------------------------- Monte Carlo

namespace {

struct ChainResult {
  // batch means, [batch][direction][r]
  std::vector<std::vector<std::vector<double>>> batches;
};

ChainResult run_chain(const MonteCarloOptions& opt, int chain) {
  const int L = opt.size;
  const int N = L * L;
  const int R = opt.max_distance;
  std::seed_seq seq{std::uint64_t(opt.seed), std::uint64_t(chain), std::uint64_t(0x6f7a6c6162)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, N - 1);
  const double padd = -std::expm1(-2.0 * opt.beta * opt.J);

  std::vector<signed char> spin(N);
  for (auto& s : spin) s = unif(rng) < 0.5 ? 1 : -1;
  std::vector<int> stamp(N, 0), cluster, stack;
  cluster.reserve(N);
  stack.reserve(N);
  int cur = 0;

  auto wrap = [L](int v) { return ((v % L) + L) % L; };

  // Offsets per requested direction (with rotations when asked).
  std::vector<std::vector<Site>> dirs;
  for (const Site& d : opt.directions) {
    std::vector<Site> rot{d};
    if (opt.rotate) {
      Site r = d;
      for (int k = 0; k < 3; ++k) {
        r = Site{-r[1], r[0], 0};
        rot.push_back(r);
      }
    }
    dirs.push_back(rot);
  }

  auto grow = [&]() {
    ++cur;
    cluster.clear();
    int seed = pick(rng);
    signed char s0 = spin[seed];
    stamp[seed] = cur;
    stack.push_back(seed);
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      cluster.push_back(i);
      int x = i % L, y = i / L;
      int nb[4] = {y * L + wrap(x + 1), y * L + wrap(x - 1), wrap(y + 1) * L + x, wrap(y - 1) * L + x};
      for (int j : nb)
        if (stamp[j] != cur && spin[j] == s0 && unif(rng) < padd) {
          stamp[j] = cur;
          stack.push_back(j);
        }
    }
    for (int i : cluster) spin[i] = -s0;
  };

  for (long sweep = 0; sweep < opt.warmup; ++sweep)
    for (long flipped = 0; flipped < N;) {
      grow();
      flipped += long(cluster.size());
    }

  const long measure = opt.sweeps - opt.warmup;
  const int nb = std::max(1, opt.batches_per_chain);
  ChainResult res;
  res.batches.assign(nb, std::vector<std::vector<double>>(dirs.size(), std::vector<double>(R + 1, 0.0)));
  std::vector<long> clusters_in_batch(nb, 0);
  std::vector<std::vector<long>> hits(dirs.size(), std::vector<long>(R + 1));
  for (long sweep = 0; sweep < measure; ++sweep) {
    int b = int(sweep * nb / std::max(1L, measure));
    for (long flipped = 0; flipped < N;) {
      grow();
      flipped += long(cluster.size());
      // Spins of the cluster were flipped; membership is carried by stamp.
      for (auto& h : hits) std::fill(h.begin(), h.end(), 0L);
      for (int i : cluster) {
        int x = i % L, y = i / L;
        for (std::size_t d = 0; d < dirs.size(); ++d)
          for (const Site& o : dirs[d])
            for (int r = 1; r <= R; ++r)
              if (stamp[wrap(y + r * o[1]) * L + wrap(x + r * o[0])] == cur) ++hits[d][r];
      }
      double inv = 1.0 / double(cluster.size());
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        double per = inv / double(dirs[d].size());
        for (int r = 1; r <= R; ++r) res.batches[b][d][r] += hits[d][r] * per;
        res.batches[b][d][0] += 1.0;
      }
      ++clusters_in_batch[b];
    }
  }
  for (int b = 0; b < nb; ++b)
    for (auto& v : res.batches[b])
      for (double& x : v) x /= std::max(1L, clusters_in_batch[b]);
  return res;
}

}  // namespace

CorrelationTable monte_carlo_two_point(const MonteCarloOptions& opt) {
  if (opt.size < 4 || opt.size > 256) throw ValidationError("box side must be in 4..256");
  if (opt.sweeps < opt.warmup) throw ValidationError("insufficient sampling budget");
  if (opt.sweeps - opt.warmup < opt.batches_per_chain) throw ValidationError("insufficient sampling budget");
  if (!(opt.beta >= 0)) throw ValidationError("beta must be non-negative");
  if (opt.max_distance < 1 || 2 * opt.max_distance >= opt.size)
    throw ValidationError("max_distance must be positive and below half the box side");
  if (opt.chains < 1) throw ValidationError("need at least one chain");
  for (const Site& d : opt.directions)
    if (d[2] != 0 || (d[0] == 0 && d[1] == 0)) throw ValidationError("directions must be nonzero 2D lattice vectors");

  std::vector<ChainResult> results(opt.chains);
  int threads = std::max(1, std::min(opt.threads, opt.chains));
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int c = w; c < opt.chains; c += threads) results[c] = run_chain(opt, c);
    });
  for (auto& th : pool) th.join();

  CorrelationTable t;
  t.dim = 2;
  t.beta = opt.beta;
  t.method = Method::MonteCarlo;
  for (std::size_t d = 0; d < opt.directions.size(); ++d)
    for (int r = 0; r <= opt.max_distance; ++r) {
      std::vector<double> xs;
      for (const auto& c : results)
        for (const auto& b : c.batches) xs.push_back(b[d][r]);
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= double(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= double(xs.size() - 1);
      Site y{r * opt.directions[d][0], r * opt.directions[d][1], 0};
      t.entries.push_back({{0, 0, 0}, y, r == 0 ? 1.0 : mean, r == 0 ? 0.0 : std::sqrt(var / double(xs.size()))});
    }
  return t;
}

// ---------------------------------------------------------------- xi fits

XiEstimate inverse_correlation_length(const CorrelationTable& table, const Vec& direction, FitWindow window,
                                      bool prefactor_correction, double griffiths_tol) {
  auto pts = table.profile(direction, window.rmin, window.rmax);
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    if (!(p.g > 0)) continue;
    xs.push_back(p.r);
    ys.push_back(std::log(p.g) + (prefactor_correction ? 0.5 * (table.dim - 1) * std::log(p.r) : 0.0));
  }
  if (xs.size() < 4) throw ValidationError("window too small");
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  XiEstimate est;
  est.direction = normalized(direction);
  double slope = sxy / sxx;
  est.xi = -slope;
  est.intercept = my - slope * mx;
  est.window = window;
  est.prefactor_corrected = prefactor_correction;
  est.points = int(xs.size());
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (est.intercept + slope * xs[i]);
    ss += r * r;
  }
  est.residual = std::sqrt(ss / n);
  if (griffiths_tol >= 0)
    for (const auto& p : pts)
      if (p.g > std::exp(-est.xi * p.r) * (1.0 + griffiths_tol)) est.griffiths_ok = false;
  if (!(est.xi > 0)) throw NumericalError("fitted inverse correlation length is not positive");
  return est;
}

void write_corr_csv(const CorrelationTable& table, std::ostream& out) {
  for (int i = 0; i < table.dim; ++i) out << "x" << (i + 1) << ",";
  out << "g,stderr,method\n";
  out << std::setprecision(17);
  for (const auto& e : table.entries) {
    Site d = e.y - e.x;
    for (int i = 0; i < table.dim; ++i) out << d[i] << ",";
    out << e.g << "," << e.stderr_ << "," << method_name(table.method) << "\n";
  }
}

CorrelationTable read_corr_csv(std::istream& in) {
  CorrelationTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty correlation table");
  int dim = 0;
  for (std::size_t p = 0; (p = line.find('x', p)) != std::string::npos; ++p) ++dim;
  if (dim < 1 || dim > 3) throw ValidationError("bad corr.csv header");
  t.dim = dim;
  bool method_set = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (int(cells.size()) != dim + 3) throw ValidationError("bad corr.csv row: " + line);
    CorrelationEntry e;
    try {
      for (int i = 0; i < dim; ++i) e.y[i] = std::stoi(cells[i]);
      e.g = std::stod(cells[dim]);
      e.stderr_ = std::stod(cells[dim + 1]);
    } catch (const std::logic_error&) {
      throw ValidationError("bad corr.csv row: " + line);
    }
    if (!method_set) {
      for (Method m : {Method::Brute, Method::Strip, Method::MonteCarlo, Method::ToyModel})
        if (method_name(m) == cells[dim + 2]) t.method = m;
      method_set = true;
    }
    t.entries.push_back(e);
  }
  return t;
}

}  // namespace oz
