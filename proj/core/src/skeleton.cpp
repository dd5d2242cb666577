#include "ozlab/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"

namespace oz {

namespace {
constexpr double kTol = 1e-9;

bool inside(const NormModel& norm, const Site& center, double K, const Site& x) { return norm(x - center) <= K; }
}  // namespace

Skeleton build_skeleton(const Line& line, double K, const NormModel& norm) {
  if (!(K > 0)) throw ValidationError("K must be positive");
  if (line.trivial()) throw ValidationError("skeleton of a trivial line");
  Skeleton sk;
  sk.K = K;
  sk.parent = line;
  const auto& t = line.vertices;
  const int n = line.length();
  int j = 0;
  sk.points.push_back(t[0]);
  while (true) {
    const Site& xk = sk.points.back();
    bool rest_inside = true;
    for (int i = j + 1; i <= n && rest_inside; ++i) rest_inside = inside(norm, xk, K, t[i]);
    if (rest_inside) {
      sk.points.push_back(t[n]);
      break;
    }
    int jstar = j + 1;
    while (inside(norm, xk, K, t[jstar])) ++jstar;
    sk.points.push_back(t[jstar]);
    j = jstar;
  }
  return sk;
}

std::vector<SkeletonWeight> enumerate_skeletons(const LatticeGraph& g, const Site& x, const Site& y, double beta,
                                                double K, const NormModel& norm) {
  std::map<std::vector<Site>, SkeletonWeight> groups;
  for (const auto& term : enumerate_lines(g, x, y, beta)) {
    if (term.line.trivial()) continue;
    Skeleton sk = build_skeleton(term.line, K, norm);
    auto& w = groups[sk.points];
    if (w.lines == 0) w.skeleton = sk;
    w.weight += term.q;
    ++w.lines;
  }
  std::vector<SkeletonWeight> out;
  bool brute = g.vertex_count() <= 24;
  for (auto& [pts, w] : groups) {
    double prod = 1.0;
    for (int l = 1; l <= w.skeleton.N(); ++l) {
      int a = g.index(pts[l - 1]), b = g.index(pts[l]);
      prod *= brute ? exact_correlation(g, beta, a, b) : representation_sum(g, pts[l - 1], pts[l], beta);
    }
    w.product_bound = prod;
    w.exp_bound = std::exp(-(w.skeleton.N() - 1) * K);
    out.push_back(std::move(w));
  }
  return out;
}

double skeleton_weight(const LatticeGraph& g, const Skeleton& sk, double beta, const NormModel& norm) {
  if (sk.points.size() < 2) throw ValidationError("skeleton needs two points");
  double w = 0.0;
  for (const auto& term : enumerate_lines(g, sk.points.front(), sk.points.back(), beta)) {
    if (term.line.trivial()) continue;
    if (build_skeleton(term.line, sk.K, norm).points == sk.points) w += term.q;
  }
  return w;
}

bool cone_step(const DualVector& t, double delta, const Site& x, const NormModel& norm) {
  if (x == Site{0, 0, 0}) return false;
  return in_forward_cone(t, delta, x, norm);
}

SkeletonClassification classify(const Skeleton& sk, const DualVector& t, double delta, const NormModel& norm) {
  if (!(delta > 0 && delta < 0.5)) throw ValidationError("delta must lie in (0, 1/2)");
  SkeletonClassification c;
  const int N = sk.N();
  const auto& x = sk.points;
  c.forward.assign(N, false);
  for (int l = 0; l < N; ++l) {
    c.forward[l] = cone_step(t, delta, x[l + 1] - x[l], norm);
    if (!c.forward[l]) ++c.n_back;
  }
  c.cone.assign(N + 1, true);
  for (int l = 0; l <= N; ++l)
    for (int j = l + 1; j <= N && c.cone[l]; ++j) c.cone[l] = cone_step(t, delta, x[j] - x[l], norm);
  c.is_marked.assign(N + 1, false);
  int from = 0;
  while (true) {
    int l = -1;
    for (int j = from; j <= N; ++j)
      if (!c.cone[j]) {
        l = j;
        break;
      }
    if (l < 0) break;
    int r = l + 1;
    while (r <= N && cone_step(t, delta, x[r] - x[l], norm)) ++r;
    c.marked.push_back({l, r});
    for (int j = l; j < r; ++j) c.is_marked[j] = true;
    c.n_mark += r - l;
    from = r;
  }
  return c;
}

double skeleton_surcharge(const Skeleton& sk, const DualVector& t, const NormModel& norm) {
  double s = 0.0;
  for (int l = 0; l < sk.N(); ++l) s += surcharge(t, sk.points[l + 1] - sk.points[l], norm);
  return s;
}

SurchargeReport surcharge_checks(const Skeleton& sk, const DualVector& t, double delta, double K, double range,
                                 const NormModel& norm, double weight) {
  if (K < 8.0 * range) throw ValidationError("scale below range guard");
  SurchargeReport r;
  auto c = classify(sk, t, delta, norm);
  r.surcharge = skeleton_surcharge(sk, t, norm);
  r.n_back = c.n_back;
  r.n_mark = c.n_mark;
  r.back_bound = r.surcharge + kTol >= delta * K * (c.n_back - 1);
  r.mark_bound = r.surcharge + kTol >= delta * K * c.n_mark / 7.0;
  if (weight >= 0.0) {
    r.has_weight = true;
    r.weight = weight;
    r.weight_bound = std::exp(-dot(t.t, to_vec(sk.points.back() - sk.points.front())) - r.surcharge);
    r.weight_ok = weight <= r.weight_bound + kTol;
  }
  return r;
}

std::vector<SlabInfo> slab_classify(const Skeleton& sk, const DualVector& t, double K, double delta,
                                    const NormModel& norm) {
  const int N = sk.N();
  auto c = classify(sk, t, delta, norm);
  std::vector<double> h(N + 1);
  std::vector<long> slab(N + 1);
  for (int l = 0; l <= N; ++l) {
    h[l] = dot(t.t, to_vec(sk.points[l] - sk.points[0]));
    slab[l] = long(std::floor(h[l] / (8.0 * K)));
  }
  long lo = *std::min_element(slab.begin(), slab.end());
  long hi = *std::max_element(slab.begin(), slab.end());
  std::vector<SlabInfo> out;
  for (long s = lo; s <= hi; ++s) {
    SlabInfo info;
    info.index = s;
    bool any = false, dirty = false;
    for (int l = 0; l <= N; ++l)
      if (slab[l] == s) {
        any = true;
        if (c.is_marked[l]) dirty = true;
        if (info.i < 0) info.i = l;
      }
    if (!any) {
      out.push_back(info);
      continue;
    }
    for (int l = info.i; l <= N; ++l)
      if (slab[l] == s) info.j = l;
    info.label = dirty ? SlabLabel::Dirty : SlabLabel::Clean;
    if (!dirty && s != slab[0] && s != slab[N] && info.i > 0 && info.j < N) {
      bool heights = true;
      for (int l = info.i - 1; l <= info.j; ++l) {
        double dh = h[l + 1] - h[l];
        heights = heights && dh >= (1.0 - delta) * K && dh < 2.0 * K;
      }
      info.bracket_applicable = heights;
      if (heights) {
        int len = info.j - info.i;
        info.bracket_ok = len >= 3 && len <= 8.0 / (1.0 - delta) + kTol;
      }
    }
    out.push_back(info);
  }
  return out;
}

Skeleton random_admissible_skeleton(std::mt19937_64& rng, int n, double K, const NormModel& norm,
                                    const DualVector& t, double delta, double backtrack_rate) {
  if (n < 1) throw ValidationError("need at least one increment");
  const int d = norm.dim();
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  Skeleton sk;
  sk.K = K;
  sk.points.push_back({0, 0, 0});
  for (int k = 0; k < n; ++k) {
    bool want_back = unif(rng) < backtrack_rate;
    bool done = false;
    for (int attempt = 0; attempt < 100000 && !done; ++attempt) {
      Vec u{0, 0, 0};
      for (int i = 0; i < d; ++i) u[i] = gauss(rng);
      double xu = norm(u);
      if (!(xu > 0)) continue;
      double r = K * (1.0 + unif(rng)) / xu;
      Site step{0, 0, 0};
      for (int i = 0; i < d; ++i) step[i] = int(std::lround(r * u[i]));
      double xs = norm(step);
      if (xs < K || xs >= 2.0 * K) continue;
      if (cone_step(t, delta, step, norm) == want_back) continue;
      sk.points.push_back(sk.points.back() + step);
      done = true;
    }
    if (!done) throw NumericalError("could not sample an admissible increment");
  }
  return sk;
}

}  // namespace oz
