#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"
#include "ozlab/skeleton.hpp"

using namespace oz;

namespace {

Line straight(int n) {
  Line l;
  for (int i = 0; i <= n; ++i) l.vertices.push_back({i, 0, 0});
  return l;
}

Line random_walk(std::mt19937_64& rng, int n, bool directed) {
  static const Site steps[4] = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
  Line l;
  l.vertices.push_back({0, 0, 0});
  std::uniform_int_distribution<int> pick(0, directed ? 1 : 3);
  for (int i = 0; i < n; ++i) l.vertices.push_back(l.back() + steps[pick(rng)]);
  return l;
}

}  // namespace

TEST_CASE("skeleton construction examples") {
  auto eu = NormModel::euclidean(2);
  auto sk = build_skeleton(straight(30), 10, eu);
  CHECK(sk.points == std::vector<Site>{{0, 0, 0}, {11, 0, 0}, {22, 0, 0}, {30, 0, 0}});

  auto small = build_skeleton(straight(5), 5, eu);
  CHECK(small.N() == 1);
  CHECK(small.points.back() == Site{5, 0, 0});

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    auto l = random_walk(rng, 20, false);
    auto s = build_skeleton(l, 25, eu);
    CHECK(s.N() == 1);
    CHECK(s.points.front() == l.front());
    CHECK(s.points.back() == l.back());
  }
}

TEST_CASE("skeleton invariants on random lines") {
  auto norm = NormModel::ising_square(0.3);
  auto eu = NormModel::euclidean(2);
  std::mt19937_64 rng(17);
  for (double K : {8.0, 12.0}) {
    for (int k = 0; k < 200; ++k) {
      auto l = random_walk(rng, 120, false);
      auto s = build_skeleton(l, K, norm);
      CHECK(s.points.back() == l.back());
      auto t = dual_vector(norm, normalized({1, 0.3, 0}));
      for (int i = 0; i + 1 < int(s.points.size()); ++i) {
        Vec inc = to_vec(s.points[i + 1] - s.points[i]);
        CHECK(dot(t.t, inc) < 2 * K);
        if (i + 2 < int(s.points.size())) CHECK(norm(inc) > K);
      }
      CHECK(build_skeleton(l, K, norm) == s);
    }
    // |x_N - x_0| controls N on directed lines
    for (int k = 0; k < 200; ++k) {
      auto l = random_walk(rng, 80, true);
      auto s = build_skeleton(l, K, eu);
      double span = euclid(l.back() - l.front());
      if (span < 2 * K) continue;
      CHECK(s.N() <= 2.0 * span / (eu.min_unit() * K));
    }
  }
}

TEST_CASE("skeleton weights") {
  auto e = LatticeGraph(2, {{{0, 0, 0}, {1, 0, 0}}}, {1.0});
  auto norm = NormModel::ising_square(0.4);
  auto sks = enumerate_skeletons(e, {0, 0, 0}, {1, 0, 0}, 0.4, 5.0, norm);
  REQUIRE(sks.size() == 1);
  CHECK(sks[0].skeleton.N() == 1);
  CHECK(sks[0].weight == doctest::Approx(std::tanh(0.4)));
  CHECK(sks[0].product_bound == doctest::Approx(sks[0].weight));

  auto g = oracle::grid(3, 2);
  for (double beta : {0.2, 0.35}) {
    auto n = NormModel::ising_square(beta);
    for (auto [x, y] : {std::pair{0, 5}, std::pair{0, 4}, std::pair{1, 4}}) {
      auto list = enumerate_skeletons(g, g.vertex(x), g.vertex(y), beta, 1.0, n);
      double total = 0;
      for (const auto& s : list) {
        total += s.weight;
        CHECK(s.weight <= s.product_bound + 1e-12);
        CHECK(s.product_bound <= s.exp_bound + 1e-12);
        CHECK(skeleton_weight(g, s.skeleton, beta, n) == doctest::Approx(s.weight).epsilon(1e-12));
      }
      CHECK(std::abs(total - exact_correlation(g, beta, x, y)) <= 1e-10);
    }
  }
}

TEST_CASE("classification examples") {
  auto eu = NormModel::euclidean(2);
  auto t = make_dual(eu, {1, 0, 0}, {1, 0, 0});
  Skeleton fwd;
  fwd.K = 1;
  for (int i = 0; i <= 6; ++i) fwd.points.push_back({2 * i, i % 2, 0});
  auto c = classify(fwd, t, 0.25, eu);
  CHECK(c.n_back == 0);
  CHECK(c.n_mark == 0);
  for (bool b : c.cone) CHECK(b);

  Skeleton one = fwd;
  one.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1, 0, 0}, {3, 0, 0}, {4, 0, 0}, {5, 0, 0}};
  auto c1 = classify(one, t, 0.25, eu);
  CHECK(c1.n_back == 1);
  REQUIRE(c1.marked.size() == 1);
  CHECK(c1.marked[0].first <= 2);
  CHECK(c1.marked[0].second > 2);
  CHECK(c1.n_mark == c1.marked[0].second - c1.marked[0].first);

  Skeleton rev = fwd;
  std::reverse(rev.points.begin(), rev.points.end());
  auto cr = classify(rev, t, 0.25, eu);
  CHECK(cr.n_back == rev.N());
  CHECK_FALSE(cone_step(t, 0.25, {0, 0, 0}, eu));
}

TEST_CASE("surcharge bounds") {
  auto eu = NormModel::euclidean(2);
  auto t = make_dual(eu, {1, 0, 0}, {1, 0, 0});
  Skeleton fwd;
  fwd.K = 8;
  for (int i = 0; i <= 5; ++i) fwd.points.push_back({9 * i, 0, 0});
  auto r = surcharge_checks(fwd, t, 0.25, 8, 1, eu);
  CHECK(r.back_bound);
  CHECK(r.mark_bound);
  CHECK(r.n_mark == 0);
  CHECK_THROWS_WITH_AS(surcharge_checks(fwd, t, 0.25, 4, 1, eu), "scale below range guard", ValidationError);

  std::mt19937_64 rng(2024);
  for (int k = 0; k < 10000; ++k) {
    double rate = (k % 5) * 0.15;
    auto sk = random_admissible_skeleton(rng, 6 + k % 20, 8, eu, t, 0.25, rate);
    auto rep = surcharge_checks(sk, t, 0.25, 8, 1, eu);
    CHECK(rep.back_bound);
    CHECK(rep.mark_bound);
    auto cl = classify(sk, t, 0.25, eu);
    long total = 0;
    for (auto [l, rr] : cl.marked) total += rr - l;
    CHECK(cl.n_mark == total);
    for (size_t i = 0; i < cl.cone.size(); ++i)
      if (!cl.is_marked[i]) CHECK(cl.cone[i]);
  }
}

TEST_CASE("weight bound on enumerated skeletons") {
  auto g = oracle::grid(3, 2);
  double beta = 0.3;
  auto n = NormModel::ising_square(beta);
  for (const auto& y : g.vertices()) {
    if (y == Site{0, 0, 0}) continue;
    auto t = dual_vector(n, normalized(to_vec(y)));
    for (const auto& s : enumerate_skeletons(g, {0, 0, 0}, y, beta, 8.0, n)) {
      auto rep = surcharge_checks(s.skeleton, t, 0.25, 8.0, 1.0, n, s.weight);
      CHECK(rep.has_weight);
      CHECK(rep.weight_ok);
    }
  }
}

TEST_CASE("slab classification") {
  auto eu = NormModel::euclidean(2);
  auto t = make_dual(eu, {1, 0, 0}, {1, 0, 0});

  Skeleton clean;
  clean.K = 1;
  for (int i = 0; i <= 20; ++i) clean.points.push_back({i, 0, 0});
  auto s = slab_classify(clean, t, 1, 0.25, eu);
  CHECK(s.size() == 3);
  for (const auto& sl : s) CHECK(sl.label == SlabLabel::Clean);
  bool any = false;
  for (const auto& sl : s)
    if (sl.bracket_applicable) {
      any = true;
      CHECK(sl.bracket_ok);
      CHECK(sl.j - sl.i >= 3);
      CHECK(sl.j - sl.i <= 8 / 0.75);
    }
  CHECK(any);

  Skeleton jog;
  jog.K = 2;
  for (int i = 0; i <= 24; ++i) jog.points.push_back({i, 0, 0});
  jog.points.push_back({23, 5, 0});
  for (int i = 25; i <= 40; ++i) jog.points.push_back({i, 5, 0});
  auto c = classify(jog, t, 0.25, eu);
  REQUIRE(c.marked.size() == 1);
  auto sl = slab_classify(jog, t, 2, 0.25, eu);
  REQUIRE(sl.size() == 3);
  CHECK(sl[0].label == SlabLabel::Clean);
  CHECK(sl[1].label == SlabLabel::Dirty);
  CHECK(sl[2].label == SlabLabel::Clean);
  CHECK(slab_classify(jog, t, 2, 0.25, eu)[1].i == sl[1].i);
}
