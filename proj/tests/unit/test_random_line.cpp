#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"
#include "ozlab/random_line.hpp"

using namespace oz;

namespace {

Line L(std::initializer_list<Site> v) { return Line{std::vector<Site>(v)}; }

LatticeGraph triangle() {
  std::vector<std::pair<Site, Site>> p{{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {1, 1, 0}}, {{0, 0, 0}, {1, 1, 0}}};
  return LatticeGraph(2, p, {1, 1, 1});
}

LatticeGraph single_edge(double J) { return LatticeGraph(2, {{{0, 0, 0}, {1, 0, 0}}}, {J}); }

// All D with boundary {x, y}, by a direct loop over edge subsets.
std::pair<double, long> brute_boundary_sum(const LatticeGraph& g, int x, int y, double beta) {
  double s = 0;
  long n = 0;
  for (EdgeSet D = 0; D < (EdgeSet(1) << g.edge_count()); ++D) {
    std::vector<int> deg(g.vertex_count(), 0);
    double w = 1;
    for (int e = 0; e < g.edge_count(); ++e)
      if (has_edge(D, e)) {
        ++deg[g.edge(e).u];
        ++deg[g.edge(e).v];
        w *= std::tanh(beta * g.edge(e).J);
      }
    bool ok = true;
    for (int v = 0; v < g.vertex_count(); ++v) ok &= (deg[v] % 2 == 1) == (v == x || v == y);
    if (ok) {
      s += w;
      ++n;
    }
  }
  return {s, n};
}

// Decoupling ratios for lines from the left column to the right column,
// split where they first reach column `cut`: gamma is the first edge,
// eta the rest of the prefix, lambda1 and lambda2 two different suffixes.
std::pair<double, double> decoupling_family(int w, int h, int cut, double beta) {
  auto g = oracle::grid(w, h);
  double lo = 1, hi = 1;
  for (int ey = 0; ey < h; ++ey) {
    auto lines = enumerate_lines(g, {0, 0, 0}, {w - 1, ey, 0}, beta);
    auto first_at_cut = [&](const Line& l) {
      int i = 0;
      while (l.vertices[i][0] != cut) ++i;
      return i;
    };
    for (const auto& a : lines)
      for (const auto& b : lines) {
        int ia = first_at_cut(a.line), ib = first_at_cut(b.line);
        if (ia != ib || ia < 2) continue;
        if (!std::equal(a.line.vertices.begin(), a.line.vertices.begin() + ia + 1, b.line.vertices.begin()))
          continue;
        if (a.line == b.line) continue;
        Line gamma{{a.line.vertices.begin(), a.line.vertices.begin() + 2}};
        Line eta{{a.line.vertices.begin() + 1, a.line.vertices.begin() + ia + 1}};
        Line l1{{a.line.vertices.begin() + ia, a.line.vertices.end()}};
        Line l2{{b.line.vertices.begin() + ib, b.line.vertices.end()}};
        double r = decoupling_ratio(g, gamma, eta, l1, l2, beta);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("extract_line examples") {
  auto g = single_edge(1.0);
  auto e = extract_line(g, g.all_edges(), {0, 0, 0}, {1, 0, 0});
  CHECK(e.line == L({{0, 0, 0}, {1, 0, 0}}));
  CHECK(e.delta == g.all_edges());

  auto p = oracle::grid(3, 1);
  auto e2 = extract_line(p, p.all_edges(), {0, 0, 0}, {2, 0, 0});
  CHECK(e2.line == L({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}));

  std::vector<std::pair<Site, Site>> sq{{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {1, 1, 0}}, {{1, 1, 0}, {0, 1, 0}},
                                        {{0, 1, 0}, {0, 0, 0}}, {{-1, 0, 0}, {0, 0, 0}}};
  LatticeGraph g5(2, sq, std::vector<double>(5, 1.0));
  EdgeSet D = g5.all_edges();
  auto ex = extract_line(g5, D, {-1, 0, 0}, {0, 0, 0});
  CHECK(ex.line.front() == Site{-1, 0, 0});
  CHECK(ex.line.back() == Site{0, 0, 0});
  EdgeSet on = line_edge_set(g5, ex.line);
  CHECK((on & ~D) == 0);
  CHECK(((ex.delta & ~on) & D) == 0);
  CHECK(compute_delta(g5, ex.line) == ex.delta);

  CHECK_THROWS_WITH_AS(extract_line(g5, edge_bit(g5.edge_between(g5.index({1, 0, 0}), g5.index({1, 1, 0}))), {-1, 0, 0}, {0, 0, 0}), "boundary mismatch", ValidationError);
}

TEST_CASE("reconstruction property on the 2x3 grid") {
  auto g = oracle::grid(3, 2);
  Site x{0, 0, 0}, y{2, 1, 0};
  for (EdgeSet D = 1; D < (EdgeSet(1) << g.edge_count()); ++D) {
    auto b = boundary(g, D);
    if (b != std::vector<Site>{x, y}) continue;
    auto ex = extract_line(g, D, x, y);
    EdgeSet on = line_edge_set(g, ex.line);
    CHECK((on & ~D) == 0);
    CHECK(((ex.delta & ~on) & D) == 0);
    CHECK((on & ~ex.delta) == 0);
  }
}

TEST_CASE("line weights") {
  auto g = single_edge(1.0);
  auto w = line_weight(g, L({{0, 0, 0}, {1, 0, 0}}), 0.7);
  CHECK(w.q == doctest::Approx(std::tanh(0.7)));
  CHECK(w.ratio == doctest::Approx(1.0));

  auto t = triangle();
  auto direct = line_weight(t, L({{0, 0, 0}, {1, 0, 0}}), 0.4);
  CHECK(direct.q > 0);
  CHECK(direct.q <= direct.w);
  CHECK(line_weight(t, L({{0, 0, 0}, {1, 0, 0}}), 1e-6).q == doctest::Approx(std::tanh(1e-6)).epsilon(1e-6));
}

TEST_CASE("representation identity") {
  auto e = single_edge(0.8);
  CHECK(representation_sum(e, {0, 0, 0}, {1, 0, 0}, 0.5) == doctest::Approx(std::tanh(0.4)).epsilon(1e-12));

  auto t = triangle();
  double u = std::tanh(0.6);
  CHECK(representation_sum(t, {0, 0, 0}, {1, 0, 0}, 0.6) == doctest::Approx((u + u * u) / (1 + u * u * u)).epsilon(1e-12));

  auto sq = oracle::grid(2, 2);
  auto edges = oracle::spin_edges(sq);
  for (int x = 0; x < 4; ++x)
    for (int y = x + 1; y < 4; ++y)
      CHECK(representation_sum(sq, sq.vertex(x), sq.vertex(y), 0.4) ==
            doctest::Approx(oracle::spin_correlation(4, edges, 0.4, x, y)).epsilon(1e-10));

  auto g = oracle::grid(3, 2);
  for (double beta : {0.1, 0.3, 0.5})
    for (EdgeSet s : oracle::connected_masks(g)) {
      auto sub = g.subgraph(s);
      auto se = oracle::spin_edges(sub);
      for (int x = 0; x < sub.vertex_count(); ++x)
        for (int y = x + 1; y < sub.vertex_count(); ++y)
          CHECK(std::abs(representation_sum(sub, sub.vertex(x), sub.vertex(y), beta) -
                         oracle::spin_correlation(sub.vertex_count(), se, beta, x, y)) <= 1e-10);
    }
}

TEST_CASE("partition property and weight bounds") {
  auto g = oracle::grid(3, 3);
  double beta = 0.35;
  double zt = even_polynomial(g, g.all_edges(), beta);
  for (auto [x, y] : {std::pair{0, 8}, std::pair{0, 1}, std::pair{2, 4}}) {
    auto terms = enumerate_lines(g, g.vertex(x), g.vertex(y), beta);
    double grouped = 0;
    long count = 0;
    for (const auto& t : terms) {
      grouped += t.group_weight;
      count += t.group_size;
      auto w = line_weight(g, t.line, beta);
      CHECK(w.ratio <= 1.0 + 1e-12);
      CHECK(w.q > 0);
      CHECK(w.q <= w.w + 1e-15);
      CHECK(w.w <= 1.0);
    }
    auto [brute, n] = brute_boundary_sum(g, x, y, beta);
    CHECK(count == n);
    CHECK(grouped == doctest::Approx(brute / zt).epsilon(1e-12));
  }
}

TEST_CASE("splitting and conditional weights") {
  auto l = L({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  auto [a, b] = split_at(l, {1, 0, 0});
  CHECK(a == L({{0, 0, 0}, {1, 0, 0}}));
  CHECK(b == L({{1, 0, 0}, {2, 0, 0}}));
  auto [c, d] = split_at(l, {2, 0, 0});
  CHECK(c == l);
  CHECK(d.trivial());
  auto loop = L({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 0}, {-1, 0, 0}});
  auto [e, f] = split_at(loop, {0, 0, 0});
  CHECK(e.length() == 4);
  CHECK(f == L({{0, 0, 0}, {-1, 0, 0}}));
  CHECK_THROWS_AS(split_at(l, {5, 5, 0}), ValidationError);

  auto g = oracle::grid(3, 2);
  double beta = 0.3;
  for (const auto& t : enumerate_lines(g, {0, 0, 0}, {2, 1, 0}, beta))
    for (const auto& z : t.line.vertices) {
      auto [lo, hi] = split_at(t.line, z);
      CHECK(concat(lo, hi) == t.line);
      if (lo.trivial() || hi.trivial()) continue;
      CHECK((line_edge_set(g, lo) & compute_delta(g, hi)) == 0);
      double q = line_weight(g, t.line, beta).q;
      CHECK(conditional_weight(g, lo, hi, beta) * line_weight(g, hi, beta).q == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("BK inequality") {
  auto t = triangle();
  auto r = bk_check(t, {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, 0.5);
  CHECK(r.ok);
  auto same = bk_check(t, {0, 0, 0}, {1, 0, 0}, {0, 0, 0}, 0.5);
  CHECK(same.lhs == doctest::Approx(same.rhs).epsilon(1e-12));

  auto g = oracle::grid(3, 2);
  for (double beta : {0.2, 0.5})
    for (const auto& x : g.vertices())
      for (const auto& y : g.vertices())
        for (const auto& z : g.vertices()) {
          if (x == y) continue;
          CHECK(bk_check(g, x, y, z, beta).ok);
        }
}

TEST_CASE("decoupling ratios") {
  auto g = oracle::grid(4, 2);
  Line gamma = L({{0, 0, 0}, {1, 0, 0}});
  Line eta = L({{1, 0, 0}, {2, 0, 0}});
  Line l1 = L({{2, 0, 0}, {3, 0, 0}});
  CHECK(decoupling_ratio(g, gamma, eta, l1, l1, 0.3) == doctest::Approx(1.0));

  auto [lo, hi] = decoupling_family(4, 2, 2, 0.3);
  CHECK(lo >= std::exp(-0.05));
  CHECK(hi <= std::exp(0.05));
  auto [lo3, hi3] = decoupling_family(5, 3, 3, 0.3);
  CHECK(lo3 >= std::exp(-0.05));
  CHECK(hi3 <= std::exp(0.05));
  auto [lo0, hi0] = decoupling_family(5, 3, 3, 1e-4);
  CHECK(lo0 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(hi0 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("explicit weight formula") {
  auto e = single_edge(1.0);
  auto c = explicit_weight_check(e, L({{0, 0, 0}, {1, 0, 0}}), 0.45, 8);
  CHECK(c.direct == doctest::Approx(std::tanh(0.45)));
  CHECK(c.ok);

  auto t = triangle();
  auto d = explicit_weight_check(t, L({{0, 0, 0}, {1, 0, 0}}), 0.5, 16);
  CHECK(std::abs(d.direct - d.via_formula) <= 1e-6);
  CHECK(d.ok);

  auto g = oracle::grid(3, 2);
  for (const auto& term : enumerate_lines(g, {0, 0, 0}, {2, 1, 0}, 0.3))
    CHECK(explicit_weight_check(g, term.line, 0.3, 16).ok);

  auto z = explicit_weight_check(t, L({{0, 0, 0}, {1, 0, 0}}), 0.0, 8);
  CHECK(z.direct == 0.0);
  CHECK(z.via_formula == doctest::Approx(0.0));
  CHECK_THROWS_AS(explicit_weight_check(t, L({{0, 0, 0}, {1, 0, 0}}), 0.3, 4), ValidationError);
}

TEST_CASE("box weights settle as the box grows") {
  auto nn = CouplingField::nearest_neighbor(2);
  Line l = L({{0, 0, 0}, {1, 0, 0}});
  auto a = box_cauchy(nn, l, 0.3, Box{2, {-1, -1, 0}, {2, 1, 0}}, Box{2, {-2, -1, 0}, {3, 2, 0}});
  auto b = box_cauchy(nn, l, 0.3, Box{2, {-2, -1, 0}, {3, 2, 0}}, Box{2, {-2, -2, 0}, {3, 3, 0}});
  CHECK(a.difference > 0);
  CHECK(b.difference < a.difference);
}
