#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"

using namespace oz;

namespace {

LatticeGraph path(int n, double J = 1.0) {
  std::vector<std::pair<Site, Site>> p;
  for (int i = 0; i + 1 < n; ++i) p.push_back({{i, 0, 0}, {i + 1, 0, 0}});
  return LatticeGraph(2, p, std::vector<double>(p.size(), J));
}

}  // namespace

TEST_CASE("exact two-point on a single edge") {
  auto g = path(2, 0.5);
  auto t = exact_two_point(g, 1.0);
  CHECK(t.at({0, 0, 0}, {1, 0, 0}) == doctest::Approx(0.46211716).epsilon(1e-8));
  CHECK(t.at({1, 0, 0}, {0, 0, 0}) == doctest::Approx(std::tanh(0.5)));
  CHECK(t.at({0, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(exact_two_point(g, 0.0).at({0, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("exact two-point on a triangle") {
  std::vector<std::pair<Site, Site>> p{{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {1, 1, 0}}, {{0, 0, 0}, {1, 1, 0}}};
  LatticeGraph g(2, p, {1, 1, 1});
  for (double beta : {0.1, 0.4, 0.9}) {
    double u = std::tanh(beta);
    CHECK(exact_correlation(g, beta, 0, 1) == doctest::Approx((u + u * u) / (1 + u * u * u)).epsilon(1e-12));
  }
}

TEST_CASE("exact two-point matches the spin-sum oracle") {
  auto g = oracle::grid(3, 3);
  auto edges = oracle::spin_edges(g);
  for (double beta : {0.2, 0.45}) {
    auto t = exact_two_point(g, beta);
    for (int x = 0; x < g.vertex_count(); ++x)
      for (int y = 0; y < g.vertex_count(); ++y)
        CHECK(t.at(g.vertex(x), g.vertex(y)) ==
              doctest::Approx(oracle::spin_correlation(g.vertex_count(), edges, beta, x, y)).epsilon(1e-12));
    CHECK(log_partition(g, beta) == doctest::Approx(oracle::log_z(g.vertex_count(), edges, beta)).epsilon(1e-12));
  }
}

TEST_CASE("enumeration size guard") {
  auto g = oracle::grid(5, 5);
  CHECK_THROWS_WITH_AS(exact_two_point(g, 0.1), "graph too large for enumeration", ValidationError);
}

TEST_CASE("griffiths monotonicity on nested subgraphs") {
  auto g = oracle::grid(2, 3);
  auto masks = oracle::connected_masks(g);
  int m = g.edge_count();
  for (EdgeSet s : masks) {
    auto sub = g.subgraph(s);
    for (int e = 0; e < m; ++e) {
      if (has_edge(s, e)) continue;
      auto big = g.subgraph(s | edge_bit(e));
      for (int x = 0; x < sub.vertex_count(); ++x)
        for (int y = x + 1; y < sub.vertex_count(); ++y) {
          double a = exact_correlation(sub, 0.4, x, y);
          double b = exact_correlation(big, 0.4, big.index(sub.vertex(x)), big.index(sub.vertex(y)));
          CHECK(b >= a - 1e-13);
        }
    }
  }
}

TEST_CASE("strip transfer matrix") {
  auto nn = CouplingField::nearest_neighbor(2);
  double beta = 0.37;
  auto chain = strip_two_point(1, 12, beta, nn);
  for (int x = 0; x < 12; ++x)
    CHECK(chain.at({0, 0, 0}, {x, 0, 0}) == doctest::Approx(std::pow(std::tanh(beta), x)).epsilon(1e-12));

  for (auto [w, l] : {std::pair{2, 3}, std::pair{3, 4}, std::pair{2, 8}}) {
    auto s = strip_two_point(w, l, 0.3, nn);
    auto g = oracle::grid(l, w);
    auto edges = oracle::spin_edges(g);
    for (int r = 0; r < w; ++r)
      for (int x = 0; x < l; ++x)
        CHECK(s.at({0, r, 0}, {x, r, 0}) ==
              doctest::Approx(oracle::spin_correlation(g.vertex_count(), edges, 0.3, g.index({0, r, 0}),
                                                       g.index({x, r, 0})))
                  .epsilon(1e-10));
  }
  auto zero = strip_two_point(3, 6, 0.0, nn);
  CHECK(zero.at({0, 1, 0}, {4, 1, 0}) == doctest::Approx(0.0));

  CouplingField far = nn;
  far.set({2, 0, 0}, 0.5);
  CHECK_THROWS_WITH_AS(strip_two_point(2, 5, 0.3, far), "transfer matrix supports n.n. only", ValidationError);
}

TEST_CASE("monte carlo at high temperature") {
  MonteCarloOptions o;
  o.size = 16;
  o.beta = 0.05;
  o.sweeps = 400;
  o.warmup = 20;
  o.max_distance = 3;
  o.seed = 11;
  auto t = monte_carlo_two_point(o);
  double u = std::tanh(0.05);
  double series = u + 2 * u * u * u;
  const auto& e = t.entries[1];
  REQUIRE(e.y == Site{1, 0, 0});
  CHECK(std::abs(e.g - series) <= 3 * e.stderr_);
  CHECK(e.stderr_ > 0);

  auto again = monte_carlo_two_point(o);
  REQUIRE(again.entries.size() == t.entries.size());
  for (size_t i = 0; i < t.entries.size(); ++i) {
    CHECK(again.entries[i].g == t.entries[i].g);
    CHECK(again.entries[i].stderr_ == t.entries[i].stderr_);
  }

  o.beta = 0.0;
  auto z = monte_carlo_two_point(o);
  for (const auto& en : z.entries)
    if (en.y != Site{0, 0, 0}) CHECK(std::abs(en.g) <= 3 * en.stderr_ + 1e-15);

  o.warmup = 500;
  CHECK_THROWS_WITH_AS(monte_carlo_two_point(o), "insufficient sampling budget", ValidationError);
}

TEST_CASE("monte carlo error shrinks with the budget") {
  MonteCarloOptions o;
  o.size = 16;
  o.beta = 0.3;
  o.warmup = 10;
  o.max_distance = 4;
  o.sweeps = 100;
  double e1 = monte_carlo_two_point(o).entries[2].stderr_;
  o.sweeps = 1600;
  double e2 = monte_carlo_two_point(o).entries[2].stderr_;
  CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.5));
}

TEST_CASE("inverse correlation length") {
  double beta = 0.4;
  auto chain = strip_two_point(1, 40, beta, CouplingField::nearest_neighbor(2));
  auto est = inverse_correlation_length(chain, {1, 0, 0}, {8, 32}, false, 1e-9);
  CHECK(est.xi == doctest::Approx(-std::log(std::tanh(beta))).epsilon(1e-8));
  CHECK(est.griffiths_ok);

  auto diag = CorrelationTable{};
  diag.method = Method::ToyModel;
  for (int n = 0; n <= 40; ++n)
    diag.entries.push_back({{0, 0, 0}, {n, n, 0}, oracle::central_binomial(n) * std::pow(0.4, 2 * n),
                            0});
  auto d = inverse_correlation_length(diag, normalized({1, 1, 0}), {8, 40}, true);
  CHECK(d.xi == doctest::Approx(-std::log(0.64) / std::sqrt(2.0)).epsilon(2e-3));
  CHECK(d.prefactor_corrected);

  auto scaled = diag;
  for (auto& e : scaled.entries) e.g *= 7.5;
  CHECK(inverse_correlation_length(scaled, normalized({1, 1, 0}), {8, 40}, true).xi == doctest::Approx(d.xi));

  CHECK_THROWS_WITH_AS(inverse_correlation_length(chain, {1, 0, 0}, {8, 10}, false), "window too small",
                       ValidationError);
}

TEST_CASE("corr csv round trip") {
  auto t = strip_two_point(2, 5, 0.3, CouplingField::nearest_neighbor(2));
  std::stringstream ss;
  write_corr_csv(t, ss);
  std::string header;
  std::getline(std::istringstream(ss.str()), header);
  CHECK(header == "x1,x2,g,stderr,method");
  auto back = read_corr_csv(ss);
  CHECK(back.dim == 2);
  CHECK(back.method == Method::Strip);
  CHECK(back.at({0, 0, 0}, {3, 0, 0}) == doctest::Approx(t.at({0, 0, 0}, {3, 0, 0})).epsilon(1e-15));
}
