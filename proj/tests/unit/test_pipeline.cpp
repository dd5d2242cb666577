#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "ozlab/decomposition.hpp"
#include "ozlab/error.hpp"
#include "ozlab/local_limit.hpp"
#include "ozlab/pipeline.hpp"

using namespace oz;

namespace {

const double kPhiDiagonal = std::pow(2.0, 0.25) / std::sqrt(std::numbers::pi);

RuelleOperator tilted_diagonal(double w, Vec* t_out = nullptr) {
  auto base = diagonal_walk(w);
  Vec u = normalized({1, 1, 0});
  Vec t = solve_tilt(base, u) * u;
  if (t_out) *t_out = t;
  return base.tilted(t);
}

double sup_distance(const WulffBoundary& b) {
  double worst = 0;
  for (const auto& s : b.samples) worst = std::max(worst, std::abs(s.s[1] - std::log(2 - std::exp(s.s[0]))));
  return worst;
}

const IrreducibleAlphabet& ising_alphabet() {
  static const IrreducibleAlphabet a = build_ising_alphabet(AlphabetOptions{});
  return a;
}

}  // namespace

TEST_CASE("toy step models") {
  auto d = diagonal_walk(0.3);
  for (int m : {0, 1, 2}) {
    auto op = d.with_depth(m);
    for (long c = 0; c < op.code_count(); ++c)
      if (op.valid(c))
        for (int z = 1; z <= op.symbols(); ++z) CHECK(op.psi(z, op.decode(c)) == doctest::Approx(std::log(0.3)));
  }
  auto nn = nearest_neighbor_walk(0.2);
  CHECK(spectral_data(nn).rho == doctest::Approx(0.8));
  double a = solve_tilt(nn, {1, 0, 0});
  CHECK(0.2 * (2 * std::cosh(a) + 2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("wulff boundary on the closed-form model") {
  auto op = diagonal_walk(0.5);
  WulffOptions o;
  o.lo = -0.8;
  o.hi = 0.8;
  o.samples = 41;
  auto b = wulff_boundary(op, {0, 0, 0}, o);
  CHECK(sup_distance(b) <= 1e-8);
  CHECK(b.max_residual <= 1e-8);
  const auto& mid = b.samples[20];
  CHECK(std::abs(mid.s[0]) <= 1e-10);
  CHECK(std::abs(mid.s[1]) <= 1e-10);
  CHECK(std::abs(log_rho(op, {0, 0, 0})) <= 1e-14);
  for (int i = 0; i < 41; ++i) {
    const auto& p = b.samples[i];
    const auto& q = b.samples[40 - i];
    CHECK(p.s[0] == doctest::Approx(q.s[1]).epsilon(1e-8));
    CHECK(p.s[1] == doctest::Approx(q.s[0]).epsilon(1e-8));
  }
  CHECK(boundary_convex(b));
}

TEST_CASE("curvature") {
  auto op = diagonal_walk(0.5);
  auto b = wulff_boundary(op, {0, 0, 0}, WulffOptions{});
  curvature(b);
  // F = e^{s1} + e^{s2}: kappa = (F_11 F_2^2 + F_22 F_1^2) / |grad F|^3 = 2 / 2^{3/2} at 0
  CHECK(b.samples[20].kappa == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.01));
  CHECK(b.kappa_bar > 0);

  LogRho circle = [](const Vec& s) { return std::log(std::hypot(s[0], s[1]) / 2); };
  WulffOptions r;
  r.mode = WulffMode::Radial;
  r.lo = 0;
  r.hi = 2 * std::numbers::pi;
  r.samples = 72;
  auto c = wulff_boundary(circle, {0, 0, 0}, {1, 0, 0}, r);
  curvature(c);
  for (const auto& s : c.samples) CHECK(s.kappa == doctest::Approx(0.5).epsilon(0.01));

  WulffOptions few;
  few.samples = 4;
  auto small = wulff_boundary(op, {0, 0, 0}, few);
  CHECK_THROWS_AS(curvature(small), ValidationError);

  auto n = nearest_neighbor_walk(0.2);
  WulffOptions rn;
  rn.mode = WulffMode::Radial;
  rn.lo = 0;
  rn.hi = 2 * std::numbers::pi;
  rn.samples = 90;
  auto bn = wulff_boundary(n, {0, 0, 0}, rn);
  curvature(bn);
  CHECK(bn.kappa_bar > 0);
  CHECK(boundary_convex(bn));
}

TEST_CASE("duality directions") {
  Vec d = duality_direction(diagonal_walk(0.4));
  CHECK(d[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(d[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-8));
  Vec e = duality_direction(step_walk(2, {{1, 0, 0}}, {1.0}));
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(std::abs(e[1]) <= 1e-8);

  double w = 0.2;
  auto op = nearest_neighbor_walk(w);
  auto norm = NormModel::cosh_curve(1 / (2 * w));
  for (int k = 0; k < 12; ++k) {
    double a = 0.5 * k + 0.05;
    Vec n{std::cos(a), std::sin(a), 0};
    auto t = dual_vector(norm, n);
    Vec got = duality_direction(op.tilted(t.t));
    double ang = std::acos(std::clamp(dot(got, n), -1.0, 1.0));
    CHECK(ang * 180 / std::numbers::pi <= 1.0);
  }
}

TEST_CASE("prefactor") {
  auto op = tilted_diagonal(0.4);
  auto pf = oz_prefactor(op, {BoundaryTerm{}});
  CHECK(pf.phi == doctest::Approx(kPhiDiagonal).epsilon(0.02));
  auto twice = oz_prefactor(op, {BoundaryTerm{2.0, {}}});
  CHECK(twice.phi == doctest::Approx(2 * pf.phi).epsilon(1e-12));
  auto sum = oz_prefactor(op, {BoundaryTerm{}, BoundaryTerm{0.5, {}}});
  CHECK(sum.phi == doctest::Approx(1.5 * pf.phi).epsilon(1e-12));

  auto one = step_walk(1, {{1, 0, 0}}, {1.0});
  auto p1 = oz_prefactor(one, {BoundaryTerm{}});
  REQUIRE(p1.chi.size() == 1);
  CHECK(p1.phi == doctest::Approx(p1.chi[0]));
  CHECK(p1.phi == doctest::Approx(1.0));

  CHECK_THROWS_AS(oz_prefactor(diagonal_walk(0.4), {BoundaryTerm{}}), ValidationError);
}

TEST_CASE("OZ fits") {
  Vec t;
  auto op = tilted_diagonal(0.4, &t);
  Vec u = normalized({1, 1, 0});
  double xi = dot(t, u);
  CHECK(xi == doctest::Approx(-std::log(0.64) / std::sqrt(2.0)).epsilon(1e-10));
  auto table = diagonal_walk_table(0.4, 200);
  FitWindow win{10 * std::sqrt(2.0) - 1e-9, 40 * std::sqrt(2.0) + 1e-9};
  auto f = oz_fit(table, u, win, 2, xi);
  CHECK(f.points == 31);
  CHECK(f.p_hat >= 0.45);
  CHECK(f.p_hat <= 0.55);
  double phi = oz_prefactor(op, {BoundaryTerm{}}).phi;
  CHECK(f.phi_hat == doctest::Approx(phi).epsilon(0.1));
  auto free = oz_fit(table, u, win, 2);
  CHECK(free.p_hat == doctest::Approx(0.5).epsilon(0.1));

  auto scaled = table;
  for (auto& e : scaled.entries) e.g *= 3.0;
  auto fs = oz_fit(scaled, u, win, 2, xi);
  CHECK(fs.p_hat == doctest::Approx(f.p_hat).epsilon(1e-10));
  CHECK(fs.phi_hat == doctest::Approx(3 * f.phi_hat).epsilon(1e-10));

  double prev_err = 1, prev_res = 1;
  for (double lo : {10.0, 20.0, 40.0, 80.0}) {
    auto fw = oz_fit(table, u, {lo * std::sqrt(2.0) - 1e-9, 2 * lo * std::sqrt(2.0) + 1e-9}, 2, xi);
    CHECK(std::abs(fw.p_hat - 0.5) < prev_err);
    CHECK(fw.residual < prev_res);
    prev_err = std::abs(fw.p_hat - 0.5);
    prev_res = fw.residual;
  }

  auto strip = strip_two_point(4, 60, 0.3, CouplingField::nearest_neighbor(2), true);
  auto fs2 = oz_fit(strip, {1, 0, 0}, {8, 24}, 2);
  CHECK(std::abs(fs2.p_hat) < 0.05);

  CHECK_THROWS_WITH_AS(oz_fit(table, u, {10, 14}, 2, xi), doctest::Contains("insufficient points"), ValidationError);

  std::stringstream ss;
  write_ozfit_json(f, ss);
  auto j = nlohmann::json::parse(ss.str());
  for (const char* key : {"xi", "p_hat", "phi_hat", "window", "residual"}) CHECK(j.contains(key));
}

TEST_CASE("toy generating function") {
  auto op = diagonal_walk(0.4);
  for (int n : {0, 1, 5, 20})
    CHECK(toy_green(op, {n, n, 0}, 2 * n + 2) ==
          doctest::Approx(oracle::central_binomial(n) * std::pow(0.4, 2 * n)).epsilon(1e-12));
  CHECK(toy_green(op, {3, 1, 0}, 10) == doctest::Approx(4 * std::pow(0.4, 4)).epsilon(1e-12));
  auto table = diagonal_walk_table(0.4, 30);
  CHECK(table.at({0, 0, 0}, {12, 12, 0}) == doctest::Approx(toy_green(op, {12, 12, 0}, 30)).epsilon(1e-12));
}

TEST_CASE("wulff csv") {
  auto b = wulff_boundary(diagonal_walk(0.5), {0, 0, 0}, WulffOptions{});
  curvature(b);
  std::stringstream ss;
  write_wulff_csv(b, ss);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "angle,s1,s2,kappa,residual");
  int rows = 0;
  for (std::string line; std::getline(ss, line);) ++rows;
  CHECK(rows == 41);
}

TEST_CASE("strict triangle inequality") {
  auto eu = NormModel::euclidean(2);
  auto col = strict_triangle_check(eu, 1.0, {{{1, 2, 0}, {2, 4, 0}}, {{-1, 0, 0}, {-3, 0, 0}}});
  CHECK(std::abs(col.min_slack) <= 1e-12);
  auto grid = triangle_grid();
  CHECK(grid.size() == 1000);
  auto e = strict_triangle_check(eu, 1.0, grid);
  CHECK(std::abs(e.min_slack) <= 1e-12);
  // radius of curvature of the unit circle is 1, so more than 1 breaks it
  CHECK(strict_triangle_check(eu, 1.5, grid).min_slack < -1e-3);

  double c = 2.5;
  auto toy = NormModel::cosh_curve(c);
  WulffOptions r;
  r.mode = WulffMode::Radial;
  r.lo = 0;
  r.hi = 2 * std::numbers::pi;
  r.samples = 180;
  auto b = wulff_boundary(nearest_neighbor_walk(1 / (2 * c)), {0, 0, 0}, r);
  curvature(b);
  auto rep = strict_triangle_check(toy, 1 / b.kappa_max, grid);
  CHECK(rep.min_slack >= -1e-6);
  CHECK(rep.pairs == 1000);
}

TEST_CASE("ising alphabet") {
  const auto& a = ising_alphabet();
  AlphabetOptions o;
  REQUIRE(!a.entries.empty());
  CHECK(a.entries.size() == size_t(a.op.symbols()));
  auto norm = NormModel::ising_square(o.beta, o.J);
  auto t0 = dual_vector(norm, {1, 0, 0});
  for (const auto& e : a.entries) {
    CHECK(is_irreducible(e.gamma, t0, o.K, o.delta, norm));
    CHECK(e.V == displacement(e.gamma));
    CHECK(e.q > 0);
  }
  CHECK(std::isfinite(a.c2));
  CHECK(a.c2 >= 1.0);
  for (int z = 1; z <= a.base.symbols(); ++z)
    for (long c = 0; c < a.base.code_count(); ++c) {
      if (!a.base.valid(c)) continue;
      double ratio = a.base.weight(z, c) / a.entries[z - 1].q;
      CHECK(ratio <= a.c2 * (1 + 1e-12));
      CHECK(ratio >= 1 / a.c2 * (1 - 1e-12));
    }
  CHECK(a.theta > 0);
  CHECK(a.theta < 1);
  CHECK(a.depth2_samples > 0);
  CHECK(std::abs(log_rho(a.op, {0, 0, 0})) <= 1e-10);

  auto b = wulff_boundary(a.op, a.t, WulffOptions{});
  curvature(b);
  CHECK(b.max_residual <= 1e-8);
  CHECK(b.kappa_bar > 0);
  CHECK(boundary_convex(b));
  auto pf = oz_prefactor(a.op, {BoundaryTerm{}});
  CHECK(pf.phi > 0);
}

TEST_CASE("strict triangle on the ising norm") {
  double beta = 0.3;
  auto norm = NormModel::ising_square(beta);
  double c = norm.cosh_constant();
  WulffOptions r;
  r.mode = WulffMode::Radial;
  r.lo = 0;
  r.hi = 2 * std::numbers::pi;
  r.samples = 180;
  auto b = wulff_boundary(nearest_neighbor_walk(1 / (2 * c)), {0, 0, 0}, r);
  curvature(b);
  CHECK(b.kappa_bar > 0);
  auto rep = strict_triangle_check(norm, 1 / b.kappa_max, triangle_grid());
  CHECK(rep.min_slack >= -1e-6);
}
