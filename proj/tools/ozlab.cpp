#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ozlab/decomposition.hpp"
#include "ozlab/error.hpp"
#include "ozlab/gibbs.hpp"
#include "ozlab/local_limit.hpp"
#include "ozlab/pipeline.hpp"
#include "ozlab/random_line.hpp"
#include "ozlab/ruelle.hpp"
#include "ozlab/skeleton.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using oz::operator+;
using oz::operator-;
using oz::operator*;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  int threads = 1;
  std::uint64_t seed = 1;
};

std::ofstream open_out(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  auto path = fs::path(g.out) / name;
  std::ofstream f(path);
  if (!f) throw oz::ValidationError("cannot write " + path.string());
  f << std::setprecision(17);
  return f;
}

oz::ModelConfig need_config(const Globals& g) {
  if (g.config.empty()) throw oz::ValidationError("--config FILE is required");
  return oz::load_model_config(g.config);
}

oz::Site parse_site(const std::string& s, int dim) {
  oz::Site x{0, 0, 0};
  std::stringstream ss(s);
  std::string part;
  int k = 0;
  while (std::getline(ss, part, ':')) {
    if (k == 3) throw oz::ValidationError("site has more than 3 coordinates: " + s);
    try {
      x[k++] = std::stoi(part);
    } catch (const std::exception&) {
      throw oz::ValidationError("bad site: " + s);
    }
  }
  if (k != dim) throw oz::ValidationError("site " + s + " needs " + std::to_string(dim) + " coordinates");
  return x;
}

// "0:0,2:0" -> two sites.
std::pair<oz::Site, oz::Site> parse_pair(const std::string& s, int dim) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw oz::ValidationError("pair must be x,y with sites as a:b");
  return {parse_site(s.substr(0, comma), dim), parse_site(s.substr(comma + 1), dim)};
}

oz::Vec to_vec3(const std::vector<double>& v, int dim) {
  if (int(v.size()) != dim) throw oz::ValidationError("vector needs " + std::to_string(dim) + " components");
  oz::Vec out{0, 0, 0};
  for (int i = 0; i < dim; ++i) out[i] = v[i];
  return out;
}

oz::NormModel pick_norm(const std::string& name, const oz::ModelConfig& cfg) {
  if (name == "euclidean") return oz::NormModel::euclidean(cfg.dim);
  if (name == "l1") return oz::NormModel::l1(cfg.dim);
  if (name == "ising") {
    if (cfg.dim != 2 || !cfg.couplings.nearest_neighbor_only())
      throw oz::ValidationError("ising norm needs a 2D nearest-neighbour model");
    return oz::NormModel::ising_square(cfg.beta, cfg.couplings.at({1, 0, 0}));
  }
  throw oz::ValidationError("unknown norm: " + name);
}

void print_json(const json& j, std::ostream& out) { out << std::setprecision(17) << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ozlab: Ornstein-Zernike numerics for the Ising two-point function"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "model config file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "random seed");

  auto* exact = app.add_subcommand("exact-corr", "brute-force two-point table");

  auto* strip = app.add_subcommand("strip", "transfer-matrix strip correlations");
  int width = 3, length = 16;
  double strip_beta = -1;
  bool periodic = false;
  strip->add_option("--width", width)->required();
  strip->add_option("--length", length)->required();
  strip->add_option("--beta", strip_beta, "overrides the config");
  strip->add_flag("--periodic", periodic);

  auto* mc = app.add_subcommand("mc", "Wolff Monte Carlo correlations");
  long sweeps = 400;
  int mc_size = 128, mc_dist = 32, chains = 8;
  double mc_beta = 0.35;
  mc->add_option("--sweeps", sweeps)->required();
  mc->add_option("--seed", g.seed);
  mc->add_option("--size", mc_size);
  mc->add_option("--beta", mc_beta);
  mc->add_option("--max-distance", mc_dist);
  mc->add_option("--chains", chains);

  auto* rlr = app.add_subcommand("verify-rlr", "random-line representation against spin sums");
  std::string pair;
  rlr->add_option("--pair", pair, "x,y as a:b,c:d")->required();

  auto* skel = app.add_subcommand("skeleton", "K-skeletons and surcharge bounds");
  double K = 1.0, delta = 0.25;
  std::vector<double> tdir;
  std::string norm_name = "ising";
  skel->add_option("--K", K)->required();
  skel->add_option("--t-direction", tdir)->delimiter(',')->required();
  skel->add_option("--delta", delta);
  skel->add_option("--pair", pair)->required();
  skel->add_option("--norm", norm_name);

  auto* dec = app.add_subcommand("decompose", "irreducible decomposition of all lines");
  dec->add_option("--pair", pair)->required();
  dec->add_option("--K", K)->required();
  dec->add_option("--delta", delta);
  dec->add_option("--t-direction", tdir)->delimiter(',');
  dec->add_option("--norm", norm_name);

  auto* rs = app.add_subcommand("ruelle-spec", "spectral data of a transfer operator");
  std::string alphabet_file;
  int depth = -1, grid = 64;
  std::vector<double> tilt;
  double tau_scan = -1;
  rs->add_option("--alphabet", alphabet_file)->required();
  rs->add_option("--depth", depth);
  rs->add_option("--tilt", tilt)->delimiter(',');
  rs->add_option("--tau-scan", tau_scan, "off-axis scan with this delta");
  rs->add_option("--grid", grid);

  auto* ll = app.add_subcommand("local-limit", "exact Q_n against the Gaussian prediction");
  int n = 50;
  double nu = 0.3;
  ll->add_option("--alphabet", alphabet_file)->required();
  ll->add_option("--n", n)->required();
  ll->add_option("--nu", nu);

  auto* wl = app.add_subcommand("wulff", "boundary {rho = 1} and its curvature");
  int samples = 41;
  double wrange = 1.0;
  std::vector<double> wdir;
  wl->add_option("--alphabet", alphabet_file)->required();
  wl->add_option("--samples", samples);
  wl->add_option("--range", wrange, "tangential half-width");
  wl->add_option("--direction", wdir, "tilt direction when rho(0) != 1")->delimiter(',');

  auto* oz = app.add_subcommand("oz-fit", "fit of the Ornstein-Zernike prefactor exponent");
  std::string corr_file;
  std::vector<double> fdir{1, 0};
  double rmin = 8, rmax = 24, xi = NAN;
  int dim = 2;
  oz->add_option("--corr", corr_file)->required();
  oz->add_option("--direction", fdir)->delimiter(',');
  oz->add_option("--rmin", rmin);
  oz->add_option("--rmax", rmax);
  oz->add_option("--xi", xi, "fixed inverse correlation length");
  oz->add_option("--dim", dim);

  auto* pl = app.add_subcommand("pipeline", "alphabet to Wulff boundary to prefactor");
  std::string model = "diagonal";
  double toy_w = 0.4, pl_beta = 0.3;
  int extent = 3;
  pl->add_option("--model", model)->check(CLI::IsMember({"diagonal", "ising"}));
  pl->add_option("--w", toy_w);
  pl->add_option("--beta", pl_beta);
  pl->add_option("--extent", extent);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::cout << std::setprecision(17);
    if (*exact) {
      auto cfg = need_config(g);
      auto table = oz::exact_two_point(oz::build_graph(cfg.couplings, cfg.box), cfg.beta);
      auto f = open_out(g, "corr.csv");
      oz::write_corr_csv(table, f);
      std::cout << "entries " << table.entries.size() << "\n";
    } else if (*strip) {
      double beta = strip_beta;
      oz::CouplingField c = oz::CouplingField::nearest_neighbor(2);
      if (!g.config.empty()) {
        auto cfg = need_config(g);
        c = cfg.couplings;
        if (beta < 0) beta = cfg.beta;
      }
      if (beta < 0) throw oz::ValidationError("--beta or --config required");
      auto table = oz::strip_two_point(width, length, beta, c, periodic);
      auto f = open_out(g, "corr.csv");
      oz::write_corr_csv(table, f);
      std::cout << "entries " << table.entries.size() << "\n";
    } else if (*mc) {
      oz::MonteCarloOptions opt;
      opt.size = mc_size;
      opt.beta = mc_beta;
      opt.sweeps = sweeps;
      opt.seed = g.seed;
      opt.threads = g.threads;
      opt.chains = chains;
      opt.max_distance = mc_dist;
      if (!g.config.empty()) opt.beta = need_config(g).beta;
      auto table = oz::monte_carlo_two_point(opt);
      auto f = open_out(g, "corr.csv");
      oz::write_corr_csv(table, f);
      std::cout << "entries " << table.entries.size() << "\n";
    } else if (*rlr) {
      auto cfg = need_config(g);
      auto graph = oz::build_graph(cfg.couplings, cfg.box);
      auto [x, y] = parse_pair(pair, cfg.dim);
      double ex = oz::exact_correlation(graph, cfg.beta, graph.index(x), graph.index(y));
      double rep = oz::representation_sum(graph, x, y, cfg.beta);
      double worst = 0.0;
      for (const auto& z : graph.vertices()) {
        auto bk = oz::bk_check(graph, x, y, z, cfg.beta);
        worst = std::max(worst, bk.lhs - bk.rhs);
      }
      json j{{"exact", ex}, {"representation_sum", rep}, {"max_bk_violation", worst}};
      auto f = open_out(g, "rlr.json");
      print_json(j, f);
      print_json(j, std::cout);
    } else if (*skel) {
      auto cfg = need_config(g);
      auto graph = oz::build_graph(cfg.couplings, cfg.box);
      auto [x, y] = parse_pair(pair, cfg.dim);
      auto norm = pick_norm(norm_name, cfg);
      auto t = oz::dual_vector(norm, to_vec3(tdir, cfg.dim));
      const double range = cfg.couplings.range();
      const bool guard = K >= 8 * range;
      auto f = open_out(g, "skeleton.csv");
      f << "N,lines,weight,n_back,n_mark,surcharge,back_bound,mark_bound,weight_ok\n";
      for (const auto& sw : oz::enumerate_skeletons(graph, x, y, cfg.beta, K, norm)) {
        auto cl = oz::classify(sw.skeleton, t, delta, norm);
        f << sw.skeleton.N() << ',' << sw.lines << ',' << sw.weight << ',' << cl.n_back << ',' << cl.n_mark << ','
          << oz::skeleton_surcharge(sw.skeleton, t, norm) << ',';
        if (guard) {
          auto rep = oz::surcharge_checks(sw.skeleton, t, delta, K, range, norm, sw.weight);
          f << rep.back_bound << ',' << rep.mark_bound << ',' << rep.weight_ok << '\n';
        } else {
          f << "na,na,na\n";
        }
      }
      if (!guard) std::cerr << "K below 8R: surcharge bounds not evaluated\n";
    } else if (*dec) {
      auto cfg = need_config(g);
      auto graph = oz::build_graph(cfg.couplings, cfg.box);
      auto [x, y] = parse_pair(pair, cfg.dim);
      auto norm = pick_norm(norm_name, cfg);
      oz::Vec dir = tdir.empty() ? oz::to_vec(y - x) : to_vec3(tdir, cfg.dim);
      auto t = oz::dual_vector(norm, dir);
      auto rc = oz::verify_irreducible_representation(graph, x, y, cfg.beta, t, K, delta, norm);
      json pieces = json::object();
      for (const auto& [v, c] : rc.pieces) pieces[oz::to_string(v, cfg.dim)] = c;
      json j{{"g", rc.lhs},           {"regrouped", rc.rhs}, {"degenerate_mass", rc.degenerate_mass},
             {"defect", rc.defect},   {"lines", rc.lines},   {"degenerate_lines", rc.degenerate_lines},
             {"groups", rc.groups},   {"pieces", pieces}};
      auto f = open_out(g, "decompose.json");
      print_json(j, f);
      print_json(j, std::cout);
    } else if (*rs) {
      auto op = oz::load_alphabet(alphabet_file);
      if (depth > op.depth()) op = op.with_depth(depth);
      if (!tilt.empty()) op = op.tilted(to_vec3(tilt, op.alphabet().dim));
      auto sd = oz::spectral_data(op);
      double hmin = INFINITY, hmax = 0;
      for (long c = 0; c < op.code_count(); ++c)
        if (op.valid(c)) hmin = std::min(hmin, sd.h[c]), hmax = std::max(hmax, sd.h[c]);
      json j{{"rho", sd.rho},           {"lambda2", sd.lambda2}, {"gap", sd.gap},
             {"residual", sd.residual}, {"h_min", hmin},         {"h_max", hmax},
             {"iterations", sd.iterations}};
      if (tau_scan > 0) j["off_axis_max"] = oz::off_axis_scan(op, tau_scan, grid).max_radius;
      auto f = open_out(g, "ruelle.json");
      print_json(j, f);
      print_json(j, std::cout);
    } else if (*ll) {
      auto op = oz::load_alphabet(alphabet_file);
      std::vector<double> ones(op.code_count(), 1.0);
      auto cmp = oz::llt_compare(op, ones, n, nu);
      const int d = op.alphabet().dim;
      auto f = open_out(g, "llt.csv");
      for (int i = 0; i < d; ++i) f << 'r' << (i + 1) << ',';
      f << "q_exact,q_gauss,rel_err,in_window\n";
      for (const auto& r : cmp.rows) {
        for (int i = 0; i < d; ++i) f << r.r[i] << ',';
        f << r.exact << ',' << r.gauss << ',' << r.rel_err << ',' << int(r.in_window) << '\n';
      }
      std::cout << "window points " << cmp.window_points << "\nmax rel err " << cmp.max_rel_err << "\n";
    } else if (*wl) {
      auto op = oz::load_alphabet(alphabet_file);
      oz::Vec t{0, 0, 0};
      if (std::abs(oz::log_rho(op, t)) > 1e-10) {
        if (wdir.empty()) throw oz::ValidationError("rho(0) != 1: pass --direction for the tilt");
        oz::Vec u = oz::normalized(to_vec3(wdir, op.alphabet().dim));
        t = oz::solve_tilt(op, u) * u;
        op = op.tilted(t);
      }
      oz::WulffOptions wo;
      wo.lo = -wrange;
      wo.hi = wrange;
      wo.samples = samples;
      auto b = oz::wulff_boundary(op, t, wo);
      oz::curvature(b);
      auto f = open_out(g, "wulff.csv");
      oz::write_wulff_csv(b, f);
      std::cout << "kappa_bar " << b.kappa_bar << "\nmax residual " << b.max_residual << "\n";
    } else if (*oz) {
      std::ifstream in(corr_file);
      if (!in) throw oz::ValidationError("cannot read " + corr_file);
      auto table = oz::read_corr_csv(in);
      std::optional<double> fixed;
      if (!std::isnan(xi)) fixed = xi;
      auto fit = oz::oz_fit(table, to_vec3(fdir, table.dim), {rmin, rmax}, dim, fixed);
      auto f = open_out(g, "ozfit.json");
      oz::write_ozfit_json(fit, f);
      oz::write_ozfit_json(fit, std::cout);
    } else if (*pl) {
      json j;
      oz::RuelleOperator op;
      oz::Vec t{0, 0, 0};
      oz::Vec u{1, 0, 0};
      if (model == "diagonal") {
        u = oz::normalized({1, 1, 0});
        auto base = oz::diagonal_walk(toy_w);
        t = oz::solve_tilt(base, u) * u;
        op = base.tilted(t);
      } else {
        oz::AlphabetOptions ao;
        ao.beta = g.config.empty() ? pl_beta : need_config(g).beta;
        ao.extent = extent;
        auto a = oz::build_ising_alphabet(ao);
        op = a.op;
        t = a.t;
        j["symbols"] = a.entries.size();
        j["c2"] = a.c2;
        j["theta"] = a.theta;
      }
      auto b = oz::wulff_boundary(op, t, {});
      oz::curvature(b);
      auto pf = oz::oz_prefactor(op, {oz::BoundaryTerm{}});
      oz::Vec dir = oz::duality_direction(op);
      j["t"] = {t[0], t[1]};
      j["direction"] = {dir[0], dir[1]};
      j["xi"] = oz::dot(t, dir);
      j["kappa_bar"] = b.kappa_bar;
      j["kappa_max"] = b.kappa_max;
      j["max_residual"] = b.max_residual;
      j["phi"] = pf.phi;
      {
        auto f = open_out(g, "wulff.csv");
        oz::write_wulff_csv(b, f);
      }
      if (model == "diagonal") {
        auto table = oz::diagonal_walk_table(toy_w, 60);
        {
          auto f = open_out(g, "corr.csv");
          oz::write_corr_csv(table, f);
        }
        auto fit = oz::oz_fit(table, {1, 1, 0}, {10 * std::sqrt(2.0) - 1e-9, 40 * std::sqrt(2.0) + 1e-9}, 2,
                              oz::dot(t, dir));
        auto f = open_out(g, "ozfit.json");
        oz::write_ozfit_json(fit, f);
        j["p_hat"] = fit.p_hat;
        j["phi_hat"] = fit.phi_hat;
      }
      print_json(j, std::cout);
    }
  } catch (const oz::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const oz::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
