#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ozlab/gibbs.hpp"
#include "ozlab/random_line.hpp"
#include "ozlab/ruelle.hpp"

namespace oz {

// i.i.d. step models with closed forms.
RuelleOperator step_walk(int dim, const std::vector<Site>& steps, const std::vector<double>& weights);
// Steps e1, e2 with weight w each.
RuelleOperator diagonal_walk(double w);
// Steps +-e1, +-e2 with weight w each; its set {rho <= 1} is
// {cosh s1 + cosh s2 <= 1/(2w)}.
RuelleOperator nearest_neighbor_walk(double w);

// a with rho(a u) = 1 for the unit vector u; throws "bracket failure".
double solve_tilt(const RuelleOperator& op, const Vec& u);

struct AlphabetEntry {
  Line gamma;
  Site V{};
  double q = 0.0;
};

struct AlphabetOptions {
  double beta = 0.3;
  double J = 1.0;
  double K = 1.0;
  double delta = 0.25;
  int extent = 3;
  int depth = 1;
  // Weights live on the lattice edges among sites within this sup-distance
  // of the joint line.
  int halo = 1;
  // Depth-2 contexts are sampled only when the joint region has cycle rank
  // at most this.
  int max_rank = 20;
  bool fit_theta = true;
};

struct IrreducibleAlphabet {
  std::vector<AlphabetEntry> entries;
  RuelleOperator base;  // e^psi = conditional weights, untilted
  RuelleOperator op;    // tilted by t, rho = 1
  Vec t{};
  double c2 = 1.0;  // conditional / unconditional ratios lie in [1/c2, c2]
  double diff1 = 0.0;  // var_1 psi: spread over x_1 of psi(z | x_1)
  double diff2 = 0.0;  // var_2 psi over sampled depth-2 contexts
  double theta = 0.0;  // diff2 / diff1
  long depth2_samples = 0;
};

// Irreducible lines of the 2D nearest-neighbour Ising model with extent at
// most E along e1, each confined to a two-row band; weights are line weights
// in the region around the line and its context.
IrreducibleAlphabet build_ising_alphabet(const AlphabetOptions& opt);

using LogRho = std::function<double(const Vec&)>;

enum class WulffMode { Tangential, Radial };

struct WulffOptions {
  WulffMode mode = WulffMode::Tangential;
  double lo = -1.0;  // tangential offset or angle range
  double hi = 1.0;
  int samples = 41;
  Vec center{};  // radial mode: a point with log rho < 0
};

struct WulffSample {
  double param = 0.0;
  Vec s{};
  double angle = 0.0;  // of t + s
  double residual = 0.0;  // |rho(s) - 1|
  double kappa = 0.0;
};

struct WulffBoundary {
  Vec t{};
  Vec normal{};
  Vec tangent{};
  WulffOptions options;
  std::vector<WulffSample> samples;
  double kappa_bar = 0.0;  // min curvature
  double kappa_max = 0.0;
  double max_residual = 0.0;
};

// Roots of log rho(s) = 0: tangential mode solves along the normal at
// offset a along the tangent, radial mode along rays from the center.
WulffBoundary wulff_boundary(const LogRho& f, const Vec& t, const Vec& normal, const WulffOptions& opt);
WulffBoundary wulff_boundary(const RuelleOperator& op, const Vec& t, const WulffOptions& opt);

// Fills kappa from degree-4 interpolation through 5 neighbouring samples.
void curvature(WulffBoundary& b);
// Cross products of consecutive chords all have one sign.
bool boundary_convex(const WulffBoundary& b);

void write_wulff_csv(const WulffBoundary& b, std::ostream& out);

// grad log rho(0) normalized.
Vec duality_direction(const RuelleOperator& op, double h = 1e-5);

struct BoundaryTerm {
  double weight = 1.0;  // q(mu) q(eta) e^{(t, V(mu) + V(eta))}
  std::vector<double> g;  // boundary function by code; empty means 1
};

struct PrefactorReport {
  double phi = 0.0;
  Vec v{};  // grad log rho(0)
  Eigen::MatrixXd A;
  double adj_form = 0.0;  // v^T adj(A) v
  std::vector<double> chi;
};

// Phi = sum weight chi |v|^{(d-1)/2} / sqrt((2 pi)^{d-1} v^T adj(A) v).
PrefactorReport oz_prefactor(const RuelleOperator& op, const std::vector<BoundaryTerm>& terms);

struct OZFit {
  Vec direction{};
  double xi = 0.0;
  bool xi_fixed = false;
  double p_hat = 0.0;
  double p_stderr = 0.0;
  double phi_hat = 0.0;
  FitWindow window;
  double residual = 0.0;  // rms of the log residuals
  int points = 0;
};

// Least squares of log g + xi |x| = log Phi - p log |x|; xi is fitted
// jointly when not given.
OZFit oz_fit(const CorrelationTable& table, const Vec& direction, FitWindow window, int d,
             std::optional<double> xi = std::nullopt);
void write_ozfit_json(const OZFit& fit, std::ostream& out);

// g(0, (n,n)) = C(2n,n) w^{2n}.
CorrelationTable diagonal_walk_table(double w, int nmax);

// sum_{n >= 0} Q_n(x) with g = 1 for an i.i.d. step operator.
double toy_green(const RuelleOperator& op, const Site& x, int nmax);

struct TriangleReport {
  double min_slack = 0.0;
  double r_bar = 0.0;
  long pairs = 0;
  Vec worst_u{};
  Vec worst_v{};
};

// xi(u) + xi(v) - xi(u+v) - r_bar (|u| + |v| - |u+v|) over the pairs.
// r_bar = 1 / max kappa of the Wulff boundary.
TriangleReport strict_triangle_check(const NormModel& norm, double r_bar,
                                     const std::vector<std::pair<Vec, Vec>>& pairs);
// 10 x 10 angles x 10 length ratios.
std::vector<std::pair<Vec, Vec>> triangle_grid(int angles = 10, int ratios = 10);

}  // namespace oz
