#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ozlab/lattice.hpp"

namespace oz {

enum class Method { Brute, Strip, MonteCarlo, ToyModel };
std::string method_name(Method m);

struct CorrelationEntry {
  Site x{};
  Site y{};
  double g = 0.0;
  double stderr_ = 0.0;
};

struct CorrelationTable {
  int dim = 2;
  double beta = 0.0;
  Method method = Method::Brute;
  std::vector<CorrelationEntry> entries;

  // Looks up g(x,y) in either order; throws if absent.
  double at(const Site& x, const Site& y) const;
  // (|y - x|, mean g, mean stderr) for displacements along the ray through
  // `direction` with |y - x| in [rmin, rmax], averaged over entries sharing
  // the same displacement.
  struct ProfilePoint {
    double r;
    double g;
    double stderr_;
  };
  std::vector<ProfilePoint> profile(const Vec& direction, double rmin, double rmax) const;
};

// Brute-force spin sums over all 2^|V| configurations (|V| <= 24) with the
// ferromagnetic weight exp(+beta sum J s_x s_y).
CorrelationTable exact_two_point(const LatticeGraph& g, double beta);

// Same, for one pair and with edge couplings scaled by edge_scale[e].
double exact_correlation(const LatticeGraph& g, double beta, int x, int y,
                         const std::vector<double>& edge_scale = {});
double log_partition(const LatticeGraph& g, double beta, const std::vector<double>& edge_scale = {});

// Transfer matrix on {0..length-1} x {0..width-1}; entries are
// g((0,r),(x,r)) for every row r and column x.  Free boundary in both
// directions unless periodic (cylinder, width >= 3).
CorrelationTable strip_two_point(int width, int length, double beta, const CouplingField& couplings,
                                 bool periodic = false);

struct MonteCarloOptions {
  int size = 128;  // periodic size x size box
  double beta = 0.0;
  double J = 1.0;
  long sweeps = 1000;
  long warmup = 100;
  std::uint64_t seed = 1;
  int chains = 8;
  int batches_per_chain = 8;
  int max_distance = 32;
  int threads = 1;
  std::vector<Site> directions{{1, 0, 0}};
  // Average each direction with its three lattice rotations.
  bool rotate = true;
};

// Wolff single-cluster updates with the cluster estimator
// g(x) = E[ #{i in C : i + x in C} / |C| ].  A sweep is as many clusters as
// needed to flip size^2 spins in total.
CorrelationTable monte_carlo_two_point(const MonteCarloOptions& opt);

struct FitWindow {
  double rmin = 8.0;
  double rmax = 32.0;
};

struct XiEstimate {
  Vec direction{};
  double xi = 0.0;
  double intercept = 0.0;
  FitWindow window;
  double residual = 0.0;
  bool prefactor_corrected = false;
  int points = 0;
  bool griffiths_ok = true;
};

// Affine fit of log g (+ (d-1)/2 log|x| when corrected) against |x|.
// griffiths_tol < 0 disables the check g <= exp(-xi |x|)(1 + tol).
XiEstimate inverse_correlation_length(const CorrelationTable& table, const Vec& direction, FitWindow window,
                                      bool prefactor_correction, double griffiths_tol = -1.0);

// corr.csv: x1,...,xd,g,stderr,method with the displacement y - x.
void write_corr_csv(const CorrelationTable& table, std::ostream& out);
CorrelationTable read_corr_csv(std::istream& in);

}  // namespace oz
