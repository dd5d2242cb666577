#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ozlab/ruelle.hpp"

namespace oz {

// Q_{n,x}(r) on the box [lo, hi] of reachable displacements.  True values
// are table entries times exp(log_scale).
struct DisplacementDistribution {
  int n = 0;
  int dim = 1;
  Site lo{};
  Site hi{};
  std::vector<double> table;
  double log_scale = 0.0;
  double mass = 0.0;
  Vec mean{};  // n v_{n,x}
  Eigen::MatrixXd cov;

  long index(const Site& r) const;
  bool in_box(const Site& r) const;
  double at(const Site& r) const;
  std::vector<Site> support() const;
};

// Empty g means g = 1.
DisplacementDistribution qn_distribution(const RuelleOperator& op, const std::vector<double>& g, int n,
                                         const Context& x = {});

// H_n(xi) = (1/n) log L_xi^n g(x), accumulated in the log domain.
double log_laplace(const RuelleOperator& op, const std::vector<double>& g, int n, const Vec& xi,
                   const Context& x = {});

// lim L^n g(x) / rho^n.
double boundary_factor(const RuelleOperator& op, const std::vector<double>& g, const Context& x = {});

double log_rho(const RuelleOperator& op, const Vec& xi);

struct LaplaceConvergence {
  std::vector<int> n;
  std::vector<double> defect;  // |H_n - log rho(xi) - log(chi)/n|
  double C = 0.0;
  double c = 0.0;  // defect ~ C exp(-c n)
  double chi = 0.0;
};
LaplaceConvergence laplace_convergence(const RuelleOperator& op, const std::vector<double>& g, const Vec& xi,
                                       int nmin, int nmax, const Context& x = {});

struct GaussianModel {
  int dim = 1;
  Eigen::MatrixXd A;
  Eigen::VectorXd drift;  // grad log rho(0)
  double rho = 1.0;
  double d_g = 1.0;
};

// Central differences of log rho(xi) with Richardson extrapolation.
// require_pd throws "degenerate observable" when A is not positive definite.
GaussianModel hessian_at_zero(const RuelleOperator& op, const std::vector<double>& g, double fd_step = 1e-4,
                              const Context& x = {}, bool require_pd = true);

struct TiltSolution {
  Vec xi{};
  double residual = 0.0;
  int iterations = 0;
  Vec linear_guess{};  // A^{-1}(target - grad log rho(0))
};

// Newton on grad H_n(xi) = target with exact moments of the tilted DP.
TiltSolution tilt_solve(const RuelleOperator& op, const std::vector<double>& g, int n, const Vec& target,
                        const Context& x = {});

// Finite-difference gradient of H_n at xi.
Vec laplace_gradient_fd(const RuelleOperator& op, const std::vector<double>& g, int n, const Vec& xi, double h,
                        const Context& x = {});

double gaussian_llt(const GaussianModel& model, int n, const Site& r, const Vec& v);
inline double gaussian_llt(const GaussianModel& m, int n, const Site& r) {
  Vec v{0, 0, 0};
  for (int i = 0; i < m.dim; ++i) v[i] = m.drift(i);
  return gaussian_llt(m, n, r, v);
}

struct FourierRegions {
  double eps_radius = 0.0;  // n^{-1/2 + eps}
  double delta = 0.0;
  double mass_inner = 0.0;  // sum |F| / M^d over A_eps
  double mass_middle = 0.0;
  double mass_outer = 0.0;
  double max_outer = 0.0;  // max |F| on A_delta
};

struct FourierTable {
  DisplacementDistribution q;  // same layout as the DP table, log_scale 0
  FourierRegions regions;
  int grid = 0;
};

// Riemann sum of e^{-i(tau,r)} (L_{i tau}^n g)(x) on an M^d grid; throws
// "aliasing" when M does not exceed the support diameter.
FourierTable fourier_invert(const RuelleOperator& op, const std::vector<double>& g, int n, int M, double eps,
                            double delta, const Context& x = {});

struct TailReport {
  int n = 0;
  double nu = 0.0;
  double radius = 0.0;  // n^{1-nu}
  double tail = 0.0;    // mass with |r - n v| >= radius, relative to total
};
TailReport tail_check(const RuelleOperator& op, const std::vector<double>& g, int n, double nu,
                      const Context& x = {});

struct TailEnvelope {
  std::vector<TailReport> reports;
  double c2 = 0.0;
  double c3 = 0.0;  // tail <= c2 exp(-c3 n^{1-2 nu})
  bool monotone = true;
  bool below = true;
};
TailEnvelope tail_envelope(const RuelleOperator& op, const std::vector<double>& g, const std::vector<int>& ns,
                           double nu, const Context& x = {});

struct LltRow {
  Site r{};
  double exact = 0.0;
  double gauss = 0.0;
  double saddle = 0.0;  // tilted (saddle-point) approximation
  double rel_err = 0.0;
  double saddle_rel_err = 0.0;
  bool in_window = false;
};
struct LltComparison {
  std::vector<LltRow> rows;
  double max_rel_err = 0.0;  // over R_{n,nu}
  double max_saddle_err = 0.0;
  int window_points = 0;
};
// Gaussian prediction with the exact running mean v_{n,x}.
LltComparison llt_compare(const RuelleOperator& op, const std::vector<double>& g, int n, double nu,
                          const Context& x = {}, bool with_saddle = false);

}  // namespace oz
