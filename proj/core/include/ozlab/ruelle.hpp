#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ozlab/lattice.hpp"

namespace oz {

// Symbols 1..S with observable V; symbol 0 is the empty symbol with V = 0.
struct Alphabet {
  int dim = 1;
  std::vector<Site> V{{0, 0, 0}};
  std::vector<std::string> labels{"_"};

  int size() const { return int(V.size()) - 1; }
  void add(const Site& v, std::string label = {});
};

// True iff the differences V(z) - V(1) span R^d.
bool truly_d_dimensional(const Alphabet& a);

// Context strings x_1..x_D over {0 (empty), 1..S} with the empty symbol
// absorbing, encoded base S+1 with x_1 most significant.
using Context = std::vector<int>;

class RuelleOperator {
 public:
  using WeightFn = std::function<double(int z, const Context& ctx)>;

  RuelleOperator() = default;
  // weights[(z-1) * (S+1)^depth + code(ctx)] = e^{psi(z, ctx)} >= 0.
  RuelleOperator(Alphabet alphabet, int depth, std::vector<double> weights, double theta = 0.5);
  static RuelleOperator from_function(Alphabet alphabet, int depth, const WeightFn& w, double theta = 0.5);
  static RuelleOperator iid(Alphabet alphabet, const std::vector<double>& p, double theta = 0.5);

  const Alphabet& alphabet() const { return alphabet_; }
  int symbols() const { return alphabet_.size(); }
  int depth() const { return depth_; }
  // D = max(depth, 1): length of the contexts the operator acts on.
  int context_length() const { return std::max(depth_, 1); }
  double theta() const { return theta_; }

  long code_count() const { return pow_[context_length()]; }
  long code(const Context& ctx) const;
  Context decode(long code) const;
  bool valid(long code) const;
  int level(long code) const;  // number of non-empty symbols
  long empty_code() const { return 0; }
  // (z, x) truncated to D symbols.
  long prepend(int z, long code) const { return z * pow_[context_length() - 1] + code / (alphabet_.size() + 1); }

  double weight(int z, long code) const;
  double weight(int z, const Context& ctx) const { return weight(z, code(ctx)); }
  double psi(int z, const Context& ctx) const { return std::log(weight(z, ctx)); }
  const std::vector<double>& table() const { return weights_; }

  // (Lf)(x) over all codes; f and the result are indexed by code.
  std::vector<double> apply(const std::vector<double>& f) const;
  double apply_at(const std::vector<double>& f, const Context& ctx) const;

  // Full level S^D: index (x_1-1) S^{D-1} + ... + (x_D-1).
  long full_size() const;
  long full_to_code(long idx) const;
  std::vector<double> full_apply(const std::vector<double>& v) const;
  std::vector<double> full_apply_transpose(const std::vector<double>& v) const;
  Eigen::MatrixXd full_matrix() const;
  Eigen::MatrixXcd full_matrix_complex(const Vec& tau) const;

  RuelleOperator tilted(const Vec& xi) const;
  RuelleOperator truncate(int N) const;
  // Same operator written with deeper context tables.
  RuelleOperator with_depth(int depth) const;
  RuelleOperator scaled(double factor) const;

  // sup_{k>1} var_k(psi) / theta^k over the table, and |psi|_theta / (1 - theta).
  double holder_seminorm() const;
  double beta_bar() const { return holder_seminorm() / (1.0 - theta_); }
  // sup over contexts of sum_z e^psi.
  double summability() const;

 private:
  Alphabet alphabet_;
  int depth_ = 0;
  double theta_ = 0.5;
  std::vector<double> weights_;
  std::vector<long> pow_;  // (S+1)^k
  std::vector<long> full_tab_;  // table column for each full index

  void init();
  long table_column(long code) const { return code / pow_[context_length() - depth_]; }
};

struct SpectralData {
  double rho = 0.0;
  std::vector<double> h;     // by code, h(empty) = 1
  std::vector<double> left;  // left Perron vector on the full level
  double lambda2 = 0.0;
  double gap = 0.0;  // |lambda_2| / rho
  int iterations = 0;
  double residual = 0.0;  // |L h - rho h|_inf
};

SpectralData spectral_data(const RuelleOperator& op, double tol = 1e-12, int max_iter = 100000);

// Eigenvalues of the full-level block sorted by decreasing modulus.
std::vector<std::complex<double>> dense_spectrum(const RuelleOperator& op);

// psi + log h(z,x) - log h(x) - log rho; checks |L1 - 1| <= 1e-10.
RuelleOperator normalize(const RuelleOperator& op, const SpectralData& sd);
double normalization_defect(const RuelleOperator& op);

// Spectral radius of L_{i tau}.
double fourier_radius(const RuelleOperator& op, const Vec& tau);

struct OffAxisResult {
  double max_radius = 0.0;
  double eta = 0.0;  // 1 - max_radius
  Vec argmax{};
  long points = 0;
};

// Max of |rho(L_{i tau})| over a uniform grid of [-pi, pi)^d with
// |tau|_inf >= delta (plus the points at +-delta on each axis).
OffAxisResult off_axis_scan(const RuelleOperator& op, double delta, int grid);

struct ProjectorResult {
  double c = 0.0;  // value at the empty context
  double spread = 0.0;
  double rate = 0.0;  // observed geometric convergence rate
  int iterations = 0;
  std::vector<double> per_context;  // by code
};

// c(g) = lim L^n g(x) for a normalized operator.
ProjectorResult projector_coefficient(const RuelleOperator& op, const std::vector<double>& g, double tol = 1e-13,
                                      int max_iter = 100000);

// sum over strings z of length n of sup_x e^{Psi_n(z | x)}.
double apriori_sum(const RuelleOperator& op, int n);

// Header lines `dimension = d`, `depth = m`, `theta = t`; then per symbol
// `id : V... : ctx=weight ...` with contexts as comma-separated ids, `_` for
// the empty symbol and `*` for the default.
RuelleOperator parse_alphabet(std::istream& in);
RuelleOperator load_alphabet(const std::string& path);
void write_alphabet(const RuelleOperator& op, std::ostream& out);

}  // namespace oz
