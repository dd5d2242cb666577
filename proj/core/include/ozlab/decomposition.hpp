#pragma once

#include <map>
#include <vector>

#include "ozlab/random_line.hpp"

namespace oz {

struct BreakPoint {
  int index = 0;
  Site vertex{};
  bool correct = false;
};

// Interior l visited once with max_{k<l} (i_k,t) < (i_l,t) < min_{k>l} (i_k,t).
std::vector<BreakPoint> find_break_points(const Line& line, const DualVector& t);

// v in 2K U + Y_delta(t).  v with xi(v) <= 2K counts as inside; otherwise the
// 2K sphere is sampled (64 directions plus golden-section refinement in d = 2,
// 256 Fibonacci points in d = 3).
bool in_inflated_cone(const Vec& v, const DualVector& t, double K, double delta, const NormModel& norm);

// Break point l whose later vertices all lie in i_l + 2K U + Y.
bool is_correct_break(const Line& line, int l, const DualVector& t, double K, double delta, const NormModel& norm);

struct IrreducibleDecomposition {
  Line mu;
  std::vector<Line> gammas;
  Line eta;
  std::vector<Site> breaks;  // y_1, ..., y_{m+1}
  bool degenerate = false;

  int m() const { return int(gammas.size()); }
};

// Splits at the set C of break points b with lambda[b .. next(b)] inside
// b + 2K U + Y, next(b) being the following element of C or the end.  C is
// built right to left; it is empty iff the line has no correct break point.
IrreducibleDecomposition irreducible_decompose(const Line& line, const DualVector& t, double K, double delta,
                                               const NormModel& norm);
Line reconstruct(const IrreducibleDecomposition& dec);

// Conditions 1-3 of the irreducible set S for gamma starting at 0.
bool is_irreducible(const Line& gamma, const DualVector& t, double K, double delta, const NormModel& norm);
// No correct break point.
bool satisfies_p4(const Line& mu, const DualVector& t, double K, double delta, const NormModel& norm);
// Inside y_{m+1} + 2K U + Y and no correct break point.
bool satisfies_p2(const Line& eta, const DualVector& t, double K, double delta, const NormModel& norm);

struct RepresentationCheck {
  double lhs = 0.0;              // g(x, y)
  double rhs = 0.0;              // regrouped weight of non-degenerate lines
  double degenerate_mass = 0.0;  // weight of lines without correct break points
  double defect = 0.0;           // |lhs - rhs - degenerate_mass|
  long lines = 0;
  long degenerate_lines = 0;
  long groups = 0;
  std::map<Site, long> pieces;  // irreducible pieces by displacement
};

RepresentationCheck verify_irreducible_representation(const LatticeGraph& g, const Site& x, const Site& y,
                                                      double beta, const DualVector& t, double K, double delta,
                                                      const NormModel& norm);

}  // namespace oz
