#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ozlab/random_line.hpp"

namespace oz {

struct Skeleton {
  std::vector<Site> points;  // x_0, ..., x_N
  double K = 0.0;
  Line parent;

  int N() const { return int(points.size()) - 1; }
  bool operator==(const Skeleton& o) const { return points == o.points && K == o.K; }
};

// x_0 = t_0; stop when the remaining tail lies in K U(x_k), else jump to the
// first t_i with xi(t_i - x_k) > K.
Skeleton build_skeleton(const Line& line, double K, const NormModel& norm);

struct SkeletonWeight {
  Skeleton skeleton;
  double weight = 0.0;          // sum of q over lines with this skeleton
  double product_bound = 0.0;   // prod g(x_{l-1}, x_l) in the same graph
  double exp_bound = 0.0;       // exp(-(N-1) K)
  long lines = 0;
};

// Groups all lines x -> y of g by their K-skeleton.
std::vector<SkeletonWeight> enumerate_skeletons(const LatticeGraph& g, const Site& x, const Site& y, double beta,
                                                double K, const NormModel& norm);
double skeleton_weight(const LatticeGraph& g, const Skeleton& sk, double beta, const NormModel& norm);

struct SkeletonClassification {
  int n_back = 0;
  std::vector<bool> forward;  // per increment l = 0..N-1
  std::vector<bool> cone;     // per point l = 0..N
  std::vector<std::pair<int, int>> marked;  // [l_k, r_k)
  std::vector<bool> is_marked;
  int n_mark = 0;
};

// Increment in Y_delta(t); the zero increment is not.
bool cone_step(const DualVector& t, double delta, const Site& x, const NormModel& norm);

SkeletonClassification classify(const Skeleton& sk, const DualVector& t, double delta, const NormModel& norm);

double skeleton_surcharge(const Skeleton& sk, const DualVector& t, const NormModel& norm);

struct SurchargeReport {
  double surcharge = 0.0;
  int n_back = 0;
  int n_mark = 0;
  bool back_bound = true;  // s >= delta K (n_back - 1)
  bool mark_bound = true;  // s >= delta K n_mark / 7
  bool has_weight = false;
  double weight = 0.0;
  double weight_bound = 0.0;  // exp(-(t, x_N - x_0) - s)
  bool weight_ok = true;
};

// range is the interaction range R; throws "scale below range guard" when K < 8R.
SurchargeReport surcharge_checks(const Skeleton& sk, const DualVector& t, double delta, double K, double range,
                                 const NormModel& norm, double weight = -1.0);

enum class SlabLabel { Untouched, Clean, Dirty };

struct SlabInfo {
  long index = 0;
  SlabLabel label = SlabLabel::Untouched;
  int i = -1;  // first skeleton index in the slab
  int j = -1;  // last index >= i in the slab
  bool bracket_applicable = false;
  bool bracket_ok = true;  // 3 <= j - i <= 8 / (1 - delta)
};

// Slabs { l 8K <= (t, u - x_0) < (l+1) 8K } between the lowest and highest
// slab met by the skeleton.  Dirty slabs hold a marked point.
std::vector<SlabInfo> slab_classify(const Skeleton& sk, const DualVector& t, double K, double delta,
                                    const NormModel& norm);

// Skeleton of n increments with xi in [K, 2K); each increment is a backtrack
// with probability backtrack_rate and forward otherwise.
Skeleton random_admissible_skeleton(std::mt19937_64& rng, int n, double K, const NormModel& norm,
                                    const DualVector& t, double delta, double backtrack_rate);

}  // namespace oz
