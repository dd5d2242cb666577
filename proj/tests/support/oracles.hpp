#pragma once

#include <map>
#include <utility>
#include <vector>

#include "ozlab/lattice.hpp"
#include "ozlab/ruelle.hpp"

namespace oracle {

struct SpinEdge {
  int u;
  int v;
  double J;
};

// <s_x s_y> by a plain loop over all spin configurations.
double spin_correlation(int n, const std::vector<SpinEdge>& edges, double beta, int x, int y);
double log_z(int n, const std::vector<SpinEdge>& edges, double beta);
std::vector<SpinEdge> spin_edges(const oz::LatticeGraph& g);

// Nearest-neighbour pairs of the w x h grid {0..w-1} x {0..h-1}.
std::vector<std::pair<oz::Site, oz::Site>> grid_pairs(int w, int h);
oz::LatticeGraph grid(int w, int h, double J = 1.0);
// Edge masks of g whose edges form a connected graph.
std::vector<oz::EdgeSet> connected_masks(const oz::LatticeGraph& g);

double binomial_pmf(int n, int k, double p);
double central_binomial(int n);

// Q_n(r) by explicit enumeration of symbol strings.
std::map<oz::Site, double> string_sum(const oz::RuelleOperator& op, const std::vector<double>& g, int n,
                                      const oz::Context& x = {});

// Perron root of the full-level matrix assembled from weight(z, ctx).
double dense_rho(const oz::RuelleOperator& op);

// Onsager: inverse correlation length of the square lattice along e1.
double ising_axis_xi(double beta);

}  // namespace oracle
