#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qn/linalg.hpp"

namespace qn {

// Undirected connected graph over agents 0..m-1. Self-loops (i,i) are implied
// members of every neighborhood and are not stored in `edges`.
struct Topology {
    int m = 0;
    std::vector<std::pair<int, int>> edges;  // i < j, no self-loops
    int resample_attempts = 0;               // how many Erdos-Renyi draws it took

    std::vector<std::vector<int>> neighbors() const;  // excluding self
    std::vector<int> degrees() const;                 // excluding self-loop
    bool is_connected() const;
};

struct GossipMatrix {
    Mat W;
    double nu = 0.0;  // lower eigenvalue bound; 0 = unset (raw Metropolis weights)
};

// Connected Erdos-Renyi draw; resamples with incremented seed until connected.
// Throws std::runtime_error after 1000 attempts.
Topology generate_erdos_renyi(int m, double p, std::uint64_t seed);

// w_ij = 1/(1+max(deg_i,deg_j)) on edges (degrees exclude self-loops),
// w_ii = 1 - sum of the row. Doubly stochastic, symmetric; nu left unset.
GossipMatrix metropolis_weights(const Topology& t);

// W = ((1+nu)/2) I + ((1-nu)/2) W~ ; maps eigenvalues from [-1,1] into [nu,1].
GossipMatrix shift_spectrum(const GossipMatrix& w_tilde, double nu);

// Laplacian of the 0-1 adjacency (self-loops excluded): l_ii = deg(i),
// l_ij = -1 on edges.
Mat laplacian(const Topology& t);

// Edge-list text format: "m <count>" then one "i j" per line (0-based, no
// self-loops listed).
void save_topology(std::ostream& os, const Topology& t);
Topology load_topology(std::istream& is);

} // namespace qn
