#include "qn/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qn/rng.hpp"

namespace qn {

std::vector<std::vector<int>> Topology::neighbors() const {
    std::vector<std::vector<int>> nb(m);
    for (auto [i, j] : edges) {
        nb[i].push_back(j);
        nb[j].push_back(i);
    }
    for (auto& v : nb) std::sort(v.begin(), v.end());
    return nb;
}

std::vector<int> Topology::degrees() const {
    std::vector<int> deg(m, 0);
    for (auto [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

bool Topology::is_connected() const {
    if (m <= 0) return false;
    auto nb = neighbors();
    std::vector<char> seen(m, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : nb[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
    }
    return count == m;
}

Topology generate_erdos_renyi(int m, double p, std::uint64_t seed) {
    if (m < 2) throw std::invalid_argument("erdos_renyi: m must be >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("erdos_renyi: p must be in (0,1]");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        CounterRng rng(seed + static_cast<std::uint64_t>(attempt), 0);
        Topology t;
        t.m = m;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                if (rng.uniform01() < p) t.edges.emplace_back(i, j);
        if (t.is_connected()) {
            t.resample_attempts = attempt + 1;
            return t;
        }
    }
    throw std::runtime_error("erdos_renyi: no connected graph within 1000 resamples (p too small?)");
}

GossipMatrix metropolis_weights(const Topology& t) {
    if (!t.is_connected()) throw std::invalid_argument("metropolis_weights: topology not connected");
    auto deg = t.degrees();
    GossipMatrix g;
    g.W = Mat(t.m, t.m);
    for (auto [i, j] : t.edges) {
        double w = 1.0 / (1.0 + std::max(deg[i], deg[j]));
        g.W(i, j) = w;
        g.W(j, i) = w;
    }
    for (int i = 0; i < t.m; ++i) {
        double s = 0.0;
        for (int j = 0; j < t.m; ++j)
            if (j != i) s += g.W(i, j);
        g.W(i, i) = 1.0 - s;
    }
    return g;
}

GossipMatrix shift_spectrum(const GossipMatrix& w_tilde, double nu) {
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("shift_spectrum: nu must be in (0,1]");
    int m = w_tilde.W.rows;
    GossipMatrix g;
    g.nu = nu;
    g.W = Mat(m, m);
    double a = 0.5 * (1.0 + nu), b = 0.5 * (1.0 - nu);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g.W(i, j) = b * w_tilde.W(i, j) + (i == j ? a : 0.0);
    return g;
}

Mat laplacian(const Topology& t) {
    Mat L(t.m, t.m);
    auto deg = t.degrees();
    for (int i = 0; i < t.m; ++i) L(i, i) = deg[i];
    for (auto [i, j] : t.edges) {
        L(i, j) = -1.0;
        L(j, i) = -1.0;
    }
    return L;
}

void save_topology(std::ostream& os, const Topology& t) {
    os << "m " << t.m << "\n";
    for (auto [i, j] : t.edges) os << i << " " << j << "\n";
}

Topology load_topology(std::istream& is) {
    std::string tag;
    Topology t;
    if (!(is >> tag >> t.m) || tag != "m" || t.m < 1)
        throw std::runtime_error("topology: bad header (expected \"m <count>\")");
    int i, j;
    while (is >> i >> j) {
        if (i < 0 || j < 0 || i >= t.m || j >= t.m || i == j)
            throw std::runtime_error("topology: bad edge");
        t.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    return t;
}

} // namespace qn
