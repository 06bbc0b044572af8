#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bkg/common.hpp"

namespace bkg {

struct MetricEdge {
    std::string id;
    double a = 1.0;
    double b = 2.0;
    std::string from;  // vertex at the a-end
    std::string to;    // vertex at the b-end
};

// ln(b/a); the edge length in the logarithmic metric.
double log_length(const MetricEdge& e);

class MetricGraph {
public:
    MetricGraph() = default;
    explicit MetricGraph(std::vector<MetricEdge> edges, bool directed = true);

    const std::vector<MetricEdge>& edges() const { return edges_; }
    const std::vector<std::string>& vertices() const { return vertices_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    bool directed() const { return directed_; }
    bool empty() const { return edges_.empty(); }

    int vertex_index(const std::string& v) const;
    rvec lengths() const;
    rvec a_values() const;
    rvec b_values() const;
    double min_length() const;
    double max_length() const;
    bool is_connected() const;

    // Boundary vector ordering: a-ends of edges 0..E-1, then b-ends.
    // Returns the vertex index of endpoint j in [0, 2E).
    int endpoint_vertex(int j) const;

private:
    std::vector<MetricEdge> edges_;
    std::vector<std::string> vertices_;
    bool directed_ = true;
};

double total_length(const MetricGraph& g);

// Star whose b-ends meet at vertex "c"; leaf i is vertex "v<i>".
MetricGraph make_star(const std::vector<std::pair<double, double>>& intervals);
// One edge closed into a loop (a-end and b-end on the same vertex).
MetricGraph make_ring(double a, double b);
MetricGraph make_interval(double a, double b);
// Connected graph with `edges` edges on at most `edges` vertices; a = 1 and
// log lengths uniform in [l_lo, l_hi].  Deterministic for a given seed.
MetricGraph make_random_graph(int edges, std::uint64_t seed, double l_lo = 1.0, double l_hi = 3.0);

struct PeriodicOrbit {
    std::vector<int> bonds;  // canonical rotation, full sequence incl. repeats
    double length = 0.0;
    double primitive_length = 0.0;
    int repetition = 1;
};

// Transition pattern: entry (i, j) nonzero allows bond j -> bond i.
using BondPattern = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

BondPattern pattern_of(const cmat& m, double tol = 0.0);

// Every equivalence class of closed bond walks of length <= max_length.
// Sorted by length, then lexicographically by bond sequence.
std::vector<PeriodicOrbit> enumerate_orbits(const BondPattern& pattern,
                                            const std::vector<double>& bond_lengths,
                                            double max_length);

// l_p times the product of transition weights along the whole orbit.
cplx orbit_amplitude(const PeriodicOrbit& orbit, const cmat& bond_matrix);
// The product part alone.
cplx orbit_weight(const PeriodicOrbit& orbit, const cmat& bond_matrix);

// Bond lengths of the two pictures: BK uses directed edges, BK2 uses
// the 2E edge ends (a wave leaving endpoint j crosses edge j mod E).
std::vector<double> bond_lengths_bk(const MetricGraph& g);
std::vector<double> bond_lengths_bk2(const MetricGraph& g);

}  // namespace bkg
