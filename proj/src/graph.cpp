#include "bkg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace bkg {

namespace {

constexpr double kLengthTol = 1e-12;

bool is_min_rotation(const std::vector<int>& seq) {
    const std::size_t n = seq.size();
    for (std::size_t r = 1; r < n; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const int x = seq[(i + r) % n];
            if (x < seq[i]) return false;
            if (x > seq[i]) break;
        }
    }
    return true;
}

std::size_t primitive_period(const std::vector<int>& seq) {
    const std::size_t n = seq.size();
    for (std::size_t p = 1; p < n; ++p) {
        if (n % p != 0) continue;
        bool ok = true;
        for (std::size_t i = p; i < n && ok; ++i) ok = seq[i] == seq[i % p];
        if (ok) return p;
    }
    return n;
}

}  // namespace

const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidEdge: return "INVALID_EDGE";
        case ErrorCode::EmptyGraph: return "EMPTY_GRAPH";
        case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::HermiticityViolation: return "HERMITICITY_VIOLATION";
        case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
        case ErrorCode::SingularMatrix: return "SINGULAR_MATRIX";
        case ErrorCode::RankAmbiguous: return "RANK_AMBIGUOUS";
        case ErrorCode::SingularAtK: return "SINGULAR_AT_K";
        case ErrorCode::ParameterOutOfRange: return "PARAMETER_OUT_OF_RANGE";
        case ErrorCode::ToleranceTooCoarse: return "TOLERANCE_TOO_COARSE";
        case ErrorCode::RangeExceeded: return "RANGE_EXCEEDED";
        case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
        case ErrorCode::TailBoundExceeded: return "TAIL_BOUND_EXCEEDED";
        case ErrorCode::ConditionViolated: return "CONDITION_VIOLATED";
        case ErrorCode::ConvergenceFailure: return "CONVERGENCE_FAILURE";
        case ErrorCode::Pole: return "POLE";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::ValidationError: return "VALIDATION_ERROR";
        case ErrorCode::ComputeError: return "COMPUTE_ERROR";
    }
    return "UNKNOWN";
}

double log_length(const MetricEdge& e) { return std::log(e.b / e.a); }

MetricGraph::MetricGraph(std::vector<MetricEdge> edges, bool directed)
    : edges_(std::move(edges)), directed_(directed) {
    for (const auto& e : edges_) {
        if (!(e.a > 0.0) || !(e.b > e.a) || !std::isfinite(e.b)) {
            throw Error(ErrorCode::InvalidEdge,
                        "edge '" + e.id + "' needs 0 < a < b < inf");
        }
        for (const auto* v : {&e.from, &e.to}) {
            if (v->empty())
                throw Error(ErrorCode::InvalidEdge, "edge '" + e.id + "' has an unnamed vertex");
            if (std::find(vertices_.begin(), vertices_.end(), *v) == vertices_.end())
                vertices_.push_back(*v);
        }
    }
}

int MetricGraph::vertex_index(const std::string& v) const {
    auto it = std::find(vertices_.begin(), vertices_.end(), v);
    return it == vertices_.end() ? -1 : static_cast<int>(it - vertices_.begin());
}

rvec MetricGraph::lengths() const {
    rvec l(num_edges());
    for (int i = 0; i < num_edges(); ++i) l[i] = log_length(edges_[i]);
    return l;
}

rvec MetricGraph::a_values() const {
    rvec v(num_edges());
    for (int i = 0; i < num_edges(); ++i) v[i] = edges_[i].a;
    return v;
}

rvec MetricGraph::b_values() const {
    rvec v(num_edges());
    for (int i = 0; i < num_edges(); ++i) v[i] = edges_[i].b;
    return v;
}

double MetricGraph::min_length() const {
    if (empty()) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
    return lengths().minCoeff();
}

double MetricGraph::max_length() const {
    if (empty()) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
    return lengths().maxCoeff();
}

bool MetricGraph::is_connected() const {
    if (vertices_.empty()) return false;
    std::vector<int> parent(vertices_.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const auto& e : edges_) parent[find(vertex_index(e.from))] = find(vertex_index(e.to));
    const int root = find(0);
    for (std::size_t v = 1; v < vertices_.size(); ++v)
        if (find(static_cast<int>(v)) != root) return false;
    return true;
}

int MetricGraph::endpoint_vertex(int j) const {
    const int E = num_edges();
    if (j < 0 || j >= 2 * E) throw Error(ErrorCode::DimensionMismatch, "endpoint index out of range");
    return j < E ? vertex_index(edges_[j].from) : vertex_index(edges_[j - E].to);
}

double total_length(const MetricGraph& g) {
    if (g.empty()) throw Error(ErrorCode::EmptyGraph, "total length of an empty graph");
    return g.lengths().sum();
}

MetricGraph make_star(const std::vector<std::pair<double, double>>& intervals) {
    std::vector<MetricEdge> edges;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto n = std::to_string(i);
        edges.push_back({"e" + n, intervals[i].first, intervals[i].second, "v" + n, "c"});
    }
    return MetricGraph(std::move(edges));
}

MetricGraph make_ring(double a, double b) { return MetricGraph({{"e0", a, b, "v", "v"}}); }

MetricGraph make_interval(double a, double b) { return MetricGraph({{"e0", a, b, "v0", "v1"}}); }

MetricGraph make_random_graph(int edges, std::uint64_t seed, double l_lo, double l_hi) {
    if (edges < 1) throw Error(ErrorCode::EmptyGraph, "random graph needs at least one edge");
    if (!(l_lo > 0.0) || !(l_hi >= l_lo) || !std::isfinite(l_hi))
        throw Error(ErrorCode::ParameterOutOfRange, "need 0 < l_lo <= l_hi");
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    const int V = 1 + pick(edges);
    std::vector<MetricEdge> out;
    auto add = [&](int u, int v) {
        const int id = static_cast<int>(out.size());
        if (pick(2) == 1) std::swap(u, v);
        out.push_back({"e" + std::to_string(id), 1.0, std::exp(uniform(l_lo, l_hi)),
                       "v" + std::to_string(u), "v" + std::to_string(v)});
    };
    for (int v = 1; v < V; ++v) add(pick(v), v);  // spanning tree
    while (static_cast<int>(out.size()) < edges) add(pick(V), pick(V));
    return MetricGraph(std::move(out));
}

BondPattern pattern_of(const cmat& m, double tol) {
    BondPattern p(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) p(i, j) = std::abs(m(i, j)) > tol;
    return p;
}

std::vector<PeriodicOrbit> enumerate_orbits(const BondPattern& pattern,
                                            const std::vector<double>& bond_lengths,
                                            double max_length) {
    const int n = static_cast<int>(pattern.rows());
    if (pattern.cols() != n || static_cast<int>(bond_lengths.size()) != n)
        throw Error(ErrorCode::DimensionMismatch, "pattern and bond lengths disagree");
    if (!(max_length > 0.0))
        throw Error(ErrorCode::ParameterOutOfRange, "max_length must be positive");
    for (double l : bond_lengths)
        if (!(l > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "bond lengths must be positive");

    const double cap = max_length + kLengthTol;
    std::vector<PeriodicOrbit> out;
    std::vector<int> path;

    // Closed walks whose smallest bond is `s`, recorded once as their
    // lexicographically minimal rotation.
    std::function<void(int, int, double)> walk = [&](int s, int cur, double len) {
        for (int nxt = s; nxt < n; ++nxt) {
            if (!pattern(nxt, cur)) continue;
            if (nxt == s && is_min_rotation(path)) {
                PeriodicOrbit o;
                o.bonds = path;
                o.length = len;
                const std::size_t p = primitive_period(path);
                o.repetition = static_cast<int>(path.size() / p);
                o.primitive_length = 0.0;
                for (std::size_t i = 0; i < p; ++i) o.primitive_length += bond_lengths[path[i]];
                out.push_back(std::move(o));
            }
            const double next_len = len + bond_lengths[nxt];
            if (next_len <= cap) {
                path.push_back(nxt);
                walk(s, nxt, next_len);
                path.pop_back();
            }
        }
    };

    for (int s = 0; s < n; ++s) {
        if (bond_lengths[s] > cap) continue;
        path.assign(1, s);
        walk(s, s, bond_lengths[s]);
    }

    std::sort(out.begin(), out.end(), [](const PeriodicOrbit& x, const PeriodicOrbit& y) {
        if (x.length != y.length) return x.length < y.length;
        return x.bonds < y.bonds;
    });
    return out;
}

cplx orbit_weight(const PeriodicOrbit& orbit, const cmat& bond_matrix) {
    const std::size_t n = orbit.bonds.size();
    cplx w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int from = orbit.bonds[i];
        const int to = orbit.bonds[(i + 1) % n];
        if (from >= bond_matrix.cols() || to >= bond_matrix.rows())
            throw Error(ErrorCode::DimensionMismatch, "orbit bond outside matrix");
        w *= bond_matrix(to, from);
    }
    return w;
}

cplx orbit_amplitude(const PeriodicOrbit& orbit, const cmat& bond_matrix) {
    return orbit.primitive_length * orbit_weight(orbit, bond_matrix);
}

std::vector<double> bond_lengths_bk(const MetricGraph& g) {
    const rvec l = g.lengths();
    return {l.data(), l.data() + l.size()};
}

std::vector<double> bond_lengths_bk2(const MetricGraph& g) {
    const rvec l = g.lengths();
    std::vector<double> out(2 * l.size());
    for (Eigen::Index j = 0; j < l.size(); ++j) out[j] = out[j + l.size()] = l[j];
    return out;
}

}  // namespace bkg
