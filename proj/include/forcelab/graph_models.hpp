#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "forcelab/common.hpp"

namespace forcelab {

enum class GraphKind { KRegular, ErdosRenyi };

struct GraphModel {
    GraphKind kind = GraphKind::KRegular;
    int k = 0;       // degree, KRegular only
    double p = 0.0;  // edge probability, ErdosRenyi only

    bool operator==(const GraphModel&) const = default;
};

using Edge = std::pair<int, int>;

// Simple undirected graph. Edges are stored once with first < second,
// sorted lexicographically.
class Graph {
public:
    Graph() = default;
    Graph(int n, std::vector<Edge> edges, GraphModel model, std::uint64_t seed);

    int n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }
    const GraphModel& model() const { return model_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<int> degrees() const;
    bool operator==(const Graph& other) const = default;

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    GraphModel model_;
    std::uint64_t seed_ = 0;
};

// Random k-regular graph: stub pairing with local rejection, a repair pass
// for leftover stubs, then degree-preserving double-edge swaps.
Graph gen_k_regular(int n, int k, std::uint64_t seed);

// G(n, p): each unordered pair included independently with probability p.
Graph gen_erdos_renyi(int n, double p, std::uint64_t seed);

struct EdgeCountProbe {
    std::size_t observed = 0;
    double expected = 0.0;
    double relative_deviation = 0.0;
};

// Counts edges with one endpoint in a and the other in b and compares with
// the density prediction (k/n)|A||B| or p|A||B|. a and b must be disjoint.
EdgeCountProbe edges_between(const Graph& g, std::span<const int> a, std::span<const int> b);

// Exact rational number with unsigned 64-bit parts, always reduced.
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    static Rational make(std::uint64_t num, std::uint64_t den);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

struct PairMomentReport {
    Rational shared_vertex_moment;  // E[1{01 in G} 1{02 in G}]
    Rational disjoint_moment;       // E[1{01 in G} 1{23 in G}]
    Rational single_edge_prob;      // E[1{01 in G}]
    std::uint64_t graph_count = 0;
};

// Enumerates every labeled k-regular graph on n <= 10 vertices and averages
// the edge-indicator products exactly.
PairMomentReport enumerate_pair_moments(int n, int k);

// Closed forms for the same moments (from the symmetry argument over
// labeled regular graphs).
Rational shared_vertex_moment_formula(int n, int k);
Rational disjoint_moment_formula(int n, int k);

}  // namespace forcelab
