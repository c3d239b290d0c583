#include "forcelab/graph_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "forcelab/common.hpp"

namespace forcelab {

namespace {

std::uint64_t edge_key(int u, int v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

Edge ordered(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

// Edge list plus hash set, supporting O(1) random edge access and removal.
class EdgeBag {
public:
    explicit EdgeBag(std::size_t reserve) {
        edges_.reserve(reserve);
        keys_.reserve(reserve * 2);
    }

    bool has(int u, int v) const { return keys_.count(edge_key(u, v)) != 0; }

    void add(int u, int v) {
        edges_.push_back(ordered(u, v));
        keys_.insert(edge_key(u, v));
    }

    void remove_at(std::size_t i) {
        keys_.erase(edge_key(edges_[i].first, edges_[i].second));
        edges_[i] = edges_.back();
        edges_.pop_back();
    }

    void replace_at(std::size_t i, int u, int v) {
        keys_.erase(edge_key(edges_[i].first, edges_[i].second));
        edges_[i] = ordered(u, v);
        keys_.insert(edge_key(u, v));
    }

    std::size_t size() const { return edges_.size(); }
    const Edge& operator[](std::size_t i) const { return edges_[i]; }
    std::vector<Edge> release() { return std::move(edges_); }

private:
    std::vector<Edge> edges_;
    std::unordered_set<std::uint64_t> keys_;
};

// Attaches the stub pair (u, v), which cannot be joined directly, by
// splitting a random existing edge (a, b) into (u, a) and (v, b).
void repair_pair(EdgeBag& bag, int u, int v, std::mt19937_64& rng) {
    if (bag.size() == 0) throw RuntimeFailure("k-regular sampler: no edge available for repair");
    std::uniform_int_distribution<std::size_t> pick(0, bag.size() - 1);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const std::size_t i = pick(rng);
        auto [a, b] = bag[i];
        if (rng() & 1) std::swap(a, b);
        if (a == u || b == v || a == v || b == u) continue;
        if (bag.has(u, a) || bag.has(v, b)) continue;
        bag.remove_at(i);
        bag.add(u, a);
        bag.add(v, b);
        return;
    }
    throw RuntimeFailure("k-regular sampler: repair step failed");
}

}  // namespace

Graph::Graph(int n, std::vector<Edge> edges, GraphModel model, std::uint64_t seed)
    : n_(n), edges_(std::move(edges)), model_(model), seed_(seed) {
    for (auto& e : edges_) {
        if (e.first == e.second) throw InvalidArgument("graph: self-loop at vertex " + std::to_string(e.first));
        if (e.first < 0 || e.second < 0 || e.first >= n_ || e.second >= n_) {
            throw InvalidArgument("graph: edge endpoint out of range");
        }
        e = ordered(e.first, e.second);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
        throw InvalidArgument("graph: duplicate edge");
    }
}

std::vector<int> Graph::degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n_), 0);
    for (const auto& [u, v] : edges_) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

Graph gen_k_regular(int n, int k, std::uint64_t seed) {
    if (n < 3) throw InvalidArgument("gen_k_regular: n must be >= 3");
    if (k < 1 || k >= n) throw InvalidArgument("gen_k_regular: need 1 <= k < n");
    if ((static_cast<long long>(n) * k) % 2 != 0) throw InvalidArgument("gen_k_regular: n*k must be even");

    std::mt19937_64 rng(seed);
    const std::size_t m = static_cast<std::size_t>(n) * static_cast<std::size_t>(k) / 2;
    EdgeBag bag(m);

    std::vector<int> stubs;
    stubs.reserve(2 * m);
    for (int v = 0; v < n; ++v) stubs.insert(stubs.end(), static_cast<std::size_t>(k), v);

    // Pairing with local rejection: draw two random open stubs, keep the pair
    // if it forms a new simple edge.
    int failures = 0;
    while (stubs.size() >= 2 && failures < 64) {
        std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        if (i == j) continue;
        const int u = stubs[i];
        const int v = stubs[j];
        if (u == v || bag.has(u, v)) {
            ++failures;
            continue;
        }
        failures = 0;
        bag.add(u, v);
        const std::size_t hi = std::max(i, j);
        const std::size_t lo = std::min(i, j);
        stubs[hi] = stubs.back();
        stubs.pop_back();
        stubs[lo] = stubs.back();
        stubs.pop_back();
    }

    // Leftover stubs: join valid pairs directly, split an edge otherwise.
    std::shuffle(stubs.begin(), stubs.end(), rng);
    while (!stubs.empty()) {
        const int u = stubs.back();
        stubs.pop_back();
        auto partner = std::find_if(stubs.begin(), stubs.end(),
                                    [&](int v) { return v != u && !bag.has(u, v); });
        if (partner != stubs.end()) {
            bag.add(u, *partner);
            stubs.erase(partner);
            continue;
        }
        const int v = stubs.back();
        stubs.pop_back();
        repair_pair(bag, u, v, rng);
    }

    // Degree-preserving double-edge swaps: (a,b),(c,d) -> (a,d),(c,b).
    const std::size_t target = 10 * m;
    const std::size_t max_attempts = 100 * m;
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::size_t done = 0;
    for (std::size_t attempt = 0; attempt < max_attempts && done < target && m >= 2; ++attempt) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j) continue;
        auto [a, b] = bag[i];
        auto [c, d] = bag[j];
        if (rng() & 1) std::swap(c, d);
        if (a == d || c == b || a == c || b == d) continue;
        if (bag.has(a, d) || bag.has(c, b)) continue;
        bag.replace_at(i, a, d);
        bag.replace_at(j, c, b);
        ++done;
    }

    GraphModel model{GraphKind::KRegular, k, 0.0};
    return Graph(n, bag.release(), model, seed);
}

Graph gen_erdos_renyi(int n, double p, std::uint64_t seed) {
    if (n < 2) throw InvalidArgument("gen_erdos_renyi: n must be >= 2");
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("gen_erdos_renyi: p must lie in (0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (coin(rng) < p) edges.emplace_back(u, v);
        }
    }
    return Graph(n, std::move(edges), GraphModel{GraphKind::ErdosRenyi, 0, p}, seed);
}

EdgeCountProbe edges_between(const Graph& g, std::span<const int> a, std::span<const int> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("edges_between: subsets must be nonempty");
    std::vector<signed char> side(static_cast<std::size_t>(g.n()), 0);
    for (int v : a) {
        if (v < 0 || v >= g.n()) throw InvalidArgument("edges_between: vertex out of range");
        side[static_cast<std::size_t>(v)] = 1;
    }
    for (int v : b) {
        if (v < 0 || v >= g.n()) throw InvalidArgument("edges_between: vertex out of range");
        if (side[static_cast<std::size_t>(v)] == 1) throw InvalidArgument("edges_between: subsets must be disjoint");
        side[static_cast<std::size_t>(v)] = 2;
    }
    EdgeCountProbe probe;
    for (const auto& [u, v] : g.edges()) {
        const int su = side[static_cast<std::size_t>(u)];
        const int sv = side[static_cast<std::size_t>(v)];
        if ((su == 1 && sv == 2) || (su == 2 && sv == 1)) ++probe.observed;
    }
    const double density = g.model().kind == GraphKind::KRegular
                               ? static_cast<double>(g.model().k) / g.n()
                               : g.model().p;
    probe.expected = density * static_cast<double>(a.size()) * static_cast<double>(b.size());
    if (probe.expected <= 0.0) throw InvalidArgument("edges_between: expected count is zero");
    probe.relative_deviation =
        std::abs(static_cast<double>(probe.observed) - probe.expected) / probe.expected;
    return probe;
}

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw InvalidArgument("rational with zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

namespace {

struct Enumerator {
    int n;
    std::vector<int> deficit;
    std::vector<std::uint32_t> adj;
    std::uint64_t total = 0;
    std::uint64_t with01 = 0;
    std::uint64_t with01_02 = 0;
    std::uint64_t with01_23 = 0;

    bool edge(int u, int v) const { return (adj[static_cast<std::size_t>(u)] >> v) & 1u; }

    void record() {
        ++total;
        if (!edge(0, 1)) return;
        ++with01;
        if (edge(0, 2)) ++with01_02;
        if (edge(2, 3)) ++with01_23;
    }

    void connect(int u, int v, bool on) {
        const std::uint32_t bu = 1u << u;
        const std::uint32_t bv = 1u << v;
        if (on) {
            adj[static_cast<std::size_t>(u)] |= bv;
            adj[static_cast<std::size_t>(v)] |= bu;
        } else {
            adj[static_cast<std::size_t>(u)] &= ~bv;
            adj[static_cast<std::size_t>(v)] &= ~bu;
        }
        const int delta = on ? -1 : 1;
        deficit[static_cast<std::size_t>(u)] += delta;
        deficit[static_cast<std::size_t>(v)] += delta;
    }

    // Vertices below `v` are saturated; v picks the rest of its neighbors
    // among higher vertices, so each labeled graph is produced once.
    void extend(int v) {
        while (v < n && deficit[static_cast<std::size_t>(v)] == 0) ++v;
        if (v == n) {
            record();
            return;
        }
        std::vector<int> candidates;
        for (int u = v + 1; u < n; ++u) {
            if (deficit[static_cast<std::size_t>(u)] > 0 && !edge(v, u)) candidates.push_back(u);
        }
        choose(v, candidates, 0, deficit[static_cast<std::size_t>(v)]);
    }

    void choose(int v, const std::vector<int>& candidates, std::size_t from, int need) {
        if (need == 0) {
            extend(v + 1);
            return;
        }
        if (candidates.size() - from < static_cast<std::size_t>(need)) return;
        for (std::size_t i = from; i < candidates.size(); ++i) {
            if (candidates.size() - i < static_cast<std::size_t>(need)) break;
            connect(v, candidates[i], true);
            choose(v, candidates, i + 1, need - 1);
            connect(v, candidates[i], false);
        }
    }
};

void check_moment_args(int n, int k) {
    if (n < 4) throw InvalidArgument("pair moments need n >= 4 (four distinct vertices)");
    if (k < 1 || k >= n) throw InvalidArgument("enumerate_pair_moments: need 1 <= k < n");
    if ((n * k) % 2 != 0) throw InvalidArgument("enumerate_pair_moments: n*k must be even");
}

}  // namespace

PairMomentReport enumerate_pair_moments(int n, int k) {
    if (n > 10) throw InvalidArgument("enumerate_pair_moments: n > 10 is beyond exhaustive enumeration");
    check_moment_args(n, k);
    Enumerator e{n, std::vector<int>(static_cast<std::size_t>(n), k),
                 std::vector<std::uint32_t>(static_cast<std::size_t>(n), 0u)};
    e.extend(0);
    PairMomentReport report;
    report.graph_count = e.total;
    report.single_edge_prob = Rational::make(e.with01, e.total);
    report.shared_vertex_moment = Rational::make(e.with01_02, e.total);
    report.disjoint_moment = Rational::make(e.with01_23, e.total);
    return report;
}

Rational shared_vertex_moment_formula(int n, int k) {
    check_moment_args(n, k);
    const auto uk = static_cast<std::uint64_t>(k);
    const auto un = static_cast<std::uint64_t>(n);
    return Rational::make(uk * (uk - 1), (un - 1) * (un - 2));
}

Rational disjoint_moment_formula(int n, int k) {
    check_moment_args(n, k);
    // (k/(n-1)) * (nk/2 - 2k + 1) / C(n-2, 2)
    const auto uk = static_cast<std::uint64_t>(k);
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t inner_edges = un * uk / 2 - 2 * uk + 1;
    const std::uint64_t pairs = (un - 2) * (un - 3) / 2;
    return Rational::make(uk * inner_edges, (un - 1) * pairs);
}

}  // namespace forcelab
