// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "forcelab/affinity.hpp"
#include "forcelab/forces.hpp"
#include "forcelab/graph_models.hpp"
#include "forcelab/lab.hpp"
#include "forcelab/meanfield.hpp"
#include "forcelab/tsne.hpp"
#include "oracles.hpp"

using namespace forcelab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Verdict gradient_check() {
    std::mt19937_64 rng(2024);
    const std::size_t sizes[] = {5, 8, 12};
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n = sizes[inst % 3];
        const AffinityMatrix p = oracle::random_p(n, rng);
        Embedding e = oracle::random_embedding(n, 1.0, rng);
        const std::vector<double> g = gradient(p, e);
        const double h = 1e-5;
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            const double saved = e.coords()[k];
            e.coords()[k] = saved + h;
            const double up = kl_energy(p, e);
            e.coords()[k] = saved - h;
            const double down = kl_energy(p, e);
            e.coords()[k] = saved;
            const double fd = (up - down) / (2 * h);
            num = std::max(num, std::abs(g[k] - fd));
            den = std::max(den, std::abs(fd));
        }
        worst = std::max(worst, num / den);
    }
    return {worst < 1e-4, "max relative error " + fmt("%.3g", worst)};
}

Verdict pair_moments() {
    bool ok = true;
    std::string detail;
    const PairMomentReport r = enumerate_pair_moments(6, 2);
    ok = ok && r.graph_count == 70 && r.shared_vertex_moment == Rational{1, 10} && r.disjoint_moment == Rational{1, 5};
    detail = "(6,2): " + std::to_string(r.graph_count) + " graphs";
    for (auto [n, k] : {std::pair{4, 2}, {5, 2}, {6, 2}, {6, 3}}) {
        const PairMomentReport q = enumerate_pair_moments(n, k);
        const bool match = q.single_edge_prob == Rational::make(k, n - 1) &&
                           q.shared_vertex_moment == shared_vertex_moment_formula(n, k) &&
                           q.disjoint_moment == disjoint_moment_formula(n, k);
        if (!match) detail += "; mismatch at (" + std::to_string(n) + "," + std::to_string(k) + ")";
        ok = ok && match;
    }
    return {ok, detail};
}

// Shared by criteria 3 and 4: sweep-style trials at (1000, 0.1) and (2000, 0.1).
const SweepResult& ring_sweep() {
    static const SweepResult result = [] {
        SweepConfig cfg;
        cfg.n_values = {1000, 2000};
        cfg.p_values = {0.1};
        cfg.trials = 5;
        return cmd_sweep(cfg);
    }();
    return result;
}

Verdict sigma_ansatz() {
    bool ok = true;
    std::string detail = "sigma:";
    double min_sep = std::numeric_limits<double>::infinity();
    for (const SweepRow& row : ring_sweep().rows) {
        if (row.n != 2000) continue;
        if (!row.stats || !row.stats->sigma) {
            ok = false;
            detail += " error(" + row.error + ")";
            continue;
        }
        const double sigma = *row.stats->sigma;
        const double sep = row.stats->expectation / std::sqrt(row.stats->variance);
        min_sep = std::min(min_sep, sep);
        ok = ok && std::abs(sigma) < 10.0 && sep > 1e3;
        detail += " " + fmt("%.2f", sigma);
    }
    detail += "; min expectation/sqrt(variance) " + fmt("%.3g", min_sep);
    return {ok, detail};
}

Verdict ring_formation() {
    bool ok = true;
    double radius[2] = {0, 0};
    int counts[2] = {0, 0};
    double worst_annularity = 1.0, worst_cv = 0.0;
    for (const SweepRow& row : ring_sweep().rows) {
        if (!row.ring) {
            ok = false;
            continue;
        }
        const int slot = row.n == 2000 ? 1 : 0;
        radius[slot] += row.ring->mean_radius;
        ++counts[slot];
        if (row.n == 2000) {
            worst_annularity = std::min(worst_annularity, row.ring->annularity);
            worst_cv = std::max(worst_cv, row.ring->radial_cv.value_or(INFINITY));
        }
    }
    if (counts[0] == 0 || counts[1] == 0) return {false, "no completed trials"};
    const double r1000 = radius[0] / counts[0], r2000 = radius[1] / counts[1];
    ok = ok && worst_annularity >= 0.9 && worst_cv < 0.35 && r2000 < r1000;
    return {ok, "annularity >= " + fmt("%.3f", worst_annularity) + ", radial_cv <= " + fmt("%.3f", worst_cv) +
                    ", mean radius n=1000 " + fmt("%.4f", r1000) + " vs n=2000 " + fmt("%.4f", r2000)};
}

Verdict radial_minimizer_check() {
    auto grid_for = [](double c) {
        std::vector<double> g(3001);
        const double top = 3.0 * std::max(1.0, std::sqrt(std::abs(c)));
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = top * static_cast<double>(i) / (g.size() - 1);
        return g;
    };
    auto mass_near = [](const NumericRadialResult& r, double target, double tol) {
        double m = 0.0;
        for (std::size_t i = 0; i < r.measure.radii.size(); ++i)
            if (std::abs(r.measure.radii[i] - target) <= tol) m += r.measure.weights[i];
        return m;
    };
    const double ring = std::pow(3.0 / 8.0, 0.25);
    const double m_neg = mass_near(numeric_radial_minimize(-1.0, grid_for(-1.0)), ring, 1e-3);
    const double m_pos = mass_near(numeric_radial_minimize(1.0, grid_for(1.0)), 0.0, 0.0);
    double worst_b = 0.0;
    for (double c : {-0.5, -1.0, -2.0}) {
        const double b = numeric_radial_minimize(c, grid_for(c)).moments.b;
        worst_b = std::max(worst_b, std::abs(b - 3 * c * c / 8) / (3 * c * c / 8));
    }
    return {m_neg >= 0.99 && m_pos >= 0.99 && worst_b <= 0.01,
            "mass near ring " + fmt("%.4f", m_neg) + ", mass at 0 for c=1 " + fmt("%.4f", m_pos) +
                ", worst b* relative error " + fmt("%.2g", worst_b)};
}

Verdict shrinkage() {
    const auto two = [](double r) { return DiscreteMeasure::uniform({{0, 0}, {r, 0}}); };
    const double closed = std::log(0.5 + 0.5 / 1.01) + 0.5 * std::log(1.01);
    const double i01 = shrinkage_I(two(0.1));
    const double ratio = shrinkage_I(two(0.05)) / (std::pow(0.05, 4) / 8);
    std::mt19937_64 rng(77);
    double min_i = INFINITY;
    for (int k = 0; k < 100; ++k) {
        const DiscreteMeasure mu = oracle::random_measure(3 + k % 20, 0.05 + 0.05 * (k % 40), rng);
        min_i = std::min(min_i, shrinkage_I(mu));
    }
    const bool ok = std::abs(i01 - 1.245e-5) <= 0.01 * 1.245e-5 && std::abs(i01 - closed) <= 0.01 * std::abs(closed) &&
                    ratio >= 0.95 && ratio <= 1.05 && min_i >= -1e-15;
    return {ok, "I(0.1) " + fmt("%.5g", i01) + ", ratio at 0.05 " + fmt("%.4f", ratio) + ", min I " +
                    fmt("%.3g", min_i)};
}

Verdict scaling_symmetry() {
    std::mt19937_64 rng(31);
    const MeanFieldParams params{-0.7, 0.4, 0.3};
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const DiscreteMeasure mu = oracle::random_measure(6 + k, 0.8, rng);
        for (double lambda : {0.3, 0.7, 2.5, 5.0}) {
            const double lhs = functional_J(mu.scaled(lambda), params) / std::pow(lambda, 4);
            const double rhs = functional_J(mu, {params.sigma, params.delta / (lambda * lambda), params.p});
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
    }
    return {worst <= 1e-10, "max relative error " + fmt("%.3g", worst)};
}

Verdict taylor() {
    auto ratio = [](const std::function<DiscreteMeasure(double)>& family) {
        return taylor_check(family(0.1)).residual / taylor_check(family(0.05)).residual;
    };
    const double two = ratio([](double d) { return DiscreteMeasure::uniform({{0, 0}, {d, 0}}); });
    const double ring = ratio([](double d) { return discretize_radial(RadialMeasure{{d / 2}, {1.0}}, 64); });
    return {two >= 16 && ring >= 16, "ratios two-Dirac " + fmt("%.2f", two) + ", thin ring " + fmt("%.2f", ring)};
}

PointCloud blobs(const std::vector<std::vector<double>>& centers, std::size_t per, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    PointCloud pc{centers.size() * per, d, {}};
    for (const auto& c : centers)
        for (std::size_t i = 0; i < per; ++i)
            for (std::size_t k = 0; k < d; ++k) pc.values.push_back(c[k] + g(rng));
    return pc;
}

double max_norm(const ForceField& f, Vec2 (ForceField::*at)(std::size_t) const) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.n(); ++i) m = std::max(m, norm((f.*at)(i)));
    return m;
}

Verdict equilibrium() {
    // Two well separated blobs in 10 dimensions, 200 points each.
    std::vector<double> a(10, 0.0), b(10, 0.0);
    b[0] = 12.0;
    const PointCloud two = blobs({a, b}, 200, 10, 5);
    const AffinityMatrix p = perplexity_affinities(two, 30.0).affinities;

    OptimizerConfig cfg;
    cfg.seed = 5;
    Embedding e = run(p, cfg).final;
    // Polish with plain gradient descent until the net force is tiny.
    OptimizerConfig polish;
    polish.exaggeration_iterations = 0;
    polish.total_iterations = 2000;
    polish.momentum_early = polish.momentum_late = 0.8;
    polish.snapshot_stride = 2000;
    double ratio = INFINITY, attract = 0.0;
    for (int round = 0; round < 20 && !(ratio < 1e-3); ++round) {
        e = run(p, polish, e).final;
        const ForceField f = decompose_forces(p, e);
        attract = max_norm(f, &ForceField::attract_at);
        ratio = max_norm(f, &ForceField::net_at) / attract;
    }

    // Single blob: boundary points feel larger attraction than interior ones.
    const PointCloud one = blobs({std::vector<double>(3, 0.0)}, 300, 3, 9);
    const AffinityMatrix q = perplexity_affinities(one, 30.0).affinities;
    OptimizerConfig single;
    single.learning_rate = 20.0;
    const Embedding s = run(q, single).final;
    const ForceField f = decompose_forces(q, s);
    Vec2 centroid{};
    for (std::size_t i = 0; i < s.n(); ++i) centroid = centroid + (1.0 / s.n()) * s.point(i);
    std::vector<std::size_t> order(s.n());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto x, auto y) { return norm(s.point(x) - centroid) < norm(s.point(y) - centroid); });
    const std::size_t dec = s.n() / 10;
    double inner = 0.0, outer = 0.0;
    for (std::size_t k = 0; k < dec; ++k) {
        inner += norm(f.attract_at(order[k])) / dec;
        outer += norm(f.attract_at(order[s.n() - 1 - k])) / dec;
    }
    return {ratio < 1e-3 && attract > 0.0 && outer > inner,
            "max|net|/max|attract| " + fmt("%.3g", ratio) + ", outer/inner decile attraction " +
                fmt("%.3g", outer / inner)};
}

Verdict edge_counts() {
    const Graph g = gen_k_regular(2000, 200, 11);
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> size(200, 900);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        std::vector<int> perm(2000);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const int sa = size(rng), sb = size(rng);
        const std::vector<int> a(perm.begin(), perm.begin() + sa), b(perm.begin() + sa, perm.begin() + sa + sb);
        worst = std::max(worst, edges_between(g, a, b).relative_deviation);
    }
    return {worst < 0.1, "max relative deviation " + fmt("%.4f", worst)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"gradient matches finite differences", gradient_check},
        {"pair-moment enumeration equals closed forms", pair_moments},
        {"sigma ansatz at n=2000, k=200", sigma_ansatz},
        {"ring formation and shrinkage", ring_formation},
        {"closed-form radial minimizer", radial_minimizer_check},
        {"shrinkage functional", shrinkage},
        {"scaling symmetry", scaling_symmetry},
        {"Taylor regime", taylor},
        {"force equilibrium decomposition", equilibrium},
        {"edge-count regularization", edge_counts},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& ex) {
            v = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
