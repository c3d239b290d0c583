#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "forcelab/graph_models.hpp"
#include "forcelab/meanfield.hpp"
#include "oracles.hpp"

using namespace forcelab;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

DiscreteMeasure two_diracs(double r) { return DiscreteMeasure::uniform({{0, 0}, {r, 0}}); }

DiscreteMeasure circle(double radius, std::size_t m) {
    std::vector<Vec2> pts;
    for (std::size_t k = 0; k < m; ++k) {
        const double t = 2 * M_PI * k / m;
        pts.push_back({radius * std::cos(t), radius * std::sin(t)});
    }
    return DiscreteMeasure::uniform(pts);
}

// Shrinkage closed form for two half-masses at distance r.
double two_dirac_I(double r) { return std::log(0.5 + 0.5 / (1 + r * r)) + 0.5 * std::log1p(r * r); }

// Smallest closed square side capturing >= t of the mass, over all
// placements: an optimal square can be slid until its left and bottom edges
// touch support points.
double brute_length_scale(const DiscreteMeasure& mu, double t) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& a : mu.support) {
        for (const Vec2& b : mu.support) {
            const Vec2 corner{a.x, b.y};
            std::vector<std::pair<double, double>> reach;
            for (std::size_t i = 0; i < mu.support.size(); ++i) {
                const Vec2 p = mu.support[i];
                if (p.x < corner.x || p.y < corner.y) continue;
                reach.emplace_back(std::max(p.x - corner.x, p.y - corner.y), mu.weights[i]);
            }
            std::sort(reach.begin(), reach.end());
            double mass = 0.0;
            for (const auto& [s, w] : reach) {
                mass += w;
                if (mass >= t - 1e-12) {
                    best = std::min(best, s);
                    break;
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("measures: validation and helpers") {
    CHECK_THROWS_AS((DiscreteMeasure{{{0, 0}}, {0.5}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((DiscreteMeasure{{{0, 0}, {1, 1}}, {1.5, -0.5}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((DiscreteMeasure{{}, {}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((RadialMeasure{{-1.0}, {1.0}}.validate()), InvalidArgument);
    CHECK(two_diracs(0.3).diameter() == doctest::Approx(0.3));
    CHECK(two_diracs(0.3).scaled(2.0).diameter() == doctest::Approx(0.6));
}

TEST_CASE("pair integrals agree with a direct double sum") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 10; ++rep) {
        const DiscreteMeasure mu = oracle::random_measure(17, 0.7, rng);
        const PairIntegrals I = pair_integrals(mu);
        CHECK(rel(I.kernel, oracle::pair_integral(mu, [](double d2) { return 1 / (1 + d2); })) < 1e-12);
        CHECK(rel(I.log1p, oracle::pair_integral(mu, [](double d2) { return std::log(1 + d2); })) < 1e-12);
        CHECK(rel(I.log1p_sq, oracle::pair_integral(mu, [](double d2) { return std::pow(std::log(1 + d2), 2); })) <
              1e-12);
        CHECK(rel(I.second, oracle::pair_integral(mu, [](double d2) { return d2; })) < 1e-12);
        CHECK(rel(I.fourth, oracle::pair_integral(mu, [](double d2) { return d2 * d2; })) < 1e-12);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("energy stats: coincident embedding") {
    const Graph g = gen_k_regular(20, 4, 1);
    const EnergyStats s = energy_stats(g, Embedding(20));
    CHECK(s.actual == doctest::Approx(std::log(20.0 * 19.0)));
    CHECK(s.expectation == doctest::Approx(std::log(20.0 * 19.0)));
    CHECK(s.variance == 0.0);
    REQUIRE(s.sigma.has_value());
    CHECK(*s.sigma == 0.0);
}

TEST_CASE("energy stats: naive oracle on a 4-cycle and on G(n,p)") {
    auto naive = [](const Graph& g, const Embedding& e, double p) {
        const std::size_t n = e.n();
        double z = 0, all = 0, all_sq = 0, edges = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double l = std::log(1 + oracle::sqdist(e, i, j));
                z += 1 / (1 + oracle::sqdist(e, i, j));
                all += l;
                all_sq += l * l;
            }
        for (const auto& [u, v] : g.edges()) edges += std::log(1 + oracle::sqdist(e, u, v));
        const double m = static_cast<double>(g.edge_count());
        return std::array<double, 3>{std::log(z) + edges / m, std::log(z) + p / (2 * m) * all,
                                     p * (1 - p) * all_sq / (4 * m * m)};
    };

    const Graph cycle(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, GraphModel{GraphKind::KRegular, 2, 0}, 0);
    const Embedding square(std::vector<double>{0, 0, 1, 0, 1, 1, 0, 1});
    const EnergyStats s = energy_stats(cycle, square);
    const auto o = naive(cycle, square, 2.0 / 3.0);
    CHECK(std::abs(s.actual - o[0]) < 1e-12);
    CHECK(std::abs(s.expectation - o[1]) < 1e-12);
    CHECK(std::abs(s.variance - o[2]) < 1e-12);
    CHECK(*s.sigma == doctest::Approx((s.actual - s.expectation) / std::sqrt(s.variance)));

    std::mt19937_64 rng(2);
    const Graph er = gen_erdos_renyi(40, 0.3, 3);
    const Embedding e = oracle::random_embedding(40, 1.0, rng);
    const EnergyStats t = energy_stats(er, e);
    const auto q = naive(er, e, 0.3);
    CHECK(rel(t.actual, q[0]) < 1e-12);
    CHECK(rel(t.expectation, q[1]) < 1e-12);
    CHECK(rel(t.variance, q[2]) < 1e-12);
    CHECK(t.model == GraphKind::ErdosRenyi);
}

TEST_CASE("energy stats: size mismatch") {
    CHECK_THROWS_AS(energy_stats(gen_k_regular(10, 2, 0), Embedding(9)), InvalidArgument);
}

// ---------------------------------------------------------------------------

TEST_CASE("E2: point mass, two Diracs, monotone in r") {
    const double n = 50, p = 0.2, pairs = n * (n - 1) / 2;
    CHECK(expectation_E2(DiscreteMeasure::point_mass(), n, p) == doctest::Approx(2 * p * pairs * std::log(n * n)));
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        const double inner = 0.5 + 0.5 / (1 + r * r);
        const double v = expectation_E2(two_diracs(r), n, p);
        CHECK(v == doctest::Approx(2 * p * pairs * (std::log(n * n) + std::log(inner))).epsilon(1e-13));
        CHECK(v < prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("E: point mass, spread measure, first-order correction") {
    CHECK(expectation_E(DiscreteMeasure::point_mass(), 10, 0.3) ==
          doctest::Approx(2 * 0.3 * 45 * std::log(90.0)).epsilon(1e-13));
    // Kernel integral below 1/n makes the log argument negative.
    std::vector<Vec2> far;
    for (int k = 0; k < 20; ++k) far.push_back({1e6 * k, 0.0});
    CHECK_THROWS_AS(expectation_E(DiscreteMeasure::uniform(far), 10, 0.3), InvalidArgument);

    std::mt19937_64 rng(3);
    const double n = 1e4, p = 0.1;
    DiscreteMeasure mu = oracle::random_measure(30, 1.0, rng);
    mu = mu.scaled(0.01 / mu.diameter());
    const double r = mu.diameter();
    const double m2 = pair_integrals(mu).second;
    const double diff = expectation_E(mu, n, p) - expectation_E2(mu, n, p);
    const double first_order = -p * (n - 1) * (1 + m2);
    // The remainder holds an O(n r^4) part and the O(1) second-order term
    // of log(1 - 1/(n K)), which is -p/2 here.
    CHECK(std::abs(diff - first_order) <= p * (10 * n * std::pow(r, 4) + 1));
    CHECK(std::abs(diff - first_order) < 1e-3 * std::abs(first_order));
}

TEST_CASE("second-term variance") {
    const double n = 30, p = 0.25;
    for (auto model : {VarianceModel::ErdosRenyi, VarianceModel::KRegular})
        CHECK(variance_second_term(DiscreteMeasure::point_mass(), n, p, model).value == 0.0);
    const double l2 = std::log(2.0);
    CHECK(variance_second_term(two_diracs(1.0), n, p, VarianceModel::ErdosRenyi).value ==
          doctest::Approx(p * (1 - p) * n * n * 0.5 * l2 * l2).epsilon(1e-13));

    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const DiscreteMeasure mu = oracle::random_measure(8, 0.5, rng);
        const VarianceValue er = variance_second_term(mu, n, p, VarianceModel::ErdosRenyi);
        const VarianceValue kr = variance_second_term(mu, n, p, VarianceModel::KRegular);
        CHECK(kr.value <= er.value);
        const double L = oracle::pair_integral(mu, [](double d2) { return std::log1p(d2); });
        if (!kr.clamped) CHECK(rel(kr.value, er.value - 4 * p * (1 - p) * n * L * L) < 1e-10);
    }

    // Equilateral triangle at n = 2: the correction overshoots and is clamped.
    const DiscreteMeasure tri = DiscreteMeasure::uniform({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}});
    const VarianceValue clamped = variance_second_term(tri, 2, p, VarianceModel::KRegular);
    CHECK(clamped.clamped);
    CHECK(clamped.value == 0.0);
}

TEST_CASE("first-term variance") {
    CHECK(variance_first_term_er(DiscreteMeasure::point_mass(), 10, 0.5) ==
          doctest::Approx(2 * 0.25 * 45 * std::pow(std::log(90.0), 2)).epsilon(1e-13));
    std::mt19937_64 rng(5);
    const DiscreteMeasure mu = oracle::random_measure(5, 0.4, rng);
    const double n = 40, p = 0.3;
    const double K = oracle::pair_integral(mu, [](double d2) { return 1 / (1 + d2); });
    const double expect = 2 * p * (1 - p) * (n * (n - 1) / 2) * std::pow(std::log(-n + n * n * K), 2);
    CHECK(rel(variance_first_term_er(mu, n, p), expect) < 1e-12);
    CHECK(variance_first_term_er(mu, n, 1e-9) < variance_first_term_er(mu, n, 0.3));
    CHECK(variance_first_term_er(mu, n, 1 - 1e-9) < variance_first_term_er(mu, n, 0.5));
}

TEST_CASE("variance lower bound for correlated edges") {
    const std::vector<double> zero(100, 0.0);
    const Lemma2Bound z = lemma2_variance_bound(zero, 10, 4);
    CHECK(z.lower_bound == 0.0);
    CHECK(z.independent_value == 0.0);

    std::vector<double> one(100, 0.0);
    one[0 * 10 + 1] = one[1 * 10 + 0] = 1.0;
    const Lemma2Bound b = lemma2_variance_bound(one, 10, 4);
    CHECK(b.independent_value == doctest::Approx(0.48));
    CHECK(b.lower_bound == doctest::Approx(0.48 - 4 * 16.0 / 1000.0 * 4.0));

    // Independent part equals the Erdos-Renyi second-term variance at p = k/n.
    std::mt19937_64 rng(6);
    const std::size_t n = 25;
    const double k = 5;
    const Embedding e = oracle::random_embedding(n, 0.8, rng);
    std::vector<double> x(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) x[i * n + j] = std::log1p(oracle::sqdist(e, i, j));
    const double er = variance_second_term(DiscreteMeasure::empirical(e), n, k / n, VarianceModel::ErdosRenyi).value;
    CHECK(rel(lemma2_variance_bound(x, n, k).independent_value, er) < 1e-12);

    std::vector<double> diag(100, 0.0);
    diag[0] = 1.0;
    CHECK_THROWS_AS(lemma2_variance_bound(diag, 10, 4), InvalidArgument);
}

// ---------------------------------------------------------------------------

TEST_CASE("shrinkage functional") {
    CHECK(shrinkage_I(DiscreteMeasure::point_mass({3, 4})) == doctest::Approx(0.0));
    const double closed = two_dirac_I(0.1);
    CHECK(std::abs(shrinkage_I(two_diracs(0.1)) - closed) < 1e-12);
    CHECK(std::abs(closed - 1.245e-5) < 0.01 * 1.245e-5);
    const double r = 0.05;
    const double ratio = shrinkage_I(two_diracs(r)) / (std::pow(r, 4) / 8);
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> scale(0.01, 3.0);
    std::uniform_int_distribution<int> size(2, 30);
    for (int rep = 0; rep < 100; ++rep) {
        const DiscreteMeasure mu = oracle::random_measure(size(rng), scale(rng), rng);
        CHECK(shrinkage_I(mu) >= -1e-12);
    }
}

TEST_CASE("length scale") {
    CHECK(length_scale_r(DiscreteMeasure::point_mass()) == 0.0);

    std::vector<Vec2> grid;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) grid.push_back({i / 9.0, j / 9.0});
    CHECK(length_scale_r(DiscreteMeasure::uniform(grid)) == 0.0);

    CHECK(length_scale_r(two_diracs(1.0), 0.6) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(length_scale_r(two_diracs(1.0), 0.6) >= 1.0);
    CHECK_THROWS_AS(length_scale_r(two_diracs(1.0), 0.0), InvalidArgument);
    CHECK_THROWS_AS(length_scale_r(two_diracs(1.0), 1.5), InvalidArgument);

    // Upper bound on the exhaustive infimum, and equal to it when squares
    // anchored at support points are optimal (threshold above one atom).
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const DiscreteMeasure mu = DiscreteMeasure::uniform([&] {
            std::vector<Vec2> pts;
            std::normal_distribution<double> g;
            for (int k = 0; k < 12; ++k) pts.push_back({g(rng), g(rng)});
            return pts;
        }());
        for (double t : {0.2, 0.5, 1.0}) {
            const double brute = brute_length_scale(mu, t);
            const double r = length_scale_r(mu, t);
            CHECK(r >= brute - 1e-6 * mu.diameter());
        }
    }
}

TEST_CASE("shrinkage bound check") {
    const ShrinkageBound pm = shrinkage_bound_check(DiscreteMeasure::point_mass());
    CHECK(pm.lhs == doctest::Approx(0.0));
    CHECK(pm.rhs_shape == 0.0);

    // Each atom of a two-Dirac measure carries more than 1/200 of the mass,
    // so r = 0 and the bound holds trivially.
    for (double r : {0.05, 0.1, 0.2}) {
        const ShrinkageBound b = shrinkage_bound_check(two_diracs(r));
        CHECK(b.lhs > 0.0);
        CHECK(b.rhs_shape == 0.0);
    }

    // Two clusters of 200 atoms each: r(mu) > 0 and lhs / rhs stays bounded
    // below across scales.
    double min_ratio = std::numeric_limits<double>::infinity();
    for (double r : {0.05, 0.1, 0.2, 0.5}) {
        std::vector<Vec2> pts;
        for (int c = 0; c < 2; ++c)
            for (int k = 0; k < 200; ++k) {
                const double t = 2 * M_PI * k / 200.0;
                pts.push_back({c * r + 0.1 * r * std::cos(t), 0.1 * r * std::sin(t)});
            }
        const ShrinkageBound b = shrinkage_bound_check(DiscreteMeasure::uniform(pts));
        REQUIRE(b.rhs_shape > 0.0);
        min_ratio = std::min(min_ratio, b.lhs / b.rhs_shape);
    }
    CHECK(min_ratio > 1e-3);

    CHECK(shrinkage_bound_check(circle(0.1, 400)).lhs > 0.0);
}

// ---------------------------------------------------------------------------

TEST_CASE("functional J: point mass, deficit, scaling symmetry") {
    const MeanFieldParams params{-0.8, 0.3, 0.2};
    CHECK(functional_J(DiscreteMeasure::point_mass(), params) == 0.0);

    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 100; ++rep) {
        const FunctionalParts parts = functional_J_parts(oracle::random_measure(10, 1.0, rng), params);
        CHECK(parts.fourth - parts.second_squared >= -1e-12);
    }

    for (int rep = 0; rep < 20; ++rep) {
        const DiscreteMeasure mu = oracle::random_measure(12, 0.7, rng);
        for (double lambda : {0.3, 0.5, 2.0, 5.0}) {
            const double lhs = functional_J(mu.scaled(lambda), params) / std::pow(lambda, 4);
            const double rhs = functional_J(mu, {params.sigma, params.delta / (lambda * lambda), params.p});
            CHECK(rel(lhs, rhs) < 1e-10);
        }
    }
}

TEST_CASE("radial reduction") {
    const RadialMoments unit = radial_reduce({{1.0}, {1.0}});
    CHECK(unit.a == 1.0);
    CHECK(unit.b == 1.0);
    const PairIntegrals circ = pair_integrals(discretize_radial({{1.0}, {1.0}}, 720));
    CHECK(circ.fourth == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(circ.second == doctest::Approx(2.0).epsilon(1e-9));

    const RadialMoments origin = radial_reduce({{0.0}, {1.0}});
    CHECK(origin.a == 0.0);
    CHECK(origin.b == 0.0);

    // 2000-point rotationally symmetric discretization of a multi-radius nu.
    const RadialMeasure nu{{0.0, 0.3, 0.7, 1.1, 1.6}, {0.1, 0.2, 0.3, 0.25, 0.15}};
    const DiscreteMeasure mu = discretize_radial(nu, 500);
    CHECK(mu.support.size() == 2001);
    const RadialMoments m = radial_reduce(nu);
    const PairIntegrals I = pair_integrals(mu);
    CHECK(rel(I.second, 2 * m.a) < 1e-3);
    CHECK(rel(I.fourth, 2 * m.b + 4 * m.a * m.a) < 1e-3);
    CHECK(m.a <= std::sqrt(m.b) + 1e-12);
}

TEST_CASE("radial J") {
    CHECK(radial_J({0, 0}, -1.0) == 0.0);
    for (double c : {0.0, 0.5, 2.0})
        for (double b : {0.01, 1.0, 10.0}) CHECK(radial_J({std::sqrt(b), b}, c) > 0.0);
    const double b = 3.0 / 8.0;
    CHECK(radial_J({std::sqrt(b), b}, -1.0) == doctest::Approx(-0.375).epsilon(1e-14));
    CHECK_THROWS_AS(radial_J({2.0, 1.0}, -1.0), InvalidArgument);
}

TEST_CASE("radial minimizer: closed form and grid oracle") {
    const RadialOptimum o = radial_minimizer(-1.0);
    CHECK(o.b_star == 0.375);
    CHECK(o.radius == doctest::Approx(0.78254).epsilon(1e-5));
    CHECK(radial_minimizer(0.0).b_star == 0.0);
    CHECK(radial_minimizer(0.0).radius == 0.0);
    CHECK(radial_minimizer(1.0).radius == 0.0);

    // Single-radius measures on a 1e-4 grid.
    double best_r = 0.0, best = std::numeric_limits<double>::infinity();
    for (double r = 0.0; r <= 3.0; r += 1e-4) {
        const double f = radial_J({r * r, r * r * r * r}, -1.0);
        if (f < best) {
            best = f;
            best_r = r;
        }
    }
    CHECK(std::abs(best_r - o.radius) < 1e-3);

    const MeanFieldParams params{-1.0, 0.01, 0.1};
    const double c = params.c();
    CHECK(c < 0.0);
    CHECK(predicted_ring_radius(params) == doctest::Approx(std::pow(3.0 / 8.0, 0.25) * std::sqrt(std::abs(c))));
    CHECK(radius_prediction(1e4, 1e3) == doctest::Approx(std::pow(1e7, -0.25)));
}

TEST_CASE("numeric radial minimization") {
    auto grid_for = [](double c, std::size_t m) {
        std::vector<double> g(m);
        const double top = 3.0 * std::max(1.0, std::sqrt(std::abs(c)));
        for (std::size_t i = 0; i < m; ++i) g[i] = top * i / (m - 1);
        return g;
    };
    for (double c : {-0.5, -1.0, -2.0}) {
        CAPTURE(c);
        const auto grid = grid_for(c, 3001);
        const double step = grid[1] - grid[0];
        const NumericRadialResult r = numeric_radial_minimize(c, grid);
        const RadialOptimum o = radial_minimizer(c);
        double near = 0.0;
        for (std::size_t i = 0; i < r.measure.radii.size(); ++i)
            if (std::abs(r.measure.radii[i] - o.radius) <= step) near += r.measure.weights[i];
        CHECK(near >= 0.99);
        CHECK(rel(r.moments.b, o.b_star) < 0.01);
        CHECK(r.moments.a <= std::sqrt(r.moments.b) + 1e-12);
    }
    for (double c : {0.0, 1.0}) {
        const NumericRadialResult r = numeric_radial_minimize(c, grid_for(c, 301));
        double at_zero = 0.0;
        for (std::size_t i = 0; i < r.measure.radii.size(); ++i)
            if (r.measure.radii[i] == 0.0) at_zero += r.measure.weights[i];
        CHECK(at_zero >= 0.99);
        CHECK(r.value == 0.0);
    }
}

TEST_CASE("Taylor regime") {
    const TaylorReport pm = taylor_check(DiscreteMeasure::point_mass());
    CHECK(pm.exact[0] == 0.0);
    CHECK(pm.taylor[0] == 0.0);
    CHECK(pm.residual == 0.0);

    const double two = taylor_check(two_diracs(0.1)).residual / taylor_check(two_diracs(0.05)).residual;
    CHECK(two >= 16.0);
    const double ring = taylor_check(circle(0.05, 256)).residual / taylor_check(circle(0.025, 256)).residual;
    CHECK(ring >= 16.0);
    // Ring of diameter 0.05.
    CHECK(taylor_check(circle(0.025, 256)).residual < 1e-7);

    CHECK_FALSE(taylor_check(two_diracs(0.4)).outside_regime);
    CHECK(taylor_check(two_diracs(0.6)).outside_regime);
}

TEST_CASE("ring stats") {
    std::vector<Vec2> c;
    for (int k = 0; k < 100; ++k) c.push_back({std::cos(2 * M_PI * k / 100), std::sin(2 * M_PI * k / 100)});
    const RingStats unit = ring_stats(Embedding::from_points(c));
    CHECK(*unit.radial_cv < 1e-12);
    CHECK(unit.annularity == 1.0);
    CHECK(unit.mean_radius == doctest::Approx(1.0));

    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec2> disk;
    for (int k = 0; k < 100000; ++k) {
        const double r = std::sqrt(u(rng)), t = 2 * M_PI * u(rng);
        disk.push_back({r * std::cos(t), r * std::sin(t)});
    }
    CHECK(*ring_stats(Embedding::from_points(disk)).radial_cv == doctest::Approx(std::sqrt(2.0) / 4).epsilon(0.02));

    std::normal_distribution<double> g;
    std::vector<Vec2> blob;
    for (int k = 0; k < 10000; ++k) blob.push_back({g(rng), g(rng)});
    CHECK(ring_stats(Embedding::from_points(blob)).annularity < 0.9);

    CHECK_FALSE(ring_stats(Embedding(12)).radial_cv.has_value());
    CHECK_THROWS_AS(ring_stats(Embedding(9)), InvalidArgument);
}
