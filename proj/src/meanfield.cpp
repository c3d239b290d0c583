#include "forcelab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace forcelab {

// ---------------------------------------------------------------------------
// Measures

DiscreteMeasure DiscreteMeasure::point_mass(Vec2 at) { return {{at}, {1.0}}; }

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Vec2> points) {
    if (points.empty()) throw InvalidArgument("uniform measure needs at least one point");
    const double w = 1.0 / static_cast<double>(points.size());
    DiscreteMeasure mu;
    mu.weights.assign(points.size(), w);
    mu.support = std::move(points);
    return mu;
}

DiscreteMeasure DiscreteMeasure::empirical(const Embedding& e) {
    std::vector<Vec2> pts(e.n());
    for (std::size_t i = 0; i < e.n(); ++i) pts[i] = e.point(i);
    return uniform(std::move(pts));
}

void DiscreteMeasure::validate() const {
    if (support.empty() || support.size() != weights.size()) {
        throw InvalidArgument("measure: support and weights must be nonempty and of equal length");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidArgument("measure: weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("measure: weights must sum to 1");
}

DiscreteMeasure DiscreteMeasure::scaled(double lambda) const {
    DiscreteMeasure out = *this;
    for (Vec2& x : out.support) x = lambda * x;
    return out;
}

double DiscreteMeasure::diameter() const {
    double d2 = 0.0;
    for (std::size_t a = 0; a < support.size(); ++a) {
        for (std::size_t b = a + 1; b < support.size(); ++b) {
            const Vec2 d = support[a] - support[b];
            d2 = std::max(d2, d.x * d.x + d.y * d.y);
        }
    }
    return std::sqrt(d2);
}

void RadialMeasure::validate() const {
    if (radii.empty() || radii.size() != weights.size()) {
        throw InvalidArgument("radial measure: radii and weights must be nonempty and of equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] >= 0.0)) throw InvalidArgument("radial measure: radii must be >= 0");
        if (!(weights[i] >= 0.0)) throw InvalidArgument("radial measure: weights must be >= 0");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("radial measure: weights must sum to 1");
}

PairIntegrals pair_integrals(const DiscreteMeasure& mu) {
    mu.validate();
    const std::size_t m = mu.support.size();
    std::vector<PairIntegrals> rows(m);
    parallel_for(m, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) {
            PairIntegrals r;
            for (std::size_t b = 0; b < m; ++b) {
                const Vec2 d = mu.support[a] - mu.support[b];
                const double d2 = d.x * d.x + d.y * d.y;
                const double w = mu.weights[b];
                const double l = std::log1p(d2);
                r.kernel += w / (1.0 + d2);
                r.log1p += w * l;
                r.log1p_sq += w * l * l;
                r.second += w * d2;
                r.fourth += w * d2 * d2;
            }
            rows[a] = r;
        }
    });
    PairIntegrals out;
    for (std::size_t a = 0; a < m; ++a) {
        const double w = mu.weights[a];
        out.kernel += w * rows[a].kernel;
        out.log1p += w * rows[a].log1p;
        out.log1p_sq += w * rows[a].log1p_sq;
        out.second += w * rows[a].second;
        out.fourth += w * rows[a].fourth;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble statistics

EnergyStats energy_stats(const Graph& g, const Embedding& e) {
    const auto n = static_cast<std::size_t>(g.n());
    if (e.n() != n) throw InvalidArgument("energy_stats: graph and embedding differ in size");
    if (g.edge_count() == 0) throw InvalidArgument("energy_stats: graph has no edges");

    EnergyStats s;
    s.model = g.model().kind;
    s.n = g.n();
    if (s.model == GraphKind::KRegular) {
        s.k_or_p = g.model().k;
        // Marginal probability that a fixed pair is an edge.
        s.edge_probability = static_cast<double>(g.model().k) / static_cast<double>(n - 1);
    } else {
        s.k_or_p = g.model().p;
        s.edge_probability = g.model().p;
    }
    const double p = s.edge_probability;
    const double edges = static_cast<double>(g.edge_count());

    struct Row {
        double kernel = 0.0;
        double log1p = 0.0;
        double log1p_sq = 0.0;
    };
    std::vector<Row> rows(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vec2 yi = e.point(i);
            Row r;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const Vec2 d = yi - e.point(j);
                const double d2 = d.x * d.x + d.y * d.y;
                const double l = std::log1p(d2);
                r.kernel += 1.0 / (1.0 + d2);
                r.log1p += l;
                r.log1p_sq += l * l;
            }
            rows[i] = r;
        }
    });
    Row total;
    for (const Row& r : rows) {
        total.kernel += r.kernel;
        total.log1p += r.log1p;
        total.log1p_sq += r.log1p_sq;
    }

    double edge_log = 0.0;
    for (const auto& [u, v] : g.edges()) {
        const Vec2 d = e.point(static_cast<std::size_t>(u)) - e.point(static_cast<std::size_t>(v));
        edge_log += std::log1p(d.x * d.x + d.y * d.y);
    }

    const double log_z = std::log(total.kernel);
    s.actual = log_z + edge_log / edges;
    s.expectation = log_z + p / (2.0 * edges) * total.log1p;
    s.variance = p * (1.0 - p) * total.log1p_sq / (4.0 * edges * edges);
    if (s.variance > 0.0) {
        s.sigma = (s.actual - s.expectation) / std::sqrt(s.variance);
    } else if (s.actual == s.expectation) {
        s.sigma = 0.0;
    }
    return s;
}

namespace {

void check_np(double n, double p) {
    if (!(n >= 2.0)) throw InvalidArgument("n must be >= 2");
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("p must lie in (0, 1)");
}

double first_term_log(const PairIntegrals& I, double n) {
    const double arg = -n + n * n * I.kernel;
    if (!(arg > 0.0)) {
        throw InvalidArgument("log argument -n + n^2 iint(1+|x-y|^2)^-1 is not positive: measure too spread for n");
    }
    return std::log(arg);
}

}  // namespace

double expectation_E2(const DiscreteMeasure& mu, double n, double p) {
    check_np(n, p);
    const PairIntegrals I = pair_integrals(mu);
    const double pairs2 = n * (n - 1.0);  // 2 C(n,2)
    return p * pairs2 * (std::log(n * n) + std::log(I.kernel));
}

double expectation_E(const DiscreteMeasure& mu, double n, double p) {
    check_np(n, p);
    const PairIntegrals I = pair_integrals(mu);
    return p * n * (n - 1.0) * first_term_log(I, n);
}

VarianceValue variance_second_term(const DiscreteMeasure& mu, double n, double p, VarianceModel model,
                                   double c_kn) {
    check_np(n, p);
    const PairIntegrals I = pair_integrals(mu);
    VarianceValue v;
    v.value = p * (1.0 - p) * n * n * I.log1p_sq;
    if (model == VarianceModel::KRegular) {
        v.value -= c_kn * p * (1.0 - p) * n * I.log1p * I.log1p;
        if (v.value < 0.0) {
            v.value = 0.0;
            v.clamped = true;
        }
    }
    return v;
}

double variance_first_term_er(const DiscreteMeasure& mu, double n, double p) {
    check_np(n, p);
    const PairIntegrals I = pair_integrals(mu);
    const double l = first_term_log(I, n);
    return p * (1.0 - p) * n * (n - 1.0) * l * l;
}

Lemma2Bound lemma2_variance_bound(std::span<const double> x, std::size_t n, double k, double c_kn) {
    if (x.size() != n * n) throw InvalidArgument("lemma2_variance_bound: x must be n x n");
    if (!(k > 0.0 && k < static_cast<double>(n))) throw InvalidArgument("lemma2_variance_bound: need 0 < k < n");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i * n + i] != 0.0) throw InvalidArgument("lemma2_variance_bound: x must have a zero diagonal");
        for (std::size_t j = 0; j < n; ++j) {
            sum += x[i * n + j];
            sum_sq += x[i * n + j] * x[i * n + j];
        }
    }
    const double nn = static_cast<double>(n);
    const double q = k / nn;
    Lemma2Bound out;
    out.independent_value = q * (1.0 - q) * sum_sq;
    out.lower_bound = out.independent_value - c_kn * k * k / (nn * nn * nn) * sum * sum;
    return out;
}

// ---------------------------------------------------------------------------
// Shrinkage

double shrinkage_I(const DiscreteMeasure& mu) {
    const PairIntegrals I = pair_integrals(mu);
    return std::log(I.kernel) + I.log1p;
}

namespace {

// Mass of the closed square [x0, x0+s] x [y0, y0+s].
double square_mass(const DiscreteMeasure& mu, double x0, double y0, double s) {
    double mass = 0.0;
    for (std::size_t i = 0; i < mu.support.size(); ++i) {
        const Vec2 p = mu.support[i];
        if (p.x >= x0 && p.x <= x0 + s && p.y >= y0 && p.y <= y0 + s) mass += mu.weights[i];
    }
    return mass;
}

bool some_square_captures(const DiscreteMeasure& mu, double s, double threshold) {
    for (const Vec2& a : mu.support) {
        // Lower-left, centered and upper-right anchoring at the support point.
        if (square_mass(mu, a.x, a.y, s) >= threshold) return true;
        if (square_mass(mu, a.x - 0.5 * s, a.y - 0.5 * s, s) >= threshold) return true;
        if (square_mass(mu, a.x - s, a.y - s, s) >= threshold) return true;
    }
    return false;
}

}  // namespace

double length_scale_r(const DiscreteMeasure& mu, double mass_threshold) {
    mu.validate();
    if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) {
        throw InvalidArgument("length_scale_r: mass_threshold must lie in (0, 1]");
    }
    // Guard against the weights summing to 1 - eps when the threshold is 1.
    const double threshold = mass_threshold - 1e-12;
    if (some_square_captures(mu, 0.0, threshold)) return 0.0;

    double min_x = mu.support[0].x, max_x = min_x, min_y = mu.support[0].y, max_y = min_y;
    for (const Vec2& p : mu.support) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double extent = std::max(max_x - min_x, max_y - min_y);
    double lo = 0.0;
    double hi = 2.0 * extent;  // a centered square of this side covers everything
    const double tol = 1e-6 * std::max(mu.diameter(), std::numeric_limits<double>::min());
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (some_square_captures(mu, mid, threshold)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

ShrinkageBound shrinkage_bound_check(const DiscreteMeasure& mu) {
    ShrinkageBound out;
    out.lhs = shrinkage_I(mu);
    const double r = length_scale_r(mu);
    const double r2 = r * r;
    out.rhs_shape = r2 * r2 / std::pow(1.0 + r2, 4);
    return out;
}

// ---------------------------------------------------------------------------
// Limiting functional and radial reduction

double MeanFieldParams::c() const { return sigma * delta / std::sqrt(p); }

void MeanFieldParams::validate() const {
    if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in (0, 1]");
    if (!std::isfinite(sigma)) throw InvalidArgument("sigma must be finite");
}

FunctionalParts functional_J_parts(const DiscreteMeasure& mu, const MeanFieldParams& params) {
    params.validate();
    const PairIntegrals I = pair_integrals(mu);
    FunctionalParts parts;
    parts.fourth = I.fourth;
    parts.second_squared = I.second * I.second;
    parts.penalty = params.sigma / std::sqrt(params.p) * params.delta * std::sqrt(I.fourth);
    parts.total = parts.fourth - parts.second_squared + parts.penalty;
    return parts;
}

double functional_J(const DiscreteMeasure& mu, const MeanFieldParams& params) {
    return functional_J_parts(mu, params).total;
}

RadialMoments radial_reduce(const RadialMeasure& nu) {
    nu.validate();
    RadialMoments m;
    for (std::size_t i = 0; i < nu.radii.size(); ++i) {
        const double r2 = nu.radii[i] * nu.radii[i];
        m.a += nu.weights[i] * r2;
        m.b += nu.weights[i] * r2 * r2;
    }
    return m;
}

DiscreteMeasure discretize_radial(const RadialMeasure& nu, std::size_t angles) {
    nu.validate();
    if (angles < 3) throw InvalidArgument("discretize_radial: need at least 3 angles per ring");
    DiscreteMeasure mu;
    for (std::size_t i = 0; i < nu.radii.size(); ++i) {
        if (nu.weights[i] == 0.0) continue;
        if (nu.radii[i] == 0.0) {
            mu.support.push_back({0.0, 0.0});
            mu.weights.push_back(nu.weights[i]);
            continue;
        }
        for (std::size_t k = 0; k < angles; ++k) {
            const double t = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(angles);
            mu.support.push_back({nu.radii[i] * std::cos(t), nu.radii[i] * std::sin(t)});
            mu.weights.push_back(nu.weights[i] / static_cast<double>(angles));
        }
    }
    // Re-sum so the weights total 1 to within rounding of a single add.
    const double total = std::accumulate(mu.weights.begin(), mu.weights.end(), 0.0);
    for (double& w : mu.weights) w /= total;
    return mu;
}

double radial_J(const RadialMoments& m, double c) {
    if (!(m.a >= 0.0) || !(m.b >= 0.0)) throw InvalidArgument("radial_J: moments must be >= 0");
    if (m.a > std::sqrt(m.b) + 1e-12) throw InvalidArgument("radial_J: moments violate a <= sqrt(b)");
    return m.b + c * std::sqrt(0.5 * m.b + m.a * m.a);
}

RadialOptimum radial_minimizer(double c) {
    if (c >= 0.0) return {};
    RadialOptimum opt;
    opt.b_star = 3.0 * c * c / 8.0;
    opt.radius = std::pow(opt.b_star, 0.25);
    return opt;
}

double predicted_ring_radius(const MeanFieldParams& params) {
    params.validate();
    return radial_minimizer(params.c()).radius;
}

double radius_prediction(double n, double k) {
    if (!(n > 0.0 && k > 0.0)) throw InvalidArgument("radius_prediction: n and k must be > 0");
    return std::pow(k * n, -0.25);
}

NumericRadialResult numeric_radial_minimize(double c, std::span<const double> grid) {
    if (grid.empty()) throw InvalidArgument("numeric_radial_minimize: empty grid");
    const std::size_t m = grid.size();
    std::vector<double> a(m), b(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(grid[i] >= 0.0)) throw InvalidArgument("numeric_radial_minimize: radii must be >= 0");
        a[i] = grid[i] * grid[i];
        b[i] = a[i] * a[i];
    }
    auto f = [c](double aa, double bb) { return bb + c * std::sqrt(0.5 * bb + aa * aa); };

    std::size_t best_i = 0, best_j = 0;
    double best_t = 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        const double v = f(a[i], b[i]);
        if (v < best) {
            best = v;
            best_i = best_j = i;
            best_t = 1.0;
        }
    }

    // Two-atom mixtures t*delta_i + (1-t)*delta_j; interior minima are found
    // by golden section when a probe beats both endpoints.
    constexpr double kGolden = 0.6180339887498949;
    for (std::size_t i = 0; i < m; ++i) {
        const double fi = f(a[i], b[i]);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double fj = f(a[j], b[j]);
            auto along = [&](double t) { return f(t * a[i] + (1 - t) * a[j], t * b[i] + (1 - t) * b[j]); };
            const double probe = std::min({along(0.25), along(0.5), along(0.75)});
            if (probe >= std::min(fi, fj)) continue;
            double lo = 0.0, hi = 1.0;
            double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
            double f1 = along(x1), f2 = along(x2);
            for (int it = 0; it < 80; ++it) {
                if (f1 < f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - kGolden * (hi - lo);
                    f1 = along(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + kGolden * (hi - lo);
                    f2 = along(x2);
                }
            }
            const double t = 0.5 * (lo + hi);
            const double v = along(t);
            if (v < best) {
                best = v;
                best_i = i;
                best_j = j;
                best_t = t;
            }
        }
    }

    NumericRadialResult out;
    if (best_i == best_j || best_t >= 1.0) {
        out.measure = {{grid[best_i]}, {1.0}};
    } else if (best_t <= 0.0) {
        out.measure = {{grid[best_j]}, {1.0}};
    } else {
        out.measure = {{grid[best_i], grid[best_j]}, {best_t, 1.0 - best_t}};
    }
    out.moments = radial_reduce(out.measure);
    out.value = best;
    return out;
}

TaylorReport taylor_check(const DiscreteMeasure& mu) {
    const PairIntegrals I = pair_integrals(mu);
    TaylorReport r;
    r.exact[0] = std::log(I.kernel);
    r.taylor[0] = -I.second + I.fourth - 0.5 * I.second * I.second;
    r.exact[1] = I.log1p_sq;
    r.taylor[1] = I.fourth;
    r.residual = std::max(std::abs(r.exact[0] - r.taylor[0]), std::abs(r.exact[1] - r.taylor[1]));
    r.diameter = mu.diameter();
    r.outside_regime = r.diameter > 0.5;
    return r;
}

// ---------------------------------------------------------------------------

RingStats ring_stats(const Embedding& e) {
    const std::size_t n = e.n();
    if (n < 10) throw InvalidArgument("ring_stats: need at least 10 points");
    Vec2 c{};
    for (std::size_t i = 0; i < n; ++i) c = c + e.point(i);
    c = (1.0 / static_cast<double>(n)) * c;
    std::vector<double> radii(n);
    for (std::size_t i = 0; i < n; ++i) radii[i] = norm(e.point(i) - c);

    RingStats s;
    s.mean_radius = std::accumulate(radii.begin(), radii.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double r : radii) var += (r - s.mean_radius) * (r - s.mean_radius);
    var /= static_cast<double>(n);
    if (s.mean_radius > 0.0) s.radial_cv = std::sqrt(var) / s.mean_radius;

    std::vector<double> sorted = radii;
    std::sort(sorted.begin(), sorted.end());
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::size_t inside = 0;
    for (double r : radii) {
        if (r >= 0.5 * median && r <= 1.5 * median) ++inside;
    }
    s.annularity = static_cast<double>(inside) / static_cast<double>(n);
    return s;
}

}  // namespace forcelab
