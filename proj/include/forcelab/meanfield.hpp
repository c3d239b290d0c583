#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "forcelab/common.hpp"
#include "forcelab/graph_models.hpp"
#include "forcelab/tsne.hpp"

namespace forcelab {

// Weighted point masses in the plane; weights sum to 1.
struct DiscreteMeasure {
    std::vector<Vec2> support;
    std::vector<double> weights;

    static DiscreteMeasure point_mass(Vec2 at = {});
    static DiscreteMeasure uniform(std::vector<Vec2> points);
    // Uniform measure of an embedding (mass 1/n per point).
    static DiscreteMeasure empirical(const Embedding& e);

    void validate() const;
    // Image under x -> lambda * x.
    DiscreteMeasure scaled(double lambda) const;
    double diameter() const;
};

// Weighted point masses on [0, inf); weights sum to 1.
struct RadialMeasure {
    std::vector<double> radii;
    std::vector<double> weights;

    void validate() const;
};

struct RadialMoments {
    double a = 0.0;  // E X^2
    double b = 0.0;  // E X^4
};

// Pair integrals of a measure against itself, all as exact double sums.
struct PairIntegrals {
    double kernel = 0.0;   // iint dmu dmu / (1 + |x-y|^2)
    double log1p = 0.0;    // iint log(1 + |x-y|^2)
    double log1p_sq = 0.0; // iint log(1 + |x-y|^2)^2
    double second = 0.0;   // iint |x-y|^2
    double fourth = 0.0;   // iint |x-y|^4
};

PairIntegrals pair_integrals(const DiscreteMeasure& mu);

enum class VarianceModel { ErdosRenyi, KRegular };

// Default value of the negative-correlation constant c_{k,n}.
inline constexpr double kCorrelationConstant = 4.0;

struct EnergyStats {
    double actual = 0.0;
    double expectation = 0.0;
    double variance = 0.0;
    std::optional<double> sigma;  // empty when variance == 0 and actual != expectation
    GraphKind model = GraphKind::KRegular;
    int n = 0;
    double k_or_p = 0.0;
    double edge_probability = 0.0;  // p used in the expectation and variance
};

// Actual energy, ensemble mean and variance for a graph-affinity embedding
// (affinities normalized to 1/(2|E|)), and sigma solved from
// actual = expectation + sigma * sqrt(variance).
EnergyStats energy_stats(const Graph& g, const Embedding& e);

double expectation_E2(const DiscreteMeasure& mu, double n, double p);
double expectation_E(const DiscreteMeasure& mu, double n, double p);

struct VarianceValue {
    double value = 0.0;
    bool clamped = false;  // the k-regular correction drove the value below 0
};

VarianceValue variance_second_term(const DiscreteMeasure& mu, double n, double p, VarianceModel model,
                                   double c_kn = kCorrelationConstant);
double variance_first_term_er(const DiscreteMeasure& mu, double n, double p);

struct Lemma2Bound {
    double lower_bound = 0.0;
    double independent_value = 0.0;
};

// x is a dense row-major n x n matrix with zero diagonal.
Lemma2Bound lemma2_variance_bound(std::span<const double> x, std::size_t n, double k,
                                  double c_kn = kCorrelationConstant);

// log iint (1+|x-y|^2)^-1 + iint log(1+|x-y|^2); nonnegative by Jensen.
double shrinkage_I(const DiscreteMeasure& mu);

// Smallest sidelength of an axis-aligned square holding >= mass_threshold of
// the mass, searched over squares anchored at support points. Upper bound on
// the true infimum.
double length_scale_r(const DiscreteMeasure& mu, double mass_threshold = 1.0 / 200.0);

struct ShrinkageBound {
    double lhs = 0.0;        // I(mu)
    double rhs_shape = 0.0;  // r^4 / (1 + r^2)^4
};

ShrinkageBound shrinkage_bound_check(const DiscreteMeasure& mu);

struct MeanFieldParams {
    double sigma = -1.0;
    double delta = 1.0;
    double p = 1.0;

    double c() const;
    void validate() const;
};

struct FunctionalParts {
    double fourth = 0.0;         // iint |x-y|^4
    double second_squared = 0.0; // (iint |x-y|^2)^2
    double penalty = 0.0;        // (sigma / sqrt p) delta sqrt(iint |x-y|^4)
    double total = 0.0;
};

FunctionalParts functional_J_parts(const DiscreteMeasure& mu, const MeanFieldParams& params);
double functional_J(const DiscreteMeasure& mu, const MeanFieldParams& params);

RadialMoments radial_reduce(const RadialMeasure& nu);

// Rotationally symmetric planar measure: each radius spread evenly over
// `angles` points (a radius of 0 becomes one atom).
DiscreteMeasure discretize_radial(const RadialMeasure& nu, std::size_t angles);

// f(a, b) = b + c * sqrt(b/2 + a^2), defined for 0 <= a <= sqrt(b).
double radial_J(const RadialMoments& m, double c);

struct RadialOptimum {
    double b_star = 0.0;
    double radius = 0.0;
};

// Closed-form minimizer: b* = 3c^2/8 on a single radius for c < 0, the point
// mass otherwise.
RadialOptimum radial_minimizer(double c);

// Ring radius implied for J_{sigma,delta}: the radius of radial_minimizer(c).
double predicted_ring_radius(const MeanFieldParams& params);

// Asymptotic ring-radius scaling (k n)^{-1/4}, unit constant.
double radius_prediction(double n, double k);

struct NumericRadialResult {
    RadialMeasure measure;
    RadialMoments moments;
    double value = 0.0;
};

// Minimizes f over radial measures supported on `grid` by exhaustive search
// over single atoms and two-atom mixtures.
NumericRadialResult numeric_radial_minimize(double c, std::span<const double> grid);

struct TaylorReport {
    // [0]: log iint (1+|x-y|^2)^-1 against -M2 + M4 - M2^2/2
    // [1]: iint log(1+|x-y|^2)^2 against M4
    std::array<double, 2> exact{};
    std::array<double, 2> taylor{};
    double residual = 0.0;  // max |exact - taylor|
    double diameter = 0.0;
    bool outside_regime = false;  // diameter > 0.5
};

TaylorReport taylor_check(const DiscreteMeasure& mu);

struct RingStats {
    double mean_radius = 0.0;
    std::optional<double> radial_cv;  // empty when all points coincide
    double annularity = 0.0;
};

RingStats ring_stats(const Embedding& e);

}  // namespace forcelab
