#include "forcelab/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "forcelab/common.hpp"

namespace forcelab {

AffinityMatrix AffinityMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
    for (const auto& t : triplets) {
        if (t.i < 0 || t.j < 0 || static_cast<std::size_t>(t.i) >= n || static_cast<std::size_t>(t.j) >= n) {
            throw InvalidArgument("affinity index out of range");
        }
        if (t.i == t.j) throw InvalidArgument("affinity matrix must have a zero diagonal");
        if (!(t.p >= 0.0) || !std::isfinite(t.p)) throw InvalidArgument("affinities must be finite and >= 0");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });

    AffinityMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t t = 0; t < triplets.size();) {
        const int i = triplets[t].i;
        const int j = triplets[t].j;
        double sum = 0.0;
        while (t < triplets.size() && triplets[t].i == i && triplets[t].j == j) sum += triplets[t++].p;
        if (sum == 0.0) continue;
        m.cols_.push_back(j);
        m.vals_.push_back(sum);
        ++m.row_ptr_[static_cast<std::size_t>(i) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];

    for (std::size_t i = 0; i < n; ++i) {
        auto cols = m.row_cols(i);
        auto vals = m.row_vals(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            if (m.get(static_cast<std::size_t>(cols[e]), i) != vals[e]) {
                throw InvalidArgument("affinity matrix is not symmetric at (" + std::to_string(i) + "," +
                                      std::to_string(cols[e]) + ")");
            }
        }
    }
    return m;
}

double AffinityMatrix::get(std::size_t i, std::size_t j) const {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(j));
    if (it == cols.end() || *it != static_cast<int>(j)) return 0.0;
    return row_vals(i)[static_cast<std::size_t>(it - cols.begin())];
}

double AffinityMatrix::total_mass() const {
    double sum = 0.0;
    for (double v : vals_) sum += v;
    return sum;
}

AffinityMatrix AffinityMatrix::scaled(double factor) const {
    AffinityMatrix out = *this;
    for (double& v : out.vals_) v *= factor;
    return out;
}

AffinityMatrix AffinityMatrix::normalized() const {
    const double mass = total_mass();
    if (!(mass > 0.0)) throw InvalidArgument("cannot normalize an affinity matrix with zero mass");
    return scaled(1.0 / mass);
}

std::vector<AffinityMatrix::Triplet> AffinityMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(nonzeros());
    for (std::size_t i = 0; i < n_; ++i) {
        auto cols = row_cols(i);
        auto vals = row_vals(i);
        for (std::size_t e = 0; e < cols.size(); ++e) out.push_back({static_cast<int>(i), cols[e], vals[e]});
    }
    return out;
}

std::vector<double> conditional_row(std::span<const double> sq_dist_row, std::size_t i, double sigma) {
    const std::size_t n = sq_dist_row.size();
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        if (j != i) min_d = std::min(min_d, sq_dist_row[j]);
    }
    // Shifting by the nearest distance leaves the normalized row unchanged.
    std::vector<double> row(n, 0.0);
    const double scale = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] = std::exp(-(sq_dist_row[j] - min_d) * scale);
        sum += row[j];
    }
    for (double& v : row) v /= sum;
    return row;
}

double entropy_nats(std::span<const double> probs) {
    double h = 0.0;
    for (double q : probs) {
        if (q > 0.0) h -= q * std::log(q);
    }
    return h;
}

namespace {

struct RowFit {
    std::vector<double> conditional;
    double sigma;
    double achieved;
};

RowFit calibrate_row(std::span<const double> sq_dist, std::size_t i, double perplexity, double tolerance,
                     int max_iterations) {
    const std::size_t n = sq_dist.size();
    double lo_d = std::numeric_limits<double>::infinity();
    double hi_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        lo_d = std::min(lo_d, sq_dist[j]);
        hi_d = std::max(hi_d, sq_dist[j]);
    }
    // All neighbors equidistant up to rounding (including exact duplicates):
    // the conditional is uniform for every bandwidth.
    if (hi_d - lo_d <= 1e-12 * hi_d) {
        std::vector<double> row(n, 1.0 / static_cast<double>(n - 1));
        row[i] = 0.0;
        return {std::move(row), 1.0, static_cast<double>(n - 1)};
    }

    const double target = std::log(perplexity);
    double lo = 1e-12;
    double hi = 1e12;
    for (int it = 0; it < max_iterations; ++it) {
        const double sigma = std::sqrt(lo * hi);
        auto row = conditional_row(sq_dist, i, sigma);
        const double h = entropy_nats(row);
        if (std::abs(h - target) < tolerance) return {std::move(row), sigma, std::exp(h)};
        if (h < target) {
            lo = sigma;
        } else {
            hi = sigma;
        }
    }
    throw RuntimeFailure("perplexity calibration failed for point " + std::to_string(i));
}

}  // namespace

PerplexityResult perplexity_affinities(const PointCloud& points, double perplexity, double tolerance,
                                       int max_iterations) {
    const std::size_t n = points.n;
    if (n < 3) throw InvalidArgument("perplexity_affinities: need at least 3 points");
    if (!(perplexity > 1.0 && perplexity < static_cast<double>(n))) {
        throw InvalidArgument("perplexity_affinities: perplexity must lie in (1, n)");
    }

    PerplexityResult result;
    result.calibration.perplexity = perplexity;
    result.calibration.tolerance = tolerance;
    result.calibration.max_iterations = max_iterations;
    result.calibration.bandwidths.assign(n, 0.0);
    result.calibration.achieved_perplexity.assign(n, 0.0);

    // Entries below this are dropped from the sparse result.
    constexpr double kKeep = 1e-15;
    std::vector<std::vector<std::pair<int, double>>> kept(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> sq(n);
        for (std::size_t i = begin; i < end; ++i) {
            auto xi = points.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                auto xj = points.row(j);
                double s = 0.0;
                for (std::size_t c = 0; c < points.d; ++c) {
                    const double diff = xi[c] - xj[c];
                    s += diff * diff;
                }
                sq[j] = s;
            }
            RowFit fit = calibrate_row(sq, i, perplexity, tolerance, max_iterations);
            result.calibration.bandwidths[i] = fit.sigma;
            result.calibration.achieved_perplexity[i] = fit.achieved;
            for (std::size_t j = 0; j < n; ++j) {
                if (fit.conditional[j] > kKeep) kept[i].emplace_back(static_cast<int>(j), fit.conditional[j]);
            }
        }
    });

    std::vector<AffinityMatrix::Triplet> triplets;
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, pji] : kept[i]) {
            triplets.push_back({static_cast<int>(i), j, pji / denom});
            triplets.push_back({j, static_cast<int>(i), pji / denom});
        }
    }
    result.affinities = AffinityMatrix::from_triplets(n, std::move(triplets)).normalized();
    return result;
}

AffinityMatrix graph_affinities(const Graph& g, bool normalize) {
    if (g.edge_count() == 0) throw InvalidArgument("graph_affinities: graph has no edges");
    const double value = normalize ? 1.0 / (2.0 * static_cast<double>(g.edge_count())) : 1.0;
    std::vector<AffinityMatrix::Triplet> triplets;
    triplets.reserve(2 * g.edge_count());
    for (const auto& [u, v] : g.edges()) {
        triplets.push_back({u, v, value});
        triplets.push_back({v, u, value});
    }
    return AffinityMatrix::from_triplets(static_cast<std::size_t>(g.n()), std::move(triplets));
}

}  // namespace forcelab
