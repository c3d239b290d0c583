#include "forcelab/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace forcelab {

Embedding::Embedding(std::vector<double> interleaved) : coords_(std::move(interleaved)) {
    if (coords_.size() % 2 != 0) throw InvalidArgument("embedding coordinates must come in (x, y) pairs");
}

Embedding Embedding::from_points(std::span<const Vec2> points) {
    Embedding e(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) e.set(i, points[i]);
    return e;
}

bool Embedding::all_finite() const {
    return std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

struct Columns {
    std::vector<double> x;
    std::vector<double> y;
};

Columns split(const Embedding& e) {
    Columns c;
    c.x.resize(e.n());
    c.y.resize(e.n());
    auto coords = e.coords();
    for (std::size_t i = 0; i < e.n(); ++i) {
        c.x[i] = coords[2 * i];
        c.y[i] = coords[2 * i + 1];
    }
    return c;
}

// Sum over all ordered pairs of the Cauchy kernel, row by row.
double normalizer(const Columns& c) {
    const std::size_t n = c.x.size();
    std::vector<double> rows(n, 0.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double xi = c.x[i];
            const double yi = c.y[i];
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dx = xi - c.x[j];
                const double dy = yi - c.y[j];
                s += 1.0 / (1.0 + dx * dx + dy * dy);
            }
            rows[i] = s - 1.0;
        }
    });
    double z = 0.0;
    for (double r : rows) z += r;
    return z;
}

void require_match(const AffinityMatrix& p, const Embedding& e) {
    if (p.n() != e.n()) throw InvalidArgument("affinity matrix and embedding differ in size");
}

}  // namespace

QStats compute_q(const Embedding& e) {
    const std::size_t n = e.n();
    if (n < 2) throw InvalidArgument("compute_q: need at least 2 points");
    const Columns c = split(e);
    QStats stats;
    stats.n = n;
    stats.z = normalizer(c);
    stats.q.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = c.x[i] - c.x[j];
            const double dy = c.y[i] - c.y[j];
            stats.q[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy) / stats.z;
        }
    }
    return stats;
}

double kl_energy(const AffinityMatrix& p, const Embedding& e) {
    require_match(p, e);
    if (e.n() < 2) throw InvalidArgument("kl_energy: need at least 2 points");
    const Columns c = split(e);
    const double z = normalizer(c);
    double energy = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
        auto cols = p.row_cols(i);
        auto vals = p.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double pij = vals[k];
            if (pij <= 0.0) continue;
            const auto j = static_cast<std::size_t>(cols[k]);
            const double dx = c.x[i] - c.x[j];
            const double dy = c.y[i] - c.y[j];
            const double q = std::max(1.0 / (1.0 + dx * dx + dy * dy) / z, kQFloor);
            energy += pij * std::log(pij / q);
        }
    }
    return energy;
}

namespace {

ForceTerms force_terms_scaled(const AffinityMatrix& p, const Embedding& e, double attract_scale) {
    require_match(p, e);
    const std::size_t n = e.n();
    if (n < 2) throw InvalidArgument("force terms need at least 2 points");
    const Columns c = split(e);

    ForceTerms out;
    out.attract.assign(2 * n, 0.0);
    out.repulse.assign(2 * n, 0.0);
    std::vector<double> zrow(n, 0.0);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double xi = c.x[i];
            const double yi = c.y[i];
            double z = 0.0;
            double rx = 0.0;
            double ry = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dx = c.x[j] - xi;
                const double dy = c.y[j] - yi;
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                z += w;
                rx += w * w * dx;
                ry += w * w * dy;
            }
            zrow[i] = z - 1.0;
            out.repulse[2 * i] = rx;
            out.repulse[2 * i + 1] = ry;

            double ax = 0.0;
            double ay = 0.0;
            auto cols = p.row_cols(i);
            auto vals = p.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const auto j = static_cast<std::size_t>(cols[k]);
                const double dx = c.x[j] - xi;
                const double dy = c.y[j] - yi;
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                ax += vals[k] * w * dx;
                ay += vals[k] * w * dy;
            }
            out.attract[2 * i] = 4.0 * attract_scale * ax;
            out.attract[2 * i + 1] = 4.0 * attract_scale * ay;
        }
    });

    double z = 0.0;
    for (double r : zrow) z += r;
    out.z = z;
    const double rscale = -4.0 / z;
    for (double& v : out.repulse) v *= rscale;
    return out;
}

std::vector<double> gradient_scaled(const AffinityMatrix& p, const Embedding& e, double attract_scale) {
    ForceTerms f = force_terms_scaled(p, e, attract_scale);
    std::vector<double> g(f.attract.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = -(f.attract[k] + f.repulse[k]);
    return g;
}

}  // namespace

ForceTerms force_terms(const AffinityMatrix& p, const Embedding& e) { return force_terms_scaled(p, e, 1.0); }

std::vector<double> gradient(const AffinityMatrix& p, const Embedding& e) { return gradient_scaled(p, e, 1.0); }

// ---------------------------------------------------------------------------
// PCA

namespace {

// Implicit access to a row matrix X (rows x dim) and its column means.
struct RowOperator {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> mean;
    double trace = 0.0;  // trace of the sample covariance
    std::function<void(std::span<const double>, std::span<double>)> times;      // X v
    std::function<void(std::span<const double>, std::span<double>)> transpose;  // X^T u
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Centered scores X_c v.
std::vector<double> scores(const RowOperator& op, std::span<const double> v) {
    std::vector<double> out(op.rows);
    op.times(v, out);
    const double shift = dot(op.mean, v);
    for (double& s : out) s -= shift;
    return out;
}

// Sample covariance times v.
std::vector<double> covariance_times(const RowOperator& op, std::span<const double> v) {
    std::vector<double> u = scores(op, v);
    std::vector<double> out(op.dim);
    op.transpose(u, out);
    double usum = 0.0;
    for (double s : u) usum += s;
    const double denom = static_cast<double>(op.rows - 1);
    for (std::size_t j = 0; j < op.dim; ++j) out[j] = (out[j] - op.mean[j] * usum) / denom;
    return out;
}

// Gram-Schmidt on two columns; returns false when the pair is degenerate.
bool orthonormalize(std::vector<double>& a, std::vector<double>& b) {
    const double na = std::sqrt(dot(a, a));
    if (!(na > 0.0)) return false;
    for (double& v : a) v /= na;
    for (int pass = 0; pass < 2; ++pass) {
        const double proj = dot(a, b);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= proj * a[i];
    }
    const double nb = std::sqrt(dot(b, b));
    if (!(nb > 1e-300)) return false;
    for (double& v : b) v /= nb;
    return true;
}

// Eigen-decomposition of [[a, b], [b, c]]; first eigenvalue is the larger.
void symmetric_2x2(double a, double b, double c, double values[2], double vectors[2][2]) {
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    values[0] = mid + rad;
    values[1] = mid - rad;
    const double theta = 0.5 * std::atan2(2.0 * b, a - c);
    vectors[0][0] = std::cos(theta);
    vectors[0][1] = std::sin(theta);
    vectors[1][0] = -std::sin(theta);
    vectors[1][1] = std::cos(theta);
}

PrincipalAxes subspace_iteration(const RowOperator& op, std::uint64_t seed, int max_iterations) {
    PrincipalAxes result;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v0(op.dim), v1(op.dim);
    for (auto& x : v0) x = normal(rng);
    for (auto& x : v1) x = normal(rng);
    result.axes[0] = v0;
    result.axes[1] = v1;
    if (op.dim < 2 || !(op.trace > 0.0) || !orthonormalize(v0, v1)) {
        if (op.dim >= 2) orthonormalize(result.axes[0], result.axes[1]);
        return result;
    }

    double previous[2] = {-1.0, -1.0};
    for (int it = 1; it <= max_iterations; ++it) {
        std::vector<double> w0 = covariance_times(op, v0);
        std::vector<double> w1 = covariance_times(op, v1);
        double values[2];
        double rot[2][2];
        symmetric_2x2(dot(v0, w0), dot(v0, w1), dot(v1, w1), values, rot);

        // Ritz vectors and the corresponding images.
        std::vector<double> u0(op.dim), u1(op.dim), cu0(op.dim), cu1(op.dim);
        for (std::size_t j = 0; j < op.dim; ++j) {
            u0[j] = rot[0][0] * v0[j] + rot[0][1] * v1[j];
            u1[j] = rot[1][0] * v0[j] + rot[1][1] * v1[j];
            cu0[j] = rot[0][0] * w0[j] + rot[0][1] * w1[j];
            cu1[j] = rot[1][0] * w0[j] + rot[1][1] * w1[j];
        }
        double residual = 0.0;
        for (std::size_t j = 0; j < op.dim; ++j) {
            residual = std::max(residual, std::abs(cu0[j] - values[0] * u0[j]));
            residual = std::max(residual, std::abs(cu1[j] - values[1] * u1[j]));
        }
        result.eigenvalues[0] = values[0];
        result.eigenvalues[1] = values[1];
        result.axes[0] = u0;
        result.axes[1] = u1;
        result.iterations = it;

        const double scale = std::max(std::abs(values[0]), 1e-300);
        const bool stalled = std::abs(values[0] - previous[0]) <= 1e-15 * scale &&
                             std::abs(values[1] - previous[1]) <= 1e-15 * scale;
        if (residual <= 1e-11 * scale || stalled) break;
        previous[0] = values[0];
        previous[1] = values[1];

        v0 = std::move(cu0);
        v1 = std::move(cu1);
        if (!orthonormalize(v0, v1)) break;
    }
    return result;
}

RowOperator points_operator(const PointCloud& points) {
    if (points.n < 2) throw InvalidArgument("PCA needs at least 2 rows");
    RowOperator op;
    op.rows = points.n;
    op.dim = points.d;
    op.mean.assign(points.d, 0.0);
    for (std::size_t i = 0; i < points.n; ++i) {
        for (std::size_t j = 0; j < points.d; ++j) op.mean[j] += points.at(i, j);
    }
    for (double& m : op.mean) m /= static_cast<double>(points.n);
    for (std::size_t i = 0; i < points.n; ++i) {
        for (std::size_t j = 0; j < points.d; ++j) {
            const double c = points.at(i, j) - op.mean[j];
            op.trace += c * c;
        }
    }
    op.trace /= static_cast<double>(points.n - 1);
    op.times = [&points](std::span<const double> v, std::span<double> out) {
        for (std::size_t i = 0; i < points.n; ++i) out[i] = dot(points.row(i), v);
    };
    op.transpose = [&points](std::span<const double> u, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < points.n; ++i) {
            auto row = points.row(i);
            for (std::size_t j = 0; j < points.d; ++j) out[j] += u[i] * row[j];
        }
    };
    return op;
}

RowOperator affinity_operator(const AffinityMatrix& p) {
    const std::size_t n = p.n();
    if (n < 2) throw InvalidArgument("PCA needs at least 2 rows");
    RowOperator op;
    op.rows = n;
    op.dim = n;
    op.mean.assign(n, 0.0);
    std::vector<double> sq(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto cols = p.row_cols(i);
        auto vals = p.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            op.mean[static_cast<std::size_t>(cols[k])] += vals[k];
            sq[static_cast<std::size_t>(cols[k])] += vals[k] * vals[k];
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        op.mean[j] /= static_cast<double>(n);
        op.trace += sq[j] - static_cast<double>(n) * op.mean[j] * op.mean[j];
    }
    op.trace /= static_cast<double>(n - 1);
    op.times = [&p](std::span<const double> v, std::span<double> out) {
        for (std::size_t i = 0; i < p.n(); ++i) {
            auto cols = p.row_cols(i);
            auto vals = p.row_vals(i);
            double s = 0.0;
            for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * v[static_cast<std::size_t>(cols[k])];
            out[i] = s;
        }
    };
    op.transpose = [&p](std::span<const double> u, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < p.n(); ++i) {
            auto cols = p.row_cols(i);
            auto vals = p.row_vals(i);
            for (std::size_t k = 0; k < cols.size(); ++k) out[static_cast<std::size_t>(cols[k])] += u[i] * vals[k];
        }
    };
    return op;
}

Embedding project(const RowOperator& op, std::uint64_t seed, int max_iterations) {
    PrincipalAxes axes = subspace_iteration(op, seed, max_iterations);
    Embedding e(op.rows);
    std::mt19937_64 rng(mix_seed(seed, 0x70ca));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int a = 0; a < 2; ++a) {
        const bool degenerate = !(op.trace > 0.0) || op.dim <= static_cast<std::size_t>(a) ||
                                !(axes.eigenvalues[a] > 1e-10 * op.trace);
        std::vector<double> s;
        if (degenerate) {
            s.resize(op.rows);
            for (double& v : s) v = normal(rng);
        } else {
            s = scores(op, axes.axes[a]);
        }
        for (std::size_t i = 0; i < op.rows; ++i) e.coords()[2 * i + static_cast<std::size_t>(a)] = s[i];
    }
    return e;
}

Embedding rescale_axes(Embedding e, double target_sd) {
    const std::size_t n = e.n();
    auto c = e.coords();
    for (std::size_t a = 0; a < 2; ++a) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += c[2 * i + a];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (c[2 * i + a] - mean) * (c[2 * i + a] - mean);
        const double sd = std::sqrt(var / static_cast<double>(n > 1 ? n - 1 : 1));
        const double factor = sd > 0.0 ? target_sd / sd : 0.0;
        for (std::size_t i = 0; i < n; ++i) c[2 * i + a] = (c[2 * i + a] - mean) * factor;
    }
    return e;
}

constexpr double kInitScale = 1e-4;

}  // namespace

PrincipalAxes principal_axes(const PointCloud& points, std::uint64_t seed, int max_iterations) {
    return subspace_iteration(points_operator(points), seed, max_iterations);
}

PrincipalAxes principal_axes(const AffinityMatrix& rows, std::uint64_t seed, int max_iterations) {
    return subspace_iteration(affinity_operator(rows), seed, max_iterations);
}

Embedding pca_project(const PointCloud& points, std::uint64_t seed) {
    return project(points_operator(points), seed, 2000);
}

Embedding pca_project(const AffinityMatrix& rows, std::uint64_t seed) {
    return project(affinity_operator(rows), seed, 300);
}

Embedding pca_init(const PointCloud& points, std::uint64_t seed) {
    return rescale_axes(pca_project(points, seed), kInitScale);
}

Embedding pca_init(const AffinityMatrix& rows, std::uint64_t seed) {
    return rescale_axes(pca_project(rows, seed), kInitScale);
}

Embedding random_init(std::size_t n, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Embedding e(n);
    for (double& v : e.coords()) v = normal(rng);
    return e;
}

// ---------------------------------------------------------------------------
// Optimizer

void OptimizerConfig::validate() const {
    if (total_iterations < 0) throw InvalidArgument("total_iterations must be >= 0");
    if (exaggeration_iterations < 0 || exaggeration_iterations > total_iterations) {
        throw InvalidArgument("exaggeration_iterations must lie in [0, total_iterations]");
    }
    if (!(exaggeration_factor >= 1.0)) throw InvalidArgument("exaggeration_factor must be >= 1");
    if (!(momentum_early >= 0.0 && momentum_early < 1.0)) throw InvalidArgument("momentum_early must lie in [0, 1)");
    if (!(momentum_late >= 0.0 && momentum_late < 1.0)) throw InvalidArgument("momentum_late must lie in [0, 1)");
    if (!std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be finite");
    if (init == InitKind::Random && !(random_scale > 0.0)) throw InvalidArgument("random_scale must be > 0");
    if (snapshot_stride < 1) throw InvalidArgument("snapshot_stride must be >= 1");
}

double OptimizerConfig::effective_learning_rate(std::size_t n) const {
    return learning_rate > 0.0 ? learning_rate : 200.0 * static_cast<double>(n) / 1000.0;
}

DivergenceError::DivergenceError(int iteration, const std::string& what)
    : RuntimeFailure("diverged at iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

namespace {

void center(Embedding& e) {
    auto c = e.coords();
    const std::size_t n = e.n();
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += c[2 * i];
        my += c[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[2 * i] -= mx;
        c[2 * i + 1] -= my;
    }
}

constexpr double kDivergenceEnergy = 1e6;

}  // namespace

Trajectory run(const AffinityMatrix& p, const OptimizerConfig& cfg, const std::optional<Embedding>& init) {
    cfg.validate();
    const std::size_t n = p.n();
    if (n < 2) throw InvalidArgument("run: need at least 2 points");

    Embedding y;
    if (init) {
        if (init->n() != n) throw InvalidArgument("run: initial embedding has the wrong size");
        y = *init;
    } else if (cfg.init == InitKind::Pca) {
        y = pca_init(p, cfg.seed);
    } else {
        y = random_init(n, cfg.random_scale, cfg.seed);
    }
    if (!y.all_finite()) throw InvalidArgument("run: initial embedding is not finite");

    const double lr = cfg.effective_learning_rate(n);
    std::vector<double> velocity(2 * n, 0.0);
    Trajectory traj;
    traj.exaggeration_end_iteration = cfg.exaggeration_iterations;

    auto snapshot = [&](int iteration) {
        const double energy = kl_energy(p, y);
        if (!std::isfinite(energy) || energy > kDivergenceEnergy) {
            throw DivergenceError(iteration, "energy " + std::to_string(energy));
        }
        traj.snapshots.push_back({iteration, y, energy});
    };

    snapshot(0);
    for (int it = 1; it <= cfg.total_iterations; ++it) {
        const bool exaggerating = it <= cfg.exaggeration_iterations;
        const double factor = exaggerating ? cfg.exaggeration_factor : 1.0;
        const double momentum = exaggerating ? cfg.momentum_early : cfg.momentum_late;
        const std::vector<double> g = gradient_scaled(p, y, factor);
        auto c = y.coords();
        for (std::size_t k = 0; k < c.size(); ++k) {
            velocity[k] = momentum * velocity[k] - lr * g[k];
            c[k] += velocity[k];
        }
        center(y);
        if (!y.all_finite()) throw DivergenceError(it, "non-finite coordinate");
        if (it % cfg.snapshot_stride == 0 || it == cfg.total_iterations) snapshot(it);
    }
    traj.final = y;
    return traj;
}

}  // namespace forcelab
