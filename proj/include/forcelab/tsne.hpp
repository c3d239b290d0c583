#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "forcelab/affinity.hpp"
#include "forcelab/common.hpp"

namespace forcelab {

// n points in the plane, stored interleaved (x0, y0, x1, y1, ...).
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(std::size_t n) : coords_(2 * n, 0.0) {}
    explicit Embedding(std::vector<double> interleaved);
    static Embedding from_points(std::span<const Vec2> points);

    std::size_t n() const { return coords_.size() / 2; }
    Vec2 point(std::size_t i) const { return {coords_[2 * i], coords_[2 * i + 1]}; }
    void set(std::size_t i, Vec2 v) {
        coords_[2 * i] = v.x;
        coords_[2 * i + 1] = v.y;
    }
    std::span<const double> coords() const { return coords_; }
    std::span<double> coords() { return coords_; }
    bool all_finite() const;
    bool operator==(const Embedding&) const = default;

private:
    std::vector<double> coords_;
};

struct QStats {
    double z = 0.0;        // sum over ordered pairs of (1 + |y_k - y_l|^2)^-1
    std::size_t n = 0;
    std::vector<double> q;  // dense row-major n x n, zero diagonal

    double at(std::size_t i, std::size_t j) const { return q[i * n + j]; }
};

QStats compute_q(const Embedding& e);

// Lower clamp applied to q_ij inside logarithms.
inline constexpr double kQFloor = 1e-12;

// KL(P || Q) over ordered pairs with p_ij > 0.
double kl_energy(const AffinityMatrix& p, const Embedding& e);

// The two halves of -dE/dy_i:
//   attract_i =  4 sum_j p_ij q_ij Z (y_j - y_i)
//   repulse_i = -4 sum_j q_ij^2 Z (y_j - y_i)
// Each row is accumulated in a fixed order independent of threading.
struct ForceTerms {
    std::vector<double> attract;  // interleaved, 2n
    std::vector<double> repulse;  // interleaved, 2n
    double z = 0.0;
};

ForceTerms force_terms(const AffinityMatrix& p, const Embedding& e);

// dE/dy_i, interleaved. Note the sign: this is the ascent direction.
std::vector<double> gradient(const AffinityMatrix& p, const Embedding& e);

struct PrincipalAxes {
    double eigenvalues[2] = {0.0, 0.0};
    std::vector<double> axes[2];  // unit vectors in input space
    int iterations = 0;
};

// Top two eigenpairs of the sample covariance of the rows, by subspace
// iteration from seeded start vectors.
PrincipalAxes principal_axes(const PointCloud& points, std::uint64_t seed, int max_iterations = 2000);
PrincipalAxes principal_axes(const AffinityMatrix& rows, std::uint64_t seed, int max_iterations = 300);

// Centered rows projected onto the top two principal axes (no rescaling).
// Axes with (numerically) zero variance are replaced by seeded Gaussian
// noise.
Embedding pca_project(const PointCloud& points, std::uint64_t seed);
Embedding pca_project(const AffinityMatrix& rows, std::uint64_t seed);

// pca_project rescaled to a per-axis standard deviation of 1e-4.
Embedding pca_init(const PointCloud& points, std::uint64_t seed);
Embedding pca_init(const AffinityMatrix& rows, std::uint64_t seed);

Embedding random_init(std::size_t n, double scale, std::uint64_t seed);

enum class InitKind { Pca, Random };

struct OptimizerConfig {
    int total_iterations = 750;
    int exaggeration_iterations = 250;
    double exaggeration_factor = 12.0;
    double learning_rate = 0.0;  // <= 0 selects 200 * n / 1000
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    InitKind init = InitKind::Pca;
    double random_scale = 1e-4;
    std::uint64_t seed = 0;
    int snapshot_stride = 50;

    void validate() const;
    double effective_learning_rate(std::size_t n) const;
};

struct Snapshot {
    int iteration = 0;
    Embedding embedding;
    double energy = 0.0;  // unexaggerated KL
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    Embedding final;
    int exaggeration_end_iteration = 0;
};

class DivergenceError : public RuntimeFailure {
public:
    DivergenceError(int iteration, const std::string& what);
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

// Gradient descent with momentum. During the first exaggeration_iterations
// the gradient is taken against exaggeration_factor * p. When `init` is
// given it overrides cfg.init.
Trajectory run(const AffinityMatrix& p, const OptimizerConfig& cfg,
               const std::optional<Embedding>& init = std::nullopt);

}  // namespace forcelab
