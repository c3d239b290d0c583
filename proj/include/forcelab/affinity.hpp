#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forcelab/graph_models.hpp"

namespace forcelab {

// Row-major n x d matrix of input samples.
struct PointCloud {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * d + j]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }
};

// Sparse symmetric affinities in CSR form. Both (i,j) and (j,i) are stored;
// the diagonal is always absent.
class AffinityMatrix {
public:
    struct Triplet {
        int i;
        int j;
        double p;
    };

    AffinityMatrix() = default;

    // Builds from ordered triplets; (i,j) and (j,i) must both be present with
    // equal values.
    static AffinityMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);

    std::size_t n() const { return n_; }
    std::size_t nonzeros() const { return cols_.size(); }
    std::span<const int> row_cols(std::size_t i) const {
        return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    std::span<const double> row_vals(std::size_t i) const {
        return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    double get(std::size_t i, std::size_t j) const;

    // Sum over ordered pairs i != j.
    double total_mass() const;
    AffinityMatrix scaled(double factor) const;
    AffinityMatrix normalized() const;
    std::vector<Triplet> triplets() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<int> cols_;
    std::vector<double> vals_;
};

struct PerplexityCalibration {
    double perplexity = 0.0;
    std::vector<double> bandwidths;           // sigma_i
    std::vector<double> achieved_perplexity;  // 2^H(p_{.|i})
    double tolerance = 1e-5;                  // on log-perplexity
    int max_iterations = 200;
};

struct PerplexityResult {
    AffinityMatrix affinities;
    PerplexityCalibration calibration;
};

// Conditional Gaussian distribution p_{.|i} for one row at bandwidth sigma.
// Returned over all j != i (entry i is zero).
std::vector<double> conditional_row(std::span<const double> sq_dist_row, std::size_t i, double sigma);

// Shannon entropy in nats of a probability vector.
double entropy_nats(std::span<const double> probs);

// Gaussian affinities with per-point bandwidths found by bisection so that
// each conditional distribution has the requested perplexity, symmetrized
// as (p_{i|j} + p_{j|i}) / 2n.
PerplexityResult perplexity_affinities(const PointCloud& points, double perplexity,
                                       double tolerance = 1e-5, int max_iterations = 200);

// Adjacency affinities: 1 on edges, or 1 / (2|E|) when normalized.
AffinityMatrix graph_affinities(const Graph& g, bool normalize);

}  // namespace forcelab
