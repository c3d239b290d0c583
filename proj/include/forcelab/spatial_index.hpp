#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forcelab/common.hpp"

namespace forcelab {

// Uniform-grid bucket index over a fixed set of planar points.
class GridIndex {
public:
    explicit GridIndex(std::span<const Vec2> points);

    // Indices of the k nearest points to q, closest first. Ties are broken
    // by index so results are reproducible.
    std::vector<std::size_t> nearest(Vec2 q, std::size_t k) const;

    // Indices of all points with |p - q| <= radius, ascending.
    std::vector<std::size_t> within(Vec2 q, double radius) const;

    std::size_t size() const { return points_.size(); }

private:
    long cell_x(double x) const;
    long cell_y(double y) const;

    std::vector<Vec2> points_;
    double min_x_ = 0.0;
    double min_y_ = 0.0;
    double cell_ = 1.0;
    long nx_ = 1;
    long ny_ = 1;
    std::vector<std::size_t> cell_start_;
    std::vector<std::size_t> order_;
};

}  // namespace forcelab
