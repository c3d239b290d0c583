#include "forcelab/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace forcelab {

GridIndex::GridIndex(std::span<const Vec2> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) return;
    double max_x = points_[0].x;
    double max_y = points_[0].y;
    min_x_ = points_[0].x;
    min_y_ = points_[0].y;
    for (const Vec2& p : points_) {
        min_x_ = std::min(min_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    const double w = max_x - min_x_;
    const double h = max_y - min_y_;
    const double area = std::max(w * h, std::max(w, h) * std::max(w, h) * 1e-6);
    // About two points per cell.
    cell_ = area > 0.0 ? std::sqrt(2.0 * area / static_cast<double>(points_.size())) : 1.0;
    nx_ = std::max(1L, static_cast<long>(std::floor(w / cell_)) + 1);
    ny_ = std::max(1L, static_cast<long>(std::floor(h / cell_)) + 1);

    const std::size_t cells = static_cast<std::size_t>(nx_ * ny_);
    std::vector<std::size_t> counts(cells + 1, 0);
    std::vector<std::size_t> cell_of(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const long cx = std::clamp(cell_x(points_[i].x), 0L, nx_ - 1);
        const long cy = std::clamp(cell_y(points_[i].y), 0L, ny_ - 1);
        cell_of[i] = static_cast<std::size_t>(cy * nx_ + cx);
        ++counts[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
    cell_start_ = counts;
    order_.resize(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) order_[counts[cell_of[i]]++] = i;
}

long GridIndex::cell_x(double x) const { return static_cast<long>(std::floor((x - min_x_) / cell_)); }
long GridIndex::cell_y(double y) const { return static_cast<long>(std::floor((y - min_y_) / cell_)); }

std::vector<std::size_t> GridIndex::nearest(Vec2 q, std::size_t k) const {
    k = std::min(k, points_.size());
    std::vector<std::pair<double, std::size_t>> found;
    if (k == 0) return {};
    const long qx = cell_x(q.x);
    const long qy = cell_y(q.y);
    // Chebyshev distance (in cells) from the query cell to the farthest grid cell.
    const long reach = std::max({std::abs(qx), std::abs(qx - (nx_ - 1)), std::abs(qy), std::abs(qy - (ny_ - 1))});

    auto scan = [&](long cx, long cy) {
        if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return;
        const auto c = static_cast<std::size_t>(cy * nx_ + cx);
        for (std::size_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
            const std::size_t i = order_[s];
            const double dx = points_[i].x - q.x;
            const double dy = points_[i].y - q.y;
            found.emplace_back(dx * dx + dy * dy, i);
        }
    };

    for (long ring = 0; ring <= reach; ++ring) {
        if (ring == 0) {
            scan(qx, qy);
        } else {
            for (long dx = -ring; dx <= ring; ++dx) {
                scan(qx + dx, qy - ring);
                scan(qx + dx, qy + ring);
            }
            for (long dy = -ring + 1; dy <= ring - 1; ++dy) {
                scan(qx - ring, qy + dy);
                scan(qx + ring, qy + dy);
            }
        }
        if (found.size() >= k) {
            std::nth_element(found.begin(), found.begin() + static_cast<long>(k - 1), found.end());
            // Everything outside the scanned block is at least ring * cell away.
            const double guaranteed = static_cast<double>(ring) * cell_;
            if (found[k - 1].first <= guaranteed * guaranteed) break;
        }
    }
    std::sort(found.begin(), found.end());
    found.resize(k);
    std::vector<std::size_t> out;
    out.reserve(k);
    for (const auto& f : found) out.push_back(f.second);
    return out;
}

std::vector<std::size_t> GridIndex::within(Vec2 q, double radius) const {
    std::vector<std::size_t> out;
    if (points_.empty() || radius < 0.0) return out;
    const long x0 = std::max(0L, cell_x(q.x - radius));
    const long x1 = std::min(nx_ - 1, cell_x(q.x + radius));
    const long y0 = std::max(0L, cell_y(q.y - radius));
    const long y1 = std::min(ny_ - 1, cell_y(q.y + radius));
    const double r2 = radius * radius;
    for (long cy = y0; cy <= y1; ++cy) {
        for (long cx = x0; cx <= x1; ++cx) {
            const auto c = static_cast<std::size_t>(cy * nx_ + cx);
            for (std::size_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
                const std::size_t i = order_[s];
                const double dx = points_[i].x - q.x;
                const double dy = points_[i].y - q.y;
                if (dx * dx + dy * dy <= r2) out.push_back(i);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace forcelab
