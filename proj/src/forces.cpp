#include "forcelab/forces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "forcelab/spatial_index.hpp"

namespace forcelab {

ForceField decompose_forces(const AffinityMatrix& p, const Embedding& e) {
    ForceTerms terms = force_terms(p, e);
    ForceField f;
    f.attract = std::move(terms.attract);
    f.repulse = std::move(terms.repulse);
    f.net.resize(f.attract.size());
    for (std::size_t k = 0; k < f.net.size(); ++k) f.net[k] = f.attract[k] + f.repulse[k];
    return f;
}

Rgb hue_for_direction(double angle) {
    const double turn = 2.0 * std::numbers::pi;
    double a = std::fmod(angle, turn);
    if (a < 0.0) a += turn;
    const int degree = static_cast<int>(std::floor(a / turn * 360.0)) % 360;
    // HSV -> RGB with S = V = 1.
    const double h = degree / 60.0;
    const int sector = static_cast<int>(h);
    const double frac = h - sector;
    const auto up = static_cast<std::uint8_t>(std::lround(255.0 * frac));
    const auto down = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - frac)));
    switch (sector) {
        case 0: return {255, up, 0};
        case 1: return {down, 255, 0};
        case 2: return {0, 255, up};
        case 3: return {0, down, 255};
        case 4: return {up, 0, 255};
        default: return {255, 0, down};
    }
}

Rgb magnitude_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    // Piecewise-linear through dark blue, teal, green, yellow.
    static constexpr double stops[4][3] = {{68, 1, 84}, {49, 104, 142}, {53, 183, 121}, {253, 231, 37}};
    const double s = t * 3.0;
    const int k = std::min(2, static_cast<int>(s));
    const double u = s - k;
    auto lerp = [&](int c) {
        return static_cast<std::uint8_t>(std::lround(stops[k][c] + u * (stops[k + 1][c] - stops[k][c])));
    };
    return {lerp(0), lerp(1), lerp(2)};
}

ForcefulColoring coloring(const ForceField& f, ForceChannel channel, ColorFeature feature) {
    const std::vector<double>& v = channel == ForceChannel::Attract ? f.attract : f.repulse;
    const std::size_t n = f.n();
    ForcefulColoring out;
    out.magnitude.resize(n);
    out.direction.resize(n);
    out.hue.resize(n);
    double max_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[2 * i];
        const double y = v[2 * i + 1];
        out.magnitude[i] = std::hypot(x, y);
        max_mag = std::max(max_mag, out.magnitude[i]);
        if (out.magnitude[i] > 0.0) {
            double angle = std::atan2(y, x);
            if (angle < 0.0) angle += 2.0 * std::numbers::pi;
            out.direction[i] = angle;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.direction[i]) {
            out.hue[i] = kNeutralColor;
        } else if (feature == ColorFeature::Direction) {
            out.hue[i] = hue_for_direction(*out.direction[i]);
        } else {
            out.hue[i] = magnitude_color(out.magnitude[i] / max_mag);
        }
    }
    return out;
}

namespace {

std::vector<Vec2> positions(const Embedding& e) {
    std::vector<Vec2> pts(e.n());
    for (std::size_t i = 0; i < e.n(); ++i) pts[i] = e.point(i);
    return pts;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

double median_nn_distance(const Embedding& e) {
    if (e.n() < 2) return 0.0;
    const std::vector<Vec2> pts = positions(e);
    GridIndex index(pts);
    std::vector<double> nn(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto near = index.nearest(pts[i], 2);
        // nearest() may return i second when duplicates exist; take the other.
        const std::size_t j = near[0] == i ? near[1] : near[0];
        nn[i] = norm(pts[j] - pts[i]);
    }
    const auto mid = nn.begin() + static_cast<long>(nn.size() / 2);
    std::nth_element(nn.begin(), mid, nn.end());
    return *mid;
}

SinkAssignment detect_sinks(const ForceField& f, const Embedding& e, SinkParams params) {
    const std::size_t n = e.n();
    if (n == 0) throw InvalidArgument("detect_sinks: empty embedding");
    if (f.n() != n) throw InvalidArgument("detect_sinks: force field and embedding differ in size");
    if (params.neighbors == 0) throw InvalidArgument("detect_sinks: neighbors must be >= 1");

    const double scale = median_nn_distance(e);
    if (params.step <= 0.0) params.step = 0.1 * scale;
    if (params.merge_radius <= 0.0) params.merge_radius = scale;

    SinkAssignment out;
    out.labels.assign(n, kUnassigned);
    out.terminals.resize(n);

    const std::vector<double>& field = params.channel == ForceChannel::Attract ? f.attract : f.repulse;
    std::vector<Vec2> vec(n);
    std::vector<double> mag(n);
    double max_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        vec[i] = {field[2 * i], field[2 * i + 1]};
        if (params.reverse) vec[i] = -1.0 * vec[i];
        mag[i] = norm(vec[i]);
        max_mag = std::max(max_mag, mag[i]);
    }
    const std::vector<Vec2> pts = positions(e);
    out.params = params;
    for (std::size_t i = 0; i < n; ++i) out.terminals[i] = pts[i];
    if (!(max_mag > 0.0) || !(params.step > 0.0)) return out;

    const GridIndex index(pts);
    const double h = params.step;
    const double soft = 1e-6 * h * h;

    // Inverse-distance (power 2) interpolation normalized by the interpolated
    // magnitude: |F| is 1 where neighbors agree and near 0 where they cancel.
    auto interpolate = [&](Vec2 x) -> std::optional<Vec2> {
        Vec2 acc{};
        double weight_mag = 0.0;
        for (std::size_t j : index.nearest(x, params.neighbors)) {
            const Vec2 d = pts[j] - x;
            const double w = 1.0 / (d.x * d.x + d.y * d.y + soft);
            acc = acc + w * vec[j];
            weight_mag += w * mag[j];
        }
        if (!(weight_mag > 0.0)) return std::nullopt;
        return (1.0 / weight_mag) * acc;
    };

    constexpr std::size_t kWindow = 20;
    std::vector<char> terminated(n, 0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<Vec2> window;
        for (std::size_t i = begin; i < end; ++i) {
            Vec2 x = pts[i];
            window.clear();
            for (int step = 0; step < params.max_steps; ++step) {
                const auto dir = interpolate(x);
                if (!dir) break;
                const Vec2 move = h * *dir;
                x = x + move;
                if (norm(move) < 0.1 * h) {
                    terminated[i] = 1;
                    break;
                }
                // Oscillation around a sink: the last kWindow positions stay
                // inside a small ball; stop at their centroid.
                window.push_back(x);
                if (window.size() > kWindow) window.erase(window.begin());
                if (window.size() == kWindow) {
                    Vec2 c{};
                    for (const Vec2& w : window) c = c + w;
                    c = (1.0 / kWindow) * c;
                    double spread = 0.0;
                    for (const Vec2& w : window) spread = std::max(spread, norm(w - c));
                    if (spread < 0.5 * params.merge_radius) {
                        x = c;
                        terminated[i] = 1;
                        break;
                    }
                }
            }
            out.terminals[i] = x;
        }
    });

    // Single linkage over terminal positions at merge_radius.
    std::vector<std::size_t> done;
    for (std::size_t i = 0; i < n; ++i) {
        if (terminated[i]) done.push_back(i);
    }
    std::vector<Vec2> ends(done.size());
    for (std::size_t a = 0; a < done.size(); ++a) ends[a] = out.terminals[done[a]];
    std::vector<std::size_t> parent(done.size());
    std::iota(parent.begin(), parent.end(), 0);
    if (!ends.empty()) {
        const GridIndex end_index(ends);
        for (std::size_t a = 0; a < ends.size(); ++a) {
            for (std::size_t b : end_index.within(ends[a], params.merge_radius)) {
                const std::size_t ra = find_root(parent, a);
                const std::size_t rb = find_root(parent, b);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }

    // Centroids; merge clusters whose centroids end up within merge_radius.
    bool merged = true;
    std::vector<std::size_t> roots;
    std::vector<Vec2> centroids;
    while (merged) {
        merged = false;
        roots.clear();
        for (std::size_t a = 0; a < ends.size(); ++a) {
            if (find_root(parent, a) == a) roots.push_back(a);
        }
        centroids.assign(roots.size(), Vec2{});
        std::vector<std::size_t> counts(roots.size(), 0);
        for (std::size_t a = 0; a < ends.size(); ++a) {
            const auto r = static_cast<std::size_t>(
                std::lower_bound(roots.begin(), roots.end(), find_root(parent, a)) - roots.begin());
            centroids[r] = centroids[r] + ends[a];
            ++counts[r];
        }
        for (std::size_t r = 0; r < roots.size(); ++r) centroids[r] = (1.0 / counts[r]) * centroids[r];
        for (std::size_t r = 0; r < roots.size() && !merged; ++r) {
            for (std::size_t s = r + 1; s < roots.size(); ++s) {
                if (norm(centroids[r] - centroids[s]) <= params.merge_radius) {
                    parent[roots[s]] = roots[r];
                    merged = true;
                    break;
                }
            }
        }
    }

    // Canonical sink order (by position) so labels do not depend on input order.
    std::vector<std::size_t> rank(roots.size());
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (centroids[a].x != centroids[b].x) return centroids[a].x < centroids[b].x;
        return centroids[a].y < centroids[b].y;
    });
    std::vector<int> label_of_root(roots.size());
    for (std::size_t k = 0; k < rank.size(); ++k) {
        label_of_root[rank[k]] = static_cast<int>(k);
        out.sinks.push_back(centroids[rank[k]]);
    }
    for (std::size_t a = 0; a < ends.size(); ++a) {
        const auto r = static_cast<std::size_t>(
            std::lower_bound(roots.begin(), roots.end(), find_root(parent, a)) - roots.begin());
        out.labels[done[a]] = label_of_root[r];
    }
    return out;
}

std::vector<std::optional<double>> homogeneity_score(const ForceField& f, const Embedding& e, double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("homogeneity_score: radius must be > 0");
    if (f.n() != e.n()) throw InvalidArgument("homogeneity_score: force field and embedding differ in size");
    const std::size_t n = e.n();
    const std::vector<Vec2> pts = positions(e);
    const GridIndex index(pts);
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 sum{};
        std::size_t count = 0;
        for (std::size_t j : index.within(pts[i], radius)) {
            if (j == i) continue;
            const Vec2 a = f.attract_at(j);
            const double m = norm(a);
            if (!(m > 0.0)) continue;
            sum = sum + (1.0 / m) * a;
            ++count;
        }
        if (count == 0) continue;
        out[i] = std::clamp(1.0 - norm(sum) / static_cast<double>(count), 0.0, 1.0);
    }
    return out;
}

}  // namespace forcelab
