#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "forcelab/affinity.hpp"
#include "forcelab/tsne.hpp"

namespace forcelab {

// Per-point attractive and repulsive components of the negative t-SNE
// gradient. Vectors are interleaved (x, y) per point.
struct ForceField {
    std::vector<double> attract;
    std::vector<double> repulse;
    std::vector<double> net;  // attract + repulse == -dE/dy

    std::size_t n() const { return attract.size() / 2; }
    Vec2 attract_at(std::size_t i) const { return {attract[2 * i], attract[2 * i + 1]}; }
    Vec2 repulse_at(std::size_t i) const { return {repulse[2 * i], repulse[2 * i + 1]}; }
    Vec2 net_at(std::size_t i) const { return {net[2 * i], net[2 * i + 1]}; }
};

ForceField decompose_forces(const AffinityMatrix& p, const Embedding& e);

enum class ForceChannel { Attract, Repulse };
enum class ColorFeature { Magnitude, Direction };

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

// Color for points whose force vanishes.
inline constexpr Rgb kNeutralColor{160, 160, 160};

// Fixed 360-step wheel: angle (radians) -> hue in whole degrees at full
// saturation and value. Angle 0 is red.
Rgb hue_for_direction(double angle);
// Sequential colormap on [0, 1] (dark blue to yellow).
Rgb magnitude_color(double t);

struct ForcefulColoring {
    std::vector<double> magnitude;
    std::vector<std::optional<double>> direction;  // [0, 2pi); empty when magnitude is 0
    std::vector<Rgb> hue;
};

// Direction-feature colors come from the hue wheel; magnitude-feature colors
// map |F| / max |F| through magnitude_color.
ForcefulColoring coloring(const ForceField& f, ForceChannel channel, ColorFeature feature);

struct SinkParams {
    double step = 0.0;          // flow step h; <= 0 selects 0.1 * median NN distance
    std::size_t neighbors = 15;  // K for inverse-distance interpolation
    int max_steps = 500;
    double merge_radius = 0.0;  // <= 0 selects 1.0 * median NN distance
    ForceChannel channel = ForceChannel::Attract;
    bool reverse = false;       // follow -F (sources instead of sinks)
};

struct SinkAssignment {
    std::vector<Vec2> sinks;
    std::vector<int> labels;     // sink index, or -1 when unassigned
    std::vector<Vec2> terminals;  // where each flow stopped
    SinkParams params;           // with defaults resolved
};

inline constexpr int kUnassigned = -1;

double median_nn_distance(const Embedding& e);

// Integrates each point along the (normalized, interpolated) force field and
// groups the terminal positions into sinks.
SinkAssignment detect_sinks(const ForceField& f, const Embedding& e, SinkParams params = {});

// Circular variance of the attractive directions of neighbors within
// `radius` (the point itself excluded). Empty for isolated points.
std::vector<std::optional<double>> homogeneity_score(const ForceField& f, const Embedding& e, double radius);

}  // namespace forcelab
