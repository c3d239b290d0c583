#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forcelab/affinity.hpp"
#include "forcelab/forces.hpp"
#include "forcelab/graph_models.hpp"
#include "forcelab/meanfield.hpp"
#include "forcelab/tsne.hpp"

namespace forcelab {

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// Edge list: header "<n> k=<k> <seed>" or "<n> p=<p> <seed>", then one
// "u v" line per edge.
std::string format_edge_list(const Graph& g);
Graph parse_edge_list(const std::string& text);
void write_edge_list(const std::string& path, const Graph& g);
Graph read_edge_list(const std::string& path);

// Numeric CSV, one row per point. A first line containing a non-numeric
// field is treated as a header and skipped.
PointCloud read_point_cloud(const std::string& path);
PointCloud parse_point_cloud(const std::string& text);

// "index,x,y"
std::string format_embedding(const Embedding& e);
Embedding parse_embedding(const std::string& text);
void write_embedding(const std::string& path, const Embedding& e);
Embedding read_embedding(const std::string& path);

// "i,j,p", both orientations of every pair.
std::string format_affinities(const AffinityMatrix& p);
void write_affinities(const std::string& path, const AffinityMatrix& p);

// "x,y,weight" and "r,weight".
DiscreteMeasure parse_measure(const std::string& text);
RadialMeasure parse_radial_measure(const std::string& text);
std::string format_measure(const DiscreteMeasure& mu);
std::string format_radial_measure(const RadialMeasure& nu);

// "index,x,y,ax,ay,rx,ry,magnitude,direction,sink_label,homogeneity".
// Undefined direction and homogeneity are written as empty fields.
std::string format_features(const Embedding& e, const ForceField& f, const ForcefulColoring& c,
                            const SinkAssignment& sinks, const std::vector<std::optional<double>>& homogeneity);

struct SvgOptions {
    double size = 800.0;    // canvas width and height in pixels
    double margin = 20.0;
    double point_radius = 2.0;
    // Optional per-point arrows (data units are rescaled to at most
    // arrow_length pixels for the largest vector).
    std::vector<Vec2> arrows;
    double arrow_length = 12.0;
};

// Scatter plot; one <circle> per point, in index order.
std::string render_svg(const Embedding& e, const std::vector<Rgb>& colors, const SvgOptions& opts = {});

}  // namespace forcelab
