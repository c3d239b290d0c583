#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forcelab/affinity.hpp"
#include "forcelab/forces.hpp"
#include "forcelab/graph_models.hpp"
#include "forcelab/meanfield.hpp"
#include "forcelab/tsne.hpp"

namespace forcelab {

inline constexpr const char* kVersion = "forcelab 0.1.0";

// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Keys are the OptimizerConfig field names; init takes "pca" or "random".
void apply_optimizer_setting(OptimizerConfig& cfg, const std::string& key, const std::string& value);
OptimizerConfig optimizer_from_text(const std::string& text, OptimizerConfig base = {});
nlohmann::json optimizer_to_json(const OptimizerConfig& cfg);

nlohmann::json to_json(const EnergyStats& s);
nlohmann::json to_json(const RingStats& s);

struct GenGraphOptions {
    GraphKind model = GraphKind::KRegular;
    int n = 0;
    int k = 0;
    double p = 0.0;
    std::uint64_t seed = 0;
    std::string out;  // empty: do not write
};

Graph cmd_gen_graph(const GenGraphOptions& opts);

// Exactly one of graph_path / points_path. Point clouds need a perplexity.
struct AffinitySource {
    std::string graph_path;
    std::string points_path;
    std::optional<double> perplexity;
};

struct LoadedAffinities {
    AffinityMatrix p;  // normalized
    std::optional<Graph> graph;
    std::optional<PointCloud> points;
};

LoadedAffinities load_affinities(const AffinitySource& src);

struct EmbedOptions {
    AffinitySource source;
    OptimizerConfig optimizer;
    std::string out_csv;
    std::string out_json;
};

struct EmbedResult {
    Trajectory trajectory;
    nlohmann::json manifest;
};

EmbedResult cmd_embed(const EmbedOptions& opts);

enum class ColorMode { Magnitude, Direction, Sink };

struct ForcesOptions {
    std::string embedding_path;
    AffinitySource source;
    ForceChannel channel = ForceChannel::Attract;
    ColorMode color = ColorMode::Direction;
    bool arrows = false;
    SinkParams sinks;
    double homogeneity_radius = 0.0;  // <= 0 selects 3 * median NN distance
    std::string out_csv;
    std::string out_svg;
};

struct ForcesResult {
    ForceField field;
    ForcefulColoring coloring;
    SinkAssignment sinks;
    std::vector<std::optional<double>> homogeneity;
    std::vector<Rgb> colors;
    double homogeneity_radius = 0.0;
};

ForcesResult cmd_forces(const ForcesOptions& opts);

// Distinct color per sink label; unassigned points are neutral.
Rgb sink_color(int label);

struct SweepConfig {
    std::vector<int> n_values{1000, 2000, 4000};
    std::vector<double> p_values{0.05, 0.1};
    int trials = 5;
    OptimizerConfig optimizer;
    GraphKind model = GraphKind::KRegular;
    std::string output_dir;  // empty: nothing written
    std::uint64_t base_seed = 0;

    void validate() const;
};

// Sweep keys (n_values, p_values, trials, model, output_dir, base_seed);
// anything else is passed to apply_optimizer_setting.
void apply_sweep_setting(SweepConfig& cfg, const std::string& key, const std::string& value);

// round(n p), lowered by one when n k is odd.
int sweep_degree(int n, double p);
std::uint64_t trial_seed(std::uint64_t base, int n, double p, int trial);

struct SweepRow {
    int n = 0;
    double p = 0.0;
    int k = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::optional<EnergyStats> stats;
    std::optional<RingStats> ring;
    std::string error;  // nonempty when the trial failed
};

struct SweepResult {
    std::vector<SweepRow> rows;
    nlohmann::json manifest;
};

SweepResult cmd_sweep(const SweepConfig& cfg);

// Columns: n,p,k,trial,seed,actual,expectation,variance,sigma,mean_radius,
// radial_cv,annularity. Failed trials leave the numeric fields empty.
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

struct MeanFieldOptions {
    std::optional<double> c;  // wins over sigma/delta/p when set
    MeanFieldParams params;
    double grid_max = 0.0;    // <= 0 selects 3 * max(1, sqrt|c|)
    int grid_points = 3001;
};

nlohmann::json cmd_meanfield(const MeanFieldOptions& opts);

struct RingStatsOptions {
    std::string embedding_path;
    std::string graph_path;  // optional: adds energy statistics
};

nlohmann::json cmd_ring_stats(const RingStatsOptions& opts);

}  // namespace forcelab
