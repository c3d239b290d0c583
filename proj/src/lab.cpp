#include "forcelab/lab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "forcelab/io.hpp"

namespace forcelab {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw InvalidArgument(key + ": expected a number, got '" + value + "'");
    }
    return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
    long long v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw InvalidArgument(key + ": expected an integer, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw InvalidArgument(key + ": expected a nonnegative integer, got '" + value + "'");
    }
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_optimizer_setting(OptimizerConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "total_iterations") {
        cfg.total_iterations = static_cast<int>(parse_integer(key, value));
    } else if (key == "exaggeration_iterations") {
        cfg.exaggeration_iterations = static_cast<int>(parse_integer(key, value));
    } else if (key == "exaggeration_factor") {
        cfg.exaggeration_factor = parse_real(key, value);
    } else if (key == "learning_rate") {
        cfg.learning_rate = parse_real(key, value);
    } else if (key == "momentum_early") {
        cfg.momentum_early = parse_real(key, value);
    } else if (key == "momentum_late") {
        cfg.momentum_late = parse_real(key, value);
    } else if (key == "init") {
        if (value == "pca") {
            cfg.init = InitKind::Pca;
        } else if (value == "random") {
            cfg.init = InitKind::Random;
        } else {
            throw InvalidArgument("init: expected pca or random, got '" + value + "'");
        }
    } else if (key == "random_scale") {
        cfg.random_scale = parse_real(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_unsigned(key, value);
    } else if (key == "snapshot_stride") {
        cfg.snapshot_stride = static_cast<int>(parse_integer(key, value));
    } else {
        throw InvalidArgument("unknown config key '" + key + "'");
    }
}

OptimizerConfig optimizer_from_text(const std::string& text, OptimizerConfig base) {
    for (const auto& [k, v] : parse_key_values(text)) apply_optimizer_setting(base, k, v);
    base.validate();
    return base;
}

json optimizer_to_json(const OptimizerConfig& cfg) {
    return {
        {"total_iterations", cfg.total_iterations},
        {"exaggeration_iterations", cfg.exaggeration_iterations},
        {"exaggeration_factor", cfg.exaggeration_factor},
        {"learning_rate", cfg.learning_rate},
        {"momentum_early", cfg.momentum_early},
        {"momentum_late", cfg.momentum_late},
        {"init", cfg.init == InitKind::Pca ? "pca" : "random"},
        {"random_scale", cfg.random_scale},
        {"seed", cfg.seed},
        {"snapshot_stride", cfg.snapshot_stride},
    };
}

json to_json(const EnergyStats& s) {
    return {
        {"actual", s.actual},
        {"expectation", s.expectation},
        {"variance", s.variance},
        {"sigma", optional_number(s.sigma)},
        {"model", s.model == GraphKind::KRegular ? "k-regular" : "er"},
        {"n", s.n},
        {"k_or_p", s.k_or_p},
        {"edge_probability", s.edge_probability},
    };
}

json to_json(const RingStats& s) {
    return {
        {"mean_radius", s.mean_radius},
        {"radial_cv", optional_number(s.radial_cv)},
        {"annularity", s.annularity},
    };
}

// ---------------------------------------------------------------------------
// gen-graph

Graph cmd_gen_graph(const GenGraphOptions& opts) {
    Graph g = opts.model == GraphKind::KRegular ? gen_k_regular(opts.n, opts.k, opts.seed)
                                                : gen_erdos_renyi(opts.n, opts.p, opts.seed);
    if (!opts.out.empty()) write_edge_list(opts.out, g);
    return g;
}

// ---------------------------------------------------------------------------
// embed

LoadedAffinities load_affinities(const AffinitySource& src) {
    const bool has_graph = !src.graph_path.empty();
    const bool has_points = !src.points_path.empty();
    if (has_graph == has_points) throw InvalidArgument("give exactly one of --graph or --points");
    LoadedAffinities out;
    if (has_graph) {
        out.graph = read_edge_list(src.graph_path);
        out.p = graph_affinities(*out.graph, true);
    } else {
        if (!src.perplexity) throw InvalidArgument("--perplexity is required with --points");
        out.points = read_point_cloud(src.points_path);
        out.p = perplexity_affinities(*out.points, *src.perplexity).affinities;
    }
    return out;
}

EmbedResult cmd_embed(const EmbedOptions& opts) {
    opts.optimizer.validate();
    const LoadedAffinities src = load_affinities(opts.source);
    std::optional<Embedding> init;
    // Point clouds are initialized from their own principal axes; graphs
    // from the principal axes of their affinity rows.
    if (src.points && opts.optimizer.init == InitKind::Pca) init = pca_init(*src.points, opts.optimizer.seed);

    EmbedResult result;
    result.trajectory = run(src.p, opts.optimizer, init);

    json snaps = json::array();
    for (const Snapshot& s : result.trajectory.snapshots) {
        snaps.push_back({{"iteration", s.iteration}, {"energy", s.energy}});
    }
    json input;
    if (src.graph) {
        input = {{"kind", "graph"}, {"path", opts.source.graph_path}, {"n", src.graph->n()},
                 {"edges", src.graph->edge_count()}};
    } else {
        input = {{"kind", "points"}, {"path", opts.source.points_path}, {"n", src.points->n},
                 {"dims", src.points->d}, {"perplexity", *opts.source.perplexity}};
    }
    result.manifest = {
        {"version", kVersion},
        {"input", input},
        {"optimizer", optimizer_to_json(opts.optimizer)},
        {"effective_learning_rate", opts.optimizer.effective_learning_rate(src.p.n())},
        {"exaggeration_end_iteration", result.trajectory.exaggeration_end_iteration},
        {"snapshots", snaps},
        {"final_energy", result.trajectory.snapshots.back().energy},
    };
    if (!opts.out_csv.empty()) write_embedding(opts.out_csv, result.trajectory.final);
    if (!opts.out_json.empty()) write_file_atomic(opts.out_json, result.manifest.dump(2) + "\n");
    return result;
}

// ---------------------------------------------------------------------------
// forces

Rgb sink_color(int label) {
    if (label < 0) return kNeutralColor;
    // Golden-angle hue steps keep neighboring labels apart.
    const double degrees = std::fmod(static_cast<double>(label) * 137.50776405, 360.0);
    return hue_for_direction(degrees * M_PI / 180.0);
}

ForcesResult cmd_forces(const ForcesOptions& opts) {
    const Embedding e = read_embedding(opts.embedding_path);
    const LoadedAffinities src = load_affinities(opts.source);
    if (src.p.n() != e.n()) {
        throw InvalidArgument("embedding has " + std::to_string(e.n()) + " points but the affinity source has " +
                              std::to_string(src.p.n()));
    }
    ForcesResult r;
    r.field = decompose_forces(src.p, e);
    const ColorFeature feature = opts.color == ColorMode::Magnitude ? ColorFeature::Magnitude : ColorFeature::Direction;
    r.coloring = coloring(r.field, opts.channel, feature);
    SinkParams sp = opts.sinks;
    sp.channel = opts.channel;
    r.sinks = detect_sinks(r.field, e, sp);
    r.homogeneity_radius = opts.homogeneity_radius > 0.0 ? opts.homogeneity_radius : 3.0 * median_nn_distance(e);
    if (r.homogeneity_radius > 0.0) {
        r.homogeneity = homogeneity_score(r.field, e, r.homogeneity_radius);
    } else {
        r.homogeneity.assign(e.n(), std::nullopt);
    }

    if (opts.color == ColorMode::Sink) {
        r.colors.resize(e.n());
        for (std::size_t i = 0; i < e.n(); ++i) r.colors[i] = sink_color(r.sinks.labels[i]);
    } else {
        r.colors = r.coloring.hue;
    }

    if (!opts.out_csv.empty()) {
        write_file_atomic(opts.out_csv, format_features(e, r.field, r.coloring, r.sinks, r.homogeneity));
    }
    if (!opts.out_svg.empty()) {
        SvgOptions svg;
        if (opts.arrows) {
            const auto& v = opts.channel == ForceChannel::Attract ? r.field.attract : r.field.repulse;
            svg.arrows.resize(e.n());
            for (std::size_t i = 0; i < e.n(); ++i) svg.arrows[i] = {v[2 * i], v[2 * i + 1]};
        }
        write_file_atomic(opts.out_svg, render_svg(e, r.colors, svg));
    }
    return r;
}

// ---------------------------------------------------------------------------
// sweep

void SweepConfig::validate() const {
    if (n_values.empty()) throw InvalidArgument("sweep: n_values is empty");
    if (p_values.empty()) throw InvalidArgument("sweep: p_values is empty");
    if (trials < 1) throw InvalidArgument("sweep: trials must be >= 1");
    for (int n : n_values) {
        if (n < 10) throw InvalidArgument("sweep: every n must be >= 10");
    }
    for (double p : p_values) {
        if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("sweep: every p must lie in (0, 1)");
    }
    optimizer.validate();
}

void apply_sweep_setting(SweepConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "n_values") {
        cfg.n_values.clear();
        for (const auto& item : split_list(value)) cfg.n_values.push_back(static_cast<int>(parse_integer(key, item)));
    } else if (key == "p_values") {
        cfg.p_values.clear();
        for (const auto& item : split_list(value)) cfg.p_values.push_back(parse_real(key, item));
    } else if (key == "trials") {
        cfg.trials = static_cast<int>(parse_integer(key, value));
    } else if (key == "model") {
        if (value == "k-regular") {
            cfg.model = GraphKind::KRegular;
        } else if (value == "er") {
            cfg.model = GraphKind::ErdosRenyi;
        } else {
            throw InvalidArgument("model: expected k-regular or er, got '" + value + "'");
        }
    } else if (key == "output_dir") {
        cfg.output_dir = value;
    } else if (key == "base_seed") {
        cfg.base_seed = parse_unsigned(key, value);
    } else {
        apply_optimizer_setting(cfg.optimizer, key, value);
    }
}

int sweep_degree(int n, double p) {
    int k = static_cast<int>(std::lround(static_cast<double>(n) * p));
    if ((static_cast<long long>(n) * k) % 2 != 0) --k;
    return k;
}

std::uint64_t trial_seed(std::uint64_t base, int n, double p, int trial) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof p);
    std::memcpy(&bits, &p, sizeof bits);
    std::uint64_t s = mix_seed(base, static_cast<std::uint64_t>(n));
    s = mix_seed(s, bits);
    return mix_seed(s, static_cast<std::uint64_t>(trial));
}

SweepResult cmd_sweep(const SweepConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    if (!cfg.output_dir.empty()) fs::create_directories(fs::path(cfg.output_dir) / "embeddings");

    SweepResult result;
    const std::string started = utc_now();
    json trials = json::array();
    for (int n : cfg.n_values) {
        for (double p : cfg.p_values) {
            for (int t = 0; t < cfg.trials; ++t) {
                SweepRow row;
                row.n = n;
                row.p = p;
                row.k = sweep_degree(n, p);
                row.trial = t;
                row.seed = trial_seed(cfg.base_seed, n, p, t);
                json rec = {{"n", n}, {"p", p}, {"k", row.k}, {"trial", t}, {"seed", row.seed},
                            {"started_at", utc_now()}};
                try {
                    const Graph g = cfg.model == GraphKind::KRegular ? gen_k_regular(n, row.k, row.seed)
                                                                     : gen_erdos_renyi(n, p, row.seed);
                    OptimizerConfig oc = cfg.optimizer;
                    oc.seed = row.seed;
                    const Trajectory traj = run(graph_affinities(g, true), oc);
                    row.stats = energy_stats(g, traj.final);
                    row.ring = ring_stats(traj.final);
                    rec["edges"] = g.edge_count();
                    rec["energy_stats"] = to_json(*row.stats);
                    rec["ring_stats"] = to_json(*row.ring);
                    rec["final_kl"] = traj.snapshots.back().energy;
                    if (!cfg.output_dir.empty()) {
                        const std::string name = "n" + std::to_string(n) + "_p" + format_double(p) + "_t" +
                                                 std::to_string(t) + ".csv";
                        const fs::path path = fs::path(cfg.output_dir) / "embeddings" / name;
                        write_embedding(path.string(), traj.final);
                        rec["embedding"] = (fs::path("embeddings") / name).string();
                    }
                } catch (const std::exception& ex) {
                    row.error = ex.what();
                    rec["error"] = row.error;
                }
                rec["finished_at"] = utc_now();
                trials.push_back(rec);
                result.rows.push_back(std::move(row));
            }
        }
    }

    result.manifest = {
        {"version", kVersion},
        {"config",
         {{"n_values", cfg.n_values},
          {"p_values", cfg.p_values},
          {"trials", cfg.trials},
          {"model", cfg.model == GraphKind::KRegular ? "k-regular" : "er"},
          {"base_seed", cfg.base_seed},
          {"optimizer", optimizer_to_json(cfg.optimizer)}}},
        {"started_at", started},
        {"finished_at", utc_now()},
        {"trials", trials},
    };
    if (!cfg.output_dir.empty()) {
        write_file_atomic((fs::path(cfg.output_dir) / "stats.csv").string(), format_sweep_csv(result.rows));
        write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), result.manifest.dump(2) + "\n");
    }
    return result;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "n,p,k,trial,seed,actual,expectation,variance,sigma,mean_radius,radial_cv,annularity\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.n) + "," + format_double(r.p) + "," + std::to_string(r.k) + "," +
               std::to_string(r.trial) + "," + std::to_string(r.seed);
        if (r.stats && r.ring) {
            out += "," + format_double(r.stats->actual) + "," + format_double(r.stats->expectation) + "," +
                   format_double(r.stats->variance) + "," + (r.stats->sigma ? format_double(*r.stats->sigma) : "") +
                   "," + format_double(r.ring->mean_radius) + "," +
                   (r.ring->radial_cv ? format_double(*r.ring->radial_cv) : "") + "," +
                   format_double(r.ring->annularity);
        } else {
            out += ",,,,,,,";
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// meanfield

namespace {

DiscreteMeasure two_diracs(double d) { return DiscreteMeasure::uniform({{0.0, 0.0}, {d, 0.0}}); }

DiscreteMeasure thin_ring(double diameter) {
    return discretize_radial(RadialMeasure{{0.5 * diameter}, {1.0}}, 64);
}

json taylor_family(const std::string& name, DiscreteMeasure (*family)(double)) {
    const TaylorReport wide = taylor_check(family(0.1));
    const TaylorReport narrow = taylor_check(family(0.05));
    const double ratio = wide.residual / narrow.residual;
    return {{"family", name},
            {"residual_d0.1", wide.residual},
            {"residual_d0.05", narrow.residual},
            {"ratio", ratio},
            {"pass", ratio >= 16.0}};
}

}  // namespace

json cmd_meanfield(const MeanFieldOptions& opts) {
    MeanFieldParams params = opts.params;
    if (opts.c) params = {*opts.c, 1.0, 1.0};
    params.validate();
    const double c = params.c();
    if (opts.grid_points < 2) throw InvalidArgument("grid_points must be >= 2");

    const RadialOptimum closed = radial_minimizer(c);
    const double grid_max = opts.grid_max > 0.0 ? opts.grid_max : 3.0 * std::max(1.0, std::sqrt(std::abs(c)));
    std::vector<double> grid(static_cast<std::size_t>(opts.grid_points));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = grid_max * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    }
    const NumericRadialResult numeric = numeric_radial_minimize(c, grid);
    double mass_near = 0.0;
    for (std::size_t i = 0; i < numeric.measure.radii.size(); ++i) {
        if (std::abs(numeric.measure.radii[i] - closed.radius) <= 1e-3) mass_near += numeric.measure.weights[i];
    }
    const double b_err = closed.b_star > 0.0 ? std::abs(numeric.moments.b - closed.b_star) / closed.b_star
                                             : std::abs(numeric.moments.b);
    const bool numeric_ok = mass_near >= 0.99 && (closed.b_star > 0.0 ? b_err <= 0.01 : b_err <= 1e-12);

    json radii = json::array();
    for (std::size_t i = 0; i < numeric.measure.radii.size(); ++i) {
        radii.push_back({{"r", numeric.measure.radii[i]}, {"weight", numeric.measure.weights[i]}});
    }

    // Scaling symmetry on a fixed asymmetric measure.
    const DiscreteMeasure mu{{{0.0, 0.0}, {0.3, -0.1}, {-0.2, 0.4}, {0.5, 0.25}, {-0.35, -0.3}},
                             {0.1, 0.3, 0.2, 0.25, 0.15}};
    json scaling = json::array();
    bool scaling_ok = true;
    for (double lambda : {0.5, 2.0}) {
        const double lhs = functional_J(mu.scaled(lambda), params) / std::pow(lambda, 4);
        const double rhs = functional_J(mu, {params.sigma, params.delta / (lambda * lambda), params.p});
        const double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
        const bool ok = rel <= 1e-10;
        scaling_ok = scaling_ok && ok;
        scaling.push_back({{"lambda", lambda}, {"lhs", lhs}, {"rhs", rhs}, {"relative_error", rel}, {"pass", ok}});
    }

    const json taylor = json::array({taylor_family("two_diracs", two_diracs), taylor_family("thin_ring", thin_ring)});
    const bool taylor_ok = taylor[0]["pass"].get<bool>() && taylor[1]["pass"].get<bool>();

    return {
        {"version", kVersion},
        {"params", {{"sigma", params.sigma}, {"delta", params.delta}, {"p", params.p}, {"c", c}}},
        {"closed_form", {{"b_star", closed.b_star}, {"radius", closed.radius}}},
        {"numeric",
         {{"grid_max", grid_max},
          {"grid_points", opts.grid_points},
          {"measure", radii},
          {"a", numeric.moments.a},
          {"b", numeric.moments.b},
          {"value", numeric.value},
          {"mass_near_closed_form_radius", mass_near},
          {"b_relative_error", b_err},
          {"pass", numeric_ok}}},
        {"scaling_symmetry", {{"cases", scaling}, {"pass", scaling_ok}}},
        {"taylor", {{"families", taylor}, {"pass", taylor_ok}}},
        {"pass", numeric_ok && scaling_ok && taylor_ok},
    };
}

// ---------------------------------------------------------------------------
// ring-stats

json cmd_ring_stats(const RingStatsOptions& opts) {
    const Embedding e = read_embedding(opts.embedding_path);
    json out = {{"version", kVersion}, {"n", e.n()}, {"ring_stats", to_json(ring_stats(e))}};
    if (!opts.graph_path.empty()) {
        const Graph g = read_edge_list(opts.graph_path);
        if (static_cast<std::size_t>(g.n()) != e.n()) {
            throw InvalidArgument("graph has " + std::to_string(g.n()) + " vertices but the embedding has " +
                                  std::to_string(e.n()) + " points");
        }
        out["energy_stats"] = to_json(energy_stats(g, e));
    }
    return out;
}

}  // namespace forcelab
