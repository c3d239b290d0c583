#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "forcelab/io.hpp"
#include "forcelab/lab.hpp"

using namespace forcelab;

namespace {

// Optimizer overrides; unset flags keep the config-file or default value.
struct OptimizerFlags {
    std::string config;
    std::optional<int> total_iterations;
    std::optional<int> exaggeration_iterations;
    std::optional<double> exaggeration_factor;
    std::optional<double> learning_rate;
    std::optional<double> momentum_early;
    std::optional<double> momentum_late;
    std::optional<std::string> init;
    std::optional<double> random_scale;
    std::optional<std::uint64_t> seed;
    std::optional<int> snapshot_stride;
};

void add_optimizer_flags(CLI::App* cmd, OptimizerFlags& f, bool with_config) {
    if (with_config) cmd->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--iterations", f.total_iterations, "total iterations (750)");
    cmd->add_option("--exaggeration-iters", f.exaggeration_iterations, "early exaggeration iterations (250)");
    cmd->add_option("--exaggeration", f.exaggeration_factor, "early exaggeration factor (12)");
    cmd->add_option("--learning-rate", f.learning_rate, "step size; 0 selects 200 n / 1000");
    cmd->add_option("--momentum-early", f.momentum_early, "momentum during exaggeration (0.5)");
    cmd->add_option("--momentum-late", f.momentum_late, "momentum afterwards (0.8)");
    cmd->add_option("--init", f.init, "pca or random")->check(CLI::IsMember({"pca", "random"}));
    cmd->add_option("--random-scale", f.random_scale, "std of the random initialization (1e-4)");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--snapshot-stride", f.snapshot_stride, "iterations between snapshots (50)");
}

std::string as_text(int v) { return std::to_string(v); }
std::string as_text(std::uint64_t v) { return std::to_string(v); }
std::string as_text(double v) { return format_double(v); }
std::string as_text(const std::string& v) { return v; }

template <typename Set>
void for_each_flag(const OptimizerFlags& f, Set&& set) {
    auto put = [&](const char* key, const auto& v) {
        if (v) set(key, as_text(*v));
    };
    put("total_iterations", f.total_iterations);
    put("exaggeration_iterations", f.exaggeration_iterations);
    put("exaggeration_factor", f.exaggeration_factor);
    put("learning_rate", f.learning_rate);
    put("momentum_early", f.momentum_early);
    put("momentum_late", f.momentum_late);
    put("init", f.init);
    put("random_scale", f.random_scale);
    put("seed", f.seed);
    put("snapshot_stride", f.snapshot_stride);
}

OptimizerConfig resolve_optimizer(const OptimizerFlags& f) {
    OptimizerConfig cfg;
    if (!f.config.empty()) {
        for (const auto& [k, v] : parse_key_values(read_file(f.config))) apply_optimizer_setting(cfg, k, v);
    }
    for_each_flag(f, [&](const std::string& k, const std::string& v) { apply_optimizer_setting(cfg, k, v); });
    cfg.validate();
    return cfg;
}

void emit_json(const nlohmann::json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact t-SNE laboratory: random-graph embeddings, force features and mean-field checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // gen-graph
    auto* gen = app.add_subcommand("gen-graph", "sample a random graph and write its edge list");
    std::string gen_model;
    GenGraphOptions gen_opts;
    gen->add_option("--model", gen_model, "k-regular or er")->required()->check(CLI::IsMember({"k-regular", "er"}));
    gen->add_option("--n", gen_opts.n, "vertex count")->required()->check(CLI::PositiveNumber);
    auto* gen_k = gen->add_option("--k", gen_opts.k, "degree (k-regular)")->check(CLI::NonNegativeNumber);
    auto* gen_p = gen->add_option("--p", gen_opts.p, "edge probability (er)")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", gen_opts.seed, "random seed");
    gen->add_option("--out", gen_opts.out, "edge-list path (stdout when omitted)");

    // embed
    auto* embed = app.add_subcommand("embed", "run exact t-SNE on a graph or a point cloud");
    EmbedOptions embed_opts;
    OptimizerFlags embed_flags;
    std::optional<double> embed_perplexity;
    embed->add_option("--graph", embed_opts.source.graph_path, "edge-list input")->check(CLI::ExistingFile);
    embed->add_option("--points", embed_opts.source.points_path, "point-cloud CSV input")->check(CLI::ExistingFile);
    embed->add_option("--perplexity", embed_perplexity, "perplexity for point-cloud input");
    add_optimizer_flags(embed, embed_flags, true);
    embed->add_option("--out", embed_opts.out_csv, "embedding CSV path")->required();
    embed->add_option("--manifest", embed_opts.out_json, "trajectory JSON path");

    // forces
    auto* forces = app.add_subcommand("forces", "export force features and an SVG plot for an embedding");
    ForcesOptions force_opts;
    std::optional<double> force_perplexity;
    std::string channel = "attract";
    std::string color = "direction";
    forces->add_option("--embedding", force_opts.embedding_path, "embedding CSV")->required()->check(CLI::ExistingFile);
    forces->add_option("--graph", force_opts.source.graph_path, "edge-list affinity source")->check(CLI::ExistingFile);
    forces->add_option("--points", force_opts.source.points_path, "point-cloud affinity source")
        ->check(CLI::ExistingFile);
    forces->add_option("--perplexity", force_perplexity, "perplexity for point-cloud input");
    forces->add_option("--channel", channel, "attract or repulse")->check(CLI::IsMember({"attract", "repulse"}));
    forces->add_option("--color", color, "magnitude, direction or sink")
        ->check(CLI::IsMember({"magnitude", "direction", "sink"}));
    forces->add_flag("--arrows", force_opts.arrows, "draw force arrows");
    forces->add_option("--step", force_opts.sinks.step, "flow step (0: 0.1 x median NN distance)");
    forces->add_option("--neighbors", force_opts.sinks.neighbors, "interpolation neighbors (15)")
        ->check(CLI::PositiveNumber);
    forces->add_option("--max-steps", force_opts.sinks.max_steps, "flow step limit (500)")->check(CLI::PositiveNumber);
    forces->add_option("--merge-radius", force_opts.sinks.merge_radius, "sink merge radius (0: median NN distance)");
    forces->add_flag("--reverse", force_opts.sinks.reverse, "follow the reversed field (sources)");
    forces->add_option("--homogeneity-radius", force_opts.homogeneity_radius,
                       "neighborhood radius (0: 3 x median NN distance)");
    forces->add_option("--out", force_opts.out_csv, "feature CSV path");
    forces->add_option("--svg", force_opts.out_svg, "SVG path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "embed random graphs over an (n, p) grid and record energy statistics");
    SweepConfig sweep_cfg;
    OptimizerFlags sweep_flags;
    std::string sweep_config_path;
    std::vector<int> sweep_n;
    std::vector<double> sweep_p;
    std::optional<int> sweep_trials;
    std::optional<std::string> sweep_model;
    std::optional<std::uint64_t> sweep_seed;
    std::string sweep_out;
    sweep->add_option("--config", sweep_config_path, "key = value config file")->check(CLI::ExistingFile);
    sweep->add_option("--n", sweep_n, "vertex counts")->delimiter(',');
    sweep->add_option("--p", sweep_p, "edge densities")->delimiter(',');
    sweep->add_option("--trials", sweep_trials, "trials per cell (5)");
    sweep->add_option("--model", sweep_model, "k-regular or er")->check(CLI::IsMember({"k-regular", "er"}));
    sweep->add_option("--base-seed", sweep_seed, "base seed");
    sweep->add_option("--out-dir", sweep_out, "output directory")->required();
    add_optimizer_flags(sweep, sweep_flags, false);

    // meanfield
    auto* mf = app.add_subcommand("meanfield", "check the radial minimizer of the limiting functional");
    MeanFieldOptions mf_opts;
    std::string mf_out;
    mf->add_option("--c", mf_opts.c, "c = sigma delta / sqrt(p); overrides the three below");
    mf->add_option("--sigma", mf_opts.params.sigma, "sigma (-1)");
    mf->add_option("--delta", mf_opts.params.delta, "delta (1)");
    mf->add_option("--p", mf_opts.params.p, "edge density (1)");
    mf->add_option("--grid-max", mf_opts.grid_max, "largest radius on the grid (0: automatic)");
    mf->add_option("--grid-points", mf_opts.grid_points, "grid size (3001)");
    mf->add_option("--out", mf_out, "report path (stdout when omitted)");

    // ring-stats
    auto* rs = app.add_subcommand("ring-stats", "ring diagnostics (and energy statistics) for an embedding");
    RingStatsOptions rs_opts;
    std::string rs_out;
    rs->add_option("--embedding", rs_opts.embedding_path, "embedding CSV")->required()->check(CLI::ExistingFile);
    rs->add_option("--graph", rs_opts.graph_path, "edge list; adds energy statistics")->check(CLI::ExistingFile);
    rs->add_option("--out", rs_out, "report path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            if (gen_model == "k-regular") {
                if (!*gen_k) throw InvalidArgument("--k is required for --model k-regular");
                gen_opts.model = GraphKind::KRegular;
            } else {
                if (!*gen_p) throw InvalidArgument("--p is required for --model er");
                gen_opts.model = GraphKind::ErdosRenyi;
            }
            const Graph g = cmd_gen_graph(gen_opts);
            if (gen_opts.out.empty()) std::cout << format_edge_list(g);
        } else if (*embed) {
            embed_opts.source.perplexity = embed_perplexity;
            embed_opts.optimizer = resolve_optimizer(embed_flags);
            const EmbedResult r = cmd_embed(embed_opts);
            std::cerr << "final KL " << r.trajectory.snapshots.back().energy << "\n";
        } else if (*forces) {
            force_opts.source.perplexity = force_perplexity;
            force_opts.channel = channel == "attract" ? ForceChannel::Attract : ForceChannel::Repulse;
            force_opts.color = color == "magnitude" ? ColorMode::Magnitude
                               : color == "sink"    ? ColorMode::Sink
                                                    : ColorMode::Direction;
            const ForcesResult r = cmd_forces(force_opts);
            std::size_t assigned = 0;
            for (int l : r.sinks.labels) assigned += l != kUnassigned;
            std::cerr << r.sinks.sinks.size() << " sinks, " << assigned << " of " << r.sinks.labels.size()
                      << " points assigned\n";
        } else if (*sweep) {
            if (!sweep_config_path.empty()) {
                for (const auto& [k, v] : parse_key_values(read_file(sweep_config_path))) {
                    apply_sweep_setting(sweep_cfg, k, v);
                }
            }
            if (!sweep_n.empty()) sweep_cfg.n_values = sweep_n;
            if (!sweep_p.empty()) sweep_cfg.p_values = sweep_p;
            if (sweep_trials) sweep_cfg.trials = *sweep_trials;
            if (sweep_model) apply_sweep_setting(sweep_cfg, "model", *sweep_model);
            if (sweep_seed) sweep_cfg.base_seed = *sweep_seed;
            sweep_cfg.output_dir = sweep_out;
            for_each_flag(sweep_flags, [&](const std::string& k, const std::string& v) {
                apply_optimizer_setting(sweep_cfg.optimizer, k, v);
            });
            const SweepResult r = cmd_sweep(sweep_cfg);
            std::size_t failed = 0;
            for (const SweepRow& row : r.rows) failed += !row.error.empty();
            std::cerr << r.rows.size() << " trials, " << failed << " failed\n";
        } else if (*mf) {
            const nlohmann::json report = cmd_meanfield(mf_opts);
            emit_json(report, mf_out);
            if (!report["pass"].get<bool>()) return 1;
        } else if (*rs) {
            emit_json(cmd_ring_stats(rs_opts), rs_out);
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
