#include "algsmooth/commands.hpp"
#include "algsmooth/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>

using namespace algsmooth;

namespace {

struct SourceFlags {
    std::string edges, features, labels, synthetic;
    SyntheticSpec spec;
    std::size_t feature_dim = 64;
    std::uint64_t feature_seed = 0;
    double feature_scale = 1.0;

    void attach(CLI::App* app) {
        app->add_option("--edges", edges, "edge list file (i j [w] per line)");
        app->add_option("--features", features, "node feature CSV");
        app->add_option("--labels", labels, "node label file");
        app->add_option("--synthetic", synthetic, "path | ring | grid2d | er | sbm");
        app->add_option("--size", spec.size, "node count of a synthetic graph");
        app->add_option("--rows", spec.rows, "grid2d rows");
        app->add_option("--cols", spec.cols, "grid2d columns");
        app->add_option("--p", spec.p, "Erdos-Renyi edge probability");
        app->add_option("--blocks", spec.blocks, "SBM block count");
        app->add_option("--p-in", spec.p_in, "SBM within-block probability");
        app->add_option("--p-out", spec.p_out, "SBM between-block probability");
        app->add_option("--graph-seed", spec.seed, "seed of the synthetic graph");
        app->add_option("--feature-dim", feature_dim, "random feature width");
        app->add_option("--feature-seed", feature_seed, "seed of random features");
        app->add_option("--feature-scale", feature_scale, "std of random features");
    }

    GraphSource source() const {
        GraphSource s;
        if (!edges.empty()) s.edges = edges;
        if (!features.empty()) s.features = features;
        if (!labels.empty()) s.labels = labels;
        if (!synthetic.empty()) {
            SyntheticSpec spec_copy = spec;
            spec_copy.kind = parse_synthetic_kind(synthetic);
            s.synthetic = spec_copy;
        }
        s.feature_dim = feature_dim;
        s.feature_seed = feature_seed;
        s.feature_scale = feature_scale;
        return s;
    }
};

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& seeds, std::size_t count) {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = k;
    return out;
}

void print_fit(const FitReport& fit) {
    std::cout << "law " << to_string(fit.law) << ", exponent " << fit.exponent << ", r2 " << fit.r2
              << ", classification " << to_string(fit.classification) << ", window ["
              << fit.window_lo << ", " << fit.window_hi << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oversmoothing diagnostics for graph transformers at initialization"};
    app.set_config("--config", "", "key=value configuration file");
    app.require_subcommand(1);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "depth sweep of energies at initialization");
    SourceFlags sweep_src;
    sweep_src.attach(sweep);
    SweepSpec sweep_spec;
    std::vector<std::string> variant_names;
    std::string sweep_attention = "san";
    std::vector<std::uint64_t> sweep_seeds;
    std::size_t sweep_seed_count = 1;
    std::string sweep_out;
    bool no_similarity = false;
    sweep->add_option("--depths", sweep_spec.depths, "layer counts")->delimiter(',');
    sweep->add_option("--variants", variant_names, "pre-ln, post-ln, nonlocal-post-ln")
        ->delimiter(',');
    sweep->add_option("--attention", sweep_attention, "gcn | gat | san");
    sweep->add_option("--seeds", sweep_seeds, "explicit seed list")->delimiter(',');
    sweep->add_option("--num-seeds", sweep_seed_count, "use seeds 0..N-1");
    sweep->add_option("--heads", sweep_spec.heads);
    sweep->add_option("--hidden", sweep_spec.hidden);
    sweep->add_option("--output-dim", sweep_spec.output_dim);
    sweep->add_option("--ffn-expansion", sweep_spec.ffn_expansion);
    sweep->add_option("--workers", sweep_spec.workers, "parallel jobs");
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->add_flag("--dump-states", sweep_spec.dump_states, "write every hidden state");
    sweep->add_flag("--no-similarity", no_similarity, "skip cosine matrices");

    // flow
    auto* flow = app.add_subcommand("flow", "simulate a continuous-time flow");
    SourceFlags flow_src;
    flow_src.attach(flow);
    FlowCommand flow_cmd;
    std::string flow_kind = "heat";
    double window_lo = 0.0, window_hi = 0.0;
    bool fixed_step = false;
    std::string flow_out;
    flow->add_option("--kind", flow_kind, "heat | nonlocal | preln-flow");
    flow->add_option("--dt", flow_cmd.flow.dt, "Euler step (0 = automatic)");
    flow->add_option("--horizon", flow_cmd.flow.horizon);
    flow->add_option("--stride", flow_cmd.flow.stride, "record every k-th step");
    flow->add_option("--safety", flow_cmd.flow.safety);
    flow->add_flag("--fixed-step", fixed_step, "nonlocal flow without time reparametrization");
    flow->add_option("--window-lo", window_lo);
    flow->add_option("--window-hi", window_hi);
    flow->add_option("--out", flow_out, "output directory");

    // prune
    auto* prune = app.add_subcommand("prune", "final-state deviation from skipping one layer");
    SourceFlags prune_src;
    prune_src.attach(prune);
    PruneCommand prune_cmd;
    std::string prune_variant = "pre-ln", prune_attention = "san", model_file;
    std::vector<std::uint64_t> prune_seeds;
    std::size_t prune_seed_count = 1;
    std::string prune_out;
    prune->add_option("--model", model_file, "model key=value file");
    prune->add_option("--depth", prune_cmd.model.depth);
    prune->add_option("--variant", prune_variant);
    prune->add_option("--attention", prune_attention);
    prune->add_option("--heads", prune_cmd.model.heads);
    prune->add_option("--hidden", prune_cmd.model.hidden);
    prune->add_option("--layers", prune_cmd.layers, "1-based layers to skip")
        ->delimiter(',')
        ->required();
    prune->add_option("--seeds", prune_seeds)->delimiter(',');
    prune->add_option("--num-seeds", prune_seed_count);
    prune->add_option("--out", prune_out);

    // gen
    auto* gen = app.add_subcommand("gen", "write a synthetic graph (and random features)");
    SourceFlags gen_src;
    gen_src.attach(gen);
    std::string gen_out, gen_features_out;
    gen->add_option("--out", gen_out, "edge list path")->required();
    gen->add_option("--features-out", gen_features_out, "random feature CSV path");

    // stats
    auto* stats = app.add_subcommand("stats", "print dataset statistics");
    SourceFlags stats_src;
    stats_src.attach(stats);

    // fit
    auto* fit = app.add_subcommand("fit", "fit decay laws to a series CSV");
    std::string fit_input, fit_out;
    FitOptions fit_options;
    double fit_lo = 0.0, fit_hi = 0.0;
    fit->add_option("--input", fit_input, "index,value CSV")->required();
    fit->add_option("--window-lo", fit_lo);
    fit->add_option("--window-hi", fit_hi);
    fit->add_option("--burn-in", fit_options.burn_in);
    fit->add_option("--min-r2", fit_options.min_r2);
    fit->add_option("--out", fit_out, "JSON report path");

    // similarity
    auto* similarity = app.add_subcommand("similarity", "cosine matrix of dumped states");
    std::vector<std::string> sim_inputs;
    std::string sim_out;
    similarity->add_option("--input", sim_inputs, "state directory or files")->required();
    similarity->add_option("--out", sim_out, "CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            sweep_spec.source = sweep_src.source();
            if (!variant_names.empty()) {
                sweep_spec.variants.clear();
                for (const auto& v : variant_names) sweep_spec.variants.push_back(parse_variant(v));
            }
            sweep_spec.attention.kind = parse_attention_kind(sweep_attention);
            sweep_spec.seeds = seed_list(sweep_seeds, sweep_seed_count);
            sweep_spec.output_dir = sweep_out;
            sweep_spec.similarity = !no_similarity;
            const SweepResult result = run_sweep(sweep_spec);
            for (const SweepGroup& g : result.groups) {
                std::cout << to_string(g.variant) << " depth " << g.depth << ": median final E2 "
                          << g.median_final_energy;
                if (g.median_fit) {
                    std::cout << ", " << to_string(g.median_fit->classification) << " (r2 "
                              << g.median_fit->r2 << ")";
                }
                std::cout << '\n';
            }
            if (result.failures > 0) {
                std::cerr << result.failures << " job(s) failed; see " << sweep_out
                          << "/errors.json\n";
                return 1;
            }
        } else if (*flow) {
            flow_cmd.source = flow_src.source();
            flow_cmd.flow.kind = parse_flow_kind(flow_kind);
            flow_cmd.flow.adaptive = !fixed_step;
            flow_cmd.flow.record_states = false;
            if (window_hi > window_lo) flow_cmd.window = std::pair{window_lo, window_hi};
            if (!flow_out.empty()) flow_cmd.output_dir = flow_out;
            const FlowResult result = run_flow(flow_cmd);
            print_fit(result.fit);
            std::cout << "steps " << result.trajectory.steps << ", dt " << result.trajectory.step
                      << ", sqrt-energy slope " << result.sqrt_energy.slope;
            if (result.growth_constant) std::cout << ", fitted C " << *result.growth_constant;
            std::cout << '\n';
        } else if (*prune) {
            prune_cmd.source = prune_src.source();
            if (!model_file.empty()) {
                std::ifstream in(model_file);
                if (!in) throw std::runtime_error("cannot open " + model_file);
                std::stringstream text;
                text << in.rdbuf();
                prune_cmd.model = parse_model_config(text.str());
            } else {
                prune_cmd.model.variant = parse_variant(prune_variant);
                prune_cmd.model.attention.kind = parse_attention_kind(prune_attention);
            }
            prune_cmd.seeds = seed_list(prune_seeds, prune_seed_count);
            if (!prune_out.empty()) prune_cmd.output_dir = prune_out;
            const PruneTable table = run_prune(prune_cmd);
            for (std::size_t k = 0; k < table.layers.size(); ++k) {
                std::cout << "layer " << table.layers[k] << ": median deviation "
                          << table.median_deviation[k] << '\n';
            }
        } else if (*gen) {
            const GraphSource source = gen_src.source();
            if (!source.synthetic) throw std::invalid_argument("gen needs --synthetic");
            const WeightedGraph g = generate_graph(*source.synthetic);
            const std::string header = source.synthetic->describe() + " " + kArtifactVersion;
            write_edge_list(gen_out, g, header);
            if (!gen_features_out.empty()) {
                write_matrix(gen_features_out,
                             random_features(g.size(), source.feature_dim, source.feature_seed,
                                             source.feature_scale),
                             "seed=" + std::to_string(source.feature_seed) + " rng=" +
                                 std::string(CounterRng::kName) + " " + kArtifactVersion);
            }
            std::cout << format_stats(dataset_stats(g)) << '\n';
        } else if (*stats) {
            GraphSource source = stats_src.source();
            if (source.synthetic) {
                std::cout << format_stats(dataset_stats(generate_graph(*source.synthetic))) << '\n';
            } else {
                if (!source.edges) throw std::invalid_argument("stats needs --edges or --synthetic");
                std::optional<NodeFeatures> features;
                std::optional<std::vector<long>> labels;
                std::size_t n = 0;
                if (source.features) {
                    features = read_matrix(*source.features);
                    n = static_cast<std::size_t>(features->rows());
                }
                const WeightedGraph g = load_edge_list(*source.edges, n);
                if (source.labels) labels = load_labels(*source.labels, g.size());
                std::cout << format_stats(dataset_stats(g, features ? &*features : nullptr,
                                                        labels ? &*labels : nullptr))
                          << '\n';
            }
        } else if (*fit) {
            if (fit_hi > fit_lo) fit_options.window = std::pair{fit_lo, fit_hi};
            const FitReport report = fit_decay(read_series(fit_input), fit_options);
            print_fit(report);
            if (!fit_out.empty()) {
                nlohmann::json meta{{"artifact", kArtifactVersion},
                                    {"input", fit_input},
                                    {"measurement", kMeasurementStatement}};
                std::ofstream(fit_out) << fit_to_json(report, meta.dump()) << '\n';
            }
        } else if (*similarity) {
            std::vector<std::filesystem::path> inputs(sim_inputs.begin(), sim_inputs.end());
            const SimilarityMatrix m = similarity_of_dump(inputs);
            const std::string meta = std::string("artifact=") + kArtifactVersion +
                                     " note=initialization-time (untrained) analogue";
            if (sim_out.empty()) {
                for (std::size_t s = 0; s < m.size(); ++s) {
                    for (std::size_t t = 0; t < m.size(); ++t) {
                        std::cout << (t ? "," : "");
                        if (m.at(s, t)) std::cout << *m.at(s, t);
                        else std::cout << "nan";
                    }
                    std::cout << '\n';
                }
            } else {
                write_similarity(sim_out, m, meta);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
