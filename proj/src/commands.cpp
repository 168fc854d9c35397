#include "algsmooth/commands.hpp"

#include "algsmooth/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace algsmooth {

using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_json(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

json fit_json(const FitReport& fit) {
    auto line = [](const LineFit& l) {
        return json{{"slope", l.slope}, {"intercept", l.intercept}, {"r2", l.r2}, {"points", l.points}};
    };
    std::string law = std::string(to_string(fit.law));
    if (fit.classification == DecayClass::Growth) law = "growth-" + law;
    return json{{"law", law},
                {"exponent", fit.exponent},
                {"intercept", fit.intercept},
                {"r2", fit.r2},
                {"window", {fit.window_lo, fit.window_hi}},
                {"skipped", fit.skipped},
                {"classification", std::string(to_string(fit.classification))},
                {"power_fit", line(fit.power)},
                {"exponential_fit", line(fit.exponential)}};
}

json relative_json(const RelativeSimilarity& r) {
    return json{{"tail_median_abs", number_or_null(r.tail_median_abs)},
                {"tail_energy_slope", r.tail_energy_slope},
                {"tail_decreasing", r.tail_decreasing},
                {"curse_of_depth", r.curse_of_depth}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string csv_metadata(const json& meta) {
    std::string out;
    for (auto it = meta.begin(); it != meta.end(); ++it) {
        if (!out.empty()) out += ' ';
        std::string value = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        std::replace(value.begin(), value.end(), '\n', ' ');
        out += it.key() + "=" + value;
    }
    return out;
}

json base_metadata() {
    return json{{"artifact", kArtifactVersion},
                {"measurement", kMeasurementStatement},
                {"rng", std::string(CounterRng::kName)}};
}

}  // namespace

std::string GraphSource::describe() const {
    std::ostringstream out;
    if (synthetic) {
        out << synthetic->describe();
    } else if (edges) {
        out << "edges=" << edges->string();
    }
    if (features) {
        out << " features=" << features->string() << " (raw, unnormalized)";
    } else {
        out << " features=random-normal d=" << feature_dim << " seed=" << feature_seed
            << " scale=" << feature_scale;
    }
    return out.str();
}

LoadedData load_source(const GraphSource& source) {
    if (source.synthetic && source.edges) {
        throw std::invalid_argument("give either an edge file or a synthetic spec, not both");
    }
    if (!source.synthetic && !source.edges) {
        throw std::invalid_argument("no graph source: pass an edge file or a synthetic spec");
    }
    std::optional<NodeFeatures> features;
    WeightedGraph graph = [&] {
        if (source.synthetic) return generate_graph(*source.synthetic);
        return load_edge_list(*source.edges);
    }();
    if (source.features) {
        features = load_features(*source.features, graph.size());
    } else {
        features = random_features(graph.size(), source.feature_dim, source.feature_seed,
                                   source.feature_scale);
    }
    std::optional<std::vector<long>> labels;
    if (source.labels) labels = load_labels(*source.labels, graph.size());
    return {std::move(graph), std::move(*features), std::move(labels)};
}

void SweepSpec::validate() const {
    if (depths.empty() || variants.empty() || seeds.empty()) {
        throw std::invalid_argument("sweep needs nonempty depth, variant and seed lists");
    }
    for (std::size_t d : depths) {
        if (d < 1) throw std::invalid_argument("depths must be positive");
    }
    if (workers < 1) throw std::invalid_argument("worker count must be positive");
}

const SweepGroup* SweepResult::group(Variant v, std::size_t depth) const {
    for (const SweepGroup& g : groups) {
        if (g.variant == v && g.depth == depth) return &g;
    }
    return nullptr;
}

namespace {

struct SweepJob {
    Variant variant;
    std::size_t depth;
    std::uint64_t seed;
};

SweepJobResult run_sweep_job(const SweepSpec& spec, const LoadedData& data, const SweepJob& job) {
    SweepJobResult result{job.variant, job.depth, job.seed, std::nullopt, {}, std::nullopt, {}};
    ModelConfig config;
    config.depth = job.depth;
    config.heads = spec.heads;
    config.hidden = spec.hidden;
    config.input_dim = static_cast<std::size_t>(data.features.cols());
    config.output_dim = spec.output_dim;
    config.variant = job.variant;
    config.attention = spec.attention;
    config.seed = job.seed;
    config.ffn_expansion = spec.ffn_expansion;

    try {
        const ModelParams params = init_model(config);
        const LayerTrajectory traj = forward_trajectory(params, config, data.graph, data.features);
        result.energy = energy_series(traj, 2, data.graph, std::string(to_string(job.variant)));
        result.relative = relative_similarity_series(result.energy, spec.curse);
        try {
            result.fit = fit_decay(result.energy, spec.fit);
        } catch (const std::invalid_argument&) {
            // Shallow models have too few layers to fit; the fit stays absent.
        }

        if (spec.output_dir) {
            const std::filesystem::path dir = *spec.output_dir / std::string(to_string(job.variant)) /
                                              std::to_string(job.depth) /
                                              std::to_string(job.seed);
            json meta = base_metadata();
            meta["seed"] = job.seed;
            meta["config_hash"] = hex(config.hash());
            meta["graph"] = spec.source.describe();
            meta["variant"] = std::string(to_string(job.variant));
            meta["depth"] = job.depth;
            write_series(dir / "energy.csv", result.energy, csv_metadata(meta));

            EnergySeries rel;
            rel.index = result.relative.index;
            for (const auto& v : result.relative.value) rel.value.push_back(v ? *v : std::nan(""));
            write_series(dir / "relative.csv", rel, csv_metadata(meta));

            json fit_doc{{"metadata", meta},
                         {"final_energy", result.energy.value.back()},
                         {"relative", relative_json(result.relative)},
                         {"fit", result.fit ? fit_json(*result.fit) : json(nullptr)}};
            write_text(dir / "fit.json", fit_doc.dump(2) + "\n");
            write_text(dir / "config.kv", config.to_key_values());

            if (spec.similarity) {
                json sim_meta = meta;
                sim_meta["note"] = "initialization-time (untrained) analogue";
                write_similarity(dir / "cosine.csv", cosine_similarity_matrix(traj.hidden),
                                 csv_metadata(sim_meta));
            }
            if (spec.dump_states) {
                for (std::size_t k = 0; k < traj.hidden.size(); ++k) {
                    char name[32];
                    std::snprintf(name, sizeof(name), "layer_%04zu.csv", k);
                    json layer_meta = meta;
                    layer_meta["layer"] = k;
                    write_matrix(dir / "states" / name, traj.hidden[k], csv_metadata(layer_meta));
                }
            }
        } else if (spec.similarity) {
            (void)cosine_similarity_matrix(traj.hidden);
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const LoadedData data = load_source(spec.source);

    std::vector<SweepJob> jobs;
    for (Variant v : spec.variants) {
        for (std::size_t d : spec.depths) {
            for (std::uint64_t s : spec.seeds) jobs.push_back({v, d, s});
        }
    }

    SweepResult result;
    result.jobs.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            result.jobs[k] = run_sweep_job(spec, data, jobs[k]);
        }
    };
    const std::size_t threads = std::min(spec.workers, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    json summary = base_metadata();
    summary["graph"] = spec.source.describe();
    summary["seeds"] = spec.seeds;
    summary["hidden"] = spec.hidden;
    summary["heads"] = spec.heads;
    summary["attention"] = std::string(to_string(spec.attention.kind));
    json groups = json::array();
    json failures = json::array();

    for (Variant v : spec.variants) {
        for (std::size_t d : spec.depths) {
            SweepGroup group;
            group.variant = v;
            group.depth = d;
            std::vector<const SweepJobResult*> ok;
            for (const SweepJobResult& job : result.jobs) {
                if (job.variant != v || job.depth != d) continue;
                if (job.error) {
                    ++result.failures;
                    failures.push_back({{"variant", std::string(to_string(v))},
                                        {"depth", d},
                                        {"seed", job.seed},
                                        {"error", *job.error}});
                    continue;
                }
                ok.push_back(&job);
                group.final_energy.push_back(job.energy.value.back());
            }
            json entry{{"variant", std::string(to_string(v))},
                       {"depth", d},
                       {"successful_seeds", ok.size()}};
            if (!ok.empty()) {
                group.median_final_energy = median(group.final_energy);
                group.median_series.order = 2;
                group.median_series.provenance = std::string(to_string(v)) + " median";
                group.median_series.index = ok.front()->energy.index;
                for (std::size_t k = 0; k < group.median_series.index.size(); ++k) {
                    std::vector<double> column;
                    for (const SweepJobResult* job : ok) column.push_back(job->energy.value[k]);
                    group.median_series.value.push_back(median(column));
                }
                group.median_relative = relative_similarity_series(group.median_series, spec.curse);
                try {
                    group.median_fit = fit_decay(group.median_series, spec.fit);
                } catch (const std::invalid_argument&) {
                }
                entry["final_energy"] = group.final_energy;
                entry["median_final_energy"] = group.median_final_energy;
                entry["median_series_fit"] =
                    group.median_fit ? fit_json(*group.median_fit) : json(nullptr);
                entry["median_series_relative"] = relative_json(group.median_relative);
                if (spec.output_dir) {
                    json meta = base_metadata();
                    meta["seeds"] = spec.seeds;
                    meta["variant"] = std::string(to_string(v));
                    meta["depth"] = d;
                    write_series(*spec.output_dir / std::string(to_string(v)) / std::to_string(d) /
                                     "median_energy.csv",
                                 group.median_series, csv_metadata(meta));
                }
            }
            groups.push_back(entry);
            result.groups.push_back(std::move(group));
        }
    }
    summary["groups"] = groups;
    summary["failures"] = failures;
    if (spec.output_dir) {
        write_text(*spec.output_dir / "summary.json", summary.dump(2) + "\n");
        if (!failures.empty()) write_text(*spec.output_dir / "errors.json", failures.dump(2) + "\n");
    }
    return result;
}

FlowResult run_flow(const FlowCommand& command) {
    const LoadedData data = load_source(command.source);
    FlowSpec flow = command.flow;
    FlowResult result;
    result.trajectory = simulate(data.graph, data.features, flow);
    const FlowTrajectory& traj = result.trajectory;

    EnergySeries series;
    series.order = 1;
    series.provenance = std::string(to_string(flow.kind));
    series.index = traj.times;
    series.value = traj.dirichlet;
    FitOptions options;
    options.window = command.window.value_or(std::pair{flow.horizon / 10.0, flow.horizon});
    result.fit = fit_decay(series, options);

    std::vector<double> root(traj.dirichlet.size());
    std::transform(traj.dirichlet.begin(), traj.dirichlet.end(), root.begin(),
                   [](double e) { return std::sqrt(e); });
    result.sqrt_energy = least_squares(traj.times, root);
    if (flow.kind == FlowKind::PreLN) {
        // Smallest C with int|grad X_t|^2 <= (C t + sqrt(int|grad X_0|^2))^2 on the record.
        const double n = static_cast<double>(data.graph.size());
        const double root0 = std::sqrt(n * traj.dirichlet.front());
        double c = 0.0;
        for (std::size_t k = 1; k < traj.times.size(); ++k) {
            c = std::max(c, (std::sqrt(n * traj.dirichlet[k]) - root0) / traj.times[k]);
        }
        result.growth_constant = c;
    }

    if (command.output_dir) {
        json meta = base_metadata();
        meta["flow"] = std::string(to_string(flow.kind));
        meta["graph"] = command.source.describe();
        meta["dt"] = traj.step;
        meta["horizon"] = flow.horizon;
        meta["lambda_max"] = traj.lambda_max;
        meta["config_hash"] = hex(fnv1a(meta.dump()));
        meta["note"] = "flow energies measured on the flow graph itself";
        std::ofstream out;
        std::filesystem::create_directories(*command.output_dir);
        out.open(*command.output_dir / "series.csv");
        out << "# " << csv_metadata(meta) << '\n';
        out << "time,dirichlet,laplacian,multiplier,norm_mass\n";
        out.precision(17);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            out << traj.times[k] << ',' << traj.dirichlet[k] << ',' << traj.laplacian[k] << ','
                << (k < traj.multiplier.size() ? traj.multiplier[k] : std::nan("")) << ','
                << (k < traj.norm_mass.size() ? traj.norm_mass[k] : std::nan("")) << '\n';
        }
        json doc{{"metadata", meta},
                 {"fit", fit_json(result.fit)},
                 {"sqrt_energy_slope", result.sqrt_energy.slope},
                 {"growth_constant", optional_json(result.growth_constant)},
                 {"steps", traj.steps}};
        write_text(*command.output_dir / "fit.json", doc.dump(2) + "\n");
    }
    return result;
}

PruneTable run_prune(const PruneCommand& command) {
    const LoadedData data = load_source(command.source);
    PruneTable table;
    table.layers = command.layers;
    table.records.resize(command.layers.size());
    for (std::size_t layer : command.layers) {
        if (layer < 1 || layer > command.model.depth) {
            throw std::out_of_range("prune layer " + std::to_string(layer) + " outside 1.." +
                                    std::to_string(command.model.depth));
        }
    }
    for (std::uint64_t seed : command.seeds) {
        ModelConfig config = command.model;
        config.seed = seed;
        config.input_dim = static_cast<std::size_t>(data.features.cols());
        const ModelParams params = init_model(config);
        const LayerTrajectory reference =
            forward_trajectory(params, config, data.graph, data.features);
        for (std::size_t k = 0; k < command.layers.size(); ++k) {
            table.records[k].push_back(prune_layer_deviation(params, config, data.graph,
                                                             data.features, command.layers[k],
                                                             &reference));
        }
    }
    for (const auto& per_seed : table.records) {
        std::vector<double> dev;
        for (const PruneRecord& r : per_seed) dev.push_back(r.deviation);
        table.median_deviation.push_back(median(dev));
    }

    if (command.output_dir) {
        json meta = base_metadata();
        meta["seeds"] = command.seeds;
        meta["config_hash"] = hex(command.model.hash());
        meta["graph"] = command.source.describe();
        std::ostringstream csv;
        csv.precision(17);
        csv << "# " << csv_metadata(meta) << '\n' << "layer,seed,deviation,cosine\n";
        for (std::size_t k = 0; k < table.layers.size(); ++k) {
            for (std::size_t s = 0; s < command.seeds.size(); ++s) {
                const PruneRecord& r = table.records[k][s];
                csv << r.layer << ',' << command.seeds[s] << ',' << r.deviation << ','
                    << (r.cosine ? *r.cosine : std::nan("")) << '\n';
            }
        }
        write_text(*command.output_dir / "prune.csv", csv.str());
        json doc{{"metadata", meta}, {"layers", table.layers},
                 {"median_deviation", table.median_deviation}};
        write_text(*command.output_dir / "prune.json", doc.dump(2) + "\n");
    }
    return table;
}

std::string format_stats(const DatasetStats& stats) {
    std::ostringstream out;
    out << "nodes " << stats.nodes << ", edges " << stats.edges;
    if (stats.features) out << ", features " << *stats.features;
    if (stats.classes) out << ", classes " << *stats.classes;
    out << ", components " << stats.components;
    return out.str();
}

void write_series(const std::filesystem::path& path, const EnergySeries& series,
                  const std::string& metadata) {
    std::ostringstream out;
    out.precision(17);
    out << "# " << metadata << '\n' << "index,value\n";
    for (std::size_t k = 0; k < series.index.size(); ++k) {
        out << series.index[k] << ',' << series.value[k] << '\n';
    }
    write_text(path, out.str());
}

EnergySeries read_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    EnergySeries series;
    series.provenance = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double index = 0.0, value = 0.0;
        std::string rest;
        if (!(fields >> index >> value) || (fields >> rest)) {
            throw ParseError(path.string(), line_no, "expected 'index,value'");
        }
        series.index.push_back(index);
        series.value.push_back(value);
    }
    return series;
}

std::string fit_to_json(const FitReport& fit, const std::string& metadata_json) {
    json doc{{"metadata", json::parse(metadata_json)}, {"fit", fit_json(fit)}};
    return doc.dump(2);
}

SimilarityMatrix similarity_of_dump(const std::vector<std::filesystem::path>& inputs) {
    std::vector<std::filesystem::path> files;
    for (const auto& p : inputs) {
        if (std::filesystem::is_directory(p)) {
            std::vector<std::filesystem::path> found;
            for (const auto& entry : std::filesystem::directory_iterator(p)) {
                const std::string name = entry.path().filename().string();
                if (name.rfind("layer_", 0) == 0 && entry.path().extension() == ".csv") {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw std::invalid_argument("no trajectory files found");
    std::vector<NodeFeatures> states;
    for (const auto& f : files) states.push_back(read_matrix(f));
    return cosine_similarity_matrix(states);
}

void write_similarity(const std::filesystem::path& path, const SimilarityMatrix& m,
                      const std::string& metadata) {
    std::ostringstream out;
    out.precision(17);
    out << "# shape=" << m.size() << 'x' << m.size() << ' ' << metadata << '\n';
    for (std::size_t s = 0; s < m.size(); ++s) {
        for (std::size_t t = 0; t < m.size(); ++t) {
            if (t) out << ',';
            if (m.at(s, t)) out << *m.at(s, t);
            else out << "nan";
        }
        out << '\n';
    }
    write_text(path, out.str());
}

}  // namespace algsmooth
