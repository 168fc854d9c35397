#pragma once

#include "algsmooth/diagnostics.hpp"
#include "algsmooth/ingest.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace algsmooth {

inline constexpr const char* kArtifactVersion = "algsmooth 1.0.0";
inline constexpr const char* kMeasurementStatement =
    "energies measured on the canonical graph (w=1, mu=deg+1) of the input topology";

/// Either files on disk or a synthetic spec. Without a feature file, features
/// are random normal with `feature_dim` columns drawn from `feature_seed`.
struct GraphSource {
    std::optional<std::filesystem::path> edges;
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> labels;
    std::optional<SyntheticSpec> synthetic;
    std::size_t feature_dim = 64;
    std::uint64_t feature_seed = 0;
    double feature_scale = 1.0;

    std::string describe() const;
};

struct LoadedData {
    WeightedGraph graph;
    NodeFeatures features;
    std::optional<std::vector<long>> labels;
};

LoadedData load_source(const GraphSource& source);

struct SweepSpec {
    GraphSource source;
    std::vector<std::size_t> depths{2, 32, 64, 128, 256};
    std::vector<Variant> variants{Variant::PreLN, Variant::PostLN, Variant::NonlocalPostLN};
    AttentionSpec attention{};
    std::vector<std::uint64_t> seeds{0};
    std::size_t heads = 1;
    std::size_t hidden = 32;
    std::size_t output_dim = 7;
    std::size_t ffn_expansion = 2;
    std::optional<std::filesystem::path> output_dir;
    std::size_t workers = 1;
    bool similarity = true;
    bool dump_states = false;
    FitOptions fit{};
    CurseOfDepthOptions curse{};

    void validate() const;
};

struct SweepJobResult {
    Variant variant{};
    std::size_t depth = 0;
    std::uint64_t seed = 0;
    std::optional<std::string> error;
    EnergySeries energy;
    std::optional<FitReport> fit;
    RelativeSimilarity relative;
};

struct SweepGroup {
    Variant variant{};
    std::size_t depth = 0;
    std::vector<double> final_energy;  // per successful seed
    double median_final_energy = 0.0;
    EnergySeries median_series;        // per-layer median across seeds
    std::optional<FitReport> median_fit;
    RelativeSimilarity median_relative;
};

struct SweepResult {
    std::vector<SweepJobResult> jobs;
    std::vector<SweepGroup> groups;
    std::size_t failures = 0;

    const SweepGroup* group(Variant v, std::size_t depth) const;
};

/// Runs every (variant, depth, seed) job; failures are recorded, not thrown.
SweepResult run_sweep(const SweepSpec& spec);

struct FlowCommand {
    GraphSource source;
    FlowSpec flow{};
    /// Fit window; default is the final decade [T/10, T].
    std::optional<std::pair<double, double>> window;
    std::optional<std::filesystem::path> output_dir;
};

struct FlowResult {
    FlowTrajectory trajectory;
    FitReport fit;
    LineFit sqrt_energy;            // sqrt(E_1) against t
    std::optional<double> growth_constant;  // fitted C of the Pre-LN flow bound
};

FlowResult run_flow(const FlowCommand& command);

struct PruneCommand {
    GraphSource source;
    ModelConfig model{};
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::size_t> layers;
    std::optional<std::filesystem::path> output_dir;
};

struct PruneTable {
    std::vector<std::size_t> layers;
    std::vector<std::vector<PruneRecord>> records;  // [layer][seed]
    std::vector<double> median_deviation;
};

PruneTable run_prune(const PruneCommand& command);

/// "nodes N, edges E[, features F][, classes C], components K"
std::string format_stats(const DatasetStats& stats);

/// Reads a two-column CSV (index, value) as written by the sweep and flow commands.
EnergySeries read_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const EnergySeries& series,
                  const std::string& metadata);

std::string fit_to_json(const FitReport& fit, const std::string& metadata_json = "{}");

/// Cosine matrix of layer_*.csv files in a directory, or of the given files in order.
SimilarityMatrix similarity_of_dump(const std::vector<std::filesystem::path>& inputs);
void write_similarity(const std::filesystem::path& path, const SimilarityMatrix& m,
                      const std::string& metadata);

}  // namespace algsmooth
