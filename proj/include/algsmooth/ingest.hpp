#pragma once

#include "algsmooth/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace algsmooth {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Edge list: one "i j" or "i j w" per line, 0-indexed, '#' comments,
/// undirected. Duplicates collapse; the measure is degree-plus-one.
/// `min_nodes` pads trailing isolated vertices (e.g. from a feature file).
WeightedGraph load_edge_list(const std::filesystem::path& path, std::size_t min_nodes = 0);

/// CSV, one row per node, no header. Commas or whitespace separate values.
NodeFeatures load_features(const std::filesystem::path& path, std::size_t n);

/// One integer per line.
std::vector<long> load_labels(const std::filesystem::path& path, std::size_t n);

void write_edge_list(const std::filesystem::path& path, const WeightedGraph& g,
                     const std::string& header = {});

/// CSV with one '#'-prefixed metadata line, then one row per node.
void write_matrix(const std::filesystem::path& path, const NodeFeatures& x,
                  const std::string& metadata);

/// Reads a matrix written by write_matrix (comment lines are skipped).
NodeFeatures read_matrix(const std::filesystem::path& path);

enum class SyntheticKind { Path, Ring, Grid2d, ErdosRenyi, Sbm };

SyntheticKind parse_synthetic_kind(const std::string& text);
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::Path;
    std::size_t size = 3;   // node count (path, ring, ER, SBM)
    std::size_t rows = 0;   // grid2d
    std::size_t cols = 0;   // grid2d
    double p = 0.1;         // ER edge probability
    std::size_t blocks = 1;  // SBM
    double p_in = 0.1;       // SBM within-block probability
    double p_out = 0.01;     // SBM between-block probability
    std::uint64_t seed = 0;
    std::size_t max_retries = 64;

    void validate() const;
    std::string describe() const;
};

class RetryExhaustedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic given the seed; random kinds retry until connected.
WeightedGraph generate_graph(const SyntheticSpec& spec);

/// Block id of each vertex for an SBM spec (contiguous, near-equal blocks).
std::vector<std::size_t> sbm_blocks(const SyntheticSpec& spec);

/// Centered normal entries with standard deviation `scale`.
NodeFeatures random_features(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0);

struct DatasetStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::optional<std::size_t> features;
    std::optional<std::size_t> classes;
    std::size_t components = 0;
};

DatasetStats dataset_stats(const WeightedGraph& g, const NodeFeatures* features = nullptr,
                           const std::vector<long>* labels = nullptr);

}  // namespace algsmooth
