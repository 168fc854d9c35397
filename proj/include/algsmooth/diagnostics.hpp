#pragma once

#include "algsmooth/dynamics.hpp"
#include "algsmooth/network.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace algsmooth {

struct EnergySeries {
    std::vector<double> index;  // layer k or time t, strictly increasing
    std::vector<double> value;
    unsigned order = 2;
    std::string provenance;
};

/// Energies of every hidden state, always measured on canonical_energy_graph(topology).
EnergySeries energy_series(const LayerTrajectory& trajectory, unsigned order,
                           const WeightedGraph& topology, std::string provenance = {});
EnergySeries energy_series(const FlowTrajectory& trajectory, unsigned order,
                           const WeightedGraph& topology, std::string provenance = {});
EnergySeries energy_series(std::span<const NodeFeatures> states, std::span<const double> index,
                           unsigned order, const WeightedGraph& topology,
                           std::string provenance = {});

struct CurseOfDepthOptions {
    double tail_fraction = 0.25;
    double threshold = 0.05;
};

struct RelativeSimilarity {
    std::vector<double> index;                 // k = 1..L
    std::vector<std::optional<double>> value;  // empty where E(X^{k-1}) = 0
    double tail_median_abs = 0.0;
    double tail_energy_slope = 0.0;  // least-squares slope of E over the tail
    bool tail_decreasing = false;    // median |R| of later tail half < earlier half
    bool curse_of_depth = false;
};

/// R(X^k) = (E(X^k) - E(X^{k-1})) / E(X^{k-1}). The curse-of-depth verdict
/// requires non-decreasing tail energy (non-negative fitted slope) and a tail
/// of |R| whose median is below the threshold and shrinks from the first
/// half of the tail to the second.
RelativeSimilarity relative_similarity_series(const EnergySeries& series,
                                              const CurseOfDepthOptions& options = {});

class SimilarityMatrix {
public:
    explicit SimilarityMatrix(std::size_t size = 0)
        : size_(size), entries_(size * size) {}

    std::size_t size() const { return size_; }
    const std::optional<double>& at(std::size_t s, std::size_t t) const {
        return entries_[s * size_ + t];
    }
    std::optional<double>& at(std::size_t s, std::size_t t) { return entries_[s * size_ + t]; }

private:
    std::size_t size_;
    std::vector<std::optional<double>> entries_;
};

/// (1/n) sum_i X^s(i).X^t(i) / (|X^s(i)| |X^t(i)|); nullopt if any row is zero.
std::optional<double> mean_cosine(const NodeFeatures& a, const NodeFeatures& b);

SimilarityMatrix cosine_similarity_matrix(std::span<const NodeFeatures> states);

enum class DecayLaw { Power, Exponential };
enum class DecayClass { ExponentialDecay, AlgebraicDecay, Growth, Inconclusive };

std::string_view to_string(DecayLaw law);
std::string_view to_string(DecayClass c);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept. R^2 is clamped to [0, 1]
/// and is 1 for an exact fit of a constant.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct FitOptions {
    std::optional<std::pair<double, double>> window;  // inclusive index range
    double burn_in = 0.1;                             // "auto": drop this fraction
    double min_r2 = 0.95;
};

struct FitReport {
    DecayLaw law = DecayLaw::Power;
    double exponent = 0.0;  // power exponent or exponential rate of the chosen law
    double intercept = 0.0;
    double r2 = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t skipped = 0;  // nonpositive points dropped from the window
    DecayClass classification = DecayClass::Inconclusive;
    LineFit power;        // log E vs log k
    LineFit exponential;  // log E vs k
};

/// Fits log-log and log-linear laws and classifies. Throws std::invalid_argument
/// when fewer than five usable points remain.
FitReport fit_decay(const EnergySeries& series, const FitOptions& options = {});

struct PruneRecord {
    std::size_t layer = 0;
    double deviation = 0.0;              // ||X^L_pruned - X^L|| / ||X^L||
    std::optional<double> cosine;        // mean per-node cosine of the final states
};

PruneRecord prune_layer_deviation(const ModelParams& model, const ModelConfig& config,
                                  const WeightedGraph& topology, const NodeFeatures& input,
                                  std::size_t layer,
                                  const LayerTrajectory* reference = nullptr);

double median(std::vector<double> values);

}  // namespace algsmooth
