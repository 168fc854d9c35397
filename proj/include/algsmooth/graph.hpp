#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace algsmooth {

/// Node features: one row per vertex, one column per feature channel.
using NodeFeatures = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

class GraphError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 1.0;
};

/// Measure sentinel: mu_i = sum_j w_ij + 1, which is deg_i + 1 for unit weights.
struct DegreePlusOne {};
using MeasureSpec = std::variant<DegreePlusOne, std::vector<double>>;

/// Compressed adjacency shared between graphs that differ only in weights.
/// Neighbor lists are sorted and contain no self loops; reverse[s] is the slot
/// holding the opposite direction of slot s.
struct Topology {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> targets;
    std::vector<std::size_t> reverse;

    std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t slots() const { return targets.size(); }
    std::size_t begin(std::size_t i) const { return offsets[i]; }
    std::size_t end(std::size_t i) const { return offsets[i + 1]; }
    std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
};

/// Undirected weighted graph G = (V, E, w, mu). Immutable once built.
class WeightedGraph {
public:
    static WeightedGraph build(std::size_t n, std::span<const Edge> edges,
                               const MeasureSpec& measure = DegreePlusOne{});

    /// Same topology, new per-slot weights (symmetric) and measure.
    static WeightedGraph from_topology(std::shared_ptr<const Topology> topology,
                                       std::vector<double> slot_weights,
                                       std::vector<double> measure);

    std::size_t size() const { return topology_->size(); }
    std::size_t edge_count() const { return topology_->slots() / 2; }

    std::span<const std::size_t> neighbors(std::size_t i) const {
        return {topology_->targets.data() + topology_->begin(i), topology_->degree(i)};
    }
    std::span<const double> weights(std::size_t i) const {
        return {weights_.data() + topology_->begin(i), topology_->degree(i)};
    }
    double weight_at(std::size_t slot) const { return weights_[slot]; }
    const std::vector<double>& slot_weights() const { return weights_; }

    double measure(std::size_t i) const { return measure_[i]; }
    const std::vector<double>& measure() const { return measure_; }
    double total_measure() const;

    const Topology& topology() const { return *topology_; }
    const std::shared_ptr<const Topology>& shared_topology() const { return topology_; }

    bool connected() const { return components_ <= 1; }
    std::size_t components() const { return components_; }

    /// sum_j w_ij < mu_i for every vertex, required for P = Delta + I.
    bool aggregation_admissible() const { return admissible_; }

    std::vector<Edge> edges() const;

private:
    WeightedGraph() = default;
    void finalize();

    std::shared_ptr<const Topology> topology_;
    std::vector<double> weights_;
    std::vector<double> measure_;
    std::size_t components_ = 0;
    bool admissible_ = false;
};

/// Delta X(i) = sum_{j~i} (w_ij / mu_i) (X(j) - X(i)).
NodeFeatures laplacian_apply(const WeightedGraph& g, const NodeFeatures& x);

/// P X = X + Delta X. Throws if the graph is not aggregation admissible.
NodeFeatures aggregate_apply(const WeightedGraph& g, const NodeFeatures& x);

/// Column-wise integral sum_i X(i) mu_i.
RowVector integrate(const WeightedGraph& g, const NodeFeatures& x);

/// Integral of a scalar field.
double integrate(const WeightedGraph& g, const Eigen::VectorXd& f);

/// Pointwise (1/2) sum_{j~i} (w_ij/mu_i) (X(j)-X(i)).(Y(j)-Y(i)).
/// The factor 1/2 makes integration by parts exact: int -Delta X . Y = int grad X . grad Y.
Eigen::VectorXd grad_inner_product(const WeightedGraph& g, const NodeFeatures& x,
                                   const NodeFeatures& y);

/// m-th derivative energy E_m(X) = (1/n) int |grad^m X|^2 dmu.
/// Even m uses (-Delta)^{m/2} X, odd m uses grad (-Delta)^{(m-1)/2} X, and
/// m = 0 measures the deviation from the mu-weighted mean.
double derivative_energy(const WeightedGraph& g, const NodeFeatures& x, unsigned m);

inline double dirichlet_energy(const WeightedGraph& g, const NodeFeatures& x) {
    return derivative_energy(g, x, 1);
}
inline double laplacian_energy(const WeightedGraph& g, const NodeFeatures& x) {
    return derivative_energy(g, x, 2);
}

/// Same topology with w = 1 and mu = deg + 1: the fixed graph on which all
/// energies are reported, independent of attention weights.
WeightedGraph canonical_energy_graph(const WeightedGraph& topology);

constexpr std::size_t kDenseSpectrumLimit = 2000;

/// Ascending eigenvalues of -Delta (self-adjoint in the mu inner product).
std::vector<double> dense_spectrum(const WeightedGraph& g,
                                   std::size_t max_nodes = kDenseSpectrumLimit);

/// Upper bound on the largest eigenvalue of -Delta: dense spectrum for small
/// graphs, otherwise a padded power-iteration estimate capped by Gershgorin.
double spectral_radius_bound(const WeightedGraph& g);

void require_rows(const WeightedGraph& g, const NodeFeatures& x, const char* what);

}  // namespace algsmooth
