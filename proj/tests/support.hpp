#pragma once

#include "algsmooth/graph.hpp"
#include "algsmooth/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace testing_support {

using algsmooth::CounterRng;
using algsmooth::Edge;
using algsmooth::NodeFeatures;
using algsmooth::WeightedGraph;

inline WeightedGraph path3() {
    const std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}};
    return WeightedGraph::build(3, edges);
}

inline NodeFeatures column(std::initializer_list<double> values) {
    NodeFeatures x(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values) x(i++, 0) = v;
    return x;
}

// Random spanning tree plus extra edges; weights in [0.5, 2]. When
// `random_measure` is set, mu_i exceeds the weighted degree by a random margin.
inline WeightedGraph random_connected_graph(CounterRng& rng, std::size_t n, bool random_measure) {
    std::vector<Edge> edges;
    for (std::size_t v = 1; v < n; ++v) {
        const auto parent = static_cast<std::size_t>(rng.uniform() * static_cast<double>(v));
        edges.push_back({parent, v, rng.uniform(0.5, 2.0)});
    }
    const std::size_t extra = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    for (std::size_t k = 0; k < extra; ++k) {
        const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        if (i == j) continue;
        bool seen = false;
        for (const Edge& e : edges) {
            if ((e.i == i && e.j == j) || (e.i == j && e.j == i)) seen = true;
        }
        if (!seen) edges.push_back({i, j, rng.uniform(0.5, 2.0)});
    }
    if (!random_measure) return WeightedGraph::build(n, edges);
    std::vector<double> mu(n, 0.0);
    for (const Edge& e : edges) {
        mu[e.i] += e.weight;
        mu[e.j] += e.weight;
    }
    for (double& m : mu) m += rng.uniform(0.1, 3.0);
    return WeightedGraph::build(n, edges, mu);
}

inline NodeFeatures random_matrix(CounterRng& rng, std::size_t n, std::size_t d) {
    NodeFeatures x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    return x;
}

// Dense operator M^{-1}(W - diag(W 1)) assembled from the edge list.
inline Eigen::MatrixXd dense_laplacian(const WeightedGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const Edge& e : g.edges()) {
        w(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.j)) = e.weight;
        w(static_cast<Eigen::Index>(e.j), static_cast<Eigen::Index>(e.i)) = e.weight;
    }
    Eigen::MatrixXd lap = w;
    lap.diagonal() -= w.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) lap.row(i) /= g.measure(static_cast<std::size_t>(i));
    return lap;
}

inline std::size_t slot_of(const algsmooth::Topology& t, std::size_t i, std::size_t j) {
    for (std::size_t s = t.begin(i); s < t.end(i); ++s) {
        if (t.targets[s] == j) return s;
    }
    return t.slots();
}

}  // namespace testing_support
