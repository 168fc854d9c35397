#include "algsmooth/graph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace algsmooth {

namespace {

std::size_t count_components(const Topology& t) {
    const std::size_t n = t.size();
    std::vector<char> seen(n, 0);
    std::size_t components = 0;
    std::queue<std::size_t> frontier;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++components;
        seen[s] = 1;
        frontier.push(s);
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t k = t.begin(u); k < t.end(u); ++k) {
                const std::size_t v = t.targets[k];
                if (!seen[v]) {
                    seen[v] = 1;
                    frontier.push(v);
                }
            }
        }
    }
    return components;
}

}  // namespace

void require_rows(const WeightedGraph& g, const NodeFeatures& x, const char* what) {
    if (static_cast<std::size_t>(x.rows()) != g.size()) {
        throw GraphError(std::string(what) + ": feature rows (" + std::to_string(x.rows()) +
                         ") do not match vertex count (" + std::to_string(g.size()) + ")");
    }
}

WeightedGraph WeightedGraph::build(std::size_t n, std::span<const Edge> edges,
                                   const MeasureSpec& measure) {
    struct Directed {
        std::size_t from, to;
        double w;
    };
    std::vector<Directed> directed;
    directed.reserve(2 * edges.size());
    for (const Edge& e : edges) {
        if (e.i >= n || e.j >= n) {
            throw GraphError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                             ") out of range for n = " + std::to_string(n));
        }
        if (e.i == e.j) {
            throw GraphError("self loop at vertex " + std::to_string(e.i) +
                             "; self mass belongs in the measure mu, not in the edge list");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw GraphError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                             ") has non-positive weight");
        }
        directed.push_back({e.i, e.j, e.weight});
        directed.push_back({e.j, e.i, e.weight});
    }
    std::sort(directed.begin(), directed.end(), [](const Directed& a, const Directed& b) {
        return a.from != b.from ? a.from < b.from : a.to < b.to;
    });

    auto topo = std::make_shared<Topology>();
    topo->offsets.assign(n + 1, 0);
    std::vector<double> weights;
    for (std::size_t k = 0; k < directed.size(); ++k) {
        const Directed& d = directed[k];
        if (k > 0 && directed[k - 1].from == d.from && directed[k - 1].to == d.to) {
            if (directed[k - 1].w != d.w) {
                throw GraphError("conflicting weights for edge (" + std::to_string(d.from) +
                                 ", " + std::to_string(d.to) + ")");
            }
            continue;
        }
        topo->targets.push_back(d.to);
        weights.push_back(d.w);
        ++topo->offsets[d.from + 1];
    }
    std::partial_sum(topo->offsets.begin(), topo->offsets.end(), topo->offsets.begin());

    topo->reverse.resize(topo->targets.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = topo->begin(i); k < topo->end(i); ++k) {
            const std::size_t j = topo->targets[k];
            auto first = topo->targets.begin() + static_cast<std::ptrdiff_t>(topo->begin(j));
            auto last = topo->targets.begin() + static_cast<std::ptrdiff_t>(topo->end(j));
            topo->reverse[k] = static_cast<std::size_t>(std::lower_bound(first, last, i) -
                                                        topo->targets.begin());
        }
    }

    std::vector<double> mu;
    if (std::holds_alternative<DegreePlusOne>(measure)) {
        mu.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = topo->begin(i); k < topo->end(i); ++k) mu[i] += weights[k];
        }
    } else {
        mu = std::get<std::vector<double>>(measure);
        if (mu.size() != n) throw GraphError("measure has wrong length");
    }
    return from_topology(std::move(topo), std::move(weights), std::move(mu));
}

WeightedGraph WeightedGraph::from_topology(std::shared_ptr<const Topology> topology,
                                           std::vector<double> slot_weights,
                                           std::vector<double> measure) {
    if (!topology) throw GraphError("null topology");
    if (slot_weights.size() != topology->slots()) throw GraphError("weight count mismatch");
    if (measure.size() != topology->size()) throw GraphError("measure has wrong length");
    for (double m : measure) {
        if (!(m > 0.0) || !std::isfinite(m)) throw GraphError("measure must be positive");
    }
    for (std::size_t s = 0; s < slot_weights.size(); ++s) {
        if (!(slot_weights[s] > 0.0) || !std::isfinite(slot_weights[s])) {
            throw GraphError("edge weights must be positive");
        }
        if (slot_weights[s] != slot_weights[topology->reverse[s]]) {
            throw GraphError("edge weights must be symmetric");
        }
    }
    WeightedGraph g;
    g.topology_ = std::move(topology);
    g.weights_ = std::move(slot_weights);
    g.measure_ = std::move(measure);
    g.finalize();
    return g;
}

void WeightedGraph::finalize() {
    components_ = count_components(*topology_);
    admissible_ = true;
    for (std::size_t i = 0; i < size(); ++i) {
        double total = 0.0;
        for (double w : weights(i)) total += w;
        if (!(total < measure_[i])) {
            admissible_ = false;
            break;
        }
    }
}

double WeightedGraph::total_measure() const {
    return std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

std::vector<Edge> WeightedGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < size(); ++i) {
        auto nb = neighbors(i);
        auto w = weights(i);
        for (std::size_t k = 0; k < nb.size(); ++k) {
            if (i < nb[k]) out.push_back({i, nb[k], w[k]});
        }
    }
    return out;
}

NodeFeatures laplacian_apply(const WeightedGraph& g, const NodeFeatures& x) {
    require_rows(g, x, "laplacian_apply");
    const Topology& t = g.topology();
    NodeFeatures out = NodeFeatures::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto row = out.row(static_cast<Eigen::Index>(i));
        const auto xi = x.row(static_cast<Eigen::Index>(i));
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
            row += g.weight_at(k) * (x.row(static_cast<Eigen::Index>(t.targets[k])) - xi);
        }
        row /= g.measure(i);
    }
    return out;
}

NodeFeatures aggregate_apply(const WeightedGraph& g, const NodeFeatures& x) {
    if (!g.aggregation_admissible()) {
        throw GraphError("aggregate_apply: graph violates sum_j w_ij < mu_i");
    }
    return x + laplacian_apply(g, x);
}

RowVector integrate(const WeightedGraph& g, const NodeFeatures& x) {
    require_rows(g, x, "integrate");
    const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(),
                                               static_cast<Eigen::Index>(g.size()));
    return mu.transpose() * x;
}

double integrate(const WeightedGraph& g, const Eigen::VectorXd& f) {
    if (static_cast<std::size_t>(f.size()) != g.size()) {
        throw GraphError("integrate: field length does not match vertex count");
    }
    const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(), f.size());
    return mu.dot(f);
}

Eigen::VectorXd grad_inner_product(const WeightedGraph& g, const NodeFeatures& x,
                                   const NodeFeatures& y) {
    require_rows(g, x, "grad_inner_product");
    require_rows(g, y, "grad_inner_product");
    if (x.cols() != y.cols()) throw GraphError("grad_inner_product: column mismatch");
    const Topology& t = g.topology();
    Eigen::VectorXd out(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double acc = 0.0;
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
            const auto j = static_cast<Eigen::Index>(t.targets[k]);
            acc += g.weight_at(k) * (x.row(j) - x.row(ii)).dot(y.row(j) - y.row(ii));
        }
        out[ii] = 0.5 * acc / g.measure(i);
    }
    return out;
}

double derivative_energy(const WeightedGraph& g, const NodeFeatures& x, unsigned m) {
    require_rows(g, x, "derivative_energy");
    const double n = static_cast<double>(g.size());
    if (g.size() == 0) return 0.0;
    const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(),
                                               static_cast<Eigen::Index>(g.size()));
    if (m == 0) {
        const RowVector mean = integrate(g, x) / g.total_measure();
        const NodeFeatures centered = x.rowwise() - mean;
        return mu.dot(centered.rowwise().squaredNorm()) / n;
    }
    NodeFeatures z = x;
    for (unsigned k = 0; k < m / 2; ++k) z = -laplacian_apply(g, z);
    if (m % 2 == 0) return mu.dot(z.rowwise().squaredNorm()) / n;
    return integrate(g, grad_inner_product(g, z, z)) / n;
}

WeightedGraph canonical_energy_graph(const WeightedGraph& topology) {
    const Topology& t = topology.topology();
    std::vector<double> mu(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) mu[i] = static_cast<double>(t.degree(i)) + 1.0;
    return WeightedGraph::from_topology(topology.shared_topology(),
                                        std::vector<double>(t.slots(), 1.0), std::move(mu));
}

std::vector<double> dense_spectrum(const WeightedGraph& g, std::size_t max_nodes) {
    const std::size_t n = g.size();
    if (n > max_nodes) {
        throw GraphError("dense_spectrum: n = " + std::to_string(n) + " exceeds guard " +
                         std::to_string(max_nodes));
    }
    // M^{1/2} (-Delta) M^{-1/2} is symmetric with the same spectrum.
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    const Topology& t = g.topology();
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
            const auto j = static_cast<Eigen::Index>(t.targets[k]);
            s(ii, j) = -g.weight_at(k) / std::sqrt(g.measure(i) * g.measure(t.targets[k]));
            s(ii, ii) += g.weight_at(k) / g.measure(i);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    for (double& v : out) v = std::max(v, 0.0);
    return out;
}

double spectral_radius_bound(const WeightedGraph& g) {
    const std::size_t n = g.size();
    if (n == 0) return 0.0;
    if (n <= 400) return dense_spectrum(g).back();

    double gershgorin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (double w : g.weights(i)) total += w;
        gershgorin = std::max(gershgorin, 2.0 * total / g.measure(i));
    }
    // Power iteration on -Delta in the mu inner product.
    NodeFeatures v(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) {
        v(static_cast<Eigen::Index>(i), 0) = (i % 2 == 0 ? 1.0 : -1.0) + 1e-3 * double(i % 7);
    }
    const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(),
                                               static_cast<Eigen::Index>(n));
    double estimate = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double norm = std::sqrt(mu.dot(v.col(0).cwiseAbs2()));
        if (norm == 0.0) break;
        v /= norm;
        NodeFeatures w = -laplacian_apply(g, v);
        estimate = mu.dot(v.col(0).cwiseProduct(w.col(0)));
        v = std::move(w);
    }
    return std::min(gershgorin, 1.05 * estimate);
}

}  // namespace algsmooth
