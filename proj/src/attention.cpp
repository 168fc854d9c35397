#include "algsmooth/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace algsmooth {

std::string_view to_string(AttentionKind kind) {
    switch (kind) {
        case AttentionKind::GCN: return "gcn";
        case AttentionKind::GAT: return "gat";
        case AttentionKind::SAN: return "san";
    }
    return "unknown";
}

AttentionKind parse_attention_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "gcn") return AttentionKind::GCN;
    if (lower == "gat") return AttentionKind::GAT;
    if (lower == "san") return AttentionKind::SAN;
    throw std::invalid_argument("unknown attention kind '" + std::string(text) + "'");
}

void AttentionSpec::validate() const {
    if (kind == AttentionKind::GAT && !(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        throw std::invalid_argument("GAT leaky slope must lie in (0, 1)");
    }
}

namespace {

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, std::size_t cols,
                   const char* name) {
    if (m.rows() != rows || m.cols() != static_cast<Eigen::Index>(cols)) {
        throw std::invalid_argument(std::string("attention_scores: ") + name + " is " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    ", expected " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
}

}  // namespace

EdgeScores attention_scores(const AttentionSpec& spec, const AttentionParams& params,
                            const WeightedGraph& topology, const NodeFeatures& x) {
    spec.validate();
    require_rows(topology, x, "attention_scores");
    const Topology& t = topology.topology();
    const std::size_t n = t.size();
    EdgeScores out{topology.shared_topology(), std::vector<double>(t.slots()),
                   std::vector<double>(n)};

    switch (spec.kind) {
        case AttentionKind::GCN:
            std::fill(out.edge.begin(), out.edge.end(), 1.0);
            std::fill(out.self.begin(), out.self.end(), 1.0);
            break;

        case AttentionKind::GAT: {
            require_shape(params.weight, x.cols(), params.head_dim, "W");
            if (params.vector.size() != static_cast<Eigen::Index>(2 * params.head_dim)) {
                throw std::invalid_argument("attention_scores: a must have length 2 d_head");
            }
            const Eigen::Index dh = static_cast<Eigen::Index>(params.head_dim);
            const Eigen::MatrixXd wx = x * params.weight;
            const Eigen::VectorXd left = wx * params.vector.head(dh);
            const Eigen::VectorXd right = wx * params.vector.tail(dh);
            const double slope = spec.leaky_slope;
            auto leaky = [slope](double v) { return v > 0.0 ? v : slope * v; };
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
                    out.edge[k] = leaky(left[ii] + right[static_cast<Eigen::Index>(t.targets[k])]);
                }
                out.self[i] = leaky(left[ii] + right[ii]);
            }
            break;
        }

        case AttentionKind::SAN: {
            require_shape(params.key, x.cols(), params.head_dim, "K");
            const Eigen::MatrixXd& query_matrix =
                spec.shared_key_query ? params.key : params.query;
            require_shape(query_matrix, x.cols(), params.head_dim, "Q");
            const double scale = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
            const NodeFeatures kx = x * params.key;
            const NodeFeatures qx = x * query_matrix;
            for (std::size_t i = 0; i < n; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
                    out.edge[k] =
                        scale * kx.row(ii).dot(qx.row(static_cast<Eigen::Index>(t.targets[k])));
                }
                out.self[i] = scale * kx.row(ii).dot(qx.row(ii));
            }
            break;
        }
    }
    return out;
}

EdgeScores symmetrize_scores(const EdgeScores& scores) {
    EdgeScores out = scores;
    const Topology& t = *scores.topology;
    for (std::size_t s = 0; s < t.slots(); ++s) {
        const std::size_t r = t.reverse[s];
        // Summation order fixed by slot index so both directions get the same bits.
        out.edge[s] = s < r ? 0.5 * (scores.edge[s] + scores.edge[r])
                            : 0.5 * (scores.edge[r] + scores.edge[s]);
    }
    return out;
}

bool scores_symmetric(const EdgeScores& scores, double tolerance) {
    const Topology& t = *scores.topology;
    for (std::size_t s = 0; s < t.slots(); ++s) {
        const double a = scores.edge[s];
        const double b = scores.edge[t.reverse[s]];
        if (std::abs(a - b) > tolerance * (1.0 + std::abs(a))) return false;
    }
    return true;
}

Aggregation::Aggregation(std::shared_ptr<const Topology> topology, std::vector<double> edge_weight,
                         std::vector<double> self_weight, std::optional<WeightedGraph> graph)
    : topology_(std::move(topology)),
      edge_(std::move(edge_weight)),
      self_(std::move(self_weight)),
      graph_(std::move(graph)) {}

NodeFeatures Aggregation::apply(const NodeFeatures& x) const {
    const Topology& t = *topology_;
    if (static_cast<std::size_t>(x.rows()) != t.size()) {
        throw GraphError("Aggregation::apply: feature rows do not match vertex count");
    }
    NodeFeatures out(x.rows(), x.cols());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        auto row = out.row(ii);
        row = self_[i] * x.row(ii);
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
            row += edge_[k] * x.row(static_cast<Eigen::Index>(t.targets[k]));
        }
    }
    return out;
}

Aggregation attention_weighted_graph(const EdgeScores& scores, bool with_graph_view) {
    if (!scores_symmetric(scores, 1e-12)) {
        throw GraphError("attention_weighted_graph: scores are not symmetric; symmetrize first");
    }
    const Topology& t = *scores.topology;
    const std::size_t n = t.size();
    std::vector<double> edge(t.slots());
    std::vector<double> self(n);
    bool safe = true;
    for (std::size_t i = 0; i < n; ++i) {
        double shift = scores.self[i];
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) shift = std::max(shift, scores.edge[k]);
        safe = safe && std::abs(scores.self[i]) <= kSafeScoreMagnitude;
        double z = std::exp(scores.self[i] - shift);
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) {
            safe = safe && std::abs(scores.edge[k]) <= kSafeScoreMagnitude;
            edge[k] = std::exp(scores.edge[k] - shift);
            z += edge[k];
        }
        self[i] = std::exp(scores.self[i] - shift) / z;
        for (std::size_t k = t.begin(i); k < t.end(i); ++k) edge[k] /= z;
    }

    std::optional<WeightedGraph> graph;
    if (safe && with_graph_view) {
        std::vector<double> omega(t.slots());
        std::vector<double> mu(n);
        for (std::size_t s = 0; s < t.slots(); ++s) {
            omega[s] = std::exp(scores.edge[std::min(s, t.reverse[s])]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = std::exp(scores.self[i]);
            for (std::size_t k = t.begin(i); k < t.end(i); ++k) mu[i] += omega[k];
        }
        graph = WeightedGraph::from_topology(scores.topology, std::move(omega), std::move(mu));
    }
    return Aggregation(scores.topology, std::move(edge), std::move(self), std::move(graph));
}

}  // namespace algsmooth
