#pragma once

#include "algsmooth/graph.hpp"

#include <optional>
#include <string_view>

namespace algsmooth {

enum class AttentionKind { GCN, GAT, SAN };

std::string_view to_string(AttentionKind kind);
AttentionKind parse_attention_kind(std::string_view text);

struct AttentionSpec {
    AttentionKind kind = AttentionKind::SAN;
    double leaky_slope = 0.2;        // GAT only
    bool shared_key_query = false;   // SAN only: use K for both sides

    void validate() const;
};

/// Single-head learnable blocks. GAT: weight (d_in x d_head) and vector a of
/// length 2 d_head. SAN: key and query (d_in x d_head). GCN: nothing.
struct AttentionParams {
    Eigen::MatrixXd weight;
    Eigen::VectorXd vector;
    Eigen::MatrixXd key;
    Eigen::MatrixXd query;
    std::size_t head_dim = 0;
};

/// Scores on every adjacency slot plus the diagonal e_ii.
struct EdgeScores {
    std::shared_ptr<const Topology> topology;
    std::vector<double> edge;
    std::vector<double> self;
};

EdgeScores attention_scores(const AttentionSpec& spec, const AttentionParams& params,
                            const WeightedGraph& topology, const NodeFeatures& x);

/// e'_ij = (e_ij + e_ji) / 2, diagonal untouched.
EdgeScores symmetrize_scores(const EdgeScores& scores);

bool scores_symmetric(const EdgeScores& scores, double tolerance = 0.0);

/// Row-stochastic softmax aggregation over N_i and i itself.
class Aggregation {
public:
    Aggregation(std::shared_ptr<const Topology> topology, std::vector<double> edge_weight,
                std::vector<double> self_weight, std::optional<WeightedGraph> graph);

    NodeFeatures apply(const NodeFeatures& x) const;

    double self_weight(std::size_t i) const { return self_[i]; }
    double edge_weight(std::size_t slot) const { return edge_[slot]; }
    const Topology& topology() const { return *topology_; }

    /// The induced graph w = exp(e), mu_i = exp(e_ii) + sum_l exp(e_il), for
    /// which P = Delta_mu + I. Absent when scores exceed the exp-safe range.
    const std::optional<WeightedGraph>& graph() const { return graph_; }

private:
    std::shared_ptr<const Topology> topology_;
    std::vector<double> edge_;
    std::vector<double> self_;
    std::optional<WeightedGraph> graph_;
};

constexpr double kSafeScoreMagnitude = 60.0;

/// Scores are max-shifted per row before exponentiation. Throws GraphError if
/// the scores are not symmetric.
Aggregation attention_weighted_graph(const EdgeScores& scores, bool with_graph_view = true);

}  // namespace algsmooth
