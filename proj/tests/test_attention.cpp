#include "algsmooth/attention.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>

using namespace algsmooth;
using namespace testing_support;

namespace {

AttentionParams san_identity() {
    AttentionParams p;
    p.key = Eigen::MatrixXd::Identity(1, 1);
    p.query = Eigen::MatrixXd::Identity(1, 1);
    p.head_dim = 1;
    return p;
}

double score(const EdgeScores& e, std::size_t i, std::size_t j) {
    return e.edge[slot_of(*e.topology, i, j)];
}

// Row-stochastic matrix from an aggregation, assembled entry by entry.
Eigen::MatrixXd dense_rows(const Aggregation& agg, std::size_t n) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    const Topology& t = agg.topology();
    for (std::size_t i = 0; i < n; ++i) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = agg.self_weight(i);
        for (std::size_t s = t.begin(i); s < t.end(i); ++s) {
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.targets[s])) =
                agg.edge_weight(s);
        }
    }
    return p;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("GCN scores are all one") {
    const WeightedGraph g = path3();
    const EdgeScores e = attention_scores({AttentionKind::GCN}, {}, g, column({0, 5, 9}));
    for (double v : e.edge) CHECK(v == 1.0);
    for (double v : e.self) CHECK(v == 1.0);
}

TEST_CASE("SAN scores with unit key and query") {
    const WeightedGraph g = path3();
    const EdgeScores e = attention_scores({AttentionKind::SAN}, san_identity(), g,
                                          column({0, 1, 2}));
    CHECK(score(e, 0, 1) == 0.0);
    CHECK(score(e, 1, 2) == 2.0);
    CHECK(e.self[1] == 1.0);
    CHECK(e.self[2] == 4.0);
}

TEST_CASE("SAN scale is one over square root of the head width") {
    const WeightedGraph g = path3();
    AttentionParams p;
    p.key = Eigen::MatrixXd::Identity(2, 4);
    p.query = Eigen::MatrixXd::Identity(2, 4);
    p.head_dim = 4;
    NodeFeatures x(3, 2);
    x << 1, 1, 2, 0, 0, 3;
    const EdgeScores e = attention_scores({AttentionKind::SAN}, p, g, x);
    CHECK(score(e, 0, 1) == doctest::Approx(2.0 / 2.0));
    CHECK(e.self[2] == doctest::Approx(9.0 / 2.0));
}

TEST_CASE("GAT with zero vector scores zero") {
    const WeightedGraph g = path3();
    CounterRng rng(2);
    AttentionParams p;
    p.weight = Eigen::MatrixXd::Random(2, 3);
    p.vector = Eigen::VectorXd::Zero(6);
    p.head_dim = 3;
    const EdgeScores e = attention_scores({AttentionKind::GAT}, p, g, random_matrix(rng, 3, 2));
    for (double v : e.edge) CHECK(v == 0.0);
    for (double v : e.self) CHECK(v == 0.0);
}

TEST_CASE("GAT applies the leaky rectifier to a1.WX_i + a2.WX_j") {
    const WeightedGraph g = path3();
    AttentionParams p;
    p.weight = Eigen::MatrixXd::Identity(1, 1);
    p.vector = Eigen::Vector2d(1.0, -2.0);
    p.head_dim = 1;
    const EdgeScores e = attention_scores({AttentionKind::GAT, 0.2}, p, g, column({0, 1, 2}));
    CHECK(score(e, 1, 0) == doctest::Approx(1.0));        // 1 - 0
    CHECK(score(e, 0, 1) == doctest::Approx(-0.4));       // 0.2 * (0 - 2)
    CHECK(e.self[2] == doctest::Approx(0.2 * (2.0 - 4.0)));
}

TEST_CASE("symmetrize averages both directions") {
    const WeightedGraph g = path3();
    EdgeScores e{g.shared_topology(), std::vector<double>(4, 0.0), {0.0, 0.0, 0.0}};
    e.edge[slot_of(g.topology(), 0, 1)] = 0.0;
    e.edge[slot_of(g.topology(), 1, 0)] = 2.0;
    const EdgeScores s = symmetrize_scores(e);
    CHECK(score(s, 0, 1) == 1.0);
    CHECK(score(s, 1, 0) == 1.0);
    CHECK(scores_symmetric(s));
    CHECK_FALSE(scores_symmetric(e));
    const EdgeScores twice = symmetrize_scores(s);
    CHECK(twice.edge == s.edge);
}

TEST_CASE("SAN with shared key and query is already symmetric") {
    CounterRng rng(8);
    const WeightedGraph g = random_connected_graph(rng, 15, false);
    AttentionParams p;
    p.key = Eigen::MatrixXd::Random(4, 3);
    p.query = p.key;
    p.head_dim = 3;
    const EdgeScores e = attention_scores({AttentionKind::SAN}, p, g, random_matrix(rng, 15, 4));
    CHECK(scores_symmetric(e, 1e-12));
    const EdgeScores s = symmetrize_scores(e);
    for (std::size_t k = 0; k < e.edge.size(); ++k) CHECK(s.edge[k] == doctest::Approx(e.edge[k]));

    const EdgeScores shared = attention_scores({AttentionKind::SAN, 0.2, true},
                                               [&] {
                                                   AttentionParams q = p;
                                                   q.query = Eigen::MatrixXd::Random(4, 3);
                                                   return q;
                                               }(),
                                               g, random_matrix(rng, 15, 4));
    CHECK(scores_symmetric(shared, 1e-12));
}

TEST_CASE("uniform softmax for GCN on P3") {
    const WeightedGraph g = path3();
    const EdgeScores e = attention_scores({AttentionKind::GCN}, {}, g, column({0, 1, 2}));
    const Aggregation agg = attention_weighted_graph(symmetrize_scores(e));
    CHECK(agg.self_weight(0) == doctest::Approx(0.5));
    CHECK(agg.edge_weight(slot_of(g.topology(), 0, 1)) == doctest::Approx(0.5));
    CHECK(agg.self_weight(1) == doctest::Approx(1.0 / 3.0));
    CHECK(agg.edge_weight(slot_of(g.topology(), 1, 2)) == doctest::Approx(1.0 / 3.0));
    // The induced graph of equal scores is the canonical P3 up to a common factor.
    REQUIRE(agg.graph());
    const NodeFeatures px = agg.apply(column({0, 1, 2}));
    CHECK(px(0, 0) == doctest::Approx(0.5));
    CHECK(px(1, 0) == doctest::Approx(1.0));
    CHECK(px(2, 0) == doctest::Approx(1.5));
}

TEST_CASE("single vertex aggregates to itself") {
    const WeightedGraph g = WeightedGraph::build(1, {});
    EdgeScores e{g.shared_topology(), {}, {42.0}};
    const Aggregation agg = attention_weighted_graph(e);
    CHECK(agg.self_weight(0) == doctest::Approx(1.0));
    CHECK(agg.apply(column({7}))(0, 0) == doctest::Approx(7.0));
}

TEST_CASE("softmax row weights against a scalar oracle") {
    const WeightedGraph g = path3();
    EdgeScores e{g.shared_topology(), std::vector<double>(4), {0.0, 1.0, 4.0}};
    e.edge[slot_of(g.topology(), 0, 1)] = 1.0;
    e.edge[slot_of(g.topology(), 1, 0)] = 1.0;
    e.edge[slot_of(g.topology(), 1, 2)] = 2.0;
    e.edge[slot_of(g.topology(), 2, 1)] = 2.0;
    const Aggregation agg = attention_weighted_graph(e);
    const double e1 = std::exp(1.0);
    CHECK(agg.edge_weight(slot_of(g.topology(), 0, 1)) == doctest::Approx(e1 / (1.0 + e1)));
    CHECK(agg.edge_weight(slot_of(g.topology(), 0, 1)) == doctest::Approx(0.731).epsilon(1e-3));
    const double row1 = std::exp(1.0) + std::exp(1.0) + std::exp(2.0);
    CHECK(agg.edge_weight(slot_of(g.topology(), 1, 2)) == doctest::Approx(std::exp(2.0) / row1));
}

TEST_CASE("aggregation equals Delta + I of its induced graph") {
    CounterRng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform() * 20);
        const WeightedGraph g = random_connected_graph(rng, n, false);
        AttentionParams p;
        p.key = Eigen::MatrixXd::Random(3, 2);
        p.query = Eigen::MatrixXd::Random(3, 2);
        p.head_dim = 2;
        const NodeFeatures x = random_matrix(rng, n, 3);
        const Aggregation agg =
            attention_weighted_graph(symmetrize_scores(attention_scores({}, p, g, x)));
        REQUIRE(agg.graph());
        const WeightedGraph& induced = *agg.graph();
        CHECK(induced.aggregation_admissible());
        const NodeFeatures y = random_matrix(rng, n, 2);
        const NodeFeatures a = agg.apply(y);
        const NodeFeatures b = aggregate_apply(induced, y);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::MatrixXd rows = dense_rows(agg, n);
        CHECK((rows.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK(rows.minCoeff() >= 0.0);
    }
}

TEST_CASE("max shift leaves the aggregation unchanged") {
    const WeightedGraph g = path3();
    EdgeScores e{g.shared_topology(), std::vector<double>(4), {0.3, -1.0, 2.0}};
    e.edge[slot_of(g.topology(), 0, 1)] = 0.7;
    e.edge[slot_of(g.topology(), 1, 0)] = 0.7;
    e.edge[slot_of(g.topology(), 1, 2)] = -0.2;
    e.edge[slot_of(g.topology(), 2, 1)] = -0.2;
    EdgeScores shifted = e;
    for (double& v : shifted.edge) v += 500.0;
    for (double& v : shifted.self) v += 500.0;
    const Aggregation a = attention_weighted_graph(e);
    const Aggregation b = attention_weighted_graph(shifted);
    CHECK(a.graph().has_value());
    CHECK_FALSE(b.graph().has_value());
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.self_weight(i) == doctest::Approx(b.self_weight(i)));
    for (std::size_t s = 0; s < 4; ++s) CHECK(a.edge_weight(s) == doctest::Approx(b.edge_weight(s)));
}

TEST_CASE("asymmetric scores are rejected") {
    const WeightedGraph g = path3();
    EdgeScores e{g.shared_topology(), {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(attention_weighted_graph(e), GraphError);
}

TEST_CASE("attention kind names") {
    CHECK(parse_attention_kind("san") == AttentionKind::SAN);
    CHECK(parse_attention_kind("GAT") == AttentionKind::GAT);
    CHECK(to_string(AttentionKind::GCN) == "gcn");
    CHECK_THROWS(parse_attention_kind("transformer"));
}

}
