#include "algsmooth/ingest.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace algsmooth;
using namespace testing_support;

namespace {

std::filesystem::path scratch(const std::string& name, const std::string& content) {
    const std::filesystem::path dir = std::filesystem::path(TEST_SCRATCH_DIR) / "ingest";
    std::filesystem::create_directories(dir);
    const std::filesystem::path p = dir / name;
    std::ofstream(p) << content;
    return p;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("edge list") {
    const WeightedGraph p3 = load_edge_list(scratch("p3.edges", "0 1\n1 2\n"));
    CHECK(p3.size() == 3);
    CHECK(p3.edge_count() == 2);
    CHECK(p3.measure() == std::vector<double>{2, 3, 2});

    const WeightedGraph dup = load_edge_list(scratch("dup.edges", "# c\n1 2\n2 1\n"));
    CHECK(dup.size() == 3);
    CHECK(dup.edge_count() == 1);
    CHECK(dup.components() == 2);

    CHECK(load_edge_list(scratch("pad.edges", "0 1\n"), 5).size() == 5);
    CHECK(load_edge_list(scratch("w.edges", "0 1 2.5\n")).weights(0)[0] == 2.5);
}

TEST_CASE("edge list errors carry line numbers") {
    try {
        load_edge_list(scratch("bad.edges", "0 1\n1 x\n"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(load_edge_list(scratch("three.edges", "0 1 2 3\n")), ParseError);
    CHECK_THROWS(load_edge_list(scratch("loop.edges", "1 1\n")));
    CHECK_THROWS(load_edge_list(scratch("empty.edges", "")));
    CHECK_THROWS(load_edge_list(std::filesystem::path(TEST_SCRATCH_DIR) / "missing.edges"));
}

TEST_CASE("features") {
    const NodeFeatures x = load_features(scratch("f.csv", "0\n1\n2\n"), 3);
    CHECK(x.cols() == 1);
    CHECK(x(2, 0) == 2.0);
    const NodeFeatures y = load_features(scratch("g.csv", "1,2\n3 4\n"), 2);
    CHECK(y(1, 1) == 4.0);
    CHECK_THROWS_AS(load_features(scratch("short.csv", "0\n1\n"), 3), ParseError);
    CHECK_THROWS_AS(load_features(scratch("ragged.csv", "0,1\n1\n"), 2), ParseError);
}

TEST_CASE("labels") {
    CHECK(load_labels(scratch("l.txt", "0\n2\n1\n"), 3) == std::vector<long>{0, 2, 1});
    CHECK_THROWS(load_labels(scratch("l2.txt", "0\n"), 3));
}

TEST_CASE("matrix and edge list round trip") {
    CounterRng rng(1);
    const NodeFeatures x = random_matrix(rng, 5, 3);
    const auto path = std::filesystem::path(TEST_SCRATCH_DIR) / "ingest" / "m.csv";
    write_matrix(path, x, "seed=1");
    CHECK(read_matrix(path) == x);

    const WeightedGraph g = random_connected_graph(rng, 10, false);
    const auto edges = std::filesystem::path(TEST_SCRATCH_DIR) / "ingest" / "rt.edges";
    write_edge_list(edges, g, "round trip");
    const WeightedGraph back = load_edge_list(edges);
    CHECK(back.edge_count() == g.edge_count());
    CHECK(back.slot_weights() == g.slot_weights());
}

TEST_CASE("synthetic graphs") {
    SyntheticSpec path;
    path.kind = SyntheticKind::Path;
    path.size = 3;
    CHECK(generate_graph(path).measure() == std::vector<double>{2, 3, 2});

    SyntheticSpec ring;
    ring.kind = SyntheticKind::Ring;
    ring.size = 4;
    const WeightedGraph rg = generate_graph(ring);
    for (double m : rg.measure()) CHECK(m == 3.0);

    SyntheticSpec grid;
    grid.kind = SyntheticKind::Grid2d;
    grid.rows = 2;
    grid.cols = 2;
    const WeightedGraph gg = generate_graph(grid);
    CHECK(gg.size() == 4);
    CHECK(gg.edge_count() == 4);

    SyntheticSpec sbm;
    sbm.kind = SyntheticKind::Sbm;
    sbm.size = 300;
    sbm.blocks = 3;
    sbm.p_in = 0.1;
    sbm.p_out = 0.005;
    sbm.seed = 9;
    const WeightedGraph a = generate_graph(sbm);
    const WeightedGraph b = generate_graph(sbm);
    CHECK(a.connected());
    CHECK(a.slot_weights() == b.slot_weights());
    CHECK(a.topology().targets == b.topology().targets);
    const auto blocks = sbm_blocks(sbm);
    std::size_t inside = 0;
    for (const Edge& e : a.edges()) inside += blocks[e.i] == blocks[e.j];
    CHECK(inside > a.edge_count() / 2);

    SyntheticSpec sparse;
    sparse.kind = SyntheticKind::ErdosRenyi;
    sparse.size = 200;
    sparse.p = 0.001;
    sparse.max_retries = 3;
    CHECK_THROWS_AS(generate_graph(sparse), RetryExhaustedError);

    CHECK(parse_synthetic_kind("grid") == SyntheticKind::Grid2d);
    CHECK_THROWS(parse_synthetic_kind("torus"));
}

TEST_CASE("random features") {
    CHECK(random_features(10, 4, 3) == random_features(10, 4, 3));
    CHECK_FALSE(random_features(10, 4, 3) == random_features(10, 4, 4));
    CHECK(random_features(10, 4, 3, 0.0).cwiseAbs().maxCoeff() == 0.0);
    const NodeFeatures big = random_features(1000, 1000, 1);
    CHECK(std::abs(big.mean()) < 0.01);
    CHECK(big.array().square().mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("dataset stats") {
    const DatasetStats s = dataset_stats(path3());
    CHECK(s.nodes == 3);
    CHECK(s.edges == 2);
    CHECK(s.components == 1);
    CHECK_FALSE(s.features.has_value());
    const NodeFeatures x = column({1, 2, 3});
    const std::vector<long> labels{0, 1, 1};
    const DatasetStats t = dataset_stats(path3(), &x, &labels);
    CHECK(*t.features == 1);
    CHECK(*t.classes == 2);
}

}
