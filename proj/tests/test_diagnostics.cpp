#include "algsmooth/diagnostics.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>

using namespace algsmooth;
using namespace testing_support;

namespace {

EnergySeries planted(std::size_t count, double (*f)(double)) {
    EnergySeries s;
    for (std::size_t k = 1; k <= count; ++k) {
        s.index.push_back(static_cast<double>(k));
        s.value.push_back(f(static_cast<double>(k)));
    }
    return s;
}

EnergySeries with_noise(EnergySeries s, std::uint64_t seed, double level) {
    CounterRng rng(seed);
    for (double& v : s.value) v *= 1.0 + level * rng.normal();
    return s;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("energy series of constant states is zero") {
    const WeightedGraph g = path3();
    LayerTrajectory t;
    t.hidden = {column({2, 2, 2}), column({5, 5, 5})};
    for (unsigned m = 0; m < 3; ++m) {
        for (double v : energy_series(t, m, g).value) CHECK(v == 0.0);
    }
}

TEST_CASE("energy series on P3") {
    const WeightedGraph g = path3();
    LayerTrajectory t;
    t.hidden = {column({0, 1, 2}), column({0, 1, 2})};
    const EnergySeries e2 = energy_series(t, 2, g);
    CHECK(e2.index == std::vector<double>{0.0, 1.0});
    CHECK(e2.value[0] == doctest::Approx(1.0 / 3.0));
    CHECK(e2.value[1] == doctest::Approx(1.0 / 3.0));
    const EnergySeries e1 = energy_series(t, 1, g);
    CHECK(e1.value[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("energy series ignores topology weights") {
    const std::vector<Edge> weighted{{0, 1, 9.0}, {1, 2, 0.1}};
    const WeightedGraph g = WeightedGraph::build(3, weighted, std::vector<double>{20, 20, 20});
    LayerTrajectory t;
    t.hidden = {column({0, 1, 2})};
    CHECK(energy_series(t, 2, g).value[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("flow energy series needs recorded states") {
    FlowTrajectory t;
    t.times = {0.0, 1.0};
    CHECK_THROWS(energy_series(t, 1, path3()));
}

TEST_CASE("relative similarity") {
    EnergySeries flat{{0, 1, 2, 3}, {4, 4, 4, 4}, 2, ""};
    for (const auto& r : relative_similarity_series(flat).value) CHECK(*r == 0.0);

    const EnergySeries geometric = planted(10, [](double k) { return std::pow(2.0, k); });
    for (const auto& r : relative_similarity_series(geometric).value) {
        CHECK(*r == doctest::Approx(1.0));
    }

    const EnergySeries squares = planted(12, [](double k) { return k * k; });
    const RelativeSimilarity r = relative_similarity_series(squares);
    // value[j] is R at index j + 2.
    CHECK(*r.value[8] == doctest::Approx(19.0 / 81.0));
    CHECK(r.index[8] == 10.0);

    EnergySeries with_zero{{0, 1, 2}, {0.0, 1.0, 2.0}, 2, ""};
    const RelativeSimilarity z = relative_similarity_series(with_zero);
    CHECK_FALSE(z.value[0].has_value());
    CHECK(*z.value[1] == doctest::Approx(1.0));
}

TEST_CASE("curse-of-depth verdict") {
    // Slowly growing power law: R ~ 0.5/k is small and shrinking.
    const EnergySeries slow = planted(256, [](double k) { return std::sqrt(k); });
    CHECK(relative_similarity_series(slow).curse_of_depth);
    // Decaying energy is never the curse of depth.
    const EnergySeries decay = planted(256, [](double k) { return 1.0 / k; });
    CHECK_FALSE(relative_similarity_series(decay).curse_of_depth);
    // Constant relative change of 10% is not converging.
    const EnergySeries fast = planted(256, [](double k) { return std::pow(1.1, k); });
    CHECK_FALSE(relative_similarity_series(fast).curse_of_depth);
}

TEST_CASE("cosine similarity") {
    CounterRng rng(1);
    const NodeFeatures a = random_matrix(rng, 6, 3);
    const std::vector<NodeFeatures> states{a, a, -a};
    const SimilarityMatrix m = cosine_similarity_matrix(states);
    CHECK(*m.at(0, 1) == doctest::Approx(1.0));
    CHECK(*m.at(0, 2) == doctest::Approx(-1.0));
    CHECK(*m.at(2, 2) == 1.0);

    NodeFeatures s(2, 2), t(2, 2);
    s << 1, 0, 0, 1;
    t << 1, 1, 1, 1;
    t /= std::sqrt(2.0);
    const std::vector<NodeFeatures> pair{s, t};
    CHECK(*cosine_similarity_matrix(pair).at(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(*mean_cosine(s, t) == doctest::Approx(1.0 / std::sqrt(2.0)));

    NodeFeatures zero = s;
    zero.row(1).setZero();
    const std::vector<NodeFeatures> with_zero{s, zero};
    const SimilarityMatrix z = cosine_similarity_matrix(with_zero);
    CHECK_FALSE(z.at(0, 1).has_value());
    CHECK_FALSE(mean_cosine(s, zero).has_value());
}

TEST_CASE("least squares") {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{3, 5, 7, 9};
    const LineFit f = least_squares(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    const std::vector<double> c{2, 2, 2, 2};
    CHECK(least_squares(x, c).r2 == 1.0);
}

TEST_CASE("fit recovers planted laws exactly") {
    const FitReport power = fit_decay(planted(100, [](double k) { return 100.0 / k; }));
    CHECK(power.law == DecayLaw::Power);
    CHECK(power.classification == DecayClass::AlgebraicDecay);
    CHECK(power.exponent == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(power.r2 == doctest::Approx(1.0));

    const FitReport expo = fit_decay(planted(100, [](double k) { return std::exp(-0.5 * k); }));
    CHECK(expo.law == DecayLaw::Exponential);
    CHECK(expo.classification == DecayClass::ExponentialDecay);
    CHECK(std::abs(expo.exponent + 0.5) <= 1e-6);

    const FitReport growth = fit_decay(planted(100, [](double k) { return std::pow(k, 1.8); }));
    CHECK(growth.law == DecayLaw::Power);
    CHECK(growth.classification == DecayClass::Growth);
    CHECK(std::abs(growth.exponent - 1.8) <= 1e-6);
}

TEST_CASE("fit tolerates one percent multiplicative noise") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const FitReport power =
            fit_decay(with_noise(planted(100, [](double k) { return 100.0 / k; }), seed, 0.01));
        CHECK(power.exponent == doctest::Approx(-1.0).epsilon(0.05));
        const FitReport expo = fit_decay(
            with_noise(planted(100, [](double k) { return std::exp(-0.5 * k); }), seed, 0.01));
        CHECK(expo.exponent == doctest::Approx(-0.5).epsilon(0.05));
        const FitReport growth = fit_decay(
            with_noise(planted(100, [](double k) { return std::pow(k, 1.8); }), seed, 0.01));
        CHECK(growth.exponent == doctest::Approx(1.8).epsilon(0.05));
    }
}

TEST_CASE("fit window, skipped points, and short series") {
    EnergySeries s = planted(50, [](double k) { return 1.0 / (k * k); });
    s.value[30] = 0.0;
    FitOptions options;
    options.window = std::pair{10.0, 40.0};
    const FitReport r = fit_decay(s, options);
    CHECK(r.skipped == 1);
    CHECK(r.window_lo == 10.0);
    CHECK(r.window_hi == 40.0);
    CHECK(r.exponent == doctest::Approx(-2.0));
    CHECK_THROWS_AS(fit_decay(planted(4, [](double k) { return k; })), std::invalid_argument);
}

TEST_CASE("median") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK(std::isnan(median({})));
}

TEST_CASE("pruning") {
    CounterRng rng(7);
    const WeightedGraph g = random_connected_graph(rng, 12, false);
    ModelConfig c;
    c.depth = 4;
    c.hidden = 8;
    c.input_dim = 3;
    c.variant = Variant::PreLN;
    ModelParams p = init_model(c);
    const NodeFeatures x = random_matrix(rng, 12, 3);

    for (HeadParams& h : p.layers[2].heads) h.value.setZero();
    p.layers[2].output.setZero();
    p.layers[2].ffn_in.weight.setZero();
    p.layers[2].ffn_out.weight.setZero();
    const PruneRecord zero = prune_layer_deviation(p, c, g, x, 3);
    CHECK(zero.deviation == 0.0);
    CHECK(*zero.cosine == doctest::Approx(1.0));

    const LayerTrajectory reference = forward_trajectory(p, c, g, x);
    for (std::size_t layer = 1; layer <= 4; ++layer) {
        const PruneRecord direct = prune_layer_deviation(p, c, g, x, layer);
        const PruneRecord resumed = prune_layer_deviation(p, c, g, x, layer, &reference);
        CHECK(direct.deviation == doctest::Approx(resumed.deviation).epsilon(1e-12));
    }
    CHECK_THROWS_AS(prune_layer_deviation(p, c, g, x, 0), std::out_of_range);
    CHECK_THROWS_AS(prune_layer_deviation(p, c, g, x, 5), std::out_of_range);

    ModelConfig one = c;
    one.depth = 1;
    const ModelParams q = init_model(one);
    const PruneRecord single = prune_layer_deviation(q, one, g, x, 1);
    const LayerTrajectory full = forward_trajectory(q, one, g, x);
    const NodeFeatures& base = full.hidden[1];
    CHECK(single.deviation ==
          doctest::Approx((full.hidden[0] - base).norm() / base.norm()));
}

}
