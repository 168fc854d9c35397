#pragma once

#include "algsmooth/attention.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace algsmooth {

enum class Variant { PostLN, PreLN, NonlocalPostLN };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct ModelConfig {
    std::size_t depth = 2;
    std::size_t heads = 1;
    std::size_t hidden = 32;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    Variant variant = Variant::PostLN;
    AttentionSpec attention{};
    std::uint64_t seed = 0;
    std::size_t ffn_expansion = 2;
    double dropout = 0.0;

    std::size_t head_dim() const { return hidden / heads; }
    void validate() const;

    /// Flat "key = value" lines; round-trips through parse_model_config.
    std::string to_key_values() const;
    std::uint64_t hash() const;
};

/// Accepts the output of ModelConfig::to_key_values(); unknown keys throw.
/// '#' starts a comment; missing keys keep their defaults.
ModelConfig parse_model_config(std::string_view text);

struct Dense {
    Eigen::MatrixXd weight;  // in x out
    RowVector bias;

    NodeFeatures apply(const NodeFeatures& x) const;
};

struct LayerNormParams {
    RowVector gamma;
    RowVector beta;
};

struct HeadParams {
    AttentionParams attention;
    Eigen::MatrixXd value;  // d x d/h
};

struct LayerParams {
    std::vector<HeadParams> heads;
    Eigen::MatrixXd output;  // d x d
    Dense ffn_in;
    Dense ffn_out;
    LayerNormParams norm_mp;
    LayerNormParams norm_ffn;
};

struct ModelParams {
    Dense encoder_in;
    Dense encoder_out;
    std::vector<LayerParams> layers;
    Dense decoder;
};

/// Xavier-uniform weights, zero biases, identity LayerNorm affine. Each tensor
/// draws from its own counter stream keyed by (layer, slot), so the first k
/// layers of a deep model equal those of a shallower model with the same seed.
ModelParams init_model(const ModelConfig& config);

constexpr double kLayerNormEpsilon = 1e-5;

/// Per-row standardization across features followed by gamma * x + beta.
NodeFeatures layer_norm(const NodeFeatures& x, const RowVector& gamma, const RowVector& beta,
                        double epsilon = kLayerNormEpsilon);

/// One head's row-stochastic aggregation P_i built from X.
Aggregation head_aggregation(const NodeFeatures& x, const HeadParams& head,
                             const AttentionSpec& spec, const WeightedGraph& topology);

/// (P_1 X V_1 || ... || P_h X V_h) W.
NodeFeatures message_passing(const NodeFeatures& x, const LayerParams& layer,
                             const AttentionSpec& spec, const WeightedGraph& topology);

struct NonlocalOutput {
    NodeFeatures features;
    std::vector<double> multipliers;  // s_i = (1/n) ||P_i X - X||^2 per head
    double multiplier_seconds = 0.0;  // time spent on the s_i scaling alone
};

/// (s_1 P_1 X V_1 || ... || s_h P_h X V_h) W.
NonlocalOutput nonlocal_message_passing(const NodeFeatures& x, const LayerParams& layer,
                                        const AttentionSpec& spec, const WeightedGraph& topology);

/// Two affine maps with a rectifier between them.
NodeFeatures feed_forward(const NodeFeatures& x, const LayerParams& layer);

struct LayerTrajectory {
    NodeFeatures input;
    std::vector<NodeFeatures> hidden;              // X^0 ... X^L
    NodeFeatures output;                           // decoder logits
    std::vector<std::vector<double>> multipliers;  // per layer, per head (nonlocal only)
};

struct ForwardOptions {
    /// 1-based hidden layer to skip; its input is passed through untouched.
    std::optional<std::size_t> skip_layer;
    /// When false the encoder dropout is active with the configured rate.
    bool analysis = true;
    std::uint64_t dropout_seed = 0;
};

class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(std::size_t layer, const std::string& what)
        : std::runtime_error(what), layer_(layer) {}
    std::size_t layer() const { return layer_; }

private:
    std::size_t layer_;
};

/// Runs encoder, the L hidden layers of the configured variant, and decoder,
/// recording every hidden state.
LayerTrajectory forward_trajectory(const ModelParams& model, const ModelConfig& config,
                                   const WeightedGraph& topology, const NodeFeatures& input,
                                   const ForwardOptions& options = {});

/// A single hidden layer, exposed for layer-level tests and timing.
NodeFeatures hidden_layer(const NodeFeatures& x, const LayerParams& layer,
                          const ModelConfig& config, const WeightedGraph& topology,
                          std::vector<double>* multipliers = nullptr);

}  // namespace algsmooth
