#include "algsmooth/network.hpp"

#include "algsmooth/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace algsmooth {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::PostLN: return "post-ln";
        case Variant::PreLN: return "pre-ln";
        case Variant::NonlocalPostLN: return "nonlocal-post-ln";
    }
    return "unknown";
}

Variant parse_variant(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
        return c == '_' ? '-' : static_cast<char>(std::tolower(c));
    });
    if (lower == "post-ln" || lower == "postln" || lower == "post") return Variant::PostLN;
    if (lower == "pre-ln" || lower == "preln" || lower == "pre") return Variant::PreLN;
    if (lower == "nonlocal-post-ln" || lower == "nonlocalpostln" || lower == "nonlocal") {
        return Variant::NonlocalPostLN;
    }
    throw std::invalid_argument("unknown variant '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
    if (heads == 0 || hidden % heads != 0) {
        throw std::invalid_argument("heads must divide the hidden dimension");
    }
    if (hidden < 2) throw std::invalid_argument("hidden dimension must be at least 2");
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("input/output dims must be positive");
    if (ffn_expansion < 1) throw std::invalid_argument("ffn expansion must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must lie in [0, 1)");
    attention.validate();
}

std::string ModelConfig::to_key_values() const {
    std::ostringstream out;
    out.precision(17);
    out << "depth = " << depth << '\n'
        << "heads = " << heads << '\n'
        << "hidden = " << hidden << '\n'
        << "input_dim = " << input_dim << '\n'
        << "output_dim = " << output_dim << '\n'
        << "variant = " << to_string(variant) << '\n'
        << "attention = " << to_string(attention.kind) << '\n'
        << "leaky_slope = " << attention.leaky_slope << '\n'
        << "shared_key_query = " << (attention.shared_key_query ? "true" : "false") << '\n'
        << "seed = " << seed << '\n'
        << "ffn_expansion = " << ffn_expansion << '\n'
        << "dropout = " << dropout << '\n';
    return out.str();
}

std::uint64_t ModelConfig::hash() const { return fnv1a(to_key_values()); }

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty() || value[0] == '-') {
        throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
    }
    return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty()) {
        throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
    }
    return v;
}

}  // namespace

ModelConfig parse_model_config(std::string_view text) {
    ModelConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "depth") c.depth = parse_size(key, value);
        else if (key == "heads") c.heads = parse_size(key, value);
        else if (key == "hidden") c.hidden = parse_size(key, value);
        else if (key == "input_dim") c.input_dim = parse_size(key, value);
        else if (key == "output_dim") c.output_dim = parse_size(key, value);
        else if (key == "variant") c.variant = parse_variant(value);
        else if (key == "attention") c.attention.kind = parse_attention_kind(value);
        else if (key == "leaky_slope") c.attention.leaky_slope = parse_real(key, value);
        else if (key == "shared_key_query") c.attention.shared_key_query = (value == "true" || value == "1");
        else if (key == "seed") c.seed = parse_size(key, value);
        else if (key == "ffn_expansion") c.ffn_expansion = parse_size(key, value);
        else if (key == "dropout") c.dropout = parse_real(key, value);
        else throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    return c;
}

NodeFeatures Dense::apply(const NodeFeatures& x) const {
    if (x.cols() != weight.rows()) {
        throw std::invalid_argument("Dense::apply: input has " + std::to_string(x.cols()) +
                                    " columns, weight expects " + std::to_string(weight.rows()));
    }
    NodeFeatures out = x * weight;
    out.rowwise() += bias;
    return out;
}

namespace {

// Stream ids: layer index in the high bits, tensor slot in the low bits.
constexpr std::uint64_t kEncoderLayer = 0xFFFF0000ULL;
constexpr std::uint64_t kDecoderLayer = 0xFFFF0001ULL;

Eigen::MatrixXd xavier(std::uint64_t seed, std::uint64_t layer, std::uint64_t slot,
                       Eigen::Index fan_in, Eigen::Index fan_out) {
    CounterRng rng(seed, (layer << 16) | slot);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd m(fan_in, fan_out);
    for (Eigen::Index r = 0; r < fan_in; ++r) {
        for (Eigen::Index c = 0; c < fan_out; ++c) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
}

Dense dense(std::uint64_t seed, std::uint64_t layer, std::uint64_t slot, std::size_t in,
            std::size_t out) {
    const auto i = static_cast<Eigen::Index>(in);
    const auto o = static_cast<Eigen::Index>(out);
    return {xavier(seed, layer, slot, i, o), RowVector::Zero(o)};
}

LayerNormParams identity_norm(std::size_t d) {
    const auto dd = static_cast<Eigen::Index>(d);
    return {RowVector::Ones(dd), RowVector::Zero(dd)};
}

}  // namespace

ModelParams init_model(const ModelConfig& config) {
    config.validate();
    const std::uint64_t seed = config.seed;
    const std::size_t d = config.hidden;
    const std::size_t dh = config.head_dim();
    const auto di = static_cast<Eigen::Index>(d);
    const auto dhi = static_cast<Eigen::Index>(dh);

    ModelParams p;
    p.encoder_in = dense(seed, kEncoderLayer, 0, config.input_dim, d);
    p.encoder_out = dense(seed, kEncoderLayer, 1, d, d);
    p.decoder = dense(seed, kDecoderLayer, 0, d, config.output_dim);

    p.layers.resize(config.depth);
    for (std::size_t k = 0; k < config.depth; ++k) {
        LayerParams& layer = p.layers[k];
        layer.heads.resize(config.heads);
        for (std::size_t h = 0; h < config.heads; ++h) {
            HeadParams& head = layer.heads[h];
            const std::uint64_t base = 16 + 8 * h;
            head.attention.head_dim = dh;
            switch (config.attention.kind) {
                case AttentionKind::GCN: break;
                case AttentionKind::GAT: {
                    head.attention.weight = xavier(seed, k, base + 0, di, dhi);
                    const Eigen::MatrixXd a = xavier(seed, k, base + 1, 2 * dhi, 1);
                    head.attention.vector = a.col(0);
                    break;
                }
                case AttentionKind::SAN:
                    head.attention.key = xavier(seed, k, base + 2, di, dhi);
                    head.attention.query = config.attention.shared_key_query
                                               ? head.attention.key
                                               : xavier(seed, k, base + 3, di, dhi);
                    break;
            }
            head.value = xavier(seed, k, base + 4, di, dhi);
        }
        layer.output = xavier(seed, k, 0, di, di);
        layer.ffn_in = dense(seed, k, 1, d, config.ffn_expansion * d);
        layer.ffn_out = dense(seed, k, 2, config.ffn_expansion * d, d);
        layer.norm_mp = identity_norm(d);
        layer.norm_ffn = identity_norm(d);
    }
    return p;
}

NodeFeatures layer_norm(const NodeFeatures& x, const RowVector& gamma, const RowVector& beta,
                        double epsilon) {
    if (x.cols() < 2) throw std::invalid_argument("layer_norm: needs at least two features");
    if (gamma.size() != x.cols() || beta.size() != x.cols()) {
        throw std::invalid_argument("layer_norm: affine parameters do not match feature dimension");
    }
    const double d = static_cast<double>(x.cols());
    NodeFeatures out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).sum() / d;
        const auto centered = x.row(i).array() - mean;
        const double var = centered.square().sum() / d;
        out.row(i) = (centered / std::sqrt(var + epsilon)).matrix().cwiseProduct(gamma) + beta;
    }
    return out;
}

Aggregation head_aggregation(const NodeFeatures& x, const HeadParams& head,
                             const AttentionSpec& spec, const WeightedGraph& topology) {
    const EdgeScores raw = attention_scores(spec, head.attention, topology, x);
    return attention_weighted_graph(symmetrize_scores(raw), false);
}

namespace {

void check_layer_shapes(const NodeFeatures& x, const LayerParams& layer) {
    if (layer.heads.empty()) throw std::invalid_argument("layer has no heads");
    const Eigen::Index d = x.cols();
    Eigen::Index concat = 0;
    for (const HeadParams& h : layer.heads) {
        if (h.value.rows() != d) {
            throw std::invalid_argument("value matrix rows do not match feature dimension");
        }
        concat += h.value.cols();
    }
    if (layer.output.rows() != concat) {
        throw std::invalid_argument("output matrix rows do not match concatenated head width");
    }
}

}  // namespace

NodeFeatures message_passing(const NodeFeatures& x, const LayerParams& layer,
                             const AttentionSpec& spec, const WeightedGraph& topology) {
    check_layer_shapes(x, layer);
    NodeFeatures concat(x.rows(), layer.output.rows());
    Eigen::Index col = 0;
    for (const HeadParams& head : layer.heads) {
        const NodeFeatures px = head_aggregation(x, head, spec, topology).apply(x);
        concat.middleCols(col, head.value.cols()) = px * head.value;
        col += head.value.cols();
    }
    return concat * layer.output;
}

NonlocalOutput nonlocal_message_passing(const NodeFeatures& x, const LayerParams& layer,
                                        const AttentionSpec& spec,
                                        const WeightedGraph& topology) {
    using Clock = std::chrono::steady_clock;
    check_layer_shapes(x, layer);
    const double n = static_cast<double>(x.rows());
    NonlocalOutput out;
    NodeFeatures concat(x.rows(), layer.output.rows());
    Eigen::Index col = 0;
    for (const HeadParams& head : layer.heads) {
        const NodeFeatures px = head_aggregation(x, head, spec, topology).apply(x);
        // s P X V = P X (s V): the scale lands on the d x d/h value matrix.
        const auto start = Clock::now();
        const double s = (px - x).squaredNorm() / n;
        const Eigen::MatrixXd scaled = s * head.value;
        out.multiplier_seconds += std::chrono::duration<double>(Clock::now() - start).count();
        out.multipliers.push_back(s);
        concat.middleCols(col, head.value.cols()) = px * scaled;
        col += head.value.cols();
    }
    out.features = concat * layer.output;
    return out;
}

NodeFeatures feed_forward(const NodeFeatures& x, const LayerParams& layer) {
    return layer.ffn_out.apply(layer.ffn_in.apply(x).cwiseMax(0.0));
}

NodeFeatures hidden_layer(const NodeFeatures& x, const LayerParams& layer,
                          const ModelConfig& config, const WeightedGraph& topology,
                          std::vector<double>* multipliers) {
    const AttentionSpec& spec = config.attention;
    switch (config.variant) {
        case Variant::PostLN: {
            const NodeFeatures y =
                layer_norm(x + message_passing(x, layer, spec, topology), layer.norm_mp.gamma,
                           layer.norm_mp.beta);
            return layer_norm(y + feed_forward(y, layer), layer.norm_ffn.gamma,
                              layer.norm_ffn.beta);
        }
        case Variant::PreLN: {
            const NodeFeatures y =
                x + message_passing(layer_norm(x, layer.norm_mp.gamma, layer.norm_mp.beta), layer,
                                    spec, topology);
            return y + feed_forward(layer_norm(y, layer.norm_ffn.gamma, layer.norm_ffn.beta),
                                    layer);
        }
        case Variant::NonlocalPostLN: {
            NonlocalOutput mp = nonlocal_message_passing(x, layer, spec, topology);
            if (multipliers) *multipliers = std::move(mp.multipliers);
            const NodeFeatures y =
                layer_norm(x + mp.features, layer.norm_mp.gamma, layer.norm_mp.beta);
            return layer_norm(y + feed_forward(y, layer), layer.norm_ffn.gamma,
                              layer.norm_ffn.beta);
        }
    }
    throw std::invalid_argument("unknown variant");
}

namespace {

void require_finite(const NodeFeatures& x, std::size_t layer, const char* stage) {
    if (!x.allFinite()) {
        throw NonFiniteError(layer, std::string("non-finite values after ") + stage +
                                        " at layer " + std::to_string(layer));
    }
}

}  // namespace

LayerTrajectory forward_trajectory(const ModelParams& model, const ModelConfig& config,
                                   const WeightedGraph& topology, const NodeFeatures& input,
                                   const ForwardOptions& options) {
    config.validate();
    require_rows(topology, input, "forward_trajectory");
    if (input.cols() != static_cast<Eigen::Index>(config.input_dim)) {
        throw std::invalid_argument("forward_trajectory: input has " +
                                    std::to_string(input.cols()) + " features, config expects " +
                                    std::to_string(config.input_dim));
    }
    if (model.layers.size() != config.depth) {
        throw std::invalid_argument("forward_trajectory: parameter depth does not match config");
    }
    if (options.skip_layer && (*options.skip_layer < 1 || *options.skip_layer > config.depth)) {
        throw std::out_of_range("skip layer " + std::to_string(*options.skip_layer) +
                                " outside 1.." + std::to_string(config.depth));
    }

    LayerTrajectory traj;
    traj.input = input;

    NodeFeatures dropped = input;
    if (!options.analysis && config.dropout > 0.0) {
        CounterRng rng(options.dropout_seed, 0xD80);
        const double keep = 1.0 - config.dropout;
        for (Eigen::Index i = 0; i < dropped.size(); ++i) {
            dropped.data()[i] = rng.uniform() < keep ? dropped.data()[i] / keep : 0.0;
        }
    }
    NodeFeatures x = model.encoder_out.apply(model.encoder_in.apply(dropped).cwiseMax(0.0));
    require_finite(x, 0, "encoder");

    traj.hidden.reserve(config.depth + 1);
    traj.multipliers.resize(config.depth);
    traj.hidden.push_back(x);
    for (std::size_t k = 1; k <= config.depth; ++k) {
        if (options.skip_layer != k) {
            x = hidden_layer(x, model.layers[k - 1], config, topology, &traj.multipliers[k - 1]);
            require_finite(x, k, "hidden layer");
        }
        traj.hidden.push_back(x);
    }
    traj.output = model.decoder.apply(x);
    require_finite(traj.output, config.depth, "decoder");
    return traj;
}

}  // namespace algsmooth
