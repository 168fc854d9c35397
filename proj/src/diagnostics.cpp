#include "algsmooth/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace algsmooth {

double median(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(),
                                           values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

EnergySeries energy_series(std::span<const NodeFeatures> states, std::span<const double> index,
                           unsigned order, const WeightedGraph& topology,
                           std::string provenance) {
    if (states.size() != index.size()) {
        throw std::invalid_argument("energy_series: index and state counts differ");
    }
    const WeightedGraph canonical = canonical_energy_graph(topology);
    EnergySeries out;
    out.order = order;
    out.provenance = std::move(provenance);
    out.index.assign(index.begin(), index.end());
    out.value.reserve(states.size());
    for (const NodeFeatures& x : states) out.value.push_back(derivative_energy(canonical, x, order));
    return out;
}

EnergySeries energy_series(const LayerTrajectory& trajectory, unsigned order,
                           const WeightedGraph& topology, std::string provenance) {
    std::vector<double> index(trajectory.hidden.size());
    std::iota(index.begin(), index.end(), 0.0);
    return energy_series(trajectory.hidden, index, order, topology, std::move(provenance));
}

EnergySeries energy_series(const FlowTrajectory& trajectory, unsigned order,
                           const WeightedGraph& topology, std::string provenance) {
    if (trajectory.states.size() != trajectory.times.size()) {
        throw std::invalid_argument("energy_series: flow trajectory was run without recorded states");
    }
    return energy_series(trajectory.states, trajectory.times, order, topology,
                         std::move(provenance));
}

RelativeSimilarity relative_similarity_series(const EnergySeries& series,
                                              const CurseOfDepthOptions& options) {
    RelativeSimilarity out;
    const std::size_t count = series.value.size();
    for (std::size_t k = 1; k < count; ++k) {
        out.index.push_back(series.index[k]);
        const double prev = series.value[k - 1];
        if (prev > 0.0) {
            out.value.emplace_back((series.value[k] - prev) / prev);
        } else {
            out.value.emplace_back(std::nullopt);
        }
    }
    const std::size_t length = out.value.size();
    if (length == 0) return out;

    const std::size_t tail = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(length))));
    const std::size_t start = length > tail ? length - tail : 0;

    std::vector<double> abs_all, abs_early, abs_late;
    const std::size_t half = start + (length - start) / 2;
    for (std::size_t k = start; k < length; ++k) {
        if (!out.value[k]) continue;
        const double a = std::abs(*out.value[k]);
        abs_all.push_back(a);
        (k < half ? abs_early : abs_late).push_back(a);
    }
    // Energies of the tail layers: entries start .. length of the original series.
    std::vector<double> idx(series.index.begin() + static_cast<std::ptrdiff_t>(start),
                            series.index.end());
    std::vector<double> val(series.value.begin() + static_cast<std::ptrdiff_t>(start),
                            series.value.end());
    out.tail_energy_slope = least_squares(idx, val).slope;
    out.tail_median_abs = abs_all.empty() ? std::nan("") : median(abs_all);
    out.tail_decreasing = !abs_early.empty() && !abs_late.empty() &&
                          median(abs_late) < median(abs_early);
    out.curse_of_depth = out.tail_energy_slope >= 0.0 && !abs_all.empty() &&
                         out.tail_median_abs < options.threshold && out.tail_decreasing;
    return out;
}

std::optional<double> mean_cosine(const NodeFeatures& a, const NodeFeatures& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("mean_cosine: shape mismatch");
    }
    if (a.rows() == 0) return std::nullopt;
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double na = a.row(i).norm();
        const double nb = b.row(i).norm();
        if (na == 0.0 || nb == 0.0) return std::nullopt;
        total += a.row(i).dot(b.row(i)) / (na * nb);
    }
    return total / static_cast<double>(a.rows());
}

SimilarityMatrix cosine_similarity_matrix(std::span<const NodeFeatures> states) {
    const std::size_t count = states.size();
    SimilarityMatrix out(count);
    std::vector<NodeFeatures> unit(count);
    std::vector<char> valid(count, 1);
    for (std::size_t s = 0; s < count; ++s) {
        unit[s] = states[s];
        for (Eigen::Index i = 0; i < unit[s].rows(); ++i) {
            const double norm = unit[s].row(i).norm();
            if (norm == 0.0) {
                valid[s] = 0;
                break;
            }
            unit[s].row(i) /= norm;
        }
        if (unit[s].rows() == 0) valid[s] = 0;
    }
    for (std::size_t s = 0; s < count; ++s) {
        if (!valid[s]) continue;
        out.at(s, s) = 1.0;
        const Eigen::Map<const Eigen::VectorXd> us(unit[s].data(), unit[s].size());
        const double n = static_cast<double>(unit[s].rows());
        for (std::size_t t = s + 1; t < count; ++t) {
            if (!valid[t]) continue;
            if (unit[t].rows() != unit[s].rows() || unit[t].cols() != unit[s].cols()) {
                throw std::invalid_argument("cosine_similarity_matrix: states differ in shape");
            }
            const Eigen::Map<const Eigen::VectorXd> ut(unit[t].data(), unit[t].size());
            const double sim = std::clamp(us.dot(ut) / n, -1.0, 1.0);
            out.at(s, t) = sim;
            out.at(t, s) = sim;
        }
    }
    return out;
}

std::string_view to_string(DecayLaw law) {
    return law == DecayLaw::Power ? "power" : "exponential";
}

std::string_view to_string(DecayClass c) {
    switch (c) {
        case DecayClass::ExponentialDecay: return "exponential-decay";
        case DecayClass::AlgebraicDecay: return "algebraic-decay";
        case DecayClass::Growth: return "growth";
        case DecayClass::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least_squares: length mismatch");
    LineFit fit;
    fit.points = x.size();
    if (x.size() < 2) return fit;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx;
        const double dy = y[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (fit.slope * x[k] + fit.intercept);
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

FitReport fit_decay(const EnergySeries& series, const FitOptions& options) {
    const std::size_t count = std::min(series.index.size(), series.value.size());
    double lo = 0.0, hi = 0.0;
    std::size_t first = 0;
    if (options.window) {
        lo = options.window->first;
        hi = options.window->second;
    } else {
        first = static_cast<std::size_t>(std::floor(options.burn_in * static_cast<double>(count)));
        if (first >= count) throw std::invalid_argument("fit_decay: empty window");
        lo = series.index[first];
        hi = series.index[count - 1];
    }

    std::vector<double> log_k, k_lin, log_e;
    FitReport report;
    for (std::size_t k = first; k < count; ++k) {
        const double idx = series.index[k];
        if (idx < lo || idx > hi) continue;
        const double e = series.value[k];
        if (!(e > 0.0) || !(idx > 0.0)) {
            ++report.skipped;
            continue;
        }
        log_k.push_back(std::log(idx));
        k_lin.push_back(idx);
        log_e.push_back(std::log(e));
    }
    if (log_e.size() < 5) {
        throw std::invalid_argument("fit_decay: need at least 5 positive points in the window, have " +
                                    std::to_string(log_e.size()));
    }
    report.window_lo = k_lin.front();
    report.window_hi = k_lin.back();
    report.power = least_squares(log_k, log_e);
    report.exponential = least_squares(k_lin, log_e);

    const bool exponential_best = report.exponential.r2 > report.power.r2;
    const LineFit& best = exponential_best ? report.exponential : report.power;
    report.law = exponential_best ? DecayLaw::Exponential : DecayLaw::Power;
    report.exponent = best.slope;
    report.intercept = best.intercept;
    report.r2 = best.r2;

    if (exponential_best && report.exponential.r2 >= options.min_r2 &&
        report.exponential.slope < 0.0) {
        report.classification = DecayClass::ExponentialDecay;
    } else if (!exponential_best && report.power.slope < 0.0) {
        report.classification = DecayClass::AlgebraicDecay;
    } else if (best.slope > 0.0) {
        report.classification = DecayClass::Growth;
    } else {
        report.classification = DecayClass::Inconclusive;
    }
    return report;
}

PruneRecord prune_layer_deviation(const ModelParams& model, const ModelConfig& config,
                                  const WeightedGraph& topology, const NodeFeatures& input,
                                  std::size_t layer, const LayerTrajectory* reference) {
    if (layer < 1 || layer > config.depth) {
        throw std::out_of_range("prune layer " + std::to_string(layer) + " outside 1.." +
                                std::to_string(config.depth));
    }
    NodeFeatures cut;
    LayerTrajectory full;
    if (!reference) {
        full = forward_trajectory(model, config, topology, input);
        reference = &full;
        ForwardOptions options;
        options.skip_layer = layer;
        cut = forward_trajectory(model, config, topology, input, options).hidden.back();
    } else {
        // Layers before the skipped one are unchanged; resume from X^{k-1}.
        if (reference->hidden.size() != config.depth + 1) {
            throw std::invalid_argument("prune_layer_deviation: reference trajectory depth mismatch");
        }
        cut = reference->hidden[layer - 1];
        for (std::size_t k = layer + 1; k <= config.depth; ++k) {
            cut = hidden_layer(cut, model.layers[k - 1], config, topology);
        }
    }
    const NodeFeatures& base = reference->hidden.back();
    PruneRecord record;
    record.layer = layer;
    const double norm = base.norm();
    record.deviation = norm > 0.0 ? (cut - base).norm() / norm : (cut - base).norm();
    record.cosine = mean_cosine(cut, base);
    return record;
}

}  // namespace algsmooth
