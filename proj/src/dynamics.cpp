#include "algsmooth/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace algsmooth {

std::string_view to_string(FlowKind kind) {
    switch (kind) {
        case FlowKind::Heat: return "heat";
        case FlowKind::Nonlocal: return "nonlocal";
        case FlowKind::PreLN: return "preln-flow";
    }
    return "unknown";
}

FlowKind parse_flow_kind(std::string_view text) {
    if (text == "heat") return FlowKind::Heat;
    if (text == "nonlocal") return FlowKind::Nonlocal;
    if (text == "preln-flow" || text == "preln" || text == "pre-ln") return FlowKind::PreLN;
    throw std::invalid_argument("unknown flow kind '" + std::string(text) + "'");
}

void FlowSpec::validate() const {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
    if (stride < 1) throw std::invalid_argument("record stride must be at least 1");
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety factor must lie in (0, 1]");
}

namespace {

struct StepResult {
    double h;            // time advanced
    NodeFeatures delta;  // increment to add to X
};

// Shared explicit Euler driver; `advance` returns the step to take from X at time t.
FlowTrajectory integrate_flow(const WeightedGraph& g, const NodeFeatures& x0,
                              const FlowSpec& spec, double base_step, double lambda_max,
                              const std::function<StepResult(const NodeFeatures&, double,
                                                             std::size_t)>& advance,
                              bool monotone_dirichlet, bool track_norm_mass = false) {
    FlowTrajectory traj;
    traj.step = base_step;
    traj.lambda_max = lambda_max;
    NodeFeatures x = x0;
    double t = 0.0;

    auto record = [&](const NodeFeatures& state, double time) {
        const NodeFeatures lap = laplacian_apply(g, state);
        const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(),
                                                   static_cast<Eigen::Index>(g.size()));
        const double lap_integral = mu.dot(lap.rowwise().squaredNorm());
        traj.times.push_back(time);
        traj.dirichlet.push_back(dirichlet_energy(g, state));
        traj.laplacian.push_back(lap_integral / static_cast<double>(g.size()));
        traj.multiplier.push_back(lap_integral);
        if (track_norm_mass) {
            traj.norm_mass.push_back(mu.dot(sphere_normalize(g, state).rowwise().squaredNorm()));
        }
        if (spec.record_states) traj.states.push_back(state);
    };

    record(x, t);
    double energy = traj.dirichlet.back();
    std::size_t step = 0;
    while (t < spec.horizon) {
        StepResult r = advance(x, t, step);
        x += r.delta;
        t = (t + r.h >= spec.horizon * (1.0 - 1e-14)) ? spec.horizon : t + r.h;
        ++step;
        if (!x.allFinite()) {
            throw InstabilityError(step, "non-finite state at step " + std::to_string(step));
        }
        if (monotone_dirichlet) {
            const double next = dirichlet_energy(g, x);
            if (next > energy * (1.0 + 1e-9) + 1e-300) {
                std::ostringstream msg;
                msg << "Dirichlet energy increased at step " << step << " (" << energy << " -> "
                    << next << "); reduce dt below " << spec.safety / traj.lambda_max;
                throw InstabilityError(step, msg.str());
            }
            energy = next;
        }
        if (step % spec.stride == 0 || t >= spec.horizon) record(x, t);
    }
    traj.steps = step;
    return traj;
}

double default_step(const FlowSpec& spec, double lambda_max) {
    if (spec.dt > 0.0) return spec.dt;
    return lambda_max > 0.0 ? 0.5 * spec.safety / lambda_max : spec.horizon;
}

void check_stability(const FlowSpec& spec, double effective_dt, double lambda_max,
                     std::size_t step) {
    if (effective_dt * lambda_max > spec.safety * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "effective step " << effective_dt << " exceeds stability limit "
            << spec.safety / lambda_max << " (lambda_max = " << lambda_max
            << "); use a smaller dt";
        throw InstabilityError(step, msg.str());
    }
}

}  // namespace

FlowTrajectory simulate_heat(const WeightedGraph& g, const NodeFeatures& x0, const FlowSpec& spec) {
    spec.validate();
    require_rows(g, x0, "simulate_heat");
    const double lambda_max = spectral_radius_bound(g);
    const double dt = default_step(spec, lambda_max);
    check_stability(spec, dt, lambda_max, 0);
    auto advance = [&](const NodeFeatures& x, double t, std::size_t) {
        const double h = std::min(dt, spec.horizon - t);
        return StepResult{h, h * laplacian_apply(g, x)};
    };
    return integrate_flow(g, x0, spec, dt, lambda_max, advance, true);
}

FlowTrajectory simulate_nonlocal(const WeightedGraph& g, const NodeFeatures& x0,
                                 const FlowSpec& spec) {
    spec.validate();
    require_rows(g, x0, "simulate_nonlocal");
    const double lambda_max = spectral_radius_bound(g);
    const double dt = default_step(spec, lambda_max);
    const Eigen::Map<const Eigen::VectorXd> mu(g.measure().data(),
                                               static_cast<Eigen::Index>(g.size()));
    if (spec.adaptive) check_stability(spec, dt, lambda_max, 0);

    auto advance = [&](const NodeFeatures& x, double t, std::size_t step) {
        NodeFeatures lap = laplacian_apply(g, x);
        const double m = mu.dot(lap.rowwise().squaredNorm());
        const double remaining = spec.horizon - t;
        if (m == 0.0) return StepResult{remaining, NodeFeatures::Zero(x.rows(), x.cols())};
        double h = spec.adaptive ? dt / m : dt;
        h = std::min(h, remaining);
        check_stability(spec, h * m, lambda_max, step);
        lap *= h * m;
        return StepResult{h, std::move(lap)};
    };
    return integrate_flow(g, x0, spec, dt, lambda_max, advance, true);
}

NodeFeatures sphere_normalize(const WeightedGraph& g, const NodeFeatures& x) {
    require_rows(g, x, "sphere_normalize");
    const double radius = std::sqrt(static_cast<double>(g.size()) / g.total_measure());
    NodeFeatures out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double norm = x.row(i).norm();
        if (norm == 0.0) {
            throw std::domain_error("sphere normalization undefined: zero row at vertex " +
                                    std::to_string(i));
        }
        out.row(i) = (radius / norm) * x.row(i);
    }
    return out;
}

FlowTrajectory simulate_preln_flow(const WeightedGraph& g, const NodeFeatures& x0,
                                   const FlowSpec& spec) {
    spec.validate();
    require_rows(g, x0, "simulate_preln_flow");
    if (!g.aggregation_admissible()) {
        throw GraphError("simulate_preln_flow: graph violates sum_j w_ij < mu_i");
    }
    const double lambda_max = spectral_radius_bound(g);
    const double dt = default_step(spec, lambda_max);

    auto advance = [&](const NodeFeatures& x, double t, std::size_t) {
        const double h = std::min(dt, spec.horizon - t);
        return StepResult{h, h * aggregate_apply(g, sphere_normalize(g, x))};
    };
    FlowTrajectory traj = integrate_flow(g, x0, spec, dt, lambda_max, advance, false, true);
    traj.multiplier.clear();
    return traj;
}

FlowTrajectory simulate(const WeightedGraph& g, const NodeFeatures& x0, const FlowSpec& spec) {
    switch (spec.kind) {
        case FlowKind::Heat: return simulate_heat(g, x0, spec);
        case FlowKind::Nonlocal: return simulate_nonlocal(g, x0, spec);
        case FlowKind::PreLN: return simulate_preln_flow(g, x0, spec);
    }
    throw std::invalid_argument("unknown flow kind");
}

std::vector<double> relative_rate(const std::vector<double>& times,
                                  const std::vector<double>& energy) {
    std::vector<double> out;
    for (std::size_t k = 1; k < times.size() && k < energy.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        out.push_back(dt > 0.0 && energy[k - 1] > 0.0
                          ? (energy[k] - energy[k - 1]) / (dt * energy[k - 1])
                          : std::nan(""));
    }
    return out;
}

}  // namespace algsmooth
