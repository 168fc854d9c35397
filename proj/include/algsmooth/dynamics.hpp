#pragma once

#include "algsmooth/graph.hpp"

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace algsmooth {

enum class FlowKind { Heat, Nonlocal, PreLN };

std::string_view to_string(FlowKind kind);
FlowKind parse_flow_kind(std::string_view text);

struct FlowSpec {
    FlowKind kind = FlowKind::Heat;
    /// Euler step. Zero selects 0.5 * safety / lambda_max. For the nonlocal
    /// flow this is the effective diffusion step dt * int |Delta X|^2 dmu.
    double dt = 0.0;
    double horizon = 1.0;
    std::size_t stride = 1;
    double safety = 0.9;
    /// Nonlocal flow only: advance time by dt / multiplier so the effective
    /// diffusion step stays fixed. When false the step is dt and the product
    /// dt * multiplier * lambda_max must stay below the safety factor.
    bool adaptive = true;
    bool record_states = true;

    void validate() const;
};

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<NodeFeatures> states;  // empty unless record_states
    std::vector<double> dirichlet;     // E_1 = (1/n) int |grad X|^2
    std::vector<double> laplacian;     // E_2 = (1/n) int |Delta X|^2
    std::vector<double> multiplier;    // int |Delta X|^2 dmu (nonlocal flow)
    std::vector<double> norm_mass;     // int |Norm X|^2 dmu (Pre-LN flow)
    double step = 0.0;                 // base step actually used
    double lambda_max = 0.0;
    std::size_t steps = 0;
};

class InstabilityError : public std::runtime_error {
public:
    InstabilityError(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// dX/dt = Delta X, explicit Euler.
FlowTrajectory simulate_heat(const WeightedGraph& g, const NodeFeatures& x0, const FlowSpec& spec);

/// dX/dt = (int |Delta X|^2 dmu) Delta X.
FlowTrajectory simulate_nonlocal(const WeightedGraph& g, const NodeFeatures& x0,
                                 const FlowSpec& spec);

/// dX/dt = P(Norm X) with the sphere projection Norm X(i) = r X(i)/|X(i)|,
/// r = sqrt(n / int 1 dmu), so that int |Norm X|^2 dmu = n.
FlowTrajectory simulate_preln_flow(const WeightedGraph& g, const NodeFeatures& x0,
                                   const FlowSpec& spec);

FlowTrajectory simulate(const WeightedGraph& g, const NodeFeatures& x0, const FlowSpec& spec);

/// The flow normalization used by simulate_preln_flow. Throws on a zero row.
NodeFeatures sphere_normalize(const WeightedGraph& g, const NodeFeatures& x);

/// Per-interval relative rate (E(t_{k+1}) - E(t_k)) / ((t_{k+1} - t_k) E(t_k)),
/// reported at t_{k+1}.
std::vector<double> relative_rate(const std::vector<double>& times,
                                  const std::vector<double>& energy);

}  // namespace algsmooth
