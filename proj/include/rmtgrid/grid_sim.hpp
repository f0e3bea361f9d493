#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/core/random.hpp"

namespace rmtgrid {

enum class StageKind { constant, step, ramp };

/// Scripted load deviation on one node over [t_start, t_end] (inclusive, seconds).
/// constant/step: deviation = level; ramp: deviation = intercept + slope * t.
/// noise_gain scales the additive noise on that node while the stage is active.
struct EventStage {
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t node = 0;
    StageKind kind = StageKind::constant;
    double level = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double noise_gain = 1.0;

    double deviation(double t) const { return kind == StageKind::ramp ? intercept + slope * t : level; }
    bool active(double t) const { return t >= t_start && t <= t_end; }
};

struct EventScript {
    std::string name;
    std::size_t node_count = 0;
    double t_begin = 1.0;
    double t_end = 1.0;
    double sampling_hz = 1.0;
    std::vector<EventStage> stages;
    std::vector<double> base_loads;  // MW per node
    double gamma_acc = 0.1;
    double gamma_mul = 0.001;

    std::size_t sample_count() const {
        return static_cast<std::size_t>(std::llround((t_end - t_begin) * sampling_hz)) + 1;
    }

    std::vector<double> time_grid() const {
        std::vector<double> t(sample_count());
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = t_begin + static_cast<double>(k) / sampling_hz;
        return t;
    }

    void validate() const {
        if (node_count < 1) throw InputError("EventScript: node_count must be >= 1");
        if (!(t_end >= t_begin) || !(sampling_hz > 0.0)) throw InputError("EventScript: invalid time span");
        if (base_loads.size() != node_count) throw InputError("EventScript: one base load per node required");
        if (!(gamma_acc >= 0.0) || !(gamma_mul >= 0.0)) throw InputError("EventScript: noise scales must be >= 0");
        for (std::size_t i = 0; i < stages.size(); ++i) {
            const auto& s = stages[i];
            if (s.node >= node_count) throw InputError("EventScript: stage node out of range");
            if (!(s.t_end >= s.t_start)) throw InputError("EventScript: stage ends before it starts");
            for (std::size_t j = 0; j < i; ++j) {
                const auto& r = stages[j];
                if (r.node != s.node) continue;
                if (s.t_start <= r.t_end) throw InputError("EventScript: stages on a node must be time-ordered and disjoint");
            }
        }
    }

    /// Noise-free load of `node` at time t: base plus the latest stage that has started.
    double load(std::size_t node, double t) const {
        double dev = 0.0;
        for (const auto& s : stages) {
            if (s.node != node || t < s.t_start) continue;
            dev = s.deviation(std::min(t, s.t_end));
        }
        return base_loads[node] + dev;
    }

    double noise_gain(std::size_t node, double t) const {
        for (const auto& s : stages)
            if (s.node == node && s.active(t)) return s.noise_gain;
        return 1.0;
    }
};

/// Voltage response to load deviations, V = xi (loads - base).
struct ResponseModel {
    RealMatrix xi;

    std::size_t node_count() const { return static_cast<std::size_t>(xi.rows()); }
    double spectral_radius() const {
        double r = 0.0;
        for (const cplx& l : eig_general(xi).complex_values) r = std::max(r, std::abs(l));
        return r;
    }
};

/// xi = I + rho K with K symmetric, K_ij ~ N(0, 1/n); rho is chosen so that
/// cond(xi) equals `conditioning` exactly (rho = 0 when conditioning = 1).
inline ResponseModel random_response_matrix(std::size_t n, double conditioning, std::uint64_t seed) {
    if (n < 1) throw InputError("random_response_matrix: n must be >= 1");
    if (!(conditioning >= 1.0) || !std::isfinite(conditioning))
        throw InputError("random_response_matrix: conditioning must be >= 1");
    const auto m = static_cast<Eigen::Index>(n);
    ResponseModel model;
    model.xi = RealMatrix::Identity(m, m);
    if (conditioning == 1.0 || n == 1) return model;
    Rng rng(seed);
    const RealMatrix a = rng.gaussian_matrix(m, m);
    const RealMatrix k = (a + a.transpose()) / std::sqrt(2.0 * static_cast<double>(n));
    const auto eig = eig_hermitian(k);
    const double lo = eig.values.front();
    const double hi = eig.values.back();
    const double rho = (conditioning - 1.0) / (hi - conditioning * lo);
    model.xi += rho * k;
    return model;
}

/// y~ = y (1 + gamma_mul r1) + gamma_acc gain r2 for every node and time.
inline RealMatrix noisy_loads(const EventScript& script, const std::vector<double>& t_grid, std::uint64_t seed) {
    script.validate();
    const auto n = static_cast<Eigen::Index>(script.node_count);
    RealMatrix out(n, static_cast<Eigen::Index>(t_grid.size()));
    Rng rng(seed);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        if (t < script.t_begin - 1e-9 || t > script.t_end + 1e-9) throw InputError("noisy_loads: time outside script span");
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto node = static_cast<std::size_t>(i);
            const double y = script.load(node, t);
            const double r1 = rng.gaussian();
            const double r2 = rng.gaussian();
            out(i, static_cast<Eigen::Index>(k)) =
                y * (1.0 + script.gamma_mul * r1) + script.gamma_acc * script.noise_gain(node, t) * r2;
        }
    }
    return out;
}

inline RealMatrix simulate_voltage(const ResponseModel& model, const RealMatrix& loads,
                                   const std::vector<double>& base_loads) {
    if (loads.rows() != model.xi.rows() || static_cast<Eigen::Index>(base_loads.size()) != loads.rows())
        throw InputError("simulate_voltage: shape mismatch between response model and loads");
    const Eigen::Map<const RealVector> base(base_loads.data(), static_cast<Eigen::Index>(base_loads.size()));
    return model.xi * (loads.colwise() - base);
}

struct SimulatedStream {
    std::vector<double> times;
    RealMatrix values;  // nodes x samples
};

inline constexpr double kDefaultConditioning = 1.3;

/// Full deterministic chain: script -> noisy loads -> voltages.
inline SimulatedStream simulate_stream(const EventScript& script, const ResponseModel& model, std::uint64_t seed) {
    SimulatedStream s;
    s.times = script.time_grid();
    s.values = simulate_voltage(model, noisy_loads(script, s.times, derive_seed(seed, 1)), script.base_loads);
    return s;
}

inline SimulatedStream simulate_stream(const EventScript& script, std::uint64_t seed,
                                       double conditioning = kDefaultConditioning) {
    return simulate_stream(script, random_response_matrix(script.node_count, conditioning, derive_seed(seed, 0)),
                           seed);
}

/// 118 nodes, 2500 s at 1 Hz; node 52 (index 51): 0 MW on [1, 500], 30 MW on
/// [501, 900], 120 MW on [901, 1300], t/4 - 205 MW on [1301, 2500].
inline EventScript ieee118_default_script() {
    EventScript s;
    s.name = "ieee118";
    s.node_count = 118;
    s.t_begin = 1.0;
    s.t_end = 2500.0;
    s.base_loads.assign(118, 1.0);
    const std::size_t node = 51;
    s.stages = {
        {1.0, 500.0, node, StageKind::constant, 0.0, 0.0, 0.0, 1.0},
        {501.0, 900.0, node, StageKind::step, 30.0, 0.0, 0.0, 1.0},
        {901.0, 1300.0, node, StageKind::step, 120.0, 0.0, 0.0, 1.0},
        {1301.0, 2500.0, node, StageKind::ramp, 0.0, 0.25, -205.0, 1.0},
    };
    return s;
}

/// 118 nodes, 5500 s: reference, a step at 901, load growth on bus 22 then
/// bus 52, an emulated collapse (steep ramp with amplified noise), then no signal.
inline EventScript fusion_scenario_script() {
    EventScript s;
    s.name = "fusion";
    s.node_count = 118;
    s.t_begin = 1.0;
    s.t_end = 5500.0;
    s.base_loads.assign(118, 1.0);
    const std::size_t bus22 = 21;
    const std::size_t bus52 = 51;
    s.stages = {
        {901.0, 1800.0, bus52, StageKind::step, 30.0, 0.0, 0.0, 1.0},
        {1918.0, 2483.0, bus22, StageKind::ramp, 0.0, 0.1, -191.8, 1.0},
        {3118.0, 3673.0, bus52, StageKind::ramp, 0.0, 0.1, 30.0 - 311.8, 1.0},
        {3908.0, 4000.0, bus52, StageKind::ramp, 0.0, 2.0, 85.5 - 7816.0, 20.0},
        {4001.0, 5500.0, bus52, StageKind::constant, 269.5, 0.0, 0.0, 1.0},
    };
    return s;
}

/// The ieee118 layout with no scripted events.
inline EventScript noise_only_script() {
    EventScript s = ieee118_default_script();
    s.name = "noise";
    s.stages.clear();
    return s;
}

inline EventScript script_preset(const std::string& name) {
    if (name == "ieee118") return ieee118_default_script();
    if (name == "fusion") return fusion_scenario_script();
    if (name == "noise") return noise_only_script();
    throw InputError("unknown preset '" + name + "' (expected ieee118, fusion or noise)");
}

} // namespace rmtgrid
