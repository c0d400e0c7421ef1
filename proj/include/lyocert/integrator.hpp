#ifndef LYOCERT_INTEGRATOR_HPP
#define LYOCERT_INTEGRATOR_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lyocert/disturbance.hpp"

namespace lyocert::systems {

struct IntegratorSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double initial_step = 1e-3;
    double max_step = 0.5;
    double norm_guard = 1e12;  // trajectories past this norm count as escaped
    long max_steps = 4000000;

    json to_json() const;
    static IntegratorSettings from_json(const json& j);
};

// Raised when a trajectory crosses the norm guard: evidence of a possible
// failure of forward completeness, with the bracketing times as witness.
class FiniteEscapeError : public std::runtime_error {
public:
    FiniteEscapeError(double t_low, double t_high, double norm);
    double t_low, t_high, norm;
};

using RhsFn = std::function<void(double t, std::span<const double> y, std::span<const double> d,
                                 std::span<double> dy)>;

// Accepted steps of an adaptive Dormand-Prince 5(4) run, with the state and
// derivative per step for cubic Hermite dense output.
class DenseTrajectory {
public:
    struct Step {
        double t;
        std::vector<double> y;
        std::vector<double> dy;
    };

    std::vector<Step> steps;
    double error_estimate = 0.0;

    std::vector<double> eval(double t) const;
    double norm_at(double t) const;
    double front_time() const { return steps.front().t; }
    double back_time() const { return steps.back().t; }
};

// Integrates y' = rhs(t, y, d(t)) from t = 0 to t_end. Integration never
// steps across a disturbance breakpoint: each constant-d segment is solved
// separately with the segment boundaries landed on exactly.
DenseTrajectory integrate(const RhsFn& rhs, std::span<const double> y0, double t_end,
                          const DisturbanceSignal& d, const IntegratorSettings& settings);

double euclidean_norm(std::span<const double> v);

}  // namespace lyocert::systems

#endif
