#ifndef LYOCERT_SYSTEM_HPP
#define LYOCERT_SYSTEM_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lyocert/disturbance.hpp"
#include "lyocert/expression.hpp"
#include "lyocert/integrator.hpp"

namespace lyocert::systems {

// Finite-dimensional state with the Euclidean norm.
struct StateVector {
    std::vector<double> coords;

    StateVector() = default;
    explicit StateVector(std::vector<double> c) : coords(std::move(c)) {}
    static StateVector zero(int dim) { return StateVector(std::vector<double>(dim, 0.0)); }
    static StateVector scalar(double v) { return StateVector({v}); }

    size_t dim() const { return coords.size(); }
    double norm() const { return euclidean_norm(coords); }
    double operator[](size_t i) const { return coords[i]; }
};

// A system (X, D, phi) over finite-dimensional state: either an analytic
// catalogue entry with an exact transition map, or an ODE right-hand side
// integrated adaptively with breakpoint-aligned steps. The catalogue:
//   scalar_stable        x' = -x
//   scalar_unstable      x' = x
//   bilinear             x' = -x + d*x,     D = [-1, 1]
//   switched_2d          x' = A(d) x,       D = [1, 2], A(1), A(2) Hurwitz
//   saturating           x' = -x / (1+x^2)
//   broken_cocycle_demo  phi(t, x) = x + t^2   (deliberately not a flow)
class SystemDef {
public:
    SystemDef() = default;

    static SystemDef catalogue(const std::string& name, const json& params = json::object());
    static SystemDef from_rhs(std::vector<std::string> rhs_sources, int dimension, Box box,
                              IntegratorSettings settings = {});
    // config schema: {dimension, disturbance:{dim, box}, rhs:[...] | catalogue:{name, params},
    //                 integrator:{...}}
    static SystemDef from_config(const json& config);

    bool valid() const { return impl_ != nullptr; }
    const std::string& name() const;
    int dimension() const;
    const Box& disturbance_box() const;
    bool analytic() const;
    const IntegratorSettings& integrator_settings() const;
    json to_config() const;

    // phi(t, x, d); throws FiniteEscapeError past the norm guard
    StateVector flow(double t, const StateVector& x, const DisturbanceSignal& d) const;

    // one adaptive integration pass with dense output (ODE systems only)
    DenseTrajectory dense_trajectory(const StateVector& x0, const DisturbanceSignal& d,
                                     double horizon) const;

    struct Impl;

private:
    explicit SystemDef(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

inline StateVector evaluate_flow(const SystemDef& sys, double t, const StateVector& x,
                                 const DisturbanceSignal& d) {
    return sys.flow(t, x, d);
}

// Dense access to one trajectory phi(., x, d) on [0, horizon]: a single
// integration pass for ODE systems (Hermite interpolation between steps),
// direct closed-form evaluation for analytic ones.
class FlowSampler {
public:
    FlowSampler(const SystemDef& sys, StateVector x0, DisturbanceSignal d, double horizon);

    StateVector state(double s) const;
    double norm(double s) const;
    const std::vector<double>& grid() const { return grid_; }  // dense output grid
    double horizon() const { return horizon_; }
    double error_estimate() const { return error_estimate_; }

    double sup_norm(double from, double to) const;  // over grid points in [from, to]
    // earliest grid time in [0, tau] with norm <= eps, if any
    std::optional<double> first_time_below(double eps, double tau) const;

private:
    SystemDef sys_;
    StateVector x0_;
    DisturbanceSignal d_;
    double horizon_;
    double error_estimate_ = 0.0;
    std::vector<double> grid_;
    std::optional<DenseTrajectory> dense_;  // ODE systems only
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::vector<double> norms;
    double error_estimate = 0.0;
};

Trajectory sample_trajectory(const SystemDef& sys, const StateVector& x0,
                             const DisturbanceSignal& d, double horizon);

// Deterministic state samples: boundary sphere points (plus the origin when
// requested) and an interior Latin-hypercube layer.
std::vector<StateVector> sphere_points(int dim, double radius, int count, std::uint64_t seed);
std::vector<StateVector> interior_points(int dim, double radius, int count, std::uint64_t seed);

struct AxiomPlan {
    std::vector<double> times{0.25, 0.5, 1.0, 2.0};
    std::vector<double> hops{0.25, 0.5, 1.0};
    std::vector<double> radii{0.5, 1.0, 2.0};
    int states_per_radius = 3;
    EnsemblePolicy ensemble{};
    int continuity_levels = 3;
    double continuity_step = 0.25;

    json to_json() const;
    static AxiomPlan from_json(const json& j);
};

// Numerical checks of the flow axioms: identity phi(0,x,d) = x, the cocycle
// property phi(h, phi(t,x,d), d(t+.)) = phi(t+h,x,d), causality (changing d
// after time t does not change phi(t,x,.)), and continuity of t -> phi
// (sampled modulus of continuity shrinking under step refinement).
std::map<std::string, Evidence> check_axioms(const SystemDef& sys, const AxiomPlan& plan,
                                             double tol);

// sup over the ensemble and a time grid of ||phi(t, 0, d)||, against tol.
Evidence equilibrium_check(const SystemDef& sys, double horizon,
                           const std::vector<DisturbanceSignal>& ensemble, double tol);

}  // namespace lyocert::systems

#endif
