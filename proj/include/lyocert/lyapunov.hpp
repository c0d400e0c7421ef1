#ifndef LYOCERT_LYAPUNOV_HPP
#define LYOCERT_LYAPUNOV_HPP

#include <functional>
#include <memory>
#include <optional>

#include "lyocert/classical_metrics.hpp"
#include "lyocert/integral_metrics.hpp"

namespace lyocert::lyapunov {

using comparison::FnClass;
using comparison::ScalarFunction;
using metrics::CertifyPlan;
using metrics::QuadraturePolicy;
using metrics::TailIntegral;
using systems::DisturbanceSignal;
using systems::StateVector;
using systems::SystemDef;

struct NclfPolicy {
    systems::EnsemblePolicy ensemble{};
    double horizon = 50.0;
    double quad_tol = 1e-9;
    // the finite-ensemble max under-approximates the true sup, so one-sided
    // inequalities get this relative allowance
    double ensemble_deficit_tol = 1e-3;

    json to_json() const;
    static NclfPolicy from_json(const json& j);
};

// Candidate (or constructed) Lyapunov function: a closed-form expression
// over x1..xn, an opaque callable, or the trajectory-integral construction
// V(x) = max over the ensemble of the truncated integral of rho(||phi||).
// Values of the trajectory-integral kind are cached per exact state; the
// cache is safe for concurrent readers with single-writer insertion.
class LyapunovEvaluator {
public:
    LyapunovEvaluator() = default;

    static LyapunovEvaluator from_expression(const std::string& source, int dimension);
    static LyapunovEvaluator from_callable(std::string label,
                                           std::function<double(const StateVector&)> fn);
    static LyapunovEvaluator trajectory_integral(SystemDef sys, ScalarFunction rho,
                                                 NclfPolicy policy);

    bool valid() const { return impl_ != nullptr; }
    double value(const StateVector& x) const;
    bool is_trajectory_integral() const;
    const ScalarFunction& rho() const;       // trajectory-integral kind only
    const NclfPolicy& policy() const;        // trajectory-integral kind only
    const std::string& label() const;

    json to_json() const;
    static LyapunovEvaluator from_json(const json& j, int dimension);

    struct Impl;

private:
    explicit LyapunovEvaluator(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<Impl> impl_;
};

// The trajectory-integral converse construction. rho must be a bounded
// class-K weight: a declared Kinf rho is rejected, because the construction
// needs finite integrals for merely integrally stable systems.
LyapunovEvaluator construct_nclf(const SystemDef& sys, const ScalarFunction& rho,
                                 const NclfPolicy& policy);

// Difference quotients (V(phi(h,x,d)) - V(x))/h along a decreasing step
// ladder; the estimate is the minimum of the last three quotients once they
// settle. Non-settling ladders yield no estimate rather than a guess.
struct DiniEstimate {
    std::vector<double> steps;
    std::vector<double> quotients;
    std::optional<double> estimate;
    bool converged = false;
    std::string trend;

    json to_json() const;
};

DiniEstimate dini_derivative(const LyapunovEvaluator& V, const SystemDef& sys,
                             const StateVector& x, const DisturbanceSignal& d,
                             std::vector<double> ladder = {});

struct DecayPlan {
    std::vector<StateVector> states;  // explicit grid; radii-generated when empty
    std::vector<double> radii{0.5, 1.0, 2.0};
    int sphere_count = 4;
    int ensemble_limit = 4;  // disturbance signals tested per state
    double tol = 1e-3;
    std::vector<double> ladder{};  // dini ladder override
};

// Checks the decay inequality dini <= -alpha(||x||) + tol over the plan.
Evidence verify_decay(const LyapunovEvaluator& V, const SystemDef& sys,
                      const ScalarFunction& alpha, const DecayPlan& plan,
                      const std::vector<DisturbanceSignal>& ensemble);

// Dynamic-programming inequality of the trajectory-integral construction:
// int_0^h rho(||phi||) + V(phi(h,x,d)) <= V(x) within the ensemble-deficit
// allowance, for every h in the grid.
Evidence verify_bellman(const LyapunovEvaluator& V, const SystemDef& sys, const StateVector& x,
                        const DisturbanceSignal& d, std::span<const double> h_grid, double tol);

// int_0^t alpha(||phi||) <= V(x) <= psi2(||x||) over the plan and t ladder.
Evidence verify_integral_bound(const LyapunovEvaluator& V, const SystemDef& sys,
                               const ScalarFunction& alpha, const ScalarFunction& psi2,
                               const CertifyPlan& plan);

// s -> V(phi(s, x, d)) nonincreasing on the grid within tol.
Evidence monotonicity_along_trajectory(const LyapunovEvaluator& V, const SystemDef& sys,
                                       const StateVector& x, const DisturbanceSignal& d,
                                       std::span<const double> s_grid, double tol);

// Bundle of the certificate inequalities: the decay rate alpha, the required
// upper bound psi2, and the optional coercive lower bound psi1. Supported
// means every checked inequality held with nonnegative margin (within tol).
struct LyapunovCertificate {
    Evidence decay;
    Evidence bound;                  // int alpha <= V <= psi2
    std::optional<Evidence> lower;   // psi1(||x||) <= V when psi1 given
    ScalarFunction alpha;
    ScalarFunction psi2;
    std::optional<ScalarFunction> psi1;

    bool supported() const;
    json to_json() const;
};

LyapunovCertificate certify_lyapunov(const LyapunovEvaluator& V, const SystemDef& sys,
                                     const ScalarFunction& alpha, const ScalarFunction& psi2,
                                     const std::optional<ScalarFunction>& psi1,
                                     const CertifyPlan& plan,
                                     const std::vector<DisturbanceSignal>& ensemble);

// CSV level-set export: x1..xn,value per grid state.
std::string level_set_csv(const LyapunovEvaluator& V, const std::vector<StateVector>& grid);

}  // namespace lyocert::lyapunov

#endif
