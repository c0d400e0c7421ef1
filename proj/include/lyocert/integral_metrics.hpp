#ifndef LYOCERT_INTEGRAL_METRICS_HPP
#define LYOCERT_INTEGRAL_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "lyocert/kl_function.hpp"
#include "lyocert/quadrature.hpp"
#include "lyocert/scalar_function.hpp"
#include "lyocert/system.hpp"

namespace lyocert::metrics {

using comparison::KLFunction;
using comparison::ScalarFunction;
using systems::DisturbanceSignal;
using systems::StateVector;
using systems::SystemDef;

// Comparison-function weights for a certification run. Which fields are
// required depends on the property kind; declared classes are trusted here
// and audited separately by verify_class.
struct Weights {
    std::optional<ScalarFunction> alpha;
    std::optional<ScalarFunction> psi;
    std::optional<KLFunction> beta;

    json to_json() const;
};

// Desk-scale sampling plan shared by the integral and classical checkers.
// All randomness comes from the seed; two runs with the same plan produce
// identical evidence.
struct CertifyPlan {
    std::vector<double> radii{0.5, 1.0, 2.0};
    double eps0 = 0.0;   // 0 = auto-scale from the observed supremum
    int eps_levels = 6;  // eps_n = eps0 / 2^n
    std::vector<double> delta_grid{2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.01};
    std::vector<double> horizons{1.0, 5.0};  // h values for (i)REP tables
    std::vector<double> t_ladder{};          // default geometric {0, 0.25, ..., T}
    double horizon = 50.0;
    double tol = 1e-3;
    int sphere_count = 8;
    int interior_count = 32;
    bool include_interior = true;
    systems::EnsemblePolicy ensemble{};
    QuadraturePolicy quad{};

    std::vector<double> ladder_or_default() const;  // t ladder
    std::vector<double> eps_ladder(double auto_eps0) const;

    json to_json() const;
    static CertifyPlan from_json(const json& j);
};

struct Sample {
    StateVector x;
    DisturbanceSignal d;
    int state_id = 0;
    int dist_id = 0;
};

// Boundary spheres for every plan radius, the origin, and an interior
// Latin-hypercube layer, crossed with the disturbance ensemble.
std::vector<Sample> build_samples(const SystemDef& sys, const CertifyPlan& plan);
// Same construction restricted to ||x|| <= radius (sphere at that radius).
std::vector<Sample> build_samples_within(const SystemDef& sys, const CertifyPlan& plan,
                                         double radius);

// Adaptive quadrature of s -> alpha(||phi(s, x, d)||) over [t0, t0 + T],
// with an exponential-envelope tail remainder. Propagates FiniteEscapeError.
TailIntegral integral_transform(const SystemDef& sys, const ScalarFunction& alpha,
                                const StateVector& x, const DisturbanceSignal& d, double t0,
                                const QuadraturePolicy& policy);

enum class IntegralKind { iREP, iRFC, iULS, iUGS, iUGATT, iUGAS, UltiULS };

std::string to_string(IntegralKind k);
IntegralKind integral_kind_from_string(const std::string& s);

// Desk-scale evidence for the integral stability notions. Supported verdicts
// record the worst margin and the sampling seed; Refuted verdicts carry a
// replayable witness (x, d, and the time or table cell that failed).
Evidence certify_integral(IntegralKind kind, const SystemDef& sys, const Weights& weights,
                          const CertifyPlan& plan);

}  // namespace lyocert::metrics

#endif
