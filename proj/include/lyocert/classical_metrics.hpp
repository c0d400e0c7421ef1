#ifndef LYOCERT_CLASSICAL_METRICS_HPP
#define LYOCERT_CLASSICAL_METRICS_HPP

#include "lyocert/integral_metrics.hpp"

namespace lyocert::metrics {

enum class ClassicalKind { ULS, UAS, UGAS, UGWA, UGATT, REP, RFC, UltULS };

std::string to_string(ClassicalKind k);
ClassicalKind classical_kind_from_string(const std::string& s);

// Desk-scale evidence for the classical (pointwise-in-time) notions. The
// universal time quantifier is sampled on the dense trajectory grid; UGWA's
// existential time search also runs on the dense grid. Tables (delta(eps),
// tau(r, eps), reachability bounds) land in Evidence::details.
Evidence certify_classical(ClassicalKind kind, const SystemDef& sys, const Weights& weights,
                           const CertifyPlan& plan);

// Tail-norm restatement of uniform global attractivity: evaluates
// alpha(sup_{s >= t} ||phi||) with the sup taken FIRST, and decides on the
// vanishing of the sup itself. A bounded (or non-monotone) alpha can send
// alpha(sup) to zero while the trajectory diverges; taking the sup first
// keeps the verdict honest and the alpha values are reported alongside.
Evidence ugatt_tailnorm_check(const SystemDef& sys, const ScalarFunction& alpha,
                              const std::vector<double>& radii,
                              const std::vector<double>& t_ladder, const CertifyPlan& plan);

// per-(r, eps) CSV of an empirical tau(r, eps) table (columns r, eps, tau)
std::string tau_table_csv(const Evidence& evidence);
// per-(eps, h) CSV of a certified delta table (columns eps, h, delta)
std::string delta_table_csv(const Evidence& evidence);

}  // namespace lyocert::metrics

#endif
