#ifndef LYOCERT_REPORTING_HPP
#define LYOCERT_REPORTING_HPP

#include <string>

#include "lyocert/inference.hpp"
#include "lyocert/lyapunov.hpp"

namespace lyocert::reporting {

using metrics::CertifyPlan;
using metrics::Weights;
using systems::SystemDef;

// Exit-code contract: 0 Supported/success, 1 Refuted, 2 usage/config error,
// 3 Inconclusive.
constexpr int kExitSupported = 0;
constexpr int kExitRefuted = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInconclusive = 3;

int evidence_exit_code(const Evidence& ev);

// Reports are pure functions of their inputs; rendering adds a timestamp
// only when deterministic output was not requested.
std::string render(const json& report, bool deterministic);

json axioms_report(const SystemDef& sys, const systems::AxiomPlan& plan, double tol);
int axioms_exit_code(const json& report);

// property may be any classical or integral kind name
json certify_report(const SystemDef& sys, const std::string& property, const Weights& weights,
                    const CertifyPlan& plan);

json lyap_construct_report(const SystemDef& sys, const comparison::ScalarFunction& rho,
                           const lyapunov::NclfPolicy& policy, const CertifyPlan& plan);
json lyap_verify_report(const SystemDef& sys, const lyapunov::LyapunovEvaluator& V,
                        const comparison::ScalarFunction& alpha,
                        const comparison::ScalarFunction& psi2, const CertifyPlan& plan);

// psi sampled on a product grid as CSV rows "r,t,value"
json klfit_report_from_csv(const std::string& csv);
json klfit_report_from_decay(const SystemDef& sys, const comparison::ScalarFunction& alpha,
                             const CertifyPlan& plan, int n_max);

json infer_report(const std::vector<std::pair<inference::PropertyId, std::string>>& assumptions,
                  const std::map<inference::PropertyId, Evidence>& certificates);

}  // namespace lyocert::reporting

#endif
