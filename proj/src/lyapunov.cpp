#include "lyocert/lyapunov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "lyocert/expression.hpp"
#include "lyocert/util.hpp"

namespace lyocert::lyapunov {

using metrics::adaptive_simpson;
using metrics::integral_transform;
using systems::FiniteEscapeError;
using systems::FlowSampler;

json NclfPolicy::to_json() const {
    return {{"ensemble", ensemble.to_json()},
            {"horizon", horizon},
            {"quad_tol", quad_tol},
            {"ensemble_deficit_tol", ensemble_deficit_tol}};
}

NclfPolicy NclfPolicy::from_json(const json& j) {
    NclfPolicy p;
    if (j.contains("ensemble")) p.ensemble = systems::EnsemblePolicy::from_json(j["ensemble"]);
    p.horizon = j.value("horizon", p.horizon);
    p.quad_tol = j.value("quad_tol", p.quad_tol);
    p.ensemble_deficit_tol = j.value("ensemble_deficit_tol", p.ensemble_deficit_tol);
    return p;
}

struct LyapunovEvaluator::Impl {
    enum class Kind { Expression, Callable, TrajectoryIntegral };
    Kind kind = Kind::Callable;
    std::string label;

    expr::Expression expression;
    std::function<double(const StateVector&)> fn;

    SystemDef sys;
    ScalarFunction rho;
    NclfPolicy policy;
    std::vector<DisturbanceSignal> ensemble;

    mutable std::mutex cache_mutex;
    mutable std::map<std::vector<double>, double> cache;

    double eval(const StateVector& x) const {
        switch (kind) {
            case Kind::Expression: return expression.eval(0.0, x.coords, {});
            case Kind::Callable: return fn(x);
            case Kind::TrajectoryIntegral: return eval_trajectory(x);
        }
        return 0.0;
    }

    double eval_trajectory(const StateVector& x) const {
        {
            std::lock_guard<std::mutex> lock(cache_mutex);
            auto it = cache.find(x.coords);
            if (it != cache.end()) return it->second;
        }
        metrics::QuadraturePolicy qp;
        qp.horizon = policy.horizon;
        qp.tol = policy.quad_tol;
        std::vector<double> totals(ensemble.size(), 0.0);
        std::exception_ptr failure;
        std::mutex failure_mutex;
        parallel_for(ensemble.size(), [&](size_t i) {
            try {
                totals[i] = integral_transform(sys, rho, x, ensemble[i], 0.0, qp).total();
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
        if (failure) std::rethrow_exception(failure);
        double best = 0.0;
        for (double v : totals) best = std::max(best, v);
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache.emplace(x.coords, best);
        return best;
    }
};

LyapunovEvaluator LyapunovEvaluator::from_expression(const std::string& source, int dimension) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Expression;
    impl->expression = expr::parse_rhs(source, dimension, 0);
    impl->label = source;
    return LyapunovEvaluator(std::move(impl));
}

LyapunovEvaluator LyapunovEvaluator::from_callable(std::string label,
                                                   std::function<double(const StateVector&)> fn) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Callable;
    impl->fn = std::move(fn);
    impl->label = std::move(label);
    return LyapunovEvaluator(std::move(impl));
}

LyapunovEvaluator LyapunovEvaluator::trajectory_integral(SystemDef sys, ScalarFunction rho,
                                                         NclfPolicy policy) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::TrajectoryIntegral;
    impl->sys = std::move(sys);
    impl->rho = std::move(rho);
    impl->policy = policy;
    systems::EnsemblePolicy pol = policy.ensemble;
    pol.horizon = policy.horizon;
    impl->ensemble = systems::make_ensemble(impl->sys.disturbance_box(), pol);
    impl->label = "trajectory_integral[" + impl->sys.name() + "]";
    return LyapunovEvaluator(std::move(impl));
}

double LyapunovEvaluator::value(const StateVector& x) const {
    if (!impl_) throw std::logic_error("empty LyapunovEvaluator");
    return impl_->eval(x);
}

bool LyapunovEvaluator::is_trajectory_integral() const {
    return impl_ && impl_->kind == Impl::Kind::TrajectoryIntegral;
}

const ScalarFunction& LyapunovEvaluator::rho() const {
    if (!is_trajectory_integral())
        throw std::logic_error("rho(): not a trajectory-integral evaluator");
    return impl_->rho;
}

const NclfPolicy& LyapunovEvaluator::policy() const {
    if (!is_trajectory_integral())
        throw std::logic_error("policy(): not a trajectory-integral evaluator");
    return impl_->policy;
}

const std::string& LyapunovEvaluator::label() const {
    static const std::string empty;
    return impl_ ? impl_->label : empty;
}

json LyapunovEvaluator::to_json() const {
    if (!impl_) return json();
    json j;
    switch (impl_->kind) {
        case Impl::Kind::Expression:
            j["kind"] = "expression";
            j["expression"] = impl_->expression.source();
            break;
        case Impl::Kind::Callable:
            j["kind"] = "callable";
            j["label"] = impl_->label;
            break;
        case Impl::Kind::TrajectoryIntegral:
            j["kind"] = "trajectory_integral";
            j["system"] = impl_->sys.to_config();
            j["rho"] = impl_->rho.to_json();
            j["policy"] = impl_->policy.to_json();
            j["ensemble_size"] = impl_->ensemble.size();
            break;
    }
    return j;
}

LyapunovEvaluator LyapunovEvaluator::from_json(const json& j, int dimension) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "expression") return from_expression(j.at("expression").get<std::string>(), dimension);
    if (kind == "trajectory_integral")
        return trajectory_integral(SystemDef::from_config(j.at("system")),
                                   ScalarFunction::from_json(j.at("rho")),
                                   NclfPolicy::from_json(j.at("policy")));
    throw std::invalid_argument("cannot deserialize Lyapunov evaluator of kind " + kind);
}

LyapunovEvaluator construct_nclf(const SystemDef& sys, const ScalarFunction& rho,
                                 const NclfPolicy& policy) {
    if (rho.declared_class() == FnClass::Kinf)
        throw std::invalid_argument(
            "construct_nclf: rho is declared Kinf; the trajectory-integral construction "
            "requires a bounded class-K weight (e.g. saturate(alpha, 1))");
    if (rho.declared_class() != FnClass::K)
        throw std::invalid_argument("construct_nclf: rho must be a (bounded) class-K weight");
    return LyapunovEvaluator::trajectory_integral(sys, rho, policy);
}

json DiniEstimate::to_json() const {
    json j = {{"steps", steps},
              {"quotients", quotients},
              {"converged", converged},
              {"trend", trend}};
    if (estimate) j["estimate"] = *estimate;
    return j;
}

DiniEstimate dini_derivative(const LyapunovEvaluator& V, const SystemDef& sys,
                             const StateVector& x, const DisturbanceSignal& d,
                             std::vector<double> ladder) {
    if (ladder.empty()) ladder = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    std::sort(ladder.rbegin(), ladder.rend());
    DiniEstimate out;
    out.steps = ladder;
    double v0 = V.value(x);
    for (double h : ladder) {
        StateVector xh = sys.flow(h, x, d);
        out.quotients.push_back((V.value(xh) - v0) / h);
    }
    // settled tail: consecutive quotients within a mixed tolerance
    auto close = [](double a, double b) {
        return std::abs(a - b) <= std::max(1e-4, 2e-2 * std::max(1.0, std::abs(b)));
    };
    size_t n = out.quotients.size();
    size_t tail = 1;
    while (tail < n && close(out.quotients[n - tail - 1], out.quotients[n - tail])) ++tail;
    if (tail >= 3) {
        out.converged = true;
        out.trend = "converged";
        double est = out.quotients[n - 1];
        for (size_t i = n - 3; i < n; ++i) est = std::min(est, out.quotients[i]);
        out.estimate = est;
    } else {
        out.trend = "not_converged";
    }
    return out;
}

Evidence verify_decay(const LyapunovEvaluator& V, const SystemDef& sys,
                      const ScalarFunction& alpha, const DecayPlan& plan,
                      const std::vector<DisturbanceSignal>& ensemble) {
    std::vector<StateVector> states = plan.states;
    if (states.empty()) {
        states.push_back(StateVector::zero(sys.dimension()));
        for (double r : plan.radii) {
            auto pts = systems::sphere_points(sys.dimension(), r, plan.sphere_count, 0);
            states.insert(states.end(), pts.begin(), pts.end());
        }
    }
    size_t dist_count = std::min<size_t>(ensemble.size(), plan.ensemble_limit);
    json params = {{"check", "decay"},
                   {"alpha", alpha.to_json()},
                   {"tol", plan.tol},
                   {"states", states.size()},
                   {"disturbances", dist_count}};

    double worst = std::numeric_limits<double>::infinity();
    json witness;
    json samples = json::array();
    bool any_inconclusive = false;

    for (const auto& x : states) {
        for (size_t di = 0; di < dist_count; ++di) {
            const auto& d = ensemble[di];
            try {
                DiniEstimate est = dini_derivative(V, sys, x, d, plan.ladder);
                json row = {{"x", x.coords}, {"dist_id", di}, {"dini", est.to_json()}};
                if (!est.converged) {
                    any_inconclusive = true;
                    row["status"] = "Inconclusive";
                    samples.push_back(row);
                    continue;
                }
                double margin = -alpha(x.norm()) - *est.estimate;
                row["margin"] = margin;
                samples.push_back(row);
                if (margin < worst) {
                    worst = margin;
                    witness = {{"x", x.coords}, {"dist_id", di}, {"margin", margin}};
                }
            } catch (const FiniteEscapeError& e) {
                any_inconclusive = true;
                samples.push_back({{"x", x.coords},
                                   {"dist_id", di},
                                   {"status", "Inconclusive"},
                                   {"finite_escape", {{"t_low", e.t_low}, {"t_high", e.t_high}}}});
            }
        }
    }

    json details = {{"samples", samples}};
    Evidence ev;
    if (worst < -plan.tol) {
        ev = Evidence::make_refuted("lyapunov_decay", params, witness, worst);
    } else if (any_inconclusive) {
        ev = Evidence::make_inconclusive("lyapunov_decay", params, details);
        ev.worst_margin = worst;
    } else {
        ev = Evidence::make_supported("lyapunov_decay", params, worst);
    }
    ev.details = details;
    return ev;
}

Evidence verify_bellman(const LyapunovEvaluator& V, const SystemDef& sys, const StateVector& x,
                        const DisturbanceSignal& d, std::span<const double> h_grid, double tol) {
    if (!V.is_trajectory_integral())
        throw std::invalid_argument("verify_bellman: needs the trajectory-integral evaluator");
    const auto& policy = V.policy();
    double v0 = V.value(x);
    double tol_eff = tol + policy.ensemble_deficit_tol * std::max(1.0, std::abs(v0));
    json params = {{"check", "bellman"}, {"tol", tol}, {"tol_effective", tol_eff},
                   {"x", x.coords}};
    json rows = json::array();
    double worst = std::numeric_limits<double>::infinity();
    json witness;
    const ScalarFunction rho = V.rho();

    for (double h : h_grid) {
        if (!(h > 0.0)) throw std::invalid_argument("verify_bellman: h grid must be positive");
        FlowSampler flow(sys, x, d, h);
        auto integrand = [&](double t) { return rho(flow.norm(t)); };
        double run_cost = adaptive_simpson(integrand, 0.0, h, policy.quad_tol).value;
        double v_h = V.value(sys.flow(h, x, d));
        double slack = v0 - (run_cost + v_h);
        rows.push_back({{"h", h}, {"running_cost", run_cost}, {"V_at_h", v_h}, {"slack", slack}});
        if (slack < worst) {
            worst = slack;
            witness = {{"h", h}, {"slack", slack}, {"x", x.coords}};
        }
    }
    json details = {{"rows", rows}, {"V_at_x", v0}};
    Evidence ev = worst >= -tol_eff
                      ? Evidence::make_supported("bellman", params, worst)
                      : Evidence::make_refuted("bellman", params, witness, worst);
    ev.details = details;
    return ev;
}

Evidence verify_integral_bound(const LyapunovEvaluator& V, const SystemDef& sys,
                               const ScalarFunction& alpha, const ScalarFunction& psi2,
                               const CertifyPlan& plan) {
    auto samples = metrics::build_samples(sys, plan);
    auto taus = plan.ladder_or_default();
    json params = {{"check", "integral_bound"},
                   {"alpha", alpha.to_json()},
                   {"psi2", psi2.to_json()},
                   {"plan", plan.to_json()},
                   {"samples", samples.size()}};
    double worst = std::numeric_limits<double>::infinity();
    json witness;
    bool any_inconclusive = false;

    for (const auto& s : samples) {
        try {
            double v = V.value(s.x);
            double upper_margin = psi2(s.x.norm()) - v;
            if (upper_margin < worst) {
                worst = upper_margin;
                witness = {{"x", s.x.coords}, {"side", "upper"}, {"V", v}};
            }
            if (upper_margin < -plan.tol)
                return Evidence::make_refuted("integral_bound", params, witness, upper_margin);

            FlowSampler flow(sys, s.x, s.d, plan.horizon);
            auto g = [&](double t) { return alpha(flow.norm(t)); };
            double acc = 0.0, prev = 0.0;
            for (double tau : taus) {
                if (tau <= prev) continue;
                acc += adaptive_simpson(g, prev, tau, plan.quad.tol).value;
                prev = tau;
                double lower_margin = v - acc;
                if (lower_margin < worst) {
                    worst = lower_margin;
                    witness = {{"x", s.x.coords}, {"side", "lower"}, {"t", tau}, {"V", v}};
                }
                if (lower_margin < -plan.tol)
                    return Evidence::make_refuted("integral_bound", params, witness,
                                                  lower_margin);
            }
        } catch (const FiniteEscapeError&) {
            any_inconclusive = true;
        }
    }
    if (any_inconclusive) return Evidence::make_inconclusive("integral_bound", params);
    return Evidence::make_supported("integral_bound", params, worst);
}

Evidence monotonicity_along_trajectory(const LyapunovEvaluator& V, const SystemDef& sys,
                                       const StateVector& x, const DisturbanceSignal& d,
                                       std::span<const double> s_grid, double tol) {
    json params = {{"check", "monotone_along_trajectory"}, {"tol", tol}, {"x", x.coords}};
    std::vector<double> grid(s_grid.begin(), s_grid.end());
    std::sort(grid.begin(), grid.end());
    double prev_v = std::numeric_limits<double>::infinity();
    double prev_s = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    json rows = json::array();
    for (double s : grid) {
        double v = V.value(sys.flow(s, x, d));
        rows.push_back({{"s", s}, {"V", v}});
        if (std::isfinite(prev_v)) {
            double margin = prev_v + tol - v;
            worst = std::min(worst, prev_v - v);
            if (margin < 0.0) {
                Evidence ev = Evidence::make_refuted(
                    "monotone_along_trajectory", params,
                    {{"s_prev", prev_s}, {"s", s}, {"V_prev", prev_v}, {"V", v}}, prev_v - v);
                ev.details = {{"rows", rows}};
                return ev;
            }
        }
        prev_v = v;
        prev_s = s;
    }
    Evidence ev = Evidence::make_supported("monotone_along_trajectory", params, worst);
    ev.details = {{"rows", rows}};
    return ev;
}

bool LyapunovCertificate::supported() const {
    return decay.supported() && bound.supported() && (!lower || lower->supported());
}

json LyapunovCertificate::to_json() const {
    json j = {{"decay", decay.to_json()},
              {"bound", bound.to_json()},
              {"alpha", alpha.to_json()},
              {"psi2", psi2.to_json()},
              {"supported", supported()}};
    if (lower) j["lower"] = lower->to_json();
    if (psi1) j["psi1"] = psi1->to_json();
    return j;
}

LyapunovCertificate certify_lyapunov(const LyapunovEvaluator& V, const SystemDef& sys,
                                     const ScalarFunction& alpha, const ScalarFunction& psi2,
                                     const std::optional<ScalarFunction>& psi1,
                                     const CertifyPlan& plan,
                                     const std::vector<DisturbanceSignal>& ensemble) {
    LyapunovCertificate cert;
    cert.alpha = alpha;
    cert.psi2 = psi2;
    cert.psi1 = psi1;
    DecayPlan dplan;
    dplan.radii = plan.radii;
    dplan.tol = plan.tol;
    cert.decay = verify_decay(V, sys, alpha, dplan, ensemble);
    cert.bound = verify_integral_bound(V, sys, alpha, psi2, plan);
    if (psi1) {
        json params = {{"check", "coercive_lower_bound"}, {"psi1", psi1->to_json()}};
        double worst = std::numeric_limits<double>::infinity();
        json witness;
        for (const auto& s : metrics::build_samples(sys, plan)) {
            double margin = V.value(s.x) - (*psi1)(s.x.norm());
            if (margin < worst) {
                worst = margin;
                witness = {{"x", s.x.coords}, {"V", V.value(s.x)}};
            }
        }
        cert.lower = worst >= -plan.tol
                         ? Evidence::make_supported("coercive_lower_bound", params, worst)
                         : Evidence::make_refuted("coercive_lower_bound", params, witness, worst);
    }
    return cert;
}

std::string level_set_csv(const LyapunovEvaluator& V, const std::vector<StateVector>& grid) {
    std::ostringstream out;
    out.precision(17);
    if (grid.empty()) return "";
    for (size_t i = 0; i < grid.front().dim(); ++i) out << "x" << (i + 1) << ",";
    out << "value\n";
    for (const auto& x : grid) {
        for (double c : x.coords) out << c << ",";
        out << V.value(x) << "\n";
    }
    return out.str();
}

}  // namespace lyocert::lyapunov
