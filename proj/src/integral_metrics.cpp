#include "lyocert/integral_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lyocert::metrics {

using systems::FiniteEscapeError;
using systems::FlowSampler;

json Weights::to_json() const {
    json j = json::object();
    if (alpha) j["alpha"] = alpha->to_json();
    if (psi) j["psi"] = psi->to_json();
    if (beta) j["beta"] = beta->to_json();
    return j;
}

std::vector<double> CertifyPlan::ladder_or_default() const {
    if (!t_ladder.empty()) return t_ladder;
    std::vector<double> out{0.0};
    for (double t = 0.25; t < horizon; t *= 2.0) out.push_back(t);
    out.push_back(horizon);
    return out;
}

std::vector<double> CertifyPlan::eps_ladder(double auto_eps0) const {
    double base = eps0 > 0.0 ? eps0 : auto_eps0;
    std::vector<double> out;
    for (int n = 0; n <= eps_levels; ++n) out.push_back(base / std::ldexp(1.0, n));
    return out;
}

json CertifyPlan::to_json() const {
    return {{"radii", radii},
            {"eps0", eps0},
            {"eps_levels", eps_levels},
            {"delta_grid", delta_grid},
            {"horizons", horizons},
            {"t_ladder", t_ladder},
            {"horizon", horizon},
            {"tol", tol},
            {"sphere_count", sphere_count},
            {"interior_count", interior_count},
            {"include_interior", include_interior},
            {"ensemble", ensemble.to_json()},
            {"quadrature", quad.to_json()}};
}

CertifyPlan CertifyPlan::from_json(const json& j) {
    CertifyPlan p;
    p.radii = j.value("radii", p.radii);
    p.eps0 = j.value("eps0", p.eps0);
    p.eps_levels = j.value("eps_levels", p.eps_levels);
    p.delta_grid = j.value("delta_grid", p.delta_grid);
    p.horizons = j.value("horizons", p.horizons);
    p.t_ladder = j.value("t_ladder", p.t_ladder);
    p.horizon = j.value("horizon", p.horizon);
    p.tol = j.value("tol", p.tol);
    p.sphere_count = j.value("sphere_count", p.sphere_count);
    p.interior_count = j.value("interior_count", p.interior_count);
    p.include_interior = j.value("include_interior", p.include_interior);
    if (j.contains("ensemble")) p.ensemble = systems::EnsemblePolicy::from_json(j["ensemble"]);
    if (j.contains("quadrature")) p.quad = QuadraturePolicy::from_json(j["quadrature"]);
    return p;
}

namespace {

std::vector<StateVector> plan_states(const SystemDef& sys, const CertifyPlan& plan,
                                     std::optional<double> radius_cap) {
    std::vector<StateVector> states;
    states.push_back(StateVector::zero(sys.dimension()));
    std::vector<double> radii;
    if (radius_cap) {
        radii.push_back(*radius_cap);
    } else {
        radii = plan.radii;
    }
    for (double r : radii) {
        if (r <= 0.0) continue;
        auto pts =
            systems::sphere_points(sys.dimension(), r, plan.sphere_count, plan.ensemble.seed);
        states.insert(states.end(), pts.begin(), pts.end());
    }
    if (plan.include_interior) {
        double rmax = radius_cap ? *radius_cap
                                 : (plan.radii.empty() ? 1.0
                                                       : *std::max_element(plan.radii.begin(),
                                                                           plan.radii.end()));
        if (rmax > 0.0) {
            auto pts = systems::interior_points(sys.dimension(), rmax, plan.interior_count,
                                                plan.ensemble.seed);
            for (auto& p : pts)
                if (p.norm() <= rmax) states.push_back(std::move(p));
        }
    }
    return states;
}

std::vector<Sample> cross_with_ensemble(const SystemDef& sys, const CertifyPlan& plan,
                                        std::vector<StateVector> states) {
    systems::EnsemblePolicy pol = plan.ensemble;
    pol.horizon = plan.horizon;
    auto ensemble = systems::make_ensemble(sys.disturbance_box(), pol);
    std::vector<Sample> out;
    for (size_t si = 0; si < states.size(); ++si)
        for (size_t di = 0; di < ensemble.size(); ++di)
            out.push_back({states[si], ensemble[di], static_cast<int>(si), static_cast<int>(di)});
    return out;
}

json sample_witness(const Sample& s) {
    return {{"x", s.x.coords}, {"d", s.d.to_json()}, {"state_id", s.state_id},
            {"dist_id", s.dist_id}};
}

json base_params(const std::string& kind, const Weights& w, const CertifyPlan& plan,
                 size_t samples) {
    return {{"kind", kind},
            {"weights", w.to_json()},
            {"plan", plan.to_json()},
            {"samples", samples},
            {"seed", plan.ensemble.seed},
            {"verdict_scope", "desk-scale evidence on the sampled plan, not a proof"}};
}

// suffix integrals over the t ladder from one trajectory pass:
// out[j] = integral over [tau_j, horizon] plus the tail remainder
struct SuffixIntegrals {
    std::vector<double> values;
    bool tail_finite = true;
    double quad_error = 0.0;
};

SuffixIntegrals suffix_integrals(const SystemDef& sys, const ScalarFunction& alpha,
                                 const Sample& s, const std::vector<double>& taus,
                                 const CertifyPlan& plan) {
    FlowSampler sampler(sys, s.x, s.d, plan.horizon);
    auto g = [&](double t) { return alpha(sampler.norm(t)); };
    SuffixIntegrals out;
    std::vector<double> cuts = taus;
    cuts.push_back(plan.horizon);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> seg(cuts.size() - 1, 0.0);
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto q = adaptive_simpson(g, cuts[i], cuts[i + 1], plan.quad.tol);
        seg[i] = q.value;
        out.quad_error += q.error_estimate;
    }
    double tail = exponential_tail_bound(g, 0.0, plan.horizon);
    out.tail_finite = std::isfinite(tail);
    std::vector<double> suffix(cuts.size(), out.tail_finite ? tail : 0.0);
    for (size_t i = cuts.size() - 1; i-- > 0;) suffix[i] = suffix[i + 1] + seg[i];
    for (double tau : taus) {
        auto it = std::lower_bound(cuts.begin(), cuts.end(), tau);
        out.values.push_back(suffix[static_cast<size_t>(it - cuts.begin())]);
    }
    return out;
}

}  // namespace

std::vector<Sample> build_samples(const SystemDef& sys, const CertifyPlan& plan) {
    return cross_with_ensemble(sys, plan, plan_states(sys, plan, std::nullopt));
}

std::vector<Sample> build_samples_within(const SystemDef& sys, const CertifyPlan& plan,
                                         double radius) {
    return cross_with_ensemble(sys, plan, plan_states(sys, plan, radius));
}

TailIntegral integral_transform(const SystemDef& sys, const ScalarFunction& alpha,
                                const StateVector& x, const DisturbanceSignal& d, double t0,
                                const QuadraturePolicy& policy) {
    if (!(t0 >= 0.0)) throw std::invalid_argument("integral_transform: t0 must be >= 0");
    FlowSampler sampler(sys, x, d, t0 + policy.horizon);
    auto g = [&](double t) { return alpha(sampler.norm(t)); };
    auto q = adaptive_simpson(g, t0, t0 + policy.horizon, policy.tol);
    TailIntegral out;
    out.value = q.value;
    out.horizon = policy.horizon;
    out.quadrature_error = q.error_estimate;
    out.tail_bound = exponential_tail_bound(g, t0, t0 + policy.horizon);
    return out;
}

std::string to_string(IntegralKind k) {
    switch (k) {
        case IntegralKind::iREP: return "iREP";
        case IntegralKind::iRFC: return "iRFC";
        case IntegralKind::iULS: return "iULS";
        case IntegralKind::iUGS: return "iUGS";
        case IntegralKind::iUGATT: return "iUGATT";
        case IntegralKind::iUGAS: return "iUGAS";
        case IntegralKind::UltiULS: return "UltiULS";
    }
    return "?";
}

IntegralKind integral_kind_from_string(const std::string& s) {
    if (s == "iREP") return IntegralKind::iREP;
    if (s == "iRFC") return IntegralKind::iRFC;
    if (s == "iULS") return IntegralKind::iULS;
    if (s == "iUGS") return IntegralKind::iUGS;
    if (s == "iUGATT") return IntegralKind::iUGATT;
    if (s == "iUGAS") return IntegralKind::iUGAS;
    if (s == "UltiULS") return IntegralKind::UltiULS;
    throw std::invalid_argument("unknown integral property kind: " + s);
}

namespace {

Evidence certify_iugs_like(bool local, const SystemDef& sys, const Weights& w,
                           const CertifyPlan& plan) {
    if (!w.alpha || !w.psi)
        throw std::invalid_argument("iUGS/iULS need weights alpha (K) and psi (Kinf)");
    const std::string kind = local ? "iULS" : "iUGS";
    auto samples = build_samples(sys, plan);
    json params = base_params(kind, w, plan, samples.size());

    double worst = std::numeric_limits<double>::infinity();
    json witness;
    bool any_inconclusive = false;
    double certified_radius = 0.0;
    std::map<int, double> worst_by_state;
    std::vector<double> radii_sorted = plan.radii;
    std::sort(radii_sorted.begin(), radii_sorted.end());

    struct Violation {
        double norm_x;
        json witness;
        double margin;
    };
    std::vector<Violation> violations;

    for (const auto& s : samples) {
        try {
            TailIntegral ti = integral_transform(sys, *w.alpha, s.x, s.d, 0.0, plan.quad);
            if (!ti.tail_finite()) {
                any_inconclusive = true;
                continue;
            }
            double margin = (*w.psi)(s.x.norm()) - ti.total();
            if (margin < worst) {
                worst = margin;
                witness = sample_witness(s);
                witness["integral"] = ti.to_json();
            }
            if (margin < -plan.tol)
                violations.push_back({s.x.norm(), sample_witness(s), margin});
        } catch (const FiniteEscapeError& e) {
            any_inconclusive = true;
            json wj = sample_witness(s);
            wj["finite_escape"] = {{"t_low", e.t_low}, {"t_high", e.t_high}};
            witness = wj;
        }
    }

    // largest radius below which no violation was seen (the existential r)
    for (double r : radii_sorted) {
        bool clean = true;
        for (const auto& v : violations) clean = clean && v.norm_x > r + 1e-12;
        if (clean) certified_radius = r;
    }
    json details = {{"certified_radius", certified_radius}};

    if (local) {
        bool smallest_ok = true;
        for (const auto& v : violations)
            smallest_ok = smallest_ok && v.norm_x > radii_sorted.front() + 1e-12;
        if (smallest_ok && !radii_sorted.empty()) {
            Evidence ev = any_inconclusive && violations.empty()
                              ? Evidence::make_inconclusive(kind, params, details)
                              : Evidence::make_supported(kind, params, worst);
            ev.details = details;
            return ev;
        }
        Evidence ev = Evidence::make_refuted(kind, params, violations.front().witness,
                                             violations.front().margin);
        ev.details = details;
        return ev;
    }

    if (!violations.empty()) {
        Evidence ev = Evidence::make_refuted(kind, params, violations.front().witness,
                                             violations.front().margin);
        ev.details = details;
        return ev;
    }
    if (any_inconclusive) return Evidence::make_inconclusive(kind, params, details);
    Evidence ev = Evidence::make_supported(kind, params, worst);
    ev.details = details;
    return ev;
}

Evidence certify_iugatt(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    if (!w.alpha) throw std::invalid_argument("iUGATT needs weight alpha");
    auto taus = plan.ladder_or_default();
    json params;
    json tau_table = json::array();
    double sup0 = 0.0;
    bool escaped = false;
    json witness;

    struct PerRadius {
        double r;
        std::vector<double> sup_tail;  // over the tau ladder
        json blocker;                  // sample attaining the final tail sup
    };
    std::vector<PerRadius> rows;

    for (double r : plan.radii) {
        auto samples = build_samples_within(sys, plan, r);
        PerRadius row{r, std::vector<double>(taus.size(), 0.0), json()};
        for (const auto& s : samples) {
            try {
                auto suf = suffix_integrals(sys, *w.alpha, s, taus, plan);
                for (size_t j = 0; j < taus.size(); ++j) {
                    double v = suf.tail_finite ? suf.values[j]
                                               : std::numeric_limits<double>::infinity();
                    if (v > row.sup_tail[j]) {
                        row.sup_tail[j] = v;
                        if (j + 1 == taus.size()) row.blocker = sample_witness(s);
                    }
                }
                if (!suf.tail_finite) witness = sample_witness(s);
            } catch (const FiniteEscapeError& e) {
                escaped = true;
                witness = sample_witness(s);
                witness["finite_escape"] = {{"t_low", e.t_low}, {"t_high", e.t_high}};
            }
        }
        sup0 = std::max(sup0, row.sup_tail.front());
        rows.push_back(std::move(row));
    }

    if (!std::isfinite(sup0)) {
        // some sampled tail integral did not decay: no finite eps level exists
        json params_inf = base_params("iUGATT", w, plan, 0);
        Evidence ev = Evidence::make_refuted("iUGATT", params_inf, witness);
        ev.details = {{"reason", "tail integral did not decay on the horizon"}};
        return ev;
    }
    auto eps = plan.eps_ladder(std::max(sup0, 1e-12));
    bool all_found = !escaped;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        json entry = {{"r", row.r}, {"sup_tail", row.sup_tail}, {"tau_of_eps", json::array()}};
        for (double e : eps) {
            std::optional<double> tau_found;
            for (size_t j = 0; j < taus.size(); ++j)
                if (row.sup_tail[j] <= e + plan.tol) {
                    tau_found = taus[j];
                    worst_margin = std::min(worst_margin, e + plan.tol - row.sup_tail[j]);
                    break;
                }
            entry["tau_of_eps"].push_back(
                {{"eps", e}, {"tau", tau_found ? json(*tau_found) : json()}});
            if (!tau_found) {
                all_found = false;
                if (witness.is_null()) {
                    witness = row.blocker;
                    witness["r"] = row.r;
                    witness["eps"] = e;
                    witness["sup_tail"] = row.sup_tail;
                }
            }
        }
        tau_table.push_back(entry);
    }

    CertifyPlan pl = plan;
    params = base_params("iUGATT", w, plan, 0);
    json details = {{"tau_table", tau_table}, {"eps_ladder", eps}};
    (void)pl;
    if (all_found) {
        Evidence ev = Evidence::make_supported("iUGATT", params, worst_margin);
        ev.details = details;
        return ev;
    }
    Evidence ev = escaped ? Evidence::make_inconclusive("iUGATT", params, details)
                          : Evidence::make_refuted("iUGATT", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_iugas(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    if (!w.alpha || !w.beta) throw std::invalid_argument("iUGAS needs weights alpha and beta (KL)");
    auto taus = plan.ladder_or_default();
    auto samples = build_samples(sys, plan);
    json params = base_params("iUGAS", w, plan, samples.size());
    double worst = std::numeric_limits<double>::infinity();
    json witness;
    bool any_inconclusive = false;
    for (const auto& s : samples) {
        try {
            auto suf = suffix_integrals(sys, *w.alpha, s, taus, plan);
            if (!suf.tail_finite) {
                any_inconclusive = true;
                witness = sample_witness(s);
                continue;
            }
            for (size_t j = 0; j < taus.size(); ++j) {
                double margin = (*w.beta)(s.x.norm(), taus[j]) - suf.values[j];
                if (margin < worst) {
                    worst = margin;
                    witness = sample_witness(s);
                    witness["t"] = taus[j];
                }
                if (margin < -plan.tol) {
                    json wj = sample_witness(s);
                    wj["t"] = taus[j];
                    return Evidence::make_refuted("iUGAS", params, wj, margin);
                }
            }
        } catch (const FiniteEscapeError& e) {
            any_inconclusive = true;
            witness = sample_witness(s);
            witness["finite_escape"] = {{"t_low", e.t_low}, {"t_high", e.t_high}};
        }
    }
    if (any_inconclusive) return Evidence::make_inconclusive("iUGAS", params, witness);
    return Evidence::make_supported("iUGAS", params, worst);
}

Evidence certify_irep(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    if (!w.alpha) throw std::invalid_argument("iREP needs weight alpha");
    auto eps = plan.eps_ladder(1.0);
    json params = base_params("iREP", w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;
    double worst = std::numeric_limits<double>::infinity();

    std::vector<double> deltas = plan.delta_grid;
    std::sort(deltas.rbegin(), deltas.rend());

    for (double h : plan.horizons) {
        for (double e : eps) {
            std::optional<double> certified;
            json blocker;
            for (double delta : deltas) {
                double sup = 0.0;
                json local_blocker;
                bool escaped = false;
                auto samples = build_samples_within(sys, plan, delta);
                for (const auto& s : samples) {
                    try {
                        QuadraturePolicy qp = plan.quad;
                        qp.horizon = h;
                        TailIntegral ti = integral_transform(sys, *w.alpha, s.x, s.d, 0.0, qp);
                        if (ti.value > sup) {
                            sup = ti.value;
                            local_blocker = sample_witness(s);
                        }
                    } catch (const FiniteEscapeError&) {
                        escaped = true;
                        local_blocker = sample_witness(s);
                    }
                }
                if (!escaped && sup <= e + plan.tol) {
                    certified = delta;
                    worst = std::min(worst, e + plan.tol - sup);
                    break;
                }
                blocker = local_blocker;
            }
            table.push_back({{"eps", e},
                             {"h", h},
                             {"delta", certified ? json(*certified) : json()}});
            if (!certified) {
                complete = false;
                if (witness.is_null()) witness = blocker;
            }
        }
    }
    json details = {{"delta_table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported("iREP", params, worst)
                           : Evidence::make_refuted("iREP", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_ultiuls(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    if (!w.alpha) throw std::invalid_argument("UltiULS needs weight alpha");
    auto taus = plan.ladder_or_default();
    auto eps = plan.eps_ladder(1.0);
    json params = base_params("UltiULS", w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;
    double worst = std::numeric_limits<double>::infinity();

    std::vector<double> deltas = plan.delta_grid;
    std::sort(deltas.rbegin(), deltas.rend());

    // per delta: sup over samples of the suffix integrals along the ladder
    std::map<double, std::vector<double>> sup_by_delta;
    std::map<double, bool> ok_by_delta;
    std::map<double, json> blocker_by_delta;
    for (double delta : deltas) {
        std::vector<double> sup(taus.size(), 0.0);
        bool ok = true;
        json blocker;
        auto samples = build_samples_within(sys, plan, delta);
        for (const auto& s : samples) {
            try {
                auto suf = suffix_integrals(sys, *w.alpha, s, taus, plan);
                if (!suf.tail_finite) {
                    ok = false;
                    blocker = sample_witness(s);
                }
                for (size_t j = 0; j < taus.size(); ++j)
                    if (suf.values[j] > sup[j]) {
                        sup[j] = suf.values[j];
                        if (j + 1 == taus.size()) blocker = sample_witness(s);
                    }
            } catch (const FiniteEscapeError&) {
                ok = false;
                blocker = sample_witness(s);
            }
        }
        sup_by_delta[delta] = std::move(sup);
        ok_by_delta[delta] = ok;
        blocker_by_delta[delta] = std::move(blocker);
    }

    for (double e : eps) {
        std::optional<std::pair<double, double>> found;  // (T, delta)
        for (double delta : deltas) {
            if (!ok_by_delta[delta]) continue;
            const auto& sup = sup_by_delta[delta];
            for (size_t j = 0; j < taus.size(); ++j)
                if (sup[j] <= e + plan.tol) {
                    found = {taus[j], delta};
                    worst = std::min(worst, e + plan.tol - sup[j]);
                    break;
                }
            if (found) break;
        }
        table.push_back({{"eps", e},
                         {"T", found ? json(found->first) : json()},
                         {"delta", found ? json(found->second) : json()}});
        if (!found) {
            complete = false;
            if (witness.is_null()) {
                witness = blocker_by_delta[deltas.back()];
                witness["eps"] = e;
            }
        }
    }
    json details = {{"table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported("UltiULS", params, worst)
                           : Evidence::make_refuted("UltiULS", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_irfc(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    if (!w.alpha) throw std::invalid_argument("iRFC needs weight alpha");
    json params = base_params("iRFC", w, plan, 0);
    json table = json::array();
    json witness;
    bool escaped = false;
    for (double c : plan.radii) {
        for (double tau : plan.horizons) {
            double bound = 0.0;
            auto samples = build_samples_within(sys, plan, c);
            for (const auto& s : samples) {
                try {
                    QuadraturePolicy qp = plan.quad;
                    qp.horizon = tau;
                    TailIntegral ti = integral_transform(sys, *w.alpha, s.x, s.d, 0.0, qp);
                    bound = std::max(bound, ti.value);
                } catch (const FiniteEscapeError& e) {
                    escaped = true;
                    witness = sample_witness(s);
                    witness["finite_escape"] = {{"t_low", e.t_low}, {"t_high", e.t_high}};
                }
            }
            table.push_back({{"C", c}, {"tau", tau}, {"bound", bound}});
        }
    }
    json details = {{"bound_table", table}};
    Evidence ev = escaped ? Evidence::make_refuted("iRFC", params, witness)
                          : Evidence::make_supported("iRFC", params, 0.0);
    ev.details = details;
    return ev;
}

}  // namespace

Evidence certify_integral(IntegralKind kind, const SystemDef& sys, const Weights& weights,
                          const CertifyPlan& plan) {
    if (plan.radii.empty() || plan.delta_grid.empty() || plan.horizons.empty())
        throw std::invalid_argument("certify_integral: plan must be nonempty");
    switch (kind) {
        case IntegralKind::iUGS: return certify_iugs_like(false, sys, weights, plan);
        case IntegralKind::iULS: return certify_iugs_like(true, sys, weights, plan);
        case IntegralKind::iUGATT: return certify_iugatt(sys, weights, plan);
        case IntegralKind::iUGAS: return certify_iugas(sys, weights, plan);
        case IntegralKind::iREP: return certify_irep(sys, weights, plan);
        case IntegralKind::UltiULS: return certify_ultiuls(sys, weights, plan);
        case IntegralKind::iRFC: return certify_irfc(sys, weights, plan);
    }
    throw std::logic_error("unreachable");
}

}  // namespace lyocert::metrics
