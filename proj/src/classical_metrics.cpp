#include "lyocert/classical_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lyocert::metrics {

using systems::FiniteEscapeError;
using systems::FlowSampler;

std::string to_string(ClassicalKind k) {
    switch (k) {
        case ClassicalKind::ULS: return "ULS";
        case ClassicalKind::UAS: return "UAS";
        case ClassicalKind::UGAS: return "UGAS";
        case ClassicalKind::UGWA: return "UGWA";
        case ClassicalKind::UGATT: return "UGATT";
        case ClassicalKind::REP: return "REP";
        case ClassicalKind::RFC: return "RFC";
        case ClassicalKind::UltULS: return "UltULS";
    }
    return "?";
}

ClassicalKind classical_kind_from_string(const std::string& s) {
    if (s == "ULS") return ClassicalKind::ULS;
    if (s == "UAS") return ClassicalKind::UAS;
    if (s == "UGAS") return ClassicalKind::UGAS;
    if (s == "UGWA") return ClassicalKind::UGWA;
    if (s == "UGATT") return ClassicalKind::UGATT;
    if (s == "REP") return ClassicalKind::REP;
    if (s == "RFC") return ClassicalKind::RFC;
    if (s == "UltULS") return ClassicalKind::UltULS;
    throw std::invalid_argument("unknown classical property kind: " + s);
}

namespace {

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

// one trajectory pass per sample; everything below reuses these
struct SampledTrajectory {
    Sample sample;
    std::optional<FlowSampler> flow;  // empty on finite escape
    json escape;
};

std::vector<SampledTrajectory> run_samples(const SystemDef& sys, const std::vector<Sample>& samples,
                                           double horizon) {
    std::vector<SampledTrajectory> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        SampledTrajectory st{s, std::nullopt, json()};
        try {
            st.flow.emplace(sys, s.x, s.d, horizon);
        } catch (const FiniteEscapeError& e) {
            st.escape = {{"t_low", e.t_low}, {"t_high", e.t_high}, {"norm", e.norm}};
        }
        out.push_back(std::move(st));
    }
    return out;
}

Evidence certify_ugas_like(bool global, const SystemDef& sys, const Weights& w,
                           const CertifyPlan& plan) {
    if (!w.beta) throw std::invalid_argument("UGAS/UAS need weight beta (KL)");
    const std::string kind = global ? "UGAS" : "UAS";
    auto samples = build_samples(sys, plan);
    json params = base_params(kind, w, plan, samples.size());
    auto trajs = run_samples(sys, samples, plan.horizon);

    double worst = std::numeric_limits<double>::infinity();
    json witness;
    bool any_escape = false;

    struct Violation {
        double norm_x;
        json witness;
        double margin;
    };
    std::vector<Violation> violations;

    for (const auto& st : trajs) {
        if (!st.flow) {
            any_escape = true;
            witness = sample_witness(st.sample);
            witness["finite_escape"] = st.escape;
            continue;
        }
        double r = st.sample.x.norm();
        for (double t : st.flow->grid()) {
            double margin = (*w.beta)(r, t) - st.flow->norm(t);
            if (margin < worst) {
                worst = margin;
                witness = sample_witness(st.sample);
                witness["t"] = t;
            }
            if (margin < -plan.tol) {
                json wj = sample_witness(st.sample);
                wj["t"] = t;
                wj["norm"] = st.flow->norm(t);
                violations.push_back({r, wj, margin});
                break;
            }
        }
    }

    std::vector<double> radii_sorted = plan.radii;
    std::sort(radii_sorted.begin(), radii_sorted.end());
    double certified_radius = 0.0;
    for (double r : radii_sorted) {
        bool clean = true;
        for (const auto& v : violations) clean = clean && v.norm_x > r + 1e-12;
        if (clean) certified_radius = r;
    }
    json details = {{"certified_radius", certified_radius}};

    bool ok = global ? violations.empty()
                     : (violations.empty() ||
                        (!radii_sorted.empty() && certified_radius >= radii_sorted.front()));
    Evidence ev;
    if (!ok) {
        ev = Evidence::make_refuted(kind, params, violations.front().witness,
                                    violations.front().margin);
    } else if (any_escape) {
        ev = Evidence::make_inconclusive(kind, params, witness);
    } else {
        ev = Evidence::make_supported(kind, params, worst);
    }
    ev.details = details;
    return ev;
}

Evidence certify_ugwa(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    auto eps = plan.eps_ladder(1.0);
    json params = base_params("UGWA", w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;

    for (double r : plan.radii) {
        auto samples = build_samples_within(sys, plan, r);
        auto trajs = run_samples(sys, samples, plan.horizon);
        for (double e : eps) {
            // empirical tau: the worst first-entry time into the eps-ball
            double tau_emp = 0.0;
            bool all_dip = true;
            json blocker;
            for (const auto& st : trajs) {
                if (!st.flow) {
                    all_dip = false;
                    blocker = sample_witness(st.sample);
                    blocker["finite_escape"] = st.escape;
                    break;
                }
                auto hit = st.flow->first_time_below(e, plan.horizon);
                if (!hit) {
                    all_dip = false;
                    blocker = sample_witness(st.sample);
                    double min_norm = std::numeric_limits<double>::infinity();
                    for (double t : st.flow->grid())
                        min_norm = std::min(min_norm, st.flow->norm(t));
                    blocker["min_norm_on_horizon"] = min_norm;
                    blocker["eps"] = e;
                    break;
                }
                tau_emp = std::max(tau_emp, *hit);
            }
            table.push_back({{"r", r},
                             {"eps", e},
                             {"tau", all_dip ? json(tau_emp) : json()}});
            if (!all_dip) {
                complete = false;
                if (witness.is_null()) witness = blocker;
            }
        }
    }
    json details = {{"tau_table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported("UGWA", params, 0.0)
                           : Evidence::make_refuted("UGWA", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_ugatt(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    auto eps = plan.eps_ladder(1.0);
    auto taus = plan.ladder_or_default();
    json params = base_params("UGATT", w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;
    double worst = std::numeric_limits<double>::infinity();

    for (double r : plan.radii) {
        auto samples = build_samples_within(sys, plan, r);
        auto trajs = run_samples(sys, samples, plan.horizon);
        // sup over samples of the tail sup from each ladder time
        std::vector<double> sup_tail(taus.size(), 0.0);
        json blocker;
        bool escaped = false;
        for (const auto& st : trajs) {
            if (!st.flow) {
                escaped = true;
                witness = sample_witness(st.sample);
                witness["finite_escape"] = st.escape;
                continue;
            }
            for (size_t j = 0; j < taus.size(); ++j) {
                double v = st.flow->sup_norm(taus[j], plan.horizon);
                if (v > sup_tail[j]) {
                    sup_tail[j] = v;
                    if (j + 1 == taus.size()) blocker = sample_witness(st.sample);
                }
            }
        }
        for (double e : eps) {
            std::optional<double> tau_found;
            if (!escaped)
                for (size_t j = 0; j < taus.size(); ++j)
                    if (sup_tail[j] <= e + plan.tol) {
                        tau_found = taus[j];
                        worst = std::min(worst, e + plan.tol - sup_tail[j]);
                        break;
                    }
            table.push_back(
                {{"r", r}, {"eps", e}, {"tau", tau_found ? json(*tau_found) : json()}});
            if (!tau_found) {
                complete = false;
                if (witness.is_null()) {
                    witness = blocker;
                    witness["r"] = r;
                    witness["eps"] = e;
                    witness["sup_tail"] = sup_tail;
                }
            }
        }
    }
    json details = {{"tau_table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported("UGATT", params, worst)
                           : Evidence::make_refuted("UGATT", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_rep(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    auto eps = plan.eps_ladder(1.0);
    json params = base_params("REP", w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;
    double worst = std::numeric_limits<double>::infinity();

    std::vector<double> deltas = plan.delta_grid;
    std::sort(deltas.rbegin(), deltas.rend());

    // cache the per-delta sup over [0, h] for each horizon
    for (double h : plan.horizons) {
        std::map<double, std::pair<double, json>> sup_by_delta;
        for (double delta : deltas) {
            double sup = 0.0;
            json blocker;
            auto samples = build_samples_within(sys, plan, delta);
            auto trajs = run_samples(sys, samples, h);
            for (const auto& st : trajs) {
                if (!st.flow) {
                    sup = std::numeric_limits<double>::infinity();
                    blocker = sample_witness(st.sample);
                    blocker["finite_escape"] = st.escape;
                    break;
                }
                double v = st.flow->sup_norm(0.0, h);
                if (v > sup) {
                    sup = v;
                    blocker = sample_witness(st.sample);
                }
            }
            sup_by_delta[delta] = {sup, blocker};
        }
        for (double e : eps) {
            std::optional<double> certified;
            json blocker;
            for (double delta : deltas) {
                auto [sup, b] = sup_by_delta[delta];
                if (sup <= e + plan.tol) {
                    certified = delta;
                    worst = std::min(worst, e + plan.tol - sup);
                    break;
                }
                blocker = b;
            }
            table.push_back(
                {{"eps", e}, {"h", h}, {"delta", certified ? json(*certified) : json()}});
            if (!certified) {
                complete = false;
                if (witness.is_null()) witness = blocker;
            }
        }
    }
    json details = {{"delta_table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported("REP", params, worst)
                           : Evidence::make_refuted("REP", params, witness);
    ev.details = details;
    return ev;
}

Evidence certify_rfc(const SystemDef& sys, const Weights& w, const CertifyPlan& plan) {
    json params = base_params("RFC", w, plan, 0);
    json table = json::array();
    json witness;
    bool escaped = false;
    for (double c : plan.radii) {
        for (double tau : plan.horizons) {
            double bound = 0.0;
            auto samples = build_samples_within(sys, plan, c);
            auto trajs = run_samples(sys, samples, tau);
            for (const auto& st : trajs) {
                if (!st.flow) {
                    escaped = true;
                    witness = sample_witness(st.sample);
                    witness["finite_escape"] = st.escape;
                    continue;
                }
                bound = std::max(bound, st.flow->sup_norm(0.0, tau));
            }
            table.push_back({{"C", c}, {"tau", tau}, {"bound", bound}});
        }
    }
    json details = {{"bound_table", table}};
    Evidence ev = escaped ? Evidence::make_refuted("RFC", params, witness)
                          : Evidence::make_supported("RFC", params, 0.0);
    ev.details = details;
    return ev;
}

Evidence certify_uls_like(bool ultimate, const SystemDef& sys, const Weights& w,
                          const CertifyPlan& plan) {
    const std::string kind = ultimate ? "UltULS" : "ULS";
    auto eps = plan.eps_ladder(1.0);
    auto taus = plan.ladder_or_default();
    json params = base_params(kind, w, plan, 0);
    json table = json::array();
    bool complete = true;
    json witness;
    double worst = std::numeric_limits<double>::infinity();

    std::vector<double> deltas = plan.delta_grid;
    std::sort(deltas.rbegin(), deltas.rend());

    // per delta: sup over the whole horizon (ULS) or per ladder tail (UltULS)
    std::map<double, std::vector<double>> sup_by_delta;
    std::map<double, bool> ok_by_delta;
    std::map<double, json> blocker_by_delta;
    for (double delta : deltas) {
        std::vector<double> sup(ultimate ? taus.size() : 1, 0.0);
        bool ok = true;
        json blocker;
        auto samples = build_samples_within(sys, plan, delta);
        auto trajs = run_samples(sys, samples, plan.horizon);
        for (const auto& st : trajs) {
            if (!st.flow) {
                ok = false;
                blocker = sample_witness(st.sample);
                continue;
            }
            if (ultimate) {
                for (size_t j = 0; j < taus.size(); ++j) {
                    double v = st.flow->sup_norm(taus[j], plan.horizon);
                    if (v > sup[j]) {
                        sup[j] = v;
                        if (j + 1 == taus.size()) blocker = sample_witness(st.sample);
                    }
                }
            } else {
                double v = st.flow->sup_norm(0.0, plan.horizon);
                if (v > sup[0]) {
                    sup[0] = v;
                    blocker = sample_witness(st.sample);
                }
            }
        }
        sup_by_delta[delta] = std::move(sup);
        ok_by_delta[delta] = ok;
        blocker_by_delta[delta] = std::move(blocker);
    }

    for (double e : eps) {
        if (ultimate) {
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
            if (!found) complete = false;
        } else {
            std::optional<double> certified;
            for (double delta : deltas) {
                if (!ok_by_delta[delta]) continue;
                if (sup_by_delta[delta][0] <= e + plan.tol) {
                    certified = delta;
                    worst = std::min(worst, e + plan.tol - sup_by_delta[delta][0]);
                    break;
                }
            }
            table.push_back({{"eps", e}, {"delta", certified ? json(*certified) : json()}});
            if (!certified) complete = false;
        }
        if (!complete && witness.is_null()) {
            witness = blocker_by_delta[deltas.back()];
            witness["eps"] = e;
        }
    }
    json details = {{"table", table}, {"eps_ladder", eps}};
    Evidence ev = complete ? Evidence::make_supported(kind, params, worst)
                           : Evidence::make_refuted(kind, params, witness);
    ev.details = details;
    return ev;
}

}  // namespace

Evidence certify_classical(ClassicalKind kind, const SystemDef& sys, const Weights& weights,
                           const CertifyPlan& plan) {
    if (plan.radii.empty() || plan.delta_grid.empty() || plan.horizons.empty())
        throw std::invalid_argument("certify_classical: plan must be nonempty");
    switch (kind) {
        case ClassicalKind::UGAS: return certify_ugas_like(true, sys, weights, plan);
        case ClassicalKind::UAS: return certify_ugas_like(false, sys, weights, plan);
        case ClassicalKind::UGWA: return certify_ugwa(sys, weights, plan);
        case ClassicalKind::UGATT: return certify_ugatt(sys, weights, plan);
        case ClassicalKind::REP: return certify_rep(sys, weights, plan);
        case ClassicalKind::RFC: return certify_rfc(sys, weights, plan);
        case ClassicalKind::ULS: return certify_uls_like(false, sys, weights, plan);
        case ClassicalKind::UltULS: return certify_uls_like(true, sys, weights, plan);
    }
    throw std::logic_error("unreachable");
}

Evidence ugatt_tailnorm_check(const SystemDef& sys, const ScalarFunction& alpha,
                              const std::vector<double>& radii,
                              const std::vector<double>& t_ladder, const CertifyPlan& plan) {
    if (radii.empty() || t_ladder.empty())
        throw std::invalid_argument("ugatt_tailnorm_check: empty radii or ladder");
    Weights w;
    w.alpha = alpha;
    json params = base_params("UGATT_tailnorm", w, plan, 0);
    json rows = json::array();
    bool complete = true;
    json witness;

    for (double r : radii) {
        auto samples = build_samples_within(sys, plan, r);
        std::vector<double> sup_tail(t_ladder.size(), 0.0);
        bool escaped = false;
        for (const auto& s : samples) {
            try {
                FlowSampler flow(sys, s.x, s.d, plan.horizon);
                for (size_t j = 0; j < t_ladder.size(); ++j)
                    sup_tail[j] = std::max(sup_tail[j], flow.sup_norm(t_ladder[j], plan.horizon));
            } catch (const FiniteEscapeError& e) {
                escaped = true;
                witness = sample_witness(s);
                witness["finite_escape"] = {{"t_low", e.t_low}, {"t_high", e.t_high}};
            }
        }
        std::vector<double> alpha_of_sup;
        for (double sv : sup_tail) alpha_of_sup.push_back(alpha(sv));

        // decide on the vanishing of the sup itself, in norm space
        auto eps = plan.eps_ladder(std::max(sup_tail.front(), 1e-12));
        bool vanishing = !escaped && r > 0.0;
        if (r == 0.0) vanishing = true;
        json tau_of_eps = json::array();
        for (double e : eps) {
            std::optional<double> tau_found;
            for (size_t j = 0; j < t_ladder.size(); ++j)
                if (sup_tail[j] <= e + plan.tol) {
                    tau_found = t_ladder[j];
                    break;
                }
            tau_of_eps.push_back({{"eps", e}, {"tau", tau_found ? json(*tau_found) : json()}});
            if (!tau_found) vanishing = false;
        }
        if (!vanishing && witness.is_null())
            witness = {{"r", r},
                       {"sup_tail", sup_tail},
                       {"alpha_of_sup", alpha_of_sup},
                       {"note", "sup||phi|| does not vanish along the ladder even though "
                                "alpha(sup) may be small; the sup is taken first"}};
        complete = complete && vanishing;
        rows.push_back({{"r", r},
                        {"sup_tail", sup_tail},
                        {"alpha_of_sup", alpha_of_sup},
                        {"tau_of_eps", tau_of_eps}});
    }

    // cross-check against the direct attractivity checker on the same plan
    Evidence direct = certify_classical(ClassicalKind::UGATT, sys, w, plan);
    json details = {{"rows", rows},
                    {"t_ladder", t_ladder},
                    {"direct_ugatt_status", to_string(direct.status)},
                    {"consistent", (direct.supported() == complete)}};

    Evidence ev = complete ? Evidence::make_supported("UGATT_tailnorm", params, 0.0)
                           : Evidence::make_refuted("UGATT_tailnorm", params, witness);
    ev.details = details;
    return ev;
}

std::string tau_table_csv(const Evidence& evidence) {
    std::ostringstream out;
    out.precision(17);
    out << "r,eps,tau\n";
    if (evidence.details.contains("tau_table"))
        for (const auto& row : evidence.details["tau_table"]) {
            out << row.value("r", 0.0) << "," << row.value("eps", 0.0) << ",";
            if (row.contains("tau") && !row["tau"].is_null()) out << row["tau"].get<double>();
            out << "\n";
        }
    return out.str();
}

std::string delta_table_csv(const Evidence& evidence) {
    std::ostringstream out;
    out.precision(17);
    out << "eps,h,delta\n";
    if (evidence.details.contains("delta_table"))
        for (const auto& row : evidence.details["delta_table"]) {
            out << row.value("eps", 0.0) << "," << row.value("h", 0.0) << ",";
            if (row.contains("delta") && !row["delta"].is_null())
                out << row["delta"].get<double>();
            out << "\n";
        }
    return out.str();
}

}  // namespace lyocert::metrics
