#include "lyocert/reporting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace lyocert::reporting {

using comparison::FnClass;
using comparison::ScalarFunction;
using systems::DisturbanceSignal;
using systems::StateVector;

int evidence_exit_code(const Evidence& ev) {
    switch (ev.status) {
        case Status::Supported: return kExitSupported;
        case Status::Refuted: return kExitRefuted;
        case Status::Inconclusive: return kExitInconclusive;
        default: return kExitUsage;
    }
}

std::string render(const json& report, bool deterministic) {
    json out = report;
    if (!deterministic) {
        auto now = std::chrono::system_clock::now();
        out["generated_at"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
                .count();
    }
    return out.dump(2) + "\n";
}

json axioms_report(const SystemDef& sys, const systems::AxiomPlan& plan, double tol) {
    auto evidence = systems::check_axioms(sys, plan, tol);
    json ax = json::object();
    bool all = true;
    for (const auto& [name, ev] : evidence) {
        ax[name] = ev.to_json();
        all = all && ev.supported();
    }
    return {{"command", "axioms"},
            {"system", sys.to_config()},
            {"tol", tol},
            {"plan", plan.to_json()},
            {"axioms", ax},
            {"all_supported", all}};
}

int axioms_exit_code(const json& report) {
    return report.value("all_supported", false) ? kExitSupported : kExitRefuted;
}

json certify_report(const SystemDef& sys, const std::string& property, const Weights& weights,
                    const CertifyPlan& plan) {
    Evidence ev;
    std::string family = "integral";
    if (property == "UGATT_tailnorm") {
        if (!weights.alpha)
            throw std::invalid_argument("UGATT_tailnorm needs an alpha weight");
        ev = metrics::ugatt_tailnorm_check(sys, *weights.alpha, plan.radii,
                                           plan.ladder_or_default(), plan);
        family = "classical";
    } else {
        bool integral = true;
        try {
            auto kind = metrics::integral_kind_from_string(property);
            ev = metrics::certify_integral(kind, sys, weights, plan);
        } catch (const std::invalid_argument&) {
            integral = false;
        }
        if (!integral) {
            auto kind = metrics::classical_kind_from_string(property);
            ev = metrics::certify_classical(kind, sys, weights, plan);
            family = "classical";
        }
    }
    return {{"command", "certify"},
            {"system", sys.to_config()},
            {"property", property},
            {"family", family},
            {"evidence", ev.to_json()},
            {"exit_code", evidence_exit_code(ev)}};
}

json lyap_construct_report(const SystemDef& sys, const ScalarFunction& rho,
                           const lyapunov::NclfPolicy& policy, const CertifyPlan& plan) {
    auto V = lyapunov::construct_nclf(sys, rho, policy);

    std::vector<StateVector> probes{StateVector::zero(sys.dimension())};
    for (double r : plan.radii) {
        auto pts = systems::sphere_points(sys.dimension(), r, plan.sphere_count,
                                          plan.ensemble.seed);
        probes.insert(probes.end(), pts.begin(), pts.end());
    }
    json values = json::array();
    for (const auto& x : probes) values.push_back({{"x", x.coords}, {"value", V.value(x)}});

    systems::EnsemblePolicy pol = policy.ensemble;
    pol.horizon = policy.horizon;
    auto ensemble = systems::make_ensemble(sys.disturbance_box(), pol);

    lyapunov::DecayPlan dplan;
    dplan.radii = plan.radii;
    dplan.tol = plan.tol;
    Evidence decay = lyapunov::verify_decay(V, sys, rho, dplan, ensemble);

    double r_max = *std::max_element(plan.radii.begin(), plan.radii.end());
    StateVector x_far = systems::sphere_points(sys.dimension(), r_max, 1, plan.ensemble.seed)[0];
    std::vector<double> h_grid{0.25, 0.5, std::log(2.0), 1.0};
    Evidence bellman =
        lyapunov::verify_bellman(V, sys, x_far, ensemble.front(), h_grid, plan.tol);

    std::vector<double> s_grid{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    Evidence monotone = lyapunov::monotonicity_along_trajectory(V, sys, x_far, ensemble.front(),
                                                                s_grid, plan.tol);

    bool ok = decay.supported() && bellman.supported() && monotone.supported();
    return {{"command", "lyap"},
            {"mode", "construct"},
            {"system", sys.to_config()},
            {"rho", rho.to_json()},
            {"policy", policy.to_json()},
            {"evaluator", V.to_json()},
            {"values", values},
            {"decay", decay.to_json()},
            {"bellman", bellman.to_json()},
            {"monotonicity", monotone.to_json()},
            {"exit_code", ok ? kExitSupported : kExitRefuted}};
}

json lyap_verify_report(const SystemDef& sys, const lyapunov::LyapunovEvaluator& V,
                        const ScalarFunction& alpha, const ScalarFunction& psi2,
                        const CertifyPlan& plan) {
    systems::EnsemblePolicy pol = plan.ensemble;
    pol.horizon = plan.horizon;
    auto ensemble = systems::make_ensemble(sys.disturbance_box(), pol);
    auto cert = lyapunov::certify_lyapunov(V, sys, alpha, psi2, std::nullopt, plan, ensemble);

    int code = kExitSupported;
    if (cert.decay.refuted() || cert.bound.refuted())
        code = kExitRefuted;
    else if (!cert.supported())
        code = kExitInconclusive;
    return {{"command", "lyap"},
            {"mode", "verify"},
            {"system", sys.to_config()},
            {"evaluator", V.to_json()},
            {"certificate", cert.to_json()},
            {"exit_code", code}};
}

namespace {

struct PsiGrid {
    std::vector<double> rs, ts;
    std::vector<std::vector<double>> values;  // [r][t]

    double eval(double r, double t) const {
        auto locate = [](const std::vector<double>& xs, double x, size_t& i, double& w) {
            if (x <= xs.front()) {
                i = 0;
                w = 0.0;
                return;
            }
            if (x >= xs.back()) {
                i = xs.size() - 2;
                w = 1.0;
                return;
            }
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            i = static_cast<size_t>(it - xs.begin()) - 1;
            w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        };
        if (rs.size() == 1 || ts.size() == 1) return 0.0;
        size_t i, j;
        double u, v;
        locate(rs, r, i, u);
        locate(ts, t, j, v);
        double a = values[i][j] * (1 - u) * (1 - v) + values[i + 1][j] * u * (1 - v) +
                   values[i][j + 1] * (1 - u) * v + values[i + 1][j + 1] * u * v;
        return a;
    }
};

PsiGrid parse_psi_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::vector<std::tuple<double, double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.find_first_not_of("0123456789.,+-eE \t\r") != std::string::npos) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
            throw std::invalid_argument("psi CSV rows must be r,t,value");
        rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
    }
    if (rows.empty()) throw std::invalid_argument("psi CSV contains no data rows");
    PsiGrid g;
    for (const auto& [r, t, v] : rows) {
        g.rs.push_back(r);
        g.ts.push_back(t);
    }
    std::sort(g.rs.begin(), g.rs.end());
    g.rs.erase(std::unique(g.rs.begin(), g.rs.end()), g.rs.end());
    std::sort(g.ts.begin(), g.ts.end());
    g.ts.erase(std::unique(g.ts.begin(), g.ts.end()), g.ts.end());
    g.values.assign(g.rs.size(), std::vector<double>(g.ts.size(), 0.0));
    std::vector<std::vector<bool>> seen(g.rs.size(), std::vector<bool>(g.ts.size(), false));
    for (const auto& [r, t, v] : rows) {
        size_t i = static_cast<size_t>(
            std::lower_bound(g.rs.begin(), g.rs.end(), r) - g.rs.begin());
        size_t j = static_cast<size_t>(
            std::lower_bound(g.ts.begin(), g.ts.end(), t) - g.ts.begin());
        g.values[i][j] = v;
        seen[i][j] = true;
    }
    for (size_t i = 0; i < g.rs.size(); ++i)
        for (size_t j = 0; j < g.ts.size(); ++j)
            if (!seen[i][j])
                throw std::invalid_argument("psi CSV must sample a complete product grid");
    return g;
}

json kl_fit_result(const comparison::KLFunction& beta,
                   const std::function<double(double, double)>& psi,
                   const std::vector<double>& r_probe, const std::vector<double>& t_probe) {
    Evidence kl_check = comparison::verify_kl(beta, r_probe, t_probe, 1e-9);
    double margin = comparison::majorization_margin(beta, psi, r_probe, t_probe);
    return {{"beta", beta.to_json()},
            {"kl_invariants", kl_check.to_json()},
            {"majorization_margin", margin},
            {"exit_code", kl_check.supported() && margin >= 0.0 ? kExitSupported : kExitRefuted}};
}

}  // namespace

json klfit_report_from_csv(const std::string& csv) {
    PsiGrid grid = parse_psi_csv(csv);
    auto psi = [&grid](double r, double t) { return grid.eval(r, t); };

    double r_lo = 0.0, r_hi = grid.rs.back();
    for (double r : grid.rs)
        if (r > 0.0) {
            r_lo = r;
            break;
        }
    if (!(r_lo > 0.0) || !(r_hi > r_lo))
        throw std::invalid_argument("psi CSV needs at least two positive r samples");
    std::vector<double> r_points = comparison::Mesh::dyadic(r_lo, r_hi * 2.0).points;
    for (double r : grid.rs)
        if (r > 0.0) r_points.push_back(r);
    std::sort(r_points.begin(), r_points.end());
    r_points.erase(std::unique(r_points.begin(), r_points.end()), r_points.end());
    comparison::Mesh r_mesh = comparison::Mesh::from_points(r_points);

    std::vector<double> t_points{0.0};
    for (double t : grid.ts) t_points.push_back(t);
    t_points.push_back(grid.ts.back() * 1.5 + 1.0);
    t_points.push_back(grid.ts.back() * 2.0 + 2.0);
    std::sort(t_points.begin(), t_points.end());
    t_points.erase(std::unique(t_points.begin(), t_points.end()), t_points.end());
    comparison::Mesh t_mesh = comparison::Mesh::from_points(t_points);

    auto beta = comparison::kl_majorant(psi, comparison::default_majorant_weight(), r_mesh,
                                        t_mesh);
    std::vector<double> r_probe, t_probe;
    const auto& rs = beta.r_mesh().points;
    for (int i = 0; i < 20; ++i) {
        r_probe.push_back(rs.front() + (rs.back() - rs.front()) * i / 19.0);
        t_probe.push_back(grid.ts.front() + (grid.ts.back() - grid.ts.front()) * i / 19.0);
    }
    json out = kl_fit_result(beta, psi, r_probe, t_probe);
    out["command"] = "klfit";
    out["source"] = "psi_csv";
    return out;
}

json klfit_report_from_decay(const SystemDef& sys, const ScalarFunction& alpha,
                             const CertifyPlan& plan, int n_max) {
    // empirical integral gain per delta, monotone-repaired into a Kinf table
    std::vector<double> deltas = plan.delta_grid;
    std::sort(deltas.begin(), deltas.end());
    std::vector<double> gains;
    std::vector<std::vector<double>> sup_tails;  // per delta over the fine ladder
    std::vector<double> fine;
    for (double t = 0.0; t <= plan.horizon; t += plan.horizon / 64.0) fine.push_back(t);

    for (double delta : deltas) {
        auto samples = metrics::build_samples_within(sys, plan, delta);
        std::vector<double> sup(fine.size(), 0.0);
        for (const auto& s : samples) {
            systems::FlowSampler flow(sys, s.x, s.d, plan.horizon);
            auto g = [&](double t) { return alpha(flow.norm(t)); };
            std::vector<double> seg(fine.size(), 0.0);
            for (size_t i = 0; i + 1 < fine.size(); ++i)
                seg[i] = metrics::adaptive_simpson(g, fine[i], fine[i + 1], plan.quad.tol).value;
            double tail = metrics::exponential_tail_bound(g, 0.0, plan.horizon);
            if (!std::isfinite(tail))
                throw std::invalid_argument(
                    "klfit --from-decay: sampled tail integrals do not decay; the system does "
                    "not exhibit integral decay under this weight");
            std::vector<double> suffix(fine.size(), tail);
            for (size_t i = fine.size() - 1; i-- > 0;) suffix[i] = suffix[i + 1] + seg[i];
            for (size_t i = 0; i < fine.size(); ++i) sup[i] = std::max(sup[i], suffix[i]);
        }
        gains.push_back(sup.front());
        sup_tails.push_back(std::move(sup));
    }
    for (size_t i = 1; i < gains.size(); ++i)
        gains[i] = std::max(gains[i], gains[i - 1] + 1e-12);

    std::vector<double> tab_x{0.0}, tab_y{0.0};
    for (size_t i = 0; i < deltas.size(); ++i) {
        if (deltas[i] <= 0.0) continue;
        tab_x.push_back(deltas[i]);
        tab_y.push_back(gains[i]);
    }
    double extrap = 1.0;
    if (tab_x.size() >= 2)
        extrap = std::max(1e-6, (tab_y.back() - tab_y[tab_y.size() - 2]) /
                                    (tab_x.back() - tab_x[tab_x.size() - 2]));
    auto psi_gs = ScalarFunction::tabulated(tab_x, tab_y, FnClass::Kinf, extrap);

    auto tau_of = [&](double eps, double delta) -> std::optional<double> {
        auto it = std::lower_bound(deltas.begin(), deltas.end(), delta);
        if (it == deltas.end()) return std::nullopt;
        const auto& sup = sup_tails[static_cast<size_t>(it - deltas.begin())];
        for (size_t i = 0; i < fine.size(); ++i)
            if (sup[i] <= eps) return fine[i];
        return std::nullopt;
    };

    auto env = comparison::decay_envelope_from_ladder(psi_gs, tau_of, deltas, n_max);
    auto psi_probe = [&](double r, double t) { return 0.0 * r * t; };
    const auto& rs = env.beta.r_mesh().points;
    std::vector<double> r_probe, t_probe;
    for (int i = 0; i < 20; ++i) {
        r_probe.push_back(rs.front() + (rs.back() - rs.front()) * i / 19.0);
        t_probe.push_back(plan.horizon * i / 19.0 * 0.5);
    }
    json out = kl_fit_result(env.beta, psi_probe, r_probe, t_probe);
    out["command"] = "klfit";
    out["source"] = "decay";
    out["ladder"] = env.details;
    out["psi_gain"] = psi_gs.to_json();
    return out;
}

json infer_report(const std::vector<std::pair<inference::PropertyId, std::string>>& assumptions,
                  const std::map<inference::PropertyId, Evidence>& certificates) {
    std::vector<std::pair<inference::PropertyId, std::string>> seeds = assumptions;
    for (const auto& [p, ev] : certificates)
        if (ev.supported()) seeds.push_back({p, "supported-evidence"});
    auto closure = inference::infer_closure(seeds);
    auto contradictions = inference::consistency_check(certificates, assumptions);

    json assumed = json::array();
    for (const auto& [p, prov] : assumptions)
        assumed.push_back({{"property", inference::to_string(p)}, {"provenance", prov}});
    json contras = json::array();
    for (const auto& c : contradictions) contras.push_back(c.to_json());
    json certs = json::object();
    for (const auto& [p, ev] : certificates) certs[inference::to_string(p)] = to_string(ev.status);

    return {{"command", "infer"},
            {"assumptions", assumed},
            {"certificates", certs},
            {"closure", closure.to_json()},
            {"contradictions", contras},
            {"exit_code", contradictions.empty() ? kExitSupported : kExitRefuted}};
}

}  // namespace lyocert::reporting
