#include "lyocert/system.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace lyocert::systems {

namespace {

// exp(M * dt) for 2x2 M, split as mu*I + B with B trace-free: closed form
// via cosh/sinh (real eigen split), cos/sin (complex), or the double-root
// limit. Applied directly to a vector.
std::array<double, 2> expm2_apply(const std::array<double, 4>& m, double dt,
                                  const std::array<double, 2>& v) {
    double mu = 0.5 * (m[0] + m[3]);
    double b0 = m[0] - mu, b1 = m[1], b2 = m[2], b3 = m[3] - mu;
    double s2 = b0 * b0 + b1 * b2;  // B^2 = s2 * I
    double cosv, sincv;             // cosh(s dt), sinh(s dt)/s  (or trig versions)
    double z = s2 * dt * dt;
    if (std::abs(z) < 1e-12) {
        cosv = 1.0 + z / 2.0;
        sincv = dt * (1.0 + z / 6.0);
    } else if (s2 > 0.0) {
        double s = std::sqrt(s2);
        cosv = std::cosh(s * dt);
        sincv = std::sinh(s * dt) / s;
    } else {
        double w = std::sqrt(-s2);
        cosv = std::cos(w * dt);
        sincv = std::sin(w * dt) / w;
    }
    double e = std::exp(mu * dt);
    return {e * (cosv * v[0] + sincv * (b0 * v[0] + b1 * v[1])),
            e * (cosv * v[1] + sincv * (b2 * v[0] + b3 * v[1]))};
}

double solve_saturating(double x0, double t) {
    // x' = -x/(1+x^2): along |x|, g(y) = log y + y^2/2 decreases linearly,
    // g(y(t)) = g(y0) - t. Monotone in y, solved by bisection + Newton.
    if (x0 == 0.0) return 0.0;
    double y0 = std::abs(x0);
    double target = std::log(y0) + 0.5 * y0 * y0 - t;
    double lo = std::min(y0, std::exp(std::min(target, 0.0)));
    while (std::log(lo) + 0.5 * lo * lo > target) lo *= 0.5;
    double hi = y0;
    double y = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        double g = std::log(y) + 0.5 * y * y - target;
        if (g > 0.0)
            hi = y;
        else
            lo = y;
        double dg = 1.0 / y + y;
        double step = g / dg;
        double ynew = y - step;
        if (!(ynew > lo && ynew < hi)) ynew = 0.5 * (lo + hi);
        if (std::abs(ynew - y) <= 1e-16 * y) {
            y = ynew;
            break;
        }
        y = ynew;
    }
    return x0 > 0.0 ? y : -y;
}

std::array<double, 4> matrix_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2)
        throw std::invalid_argument("expected a 2x2 matrix as [[a,b],[c,d]]");
    return {j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
            j[1][1].get<double>()};
}

}  // namespace

struct SystemDef::Impl {
    std::string name;
    int dim = 1;
    Box box;
    bool analytic = false;
    json params;  // catalogue parameters
    IntegratorSettings settings;

    // OdeRhs
    std::vector<expr::Expression> rhs;
    std::vector<std::string> rhs_sources;

    // switched_2d matrices
    std::array<double, 4> a1{}, a2{};

    StateVector analytic_flow(double t, const StateVector& x, const DisturbanceSignal& d) const {
        auto guard = [this, t](StateVector v) {
            double n = v.norm();
            if (!std::isfinite(n)) throw FiniteEscapeError(0.0, t, n);
            return v;
        };
        if (name == "scalar_stable") return guard(StateVector({x[0] * std::exp(-t)}));
        if (name == "scalar_unstable") return guard(StateVector({x[0] * std::exp(t)}));
        if (name == "saturating") return guard(StateVector({solve_saturating(x[0], t)}));
        if (name == "broken_cocycle_demo") return guard(StateVector({x[0] + t * t}));
        if (name == "bilinear") {
            // x' = (d - 1) x: exact product of per-segment factors
            double log_factor = 0.0;
            double prev = 0.0;
            const auto& bp = d.breakpoints();
            for (size_t i = 0; i < bp.size(); ++i) {
                double seg_end = (i + 1 < bp.size()) ? std::min(bp[i + 1], t) : t;
                if (seg_end > prev) log_factor += (d.values()[i][0] - 1.0) * (seg_end - prev);
                prev = std::max(prev, seg_end);
                if (prev >= t) break;
            }
            if (bp.empty()) log_factor = -t;
            return guard(StateVector({x[0] * std::exp(log_factor)}));
        }
        if (name == "switched_2d") {
            // x' = A(d) x with A(d) = (2-d) A1 + (d-1) A2, applied exactly
            // segment by segment
            std::array<double, 2> v{x[0], x[1]};
            const auto& bp = d.breakpoints();
            double prev = 0.0;
            auto blend = [this](double dval) {
                std::array<double, 4> m;
                for (int i = 0; i < 4; ++i)
                    m[static_cast<size_t>(i)] = (2.0 - dval) * a1[static_cast<size_t>(i)] +
                                                (dval - 1.0) * a2[static_cast<size_t>(i)];
                return m;
            };
            if (bp.empty()) {
                v = expm2_apply(blend(1.0), t, v);
            } else {
                for (size_t i = 0; i < bp.size() && prev < t; ++i) {
                    double seg_end = (i + 1 < bp.size()) ? std::min(bp[i + 1], t) : t;
                    if (seg_end > prev) v = expm2_apply(blend(d.values()[i][0]), seg_end - prev, v);
                    prev = seg_end;
                }
            }
            StateVector out(std::vector<double>{v[0], v[1]});
            double n = out.norm();
            if (!std::isfinite(n) || n > settings.norm_guard) throw FiniteEscapeError(0.0, t, n);
            return out;
        }
        throw std::invalid_argument("unknown catalogue system: " + name);
    }

    StateVector ode_flow(double t, const StateVector& x, const DisturbanceSignal& d) const {
        if (t == 0.0) return x;
        auto fn = [this](double tt, std::span<const double> y, std::span<const double> dv,
                         std::span<double> dy) {
            for (size_t i = 0; i < rhs.size(); ++i) dy[i] = rhs[i].eval(tt, y, dv);
        };
        DenseTrajectory traj = integrate(fn, x.coords, t, d, settings);
        return StateVector(traj.steps.back().y);
    }
};

SystemDef SystemDef::catalogue(const std::string& name, const json& params) {
    auto impl = std::make_shared<Impl>();
    impl->name = name;
    impl->analytic = true;
    impl->params = params;
    if (name == "scalar_stable" || name == "scalar_unstable" || name == "saturating" ||
        name == "broken_cocycle_demo") {
        impl->dim = 1;
    } else if (name == "bilinear") {
        impl->dim = 1;
        impl->box.bounds = {{-1.0, 1.0}};
    } else if (name == "switched_2d") {
        impl->dim = 2;
        impl->box.bounds = {{1.0, 2.0}};
        // defaults: two Hurwitz rotations with no common quadratic certificate
        impl->a1 = {-0.1, 1.0, -10.0, -0.1};
        impl->a2 = {-0.1, 10.0, -1.0, -0.1};
        if (params.contains("A1")) impl->a1 = matrix_from_json(params["A1"]);
        if (params.contains("A2")) impl->a2 = matrix_from_json(params["A2"]);
    } else {
        throw std::invalid_argument("unknown catalogue system: " + name);
    }
    return SystemDef(impl);
}

SystemDef SystemDef::from_rhs(std::vector<std::string> rhs_sources, int dimension, Box box,
                              IntegratorSettings settings) {
    if (static_cast<int>(rhs_sources.size()) != dimension)
        throw std::invalid_argument("need one right-hand side per coordinate");
    auto impl = std::make_shared<Impl>();
    impl->name = "ode";
    impl->dim = dimension;
    impl->box = std::move(box);
    impl->analytic = false;
    impl->settings = settings;
    for (const auto& src : rhs_sources)
        impl->rhs.push_back(expr::parse_rhs(src, dimension, impl->box.dim()));
    impl->rhs_sources = std::move(rhs_sources);
    return SystemDef(impl);
}

SystemDef SystemDef::from_config(const json& config) {
    IntegratorSettings settings;
    if (config.contains("integrator")) settings = IntegratorSettings::from_json(config["integrator"]);
    if (config.contains("catalogue")) {
        const auto& cat = config["catalogue"];
        return catalogue(cat.at("name").get<std::string>(),
                         cat.value("params", json::object()));
    }
    int dim = config.at("dimension").get<int>();
    Box box;
    if (config.contains("disturbance")) {
        const auto& dist = config["disturbance"];
        box = Box::from_json(dist.at("box"));
        if (dist.contains("dim") && dist["dim"].get<int>() != box.dim())
            throw std::invalid_argument("disturbance dim does not match its box");
    }
    return from_rhs(config.at("rhs").get<std::vector<std::string>>(), dim, std::move(box),
                    settings);
}

const std::string& SystemDef::name() const { return impl_->name; }
int SystemDef::dimension() const { return impl_->dim; }
const Box& SystemDef::disturbance_box() const { return impl_->box; }
bool SystemDef::analytic() const { return impl_->analytic; }
const IntegratorSettings& SystemDef::integrator_settings() const { return impl_->settings; }

json SystemDef::to_config() const {
    json j;
    if (impl_->analytic) {
        j["catalogue"] = {{"name", impl_->name}, {"params", impl_->params}};
    } else {
        j["dimension"] = impl_->dim;
        j["rhs"] = impl_->rhs_sources;
        if (impl_->box.dim() > 0)
            j["disturbance"] = {{"dim", impl_->box.dim()}, {"box", impl_->box.to_json()}};
        j["integrator"] = impl_->settings.to_json();
    }
    return j;
}

StateVector SystemDef::flow(double t, const StateVector& x, const DisturbanceSignal& d) const {
    if (!impl_) throw std::logic_error("empty SystemDef");
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("flow: t must be finite and >= 0");
    if (static_cast<int>(x.dim()) != impl_->dim)
        throw std::invalid_argument("flow: state dimension mismatch");
    if (t == 0.0) return x;  // identity axiom holds exactly
    return impl_->analytic ? impl_->analytic_flow(t, x, d) : impl_->ode_flow(t, x, d);
}

DenseTrajectory SystemDef::dense_trajectory(const StateVector& x0, const DisturbanceSignal& d,
                                            double horizon) const {
    if (impl_->analytic) throw std::logic_error("dense_trajectory: analytic systems evaluate directly");
    auto fn = [this](double tt, std::span<const double> y, std::span<const double> dv,
                     std::span<double> dy) {
        for (size_t i = 0; i < impl_->rhs.size(); ++i) dy[i] = impl_->rhs[i].eval(tt, y, dv);
    };
    return integrate(fn, x0.coords, horizon, d, impl_->settings);
}

FlowSampler::FlowSampler(const SystemDef& sys, StateVector x0, DisturbanceSignal d, double horizon)
    : sys_(sys), x0_(std::move(x0)), d_(std::move(d)), horizon_(horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("FlowSampler: horizon must be positive");
    if (sys.analytic()) {
        // uniform fine grid plus the disturbance breakpoints
        const int n = 1024;
        for (int i = 0; i <= n; ++i) grid_.push_back(horizon * i / n);
        for (double b : d_.breakpoints())
            if (b > 0.0 && b < horizon) grid_.push_back(b);
        std::sort(grid_.begin(), grid_.end());
        grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
    } else {
        dense_ = sys.dense_trajectory(x0_, d_, horizon);
        error_estimate_ = dense_->error_estimate;
        // integrator step points, refined with a uniform floor
        for (const auto& step : dense_->steps) grid_.push_back(step.t);
        const int n = 512;
        for (int i = 0; i <= n; ++i) grid_.push_back(horizon * i / n);
        std::sort(grid_.begin(), grid_.end());
        grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
    }
}

StateVector FlowSampler::state(double s) const {
    if (sys_.analytic()) return sys_.flow(s, x0_, d_);
    return StateVector(dense_->eval(s));
}

double FlowSampler::norm(double s) const { return state(s).norm(); }

double FlowSampler::sup_norm(double from, double to) const {
    double best = 0.0;
    for (double t : grid_)
        if (t >= from && t <= to) best = std::max(best, norm(t));
    return best;
}

std::optional<double> FlowSampler::first_time_below(double eps, double tau) const {
    for (double t : grid_) {
        if (t > tau) break;
        if (norm(t) <= eps) return t;
    }
    return std::nullopt;
}

Trajectory sample_trajectory(const SystemDef& sys, const StateVector& x0,
                             const DisturbanceSignal& d, double horizon) {
    FlowSampler sampler(sys, x0, d, horizon);
    Trajectory traj;
    traj.error_estimate = sampler.error_estimate();
    for (double t : sampler.grid()) {
        traj.times.push_back(t);
        traj.states.push_back(sampler.state(t));
        traj.norms.push_back(traj.states.back().norm());
    }
    return traj;
}

std::vector<StateVector> sphere_points(int dim, double radius, int count, std::uint64_t seed) {
    std::vector<StateVector> out;
    if (radius == 0.0) {
        out.push_back(StateVector::zero(dim));
        return out;
    }
    if (dim == 1) {
        out.push_back(StateVector({radius}));
        out.push_back(StateVector({-radius}));
        return out;
    }
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            double a = 2.0 * M_PI * i / count;
            out.push_back(StateVector({radius * std::cos(a), radius * std::sin(a)}));
        }
        return out;
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int i = 0; i < count; ++i) {
        std::vector<double> v(static_cast<size_t>(dim));
        double nrm = 0.0;
        do {
            nrm = 0.0;
            for (auto& c : v) {
                double u1 = std::max(uniform01(rng()), 1e-16);
                double u2 = uniform01(rng());
                c = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
                nrm += c * c;
            }
            nrm = std::sqrt(nrm);
        } while (nrm < 1e-12);
        for (auto& c : v) c *= radius / nrm;
        out.push_back(StateVector(std::move(v)));
    }
    return out;
}

std::vector<StateVector> interior_points(int dim, double radius, int count, std::uint64_t seed) {
    std::vector<StateVector> out;
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
    for (int i = 0; i < count; ++i) {
        std::vector<double> v(static_cast<size_t>(dim));
        for (int j = 0; j < dim; ++j) {
            double u = (i + uniform01(rng())) / count;  // stratified per point
            v[static_cast<size_t>(j)] = radius * (2.0 * u - 1.0);
        }
        std::shuffle(v.begin(), v.end(), rng);
        out.push_back(StateVector(std::move(v)));
    }
    return out;
}

json AxiomPlan::to_json() const {
    return {{"times", times},
            {"hops", hops},
            {"radii", radii},
            {"states_per_radius", states_per_radius},
            {"ensemble", ensemble.to_json()},
            {"continuity_levels", continuity_levels},
            {"continuity_step", continuity_step}};
}

AxiomPlan AxiomPlan::from_json(const json& j) {
    AxiomPlan p;
    p.times = j.value("times", p.times);
    p.hops = j.value("hops", p.hops);
    p.radii = j.value("radii", p.radii);
    p.states_per_radius = j.value("states_per_radius", p.states_per_radius);
    if (j.contains("ensemble")) p.ensemble = EnsemblePolicy::from_json(j["ensemble"]);
    p.continuity_levels = j.value("continuity_levels", p.continuity_levels);
    p.continuity_step = j.value("continuity_step", p.continuity_step);
    return p;
}

namespace {

std::vector<StateVector> plan_states(const SystemDef& sys, const AxiomPlan& plan) {
    std::vector<StateVector> states{StateVector::zero(sys.dimension())};
    for (double r : plan.radii) {
        auto pts = sphere_points(sys.dimension(), r, plan.states_per_radius, plan.ensemble.seed);
        states.insert(states.end(), pts.begin(), pts.end());
    }
    return states;
}

json state_json(const StateVector& x) { return json(x.coords); }

}  // namespace

std::map<std::string, Evidence> check_axioms(const SystemDef& sys, const AxiomPlan& plan,
                                             double tol) {
    if (plan.times.empty() || plan.radii.empty())
        throw std::invalid_argument("check_axioms: empty sample plan");
    std::map<std::string, Evidence> out;
    auto states = plan_states(sys, plan);
    EnsemblePolicy ens = plan.ensemble;
    double t_max = 0.0;
    for (double t : plan.times)
        for (double h : plan.hops) t_max = std::max(t_max, t + h);
    ens.horizon = std::max(ens.horizon, t_max + 1.0);
    auto ensemble = make_ensemble(sys.disturbance_box(), ens);
    json params = {{"tol", tol},
                   {"states", states.size()},
                   {"ensemble_size", ensemble.size()},
                   {"seed", ens.seed}};

    // identity: phi(0, x, d) = x
    {
        double worst = 0.0;
        for (const auto& x : states)
            for (const auto& d : ensemble) {
                StateVector y = sys.flow(0.0, x, d);
                double res = 0.0;
                for (size_t i = 0; i < x.dim(); ++i) res += (y[i] - x[i]) * (y[i] - x[i]);
                worst = std::max(worst, std::sqrt(res));
            }
        out["identity"] = worst <= tol
                              ? Evidence::make_supported("axiom:identity", params, tol - worst)
                              : Evidence::make_refuted("axiom:identity", params,
                                                       {{"residual", worst}}, tol - worst);
    }

    // cocycle: phi(h, phi(t,x,d), d(t+.)) = phi(t+h,x,d)
    {
        Evidence ev;
        double worst = 0.0;
        json witness;
        bool escaped = false;
        for (const auto& x : states) {
            for (const auto& d : ensemble) {
                for (double t : plan.times) {
                    for (double h : plan.hops) {
                        try {
                            StateVector mid = sys.flow(t, x, d);
                            StateVector lhs = sys.flow(h, mid, shift(d, t));
                            StateVector rhs = sys.flow(t + h, x, d);
                            double res = 0.0;
                            for (size_t i = 0; i < lhs.dim(); ++i)
                                res += (lhs[i] - rhs[i]) * (lhs[i] - rhs[i]);
                            res = std::sqrt(res);
                            if (res > worst) {
                                worst = res;
                                witness = {{"t", t},
                                           {"h", h},
                                           {"x", state_json(x)},
                                           {"d", d.to_json()},
                                           {"residual", res},
                                           {"lhs", lhs.coords},
                                           {"rhs", rhs.coords}};
                            }
                        } catch (const FiniteEscapeError& e) {
                            escaped = true;
                            witness = {{"finite_escape",
                                        {{"t_low", e.t_low}, {"t_high", e.t_high}}},
                                       {"x", state_json(x)}};
                        }
                    }
                }
            }
        }
        if (escaped)
            ev = Evidence::make_inconclusive("axiom:cocycle", params, witness);
        else if (worst <= tol)
            ev = Evidence::make_supported("axiom:cocycle", params, tol - worst);
        else
            ev = Evidence::make_refuted("axiom:cocycle", params, witness, tol - worst);
        out["cocycle"] = ev;
    }

    // causality: phi(t, x, d) must not see d past time t
    {
        double worst = 0.0;
        json witness;
        auto alt_tail = ensemble.size() > 1 ? ensemble[1] : ensemble[0];
        for (const auto& x : states) {
            for (const auto& d : ensemble) {
                for (double t : plan.times) {
                    StateVector base = sys.flow(t, x, d);
                    if (sys.disturbance_box().dim() == 0) continue;
                    StateVector alt = sys.flow(t, x, concatenate(d, alt_tail, t));
                    double res = 0.0;
                    for (size_t i = 0; i < base.dim(); ++i)
                        res += (base[i] - alt[i]) * (base[i] - alt[i]);
                    res = std::sqrt(res);
                    if (res > worst) {
                        worst = res;
                        witness = {{"t", t}, {"x", state_json(x)}, {"residual", res}};
                    }
                }
            }
        }
        out["causality"] = worst <= tol
                               ? Evidence::make_supported("axiom:causality", params, tol - worst)
                               : Evidence::make_refuted("axiom:causality", params, witness,
                                                        tol - worst);
    }

    // continuity: modulus of continuity in t shrinks under step refinement
    {
        std::vector<double> moduli;
        for (int level = 0; level < plan.continuity_levels; ++level) {
            double dt = plan.continuity_step / std::ldexp(1.0, level);
            double m = 0.0;
            for (const auto& x : states)
                for (const auto& d : ensemble)
                    for (double t : plan.times) {
                        StateVector a = sys.flow(t, x, d);
                        StateVector b = sys.flow(t + dt, x, d);
                        double res = 0.0;
                        for (size_t i = 0; i < a.dim(); ++i)
                            res += (a[i] - b[i]) * (a[i] - b[i]);
                        m = std::max(m, std::sqrt(res));
                    }
            moduli.push_back(m);
        }
        bool shrinking = true;
        for (size_t i = 0; i + 1 < moduli.size(); ++i)
            shrinking = shrinking && moduli[i + 1] <= 0.75 * moduli[i] + tol;
        json detail = {{"moduli", moduli}};
        out["continuity"] = shrinking
                                ? Evidence::make_supported("axiom:continuity", params, 0.0)
                                : Evidence::make_refuted("axiom:continuity", params, detail);
        out["continuity"].details = detail;
    }

    return out;
}

Evidence equilibrium_check(const SystemDef& sys, double horizon,
                           const std::vector<DisturbanceSignal>& ensemble, double tol) {
    json params = {{"horizon", horizon}, {"tol", tol}, {"ensemble_size", ensemble.size()}};
    double worst = 0.0;
    json witness;
    for (const auto& d : ensemble) {
        FlowSampler sampler(sys, StateVector::zero(sys.dimension()), d, horizon);
        for (double t : sampler.grid()) {
            double n = sampler.norm(t);
            if (n > worst) {
                worst = n;
                witness = {{"t", t}, {"d", d.to_json()}, {"norm", n}};
            }
        }
    }
    if (worst <= tol) return Evidence::make_supported("equilibrium", params, tol - worst);
    return Evidence::make_refuted("equilibrium", params, witness, tol - worst);
}

}  // namespace lyocert::systems
