#include "lyocert/kl_function.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace lyocert::comparison {

namespace {
constexpr double kMinSlope = 1e-12;

double pow_eval(double a, double p, double r) {
    double rp = (p == 1.0) ? r : std::pow(r, p);
    return (a == 1.0) ? rp : a * rp;
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            v.end());
    return v;
}
}  // namespace

Mesh Mesh::from_points(std::vector<double> pts, double eps, double lo, double hi) {
    if (pts.size() < 2) throw std::invalid_argument("mesh needs at least two points");
    for (size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i] > pts[i - 1]))
            throw std::invalid_argument("mesh points must be strictly increasing");
    Mesh m;
    m.points = std::move(pts);
    m.target_oscillation = eps;
    m.truncation_low = lo == 0.0 ? m.points.front() : lo;
    m.truncation_high = hi == 0.0 ? m.points.back() : hi;
    return m;
}

Mesh Mesh::dyadic(double r_low, double r_high) {
    if (!(r_low > 0.0) || !(r_high > r_low))
        throw std::invalid_argument("dyadic mesh needs 0 < r_low < r_high");
    int k_lo = static_cast<int>(std::floor(std::log2(r_low)));
    int k_hi = static_cast<int>(std::ceil(std::log2(r_high)));
    while (std::ldexp(1.0, k_lo) > r_low) --k_lo;
    while (std::ldexp(1.0, k_hi) < r_high) ++k_hi;
    std::vector<double> pts;
    for (int k = k_lo; k <= k_hi; ++k) pts.push_back(std::ldexp(1.0, k));
    return from_points(std::move(pts), 0.0, r_low, r_high);
}

Mesh Mesh::time_ladder(double horizon, double base) {
    if (!(horizon > 0.0) || !(base > 0.0))
        throw std::invalid_argument("time ladder needs positive horizon and base");
    std::vector<double> pts{0.0};
    for (double t = base; t < horizon; t *= 2.0) pts.push_back(t);
    if (pts.back() < horizon) pts.push_back(horizon);
    return from_points(std::move(pts), 0.0, 0.0, horizon);
}

MeshRefinementError::MeshRefinementError(double lo, double hi, double osc)
    : std::runtime_error("mesh refinement budget exhausted on cell [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] with sampled oscillation " + std::to_string(osc)),
      cell_lo(lo),
      cell_hi(hi),
      oscillation(osc) {}

namespace {
// max - min of z over n equispaced samples of [a, b], endpoints included
double sampled_oscillation(const std::function<double(double)>& z, double a, double b, int n) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = 0; j < n; ++j) {
        double v = z(a + (b - a) * j / (n - 1));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}
}  // namespace

Mesh build_partition(const std::function<double(double)>& z, double eps, double r_low,
                     double r_high, int samples_per_interval) {
    if (!(eps > 0.0)) throw std::invalid_argument("build_partition: eps must be positive");
    if (!(0.0 < r_low && r_low < r_high))
        throw std::invalid_argument("build_partition: needs 0 < r_low < r_high");
    if (samples_per_interval < 2)
        throw std::invalid_argument("build_partition: needs at least 2 samples per interval");

    Mesh seed = Mesh::dyadic(r_low, r_high);
    std::vector<double> pts;
    struct Cell {
        double a, b;
        int depth;
    };
    std::deque<Cell> work;
    for (size_t i = 0; i + 1 < seed.points.size(); ++i)
        work.push_back({seed.points[i], seed.points[i + 1], 0});
    pts.push_back(seed.points.front());

    // Process cells left to right so the output stays ordered. The budget
    // bounds total work: z oscillating faster than the sampling can resolve
    // is a diagnostic, not an excuse to grind.
    long budget = 200000;
    while (!work.empty()) {
        Cell c = work.front();
        work.pop_front();
        double osc = sampled_oscillation(z, c.a, c.b, samples_per_interval);
        if (--budget < 0) throw MeshRefinementError(c.a, c.b, osc);
        // small safety factor so denser resampling of an accepted cell
        // stays below eps despite the sparse estimate
        if (osc < 0.995 * eps) {
            pts.push_back(c.b);
            continue;
        }
        if (c.depth >= 40) throw MeshRefinementError(c.a, c.b, osc);
        double mid = 0.5 * (c.a + c.b);
        work.push_front({mid, c.b, c.depth + 1});
        work.push_front({c.a, mid, c.depth + 1});
    }
    return Mesh::from_points(std::move(pts), eps, r_low, r_high);
}

struct KLFunction::Impl {
    enum class Kind { Separable, Callable, MeshInterp };
    Kind kind = Kind::Separable;
    std::string label;

    double a = 1.0, p = 1.0, c = 1.0;                 // Separable
    std::function<double(double, double)> fn;         // Callable
    Mesh rm, tm;                                      // MeshInterp
    std::vector<double> node_values;                  // row-major over r

    double node(size_t k, size_t m) const { return node_values[k * tm.size() + m]; }

    // value at column k (r = rm.points[k]), linear in t inside the mesh
    double edge_value(size_t k, double t) const {
        const auto& ts = tm.points;
        if (t <= ts.front()) return node(k, 0);
        if (t >= ts.back()) return node(k, ts.size() - 1);
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        size_t m = static_cast<size_t>(it - ts.begin()) - 1;
        double w = (t - ts[m]) / (ts[m + 1] - ts[m]);
        return node(k, m) + w * (node(k, m + 1) - node(k, m));
    }

    double eval(double r, double t) const {
        if (r < 0.0 || t < 0.0) throw std::invalid_argument("KL function domain is R+ x R+");
        switch (kind) {
            case Kind::Separable: {
                double et = (c == 1.0) ? std::exp(-t) : std::exp(-c * t);
                return pow_eval(a, p, r) * et;
            }
            case Kind::Callable:
                return fn(r, t);
            case Kind::MeshInterp:
                return eval_mesh(r, t);
        }
        return 0.0;
    }

    double eval_mesh(double r, double t) const {
        if (r == 0.0) return 0.0;
        const auto& rs = rm.points;
        const auto& ts = tm.points;
        double factor = 1.0;
        if (t > ts.back()) {  // decreasing-to-zero extension beyond the mesh
            factor = std::exp(-(t - ts.back()));
            t = ts.back();
        }
        if (t < ts.front()) t = ts.front();

        if (r < rs.front()) return factor * (r / rs.front()) * edge_value(0, t);
        if (r >= rs.back()) {
            size_t last = rs.size() - 1;
            double v = edge_value(last, t);
            double slope = kMinSlope;
            if (last > 0) {
                double prev = edge_value(last - 1, t);
                slope = std::max((v - prev) / (rs[last] - rs[last - 1]), kMinSlope);
            }
            return factor * (v + slope * (r - rs.back()));
        }

        auto itr = std::upper_bound(rs.begin(), rs.end(), r);
        size_t k = static_cast<size_t>(itr - rs.begin()) - 1;
        size_t m;
        if (t >= ts.back())
            m = ts.size() - 2;
        else {
            auto itt = std::upper_bound(ts.begin(), ts.end(), t);
            m = static_cast<size_t>(itt - ts.begin()) - 1;
        }
        double u = (r - rs[k]) / (rs[k + 1] - rs[k]);
        double v = (t - ts[m]) / (ts[m + 1] - ts[m]);
        double f00 = node(k, m), f10 = node(k + 1, m);
        double f01 = node(k, m + 1), f11 = node(k + 1, m + 1);
        // two-triangle split along the (R_{k+1}, tau_m) -- (R_k, tau_{m+1}) diagonal
        double val;
        if (u + v <= 1.0)
            val = f00 + u * (f10 - f00) + v * (f01 - f00);
        else
            val = f11 + (1.0 - u) * (f01 - f11) + (1.0 - v) * (f10 - f11);
        return factor * val;
    }
};

KLFunction KLFunction::separable_exp(double a, double p, double c) {
    if (!(a > 0.0) || !(p > 0.0) || !(c > 0.0))
        throw std::invalid_argument("separable_exp needs positive a, p, c");
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Separable;
    impl->a = a;
    impl->p = p;
    impl->c = c;
    impl->label = "separable_exp";
    return KLFunction(impl);
}

KLFunction KLFunction::from_callable(std::string label, std::function<double(double, double)> fn) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Callable;
    impl->fn = std::move(fn);
    impl->label = std::move(label);
    return KLFunction(impl);
}

KLFunction KLFunction::mesh_interpolant(Mesh r_mesh, Mesh t_mesh, std::vector<double> nodes) {
    if (r_mesh.size() < 2 || t_mesh.size() < 2)
        throw std::invalid_argument("mesh interpolant needs at least a 2x2 mesh");
    if (!(r_mesh.points.front() > 0.0))
        throw std::invalid_argument("mesh interpolant r-mesh must be positive");
    if (nodes.size() != r_mesh.size() * t_mesh.size())
        throw std::invalid_argument("mesh interpolant node count mismatch");
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::MeshInterp;
    impl->rm = std::move(r_mesh);
    impl->tm = std::move(t_mesh);
    impl->node_values = std::move(nodes);
    impl->label = "mesh_interpolant";
    return KLFunction(impl);
}

double KLFunction::operator()(double r, double t) const {
    if (!impl_) throw std::logic_error("empty KLFunction");
    return impl_->eval(r, t);
}

const std::string& KLFunction::label() const {
    static const std::string empty;
    return impl_ ? impl_->label : empty;
}

bool KLFunction::is_mesh() const { return impl_ && impl_->kind == Impl::Kind::MeshInterp; }

const Mesh& KLFunction::r_mesh() const {
    if (!is_mesh()) throw std::logic_error("not a mesh interpolant");
    return impl_->rm;
}

const Mesh& KLFunction::t_mesh() const {
    if (!is_mesh()) throw std::logic_error("not a mesh interpolant");
    return impl_->tm;
}

const std::vector<double>& KLFunction::nodes() const {
    if (!is_mesh()) throw std::logic_error("not a mesh interpolant");
    return impl_->node_values;
}

json KLFunction::to_json() const {
    if (!impl_) return json();
    json j;
    switch (impl_->kind) {
        case Impl::Kind::Separable:
            j["kind"] = "separable_exp";
            j["params"] = {impl_->a, impl_->p, impl_->c};
            break;
        case Impl::Kind::Callable:
            j["kind"] = "callable";
            j["label"] = impl_->label;
            break;
        case Impl::Kind::MeshInterp:
            j["kind"] = "mesh_interpolant";
            j["r_mesh"] = impl_->rm.points;
            j["t_mesh"] = impl_->tm.points;
            j["nodes"] = impl_->node_values;
            break;
    }
    return j;
}

KLFunction KLFunction::from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "separable_exp") {
        auto p = j.at("params").get<std::vector<double>>();
        return separable_exp(p.at(0), p.at(1), p.at(2));
    }
    if (kind == "mesh_interpolant") {
        Mesh rm = Mesh::from_points(j.at("r_mesh").get<std::vector<double>>());
        Mesh tm = Mesh::from_points(j.at("t_mesh").get<std::vector<double>>());
        return mesh_interpolant(std::move(rm), std::move(tm),
                                j.at("nodes").get<std::vector<double>>());
    }
    throw std::invalid_argument("cannot deserialize KL function of kind " + kind);
}

Evidence verify_kl(const KLFunction& beta, std::span<const double> r_grid,
                   std::span<const double> t_grid, double tol) {
    if (r_grid.empty() || t_grid.empty()) throw std::invalid_argument("verify_kl: empty grid");
    std::vector<double> rs(r_grid.begin(), r_grid.end());
    std::vector<double> ts(t_grid.begin(), t_grid.end());
    std::sort(rs.begin(), rs.end());
    std::sort(ts.begin(), ts.end());
    if (rs.front() < 0.0 || ts.front() < 0.0)
        throw std::invalid_argument("verify_kl: grids must be nonnegative");

    json params = {{"tol", tol}, {"r_grid_size", rs.size()}, {"t_grid_size", ts.size()}};
    auto refute = [&](const std::string& reason, json witness) {
        witness["reason"] = reason;
        return Evidence::make_refuted("class:KL", params, std::move(witness));
    };

    for (double t : ts) {
        if (beta(0.0, t) != 0.0)
            return refute("nonzero_at_zero", {{"t", t}, {"value", beta(0.0, t)}});
        for (size_t i = 0; i + 1 < rs.size(); ++i) {
            double d = beta(rs[i + 1], t) - beta(rs[i], t);
            if (d <= -tol)
                return refute("not_strictly_increasing_in_r",
                              {{"t", t}, {"pair", {rs[i], rs[i + 1]}}});
        }
    }
    for (double r : rs) {
        if (r <= 0.0) continue;
        for (size_t i = 0; i + 1 < ts.size(); ++i) {
            double d = beta(r, ts[i + 1]) - beta(r, ts[i]);
            if (d >= tol)
                return refute("not_nonincreasing_in_t", {{"r", r}, {"pair", {ts[i], ts[i + 1]}}});
        }
        double t = std::max(ts.back(), 1.0);
        bool vanished = false;
        for (int k = 0; k < 80; ++k) {
            t *= 2.0;
            if (beta(r, t) <= std::max(tol, 1e-12)) {
                vanished = true;
                break;
            }
        }
        if (!vanished) return refute("tail_does_not_vanish", {{"r", r}, {"t", t}});
    }
    return Evidence::make_supported("class:KL", params, 0.0);
}

KLFunction default_majorant_weight() {
    return KLFunction::from_callable(
        "r*exp(-t)/(1+r)", [](double r, double t) { return r * std::exp(-t) / (1.0 + r); });
}

KLFunction kl_majorant(const std::function<double(double, double)>& psi, const KLFunction& omega,
                       const Mesh& r_mesh, const Mesh& t_mesh) {
    const auto& rs = r_mesh.points;
    const auto& ts = t_mesh.points;
    if (rs.size() < 3) throw std::invalid_argument("kl_majorant: r-mesh needs >= 3 points");
    if (ts.size() < 2) throw std::invalid_argument("kl_majorant: t-mesh needs >= 2 points");
    if (!(rs.front() > 0.0)) throw std::invalid_argument("kl_majorant: r-mesh must be positive");
    if (ts.front() != 0.0) throw std::invalid_argument("kl_majorant: t-mesh must start at 0");

    auto fail = [](const std::string& what, double r, double t) {
        std::ostringstream msg;
        msg << "kl_majorant: hypothesis violated (" << what << ") at (r, t) = (" << r << ", " << t
            << ")";
        throw std::invalid_argument(msg.str());
    };
    const double slack = 1e-12;
    for (double t : ts) {
        if (std::abs(psi(0.0, t)) > slack) fail("psi(0, t) != 0", 0.0, t);
        for (size_t k = 0; k + 1 < rs.size(); ++k)
            if (psi(rs[k + 1], t) < psi(rs[k], t) - slack * std::max(1.0, psi(rs[k], t)))
                fail("psi not nondecreasing in r", rs[k + 1], t);
    }
    for (double r : rs)
        for (size_t m = 0; m + 1 < ts.size(); ++m)
            if (psi(r, ts[m + 1]) > psi(r, ts[m]) + slack * std::max(1.0, psi(r, ts[m])))
                fail("psi not nonincreasing in t", r, ts[m + 1]);

    // node values: one cell shifted in r (uses R_{k+1}) and in t (uses tau_{m-1})
    const size_t rows = rs.size() - 1;
    const size_t cols = ts.size();
    std::vector<double> nodes(rows * cols);
    for (size_t k = 0; k < rows; ++k) {
        for (size_t m = 0; m < cols; ++m) {
            double tr = (m == 0) ? ts[0] : ts[m - 1];
            double w = omega(rs[k + 1], tr);
            if (!(w > 0.0)) fail("omega not strictly positive", rs[k + 1], tr);
            double ps = psi(rs[k + 1], tr);
            nodes[k * cols + m] = (m == 0) ? 2.0 * ps + w : ps + w;
        }
    }
    Mesh rm = Mesh::from_points(std::vector<double>(rs.begin(), rs.end() - 1),
                                r_mesh.target_oscillation, r_mesh.truncation_low,
                                r_mesh.truncation_high);
    KLFunction beta = KLFunction::mesh_interpolant(std::move(rm), t_mesh, std::move(nodes));

    // majorization guarantee on an interior verification grid
    std::vector<double> vr, vt;
    const double r_lo = rs.front(), r_hi = rs[rows - 1];
    const double t_lo = ts.front(), t_hi = ts.back();
    for (int i = 0; i < 20; ++i) {
        vr.push_back(r_lo + (r_hi - r_lo) * i / 19.0);
        vt.push_back(t_lo + (t_hi - t_lo) * i / 19.0);
    }
    double margin = majorization_margin(beta, psi, vr, vt);
    if (margin < 0.0)
        throw std::logic_error("kl_majorant: construction failed to majorize psi (margin " +
                               std::to_string(margin) + ")");
    return beta;
}

double majorization_margin(const KLFunction& beta, const std::function<double(double, double)>& psi,
                           std::span<const double> r_grid, std::span<const double> t_grid) {
    double margin = std::numeric_limits<double>::infinity();
    for (double r : r_grid)
        for (double t : t_grid) margin = std::min(margin, beta(r, t) - psi(r, t));
    return margin;
}

namespace {
double omega_rung_value(const LadderRung& rung, double t) {
    if (rung.psi_value <= 0.0) return 0.0;
    std::vector<double> vals;
    vals.push_back(2.0 * rung.psi_value);
    for (size_t n = 1; n < rung.tau.size(); ++n) vals.push_back(rung.eps[n - 1]);
    const auto& taus = rung.tau;
    if (t >= taus.back()) return vals.back() * std::exp(-(t - taus.back()));
    auto it = std::upper_bound(taus.begin(), taus.end(), t);
    size_t i = static_cast<size_t>(it - taus.begin()) - 1;
    double w = (t - taus[i]) / (taus[i + 1] - taus[i]);
    return vals[i] + w * (vals[i + 1] - vals[i]);
}
}  // namespace

DecayEnvelope decay_envelope_from_ladder(
    const ScalarFunction& psi_gs,
    const std::function<std::optional<double>(double, double)>& tau_of,
    std::vector<double> delta_grid, int n_max) {
    if (psi_gs.declared_class() != FnClass::Kinf)
        throw std::invalid_argument("decay_envelope_from_ladder: psi_gs must be declared Kinf");
    if (n_max < 1) throw std::invalid_argument("decay_envelope_from_ladder: n_max must be >= 1");
    if (delta_grid.empty())
        throw std::invalid_argument("decay_envelope_from_ladder: empty delta grid");
    delta_grid = sorted_unique(std::move(delta_grid));
    if (delta_grid.front() < 0.0)
        throw std::invalid_argument("decay_envelope_from_ladder: deltas must be >= 0");

    DecayEnvelope env;
    json truncations = json::array();
    for (double delta : delta_grid) {
        LadderRung rung;
        rung.delta = delta;
        rung.psi_value = delta > 0.0 ? psi_gs(delta) : 0.0;
        rung.tau.push_back(0.0);
        for (int n = 0; n <= n_max; ++n) rung.eps.push_back(rung.psi_value / std::ldexp(1.0, n));
        if (rung.psi_value > 0.0) {
            for (int n = 1; n <= n_max; ++n) {
                auto tau = tau_of(rung.eps[static_cast<size_t>(n)], delta);
                if (!tau) {
                    rung.truncated_at = n;
                    rung.residual = rung.eps[static_cast<size_t>(n)];
                    truncations.push_back(
                        {{"delta", delta}, {"n", n}, {"residual", rung.residual}});
                    break;
                }
                rung.tau.push_back(std::max(*tau, rung.tau.back() + 1e-6));
            }
        }
        env.rungs.push_back(std::move(rung));
    }

    auto beta_tilde = [&env](double r, double t) {
        double best = 0.0;
        for (const auto& rung : env.rungs) {
            if (rung.delta > r) break;
            best = std::max(best, omega_rung_value(rung, t));
        }
        return best;
    };
    auto psi_target = [&beta_tilde](double r, double t) {
        return beta_tilde(r, t) + r * std::exp(-t);
    };

    double delta_max = delta_grid.back() > 0.0 ? delta_grid.back() : 1.0;
    double delta_min_pos = delta_max / 16.0;
    for (double d : delta_grid)
        if (d > 0.0) {
            delta_min_pos = d;
            break;
        }
    std::vector<double> r_points = Mesh::dyadic(delta_min_pos / 2.0, 4.0 * delta_max).points;
    for (double d : delta_grid)
        if (d > 0.0) r_points.push_back(d);
    Mesh r_mesh = Mesh::from_points(sorted_unique(std::move(r_points)));

    std::vector<double> t_points{0.0};
    double t_max = 1.0;
    for (const auto& rung : env.rungs)
        for (double tau : rung.tau) {
            t_points.push_back(tau);
            t_max = std::max(t_max, tau);
        }
    t_points.push_back(1.25 * t_max);
    t_points.push_back(1.5 * t_max);
    t_points.push_back(2.0 * t_max);
    Mesh t_mesh = Mesh::from_points(sorted_unique(std::move(t_points)));

    env.beta = kl_majorant(psi_target, default_majorant_weight(), r_mesh, t_mesh);
    env.details = {{"delta_grid", delta_grid}, {"n_max", n_max}, {"truncations", truncations}};
    return env;
}

SontagFactorization sontag_factorize(const KLFunction& beta, const SontagFamilies& families,
                                     std::span<const double> r_grid,
                                     std::span<const double> t_grid) {
    if (r_grid.empty() || t_grid.empty())
        throw std::invalid_argument("sontag_factorize: empty verification grid");
    for (double a : families.scales)
        if (!(a > 0.0)) throw std::invalid_argument("sontag_factorize: scales must be positive");
    for (double p : families.exponents)
        if (!(p > 0.0)) throw std::invalid_argument("sontag_factorize: exponents must be positive");

    Evidence kl_ev = verify_kl(beta, r_grid, t_grid, 1e-9);
    if (kl_ev.refuted())
        throw std::invalid_argument("sontag_factorize: beta fails KL invariants on the grid: " +
                                    kl_ev.witness.dump());

    struct Node {
        double r, t, lhs, decay;
    };
    std::vector<Node> nodes;
    for (double r : r_grid)
        for (double t : t_grid) nodes.push_back({r, t, beta(r, t), std::exp(-t)});

    struct Candidate {
        double a1, p1, a2, p2, min_margin, max_excess;
    };
    std::optional<Candidate> best;
    auto lex_less = [](const Candidate& x, const Candidate& y) {
        if (x.a1 != y.a1) return x.a1 < y.a1;
        if (x.p1 != y.p1) return x.p1 < y.p1;
        if (x.a2 != y.a2) return x.a2 < y.a2;
        return x.p2 < y.p2;
    };

    for (double a1 : families.scales)
        for (double p1 : families.exponents)
            for (double a2 : families.scales)
                for (double p2 : families.exponents) {
                    double min_margin = std::numeric_limits<double>::infinity();
                    double max_excess = -min_margin;
                    bool feasible = true;
                    for (const Node& n : nodes) {
                        double u = pow_eval(a1, p1, n.r) * n.decay;
                        double diff = pow_eval(a2, p2, u) - n.lhs;
                        if (diff < 0.0) {
                            feasible = false;
                            break;
                        }
                        min_margin = std::min(min_margin, diff);
                        max_excess = std::max(max_excess, diff);
                    }
                    if (!feasible) continue;
                    Candidate c{a1, p1, a2, p2, min_margin, max_excess};
                    if (!best || c.max_excess < best->max_excess ||
                        (c.max_excess == best->max_excess && lex_less(c, *best)))
                        best = c;
                }

    SontagFactorization out;
    if (best) {
        auto as_fn = [](double a, double p) {
            return (a == 1.0 && p == 1.0) ? ScalarFunction::identity()
                                          : ScalarFunction::power(a, p, FnClass::Kinf);
        };
        out.status = Status::Supported;
        out.alpha1 = as_fn(best->a1, best->p1);
        out.alpha2 = as_fn(best->a2, best->p2);
        out.margin = best->min_margin;
        out.details = {{"family", "power"},
                       {"params", {best->a1, best->p1, best->a2, best->p2}},
                       {"max_excess", best->max_excess}};
        return out;
    }

    if (families.tabulated_repair) {
        // alpha1 = id; alpha2 = monotone upper envelope of beta over s = r*exp(-t)
        std::vector<std::pair<double, double>> sv;
        for (const Node& n : nodes) sv.push_back({n.r * n.decay, n.lhs});
        std::sort(sv.begin(), sv.end());
        std::vector<double> xs, ys;
        double running = 0.0;
        for (const auto& [s, v] : sv) {
            running = std::max(running, v);
            if (!xs.empty() && s == xs.back())
                ys.back() = running;
            else {
                xs.push_back(s);
                ys.push_back(running);
            }
        }
        if (xs.front() > 0.0) {
            xs.insert(xs.begin(), 0.0);
            ys.insert(ys.begin(), 0.0);
        }
        double extrap = 1.0;
        if (xs.size() >= 2)
            extrap = std::max(1.0, (ys.back() - ys[ys.size() - 2]) /
                                       (xs.back() - xs[xs.size() - 2]));
        ScalarFunction alpha2 =
            ScalarFunction::tabulated(std::move(xs), std::move(ys), FnClass::Kinf, extrap);
        double min_margin = std::numeric_limits<double>::infinity();
        for (const Node& n : nodes)
            min_margin = std::min(min_margin, alpha2(n.r * n.decay) - n.lhs);
        if (min_margin >= 0.0) {
            out.status = Status::Supported;
            out.alpha1 = ScalarFunction::identity();
            out.alpha2 = alpha2;
            out.margin = min_margin;
            out.details = {{"family", "tabulated_repair"}};
            return out;
        }
    }

    out.status = Status::Refuted;
    out.details = {{"reason", "infeasible_on_families"},
                   {"scales", families.scales},
                   {"exponents", families.exponents}};
    return out;
}

}  // namespace lyocert::comparison
