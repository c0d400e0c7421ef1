#include "lyocert/scalar_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lyocert/expression.hpp"

namespace lyocert::comparison {

namespace {
constexpr double kMinSlope = 1e-12;

double pow_safe(double a, double p, double r) {
    double rp = (p == 1.0) ? r : std::pow(r, p);
    return (a == 1.0) ? rp : a * rp;
}
}  // namespace

std::string to_string(FnClass c) {
    switch (c) {
        case FnClass::K: return "K";
        case FnClass::Kinf: return "Kinf";
        case FnClass::L: return "L";
        case FnClass::PositiveDefinite: return "PositiveDefinite";
        case FnClass::None: return "None";
    }
    return "None";
}

FnClass fn_class_from_string(const std::string& s) {
    if (s == "K") return FnClass::K;
    if (s == "Kinf") return FnClass::Kinf;
    if (s == "L") return FnClass::L;
    if (s == "PositiveDefinite") return FnClass::PositiveDefinite;
    if (s == "None") return FnClass::None;
    throw std::invalid_argument("unknown function class: " + s);
}

SupremumRangeError::SupremumRangeError(double target, double supremum_estimate)
    : std::range_error("target " + std::to_string(target) +
                       " is above the observed supremum " + std::to_string(supremum_estimate) +
                       " of a bounded class-K function"),
      target_(target),
      sup_(supremum_estimate) {}

struct ScalarFunction::Impl {
    enum class Kind { Primitive, Tabulated, Min, Callable };
    Kind kind = Kind::Primitive;
    FnClass declared = FnClass::None;
    std::string label;

    // Primitive
    std::string id;
    std::vector<double> params;

    // Tabulated
    std::vector<double> xs, ys;
    double extrap_slope = 0.0;

    // Min
    std::shared_ptr<const Impl> lhs, rhs;

    // Callable / Expr
    std::function<double(double)> fn;
    std::string expr_source;

    double eval(double r) const {
        switch (kind) {
            case Kind::Primitive: return eval_primitive(r);
            case Kind::Tabulated: return eval_tabulated(r);
            case Kind::Min: return std::min(lhs->eval(r), rhs->eval(r));
            case Kind::Callable: return fn(r);
        }
        return 0.0;
    }

    double eval_primitive(double r) const {
        if (id == "identity") return r;
        if (id == "power") return pow_safe(params[0], params[1], r);
        if (id == "affine") return params[0] * r + params[1];
        if (id == "const") return params[0];
        if (id == "bump") return r / (1.0 + r * r);
        if (id == "bounded_ratio") return r / (1.0 + r);
        if (id == "exp_decay") return params[0] * std::exp(-params[1] * r);
        throw std::invalid_argument("unknown closed-form id: " + id);
    }

    double eval_tabulated(double r) const {
        if (r <= xs.front()) {
            if (r == xs.front()) return ys.front();
            // below the first node: slope toward the origin for positive
            // definite classes, clamp otherwise
            if (declared == FnClass::K || declared == FnClass::Kinf ||
                declared == FnClass::PositiveDefinite) {
                if (xs.front() <= 0.0) return ys.front();
                return ys.front() * (r / xs.front());
            }
            return ys.front();
        }
        if (r >= xs.back()) return ys.back() + extrap_slope * (r - xs.back());
        auto it = std::upper_bound(xs.begin(), xs.end(), r);
        size_t i = static_cast<size_t>(it - xs.begin()) - 1;
        double w = (r - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
    }
};

ScalarFunction ScalarFunction::closed_form(const std::string& id, std::vector<double> params,
                                           FnClass declared) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Primitive;
    impl->declared = declared;
    impl->id = id;
    impl->params = std::move(params);
    impl->label = id;
    ScalarFunction f(impl);
    f(0.0);  // reject unknown ids early
    return f;
}

ScalarFunction ScalarFunction::identity() { return closed_form("identity", {}, FnClass::Kinf); }

ScalarFunction ScalarFunction::power(double a, double p, FnClass declared) {
    if (!(a > 0.0) || !(p > 0.0)) throw std::invalid_argument("power law needs a > 0, p > 0");
    return closed_form("power", {a, p}, declared);
}

ScalarFunction ScalarFunction::affine(double a, double b, FnClass declared) {
    return closed_form("affine", {a, b}, declared);
}

ScalarFunction ScalarFunction::constant(double c) {
    return closed_form("const", {c}, FnClass::None);
}

ScalarFunction ScalarFunction::bump() {
    return closed_form("bump", {}, FnClass::PositiveDefinite);
}

ScalarFunction ScalarFunction::bounded_ratio() {
    return closed_form("bounded_ratio", {}, FnClass::K);
}

ScalarFunction ScalarFunction::exp_decay(double a, double b) {
    return closed_form("exp_decay", {a, b}, FnClass::L);
}

ScalarFunction ScalarFunction::tabulated(std::vector<double> abscissae,
                                         std::vector<double> ordinates, FnClass declared,
                                         double extrapolation_slope) {
    if (abscissae.empty() || abscissae.size() != ordinates.size())
        throw std::invalid_argument("tabulated function needs matching nonempty samples");
    for (size_t i = 0; i < abscissae.size(); ++i) {
        if (abscissae[i] < 0.0) throw std::invalid_argument("tabulated abscissae must be >= 0");
        if (i > 0 && !(abscissae[i] > abscissae[i - 1]))
            throw std::invalid_argument("tabulated abscissae must be strictly increasing");
    }
    if (declared == FnClass::K || declared == FnClass::Kinf) {
        for (size_t i = 1; i < ordinates.size(); ++i) {
            double floor = ordinates[i - 1] + kMinSlope * (abscissae[i] - abscissae[i - 1]);
            if (ordinates[i] < floor) ordinates[i] = floor;
        }
    }
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Tabulated;
    impl->declared = declared;
    impl->xs = std::move(abscissae);
    impl->ys = std::move(ordinates);
    impl->extrap_slope = extrapolation_slope;
    impl->label = "tabulated[" + std::to_string(impl->xs.size()) + "]";
    return ScalarFunction(impl);
}

ScalarFunction ScalarFunction::from_callable(std::string label, std::function<double(double)> fn,
                                             FnClass declared) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Callable;
    impl->declared = declared;
    impl->fn = std::move(fn);
    impl->label = std::move(label);
    return ScalarFunction(impl);
}

ScalarFunction ScalarFunction::from_expression(const std::string& source, FnClass declared) {
    auto parsed = expr::parse_scalar(source);
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::Callable;
    impl->declared = declared;
    impl->fn = [parsed](double r) { return parsed.eval_scalar(r); };
    impl->label = source;
    impl->expr_source = source;
    return ScalarFunction(impl);
}

double ScalarFunction::operator()(double r) const {
    if (!impl_) throw std::logic_error("empty ScalarFunction");
    return impl_->eval(r);
}

FnClass ScalarFunction::declared_class() const {
    return impl_ ? impl_->declared : FnClass::None;
}

const std::string& ScalarFunction::label() const {
    static const std::string empty;
    return impl_ ? impl_->label : empty;
}

bool ScalarFunction::is_tabulated() const {
    return impl_ && impl_->kind == Impl::Kind::Tabulated;
}

bool ScalarFunction::is_closed_form() const {
    return impl_ && impl_->kind == Impl::Kind::Primitive;
}

std::string ScalarFunction::closed_form_id() const {
    return is_closed_form() ? impl_->id : std::string{};
}

std::vector<double> ScalarFunction::closed_form_params() const {
    return is_closed_form() ? impl_->params : std::vector<double>{};
}

namespace {
json impl_to_json(const ScalarFunction::Impl& impl);
}

json ScalarFunction::to_json() const {
    if (!impl_) return json();
    return impl_to_json(*impl_);
}

namespace {
json impl_to_json(const ScalarFunction::Impl& impl) {
    using Impl = ScalarFunction::Impl;
    json j;
    j["class"] = to_string(impl.declared);
    switch (impl.kind) {
        case Impl::Kind::Primitive:
            j["kind"] = "closed_form";
            j["id"] = impl.id;
            j["params"] = impl.params;
            break;
        case Impl::Kind::Tabulated:
            j["kind"] = "tabulated";
            j["abscissae"] = impl.xs;
            j["ordinates"] = impl.ys;
            j["extrapolation_slope"] = impl.extrap_slope;
            break;
        case Impl::Kind::Min:
            j["kind"] = "min";
            j["lhs"] = impl_to_json(*impl.lhs);
            j["rhs"] = impl_to_json(*impl.rhs);
            break;
        case Impl::Kind::Callable:
            if (!impl.expr_source.empty()) {
                j["kind"] = "expression";
                j["source"] = impl.expr_source;
            } else {
                j["kind"] = "callable";
                j["label"] = impl.label;
            }
            break;
    }
    return j;
}
}  // namespace

ScalarFunction ScalarFunction::from_json(const json& j) {
    FnClass cls = fn_class_from_string(j.at("class").get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "closed_form")
        return closed_form(j.at("id").get<std::string>(),
                           j.at("params").get<std::vector<double>>(), cls);
    if (kind == "tabulated")
        return tabulated(j.at("abscissae").get<std::vector<double>>(),
                         j.at("ordinates").get<std::vector<double>>(), cls,
                         j.at("extrapolation_slope").get<double>());
    if (kind == "min")
        return pointwise_min(from_json(j.at("lhs")), from_json(j.at("rhs")));
    if (kind == "expression") return from_expression(j.at("source").get<std::string>(), cls);
    throw std::invalid_argument("cannot deserialize scalar function of kind " + kind);
}

std::string ScalarFunction::to_csv() const {
    if (!is_tabulated()) throw std::logic_error("to_csv: only tabulated functions serialize as CSV");
    std::ostringstream out;
    out.precision(17);
    for (size_t i = 0; i < impl_->xs.size(); ++i)
        out << impl_->xs[i] << "," << impl_->ys[i] << "\n";
    return out.str();
}

ScalarFunction ScalarFunction::tabulated_from_csv(const std::string& csv, FnClass declared,
                                                  double extrapolation_slope) {
    std::vector<double> xs, ys;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("CSV line without comma: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        ys.push_back(std::stod(line.substr(comma + 1)));
    }
    return tabulated(std::move(xs), std::move(ys), declared, extrapolation_slope);
}

ScalarFunction pointwise_min(const ScalarFunction& f, const ScalarFunction& g) {
    if (!f.valid() || !g.valid()) throw std::invalid_argument("pointwise_min: empty operand");
    auto impl = std::make_shared<ScalarFunction::Impl>();
    impl->kind = ScalarFunction::Impl::Kind::Min;
    impl->declared = FnClass::K;
    impl->lhs = f.impl_;
    impl->rhs = g.impl_;
    impl->label = "min(" + f.label() + "," + g.label() + ")";
    return ScalarFunction(impl);
}

ScalarFunction saturate(const ScalarFunction& f, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("saturate: bound M must be positive");
    return pointwise_min(f, ScalarFunction::constant(M));
}

namespace {

// Doubling probe beyond the grid: returns {stalled, last_argument, last_value}.
// "Stalled" means three consecutive doublings changed f by less than a
// relative tolerance, i.e. the function looks bounded on this extension.
struct ProbeResult {
    bool stalled = false;
    bool decreased = false;
    double arg = 0, value = 0, prev_arg = 0, prev_value = 0;
    bool vanished = false;  // for class-L probes
};

ProbeResult doubling_probe(const ScalarFunction& f, double start, double tol, bool want_vanish) {
    ProbeResult res;
    double r = std::max(start, 1.0);
    double v = f(r);
    int stall_count = 0;
    for (int k = 0; k < 80; ++k) {
        double r2 = r * 2.0;
        double v2 = f(r2);
        if (want_vanish) {
            if (std::abs(v2) <= std::max(tol, 1e-12)) {
                res.vanished = true;
                res.arg = r2;
                res.value = v2;
                return res;
            }
        } else {
            if (v2 < v - tol) {
                res.decreased = true;
                res.prev_arg = r;
                res.prev_value = v;
                res.arg = r2;
                res.value = v2;
                return res;
            }
            if (v2 - v < std::max(tol, 1e-9) * std::max(1.0, std::abs(v))) {
                if (++stall_count >= 3) {
                    res.stalled = true;
                    res.arg = r2;
                    res.value = v2;
                    return res;
                }
            } else {
                stall_count = 0;
            }
        }
        r = r2;
        v = v2;
    }
    res.arg = r;
    res.value = v;
    return res;
}

}  // namespace

Evidence verify_class(const ScalarFunction& f, std::span<const double> grid, double tol) {
    if (grid.empty()) throw std::invalid_argument("verify_class: empty grid");
    if (!(tol >= 0.0)) throw std::invalid_argument("verify_class: tol must be nonnegative");
    std::vector<double> g(grid.begin(), grid.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());

    const FnClass cls = f.declared_class();
    const bool k_like = cls == FnClass::K || cls == FnClass::Kinf || cls == FnClass::PositiveDefinite;
    if (k_like) {
        if (g.front() < 0.0)
            throw std::invalid_argument("verify_class: negative abscissa for a K-class grid");
        if (g.front() != 0.0)
            throw std::invalid_argument("verify_class: K-class grid must contain 0");
    }

    json params = {{"declared_class", to_string(cls)}, {"tol", tol}, {"grid_size", g.size()}};
    auto refute = [&](const std::string& reason, json witness) {
        witness["reason"] = reason;
        return Evidence::make_refuted("class:" + to_string(cls), params, std::move(witness));
    };

    std::vector<double> vals(g.size());
    for (size_t i = 0; i < g.size(); ++i) vals[i] = f(g[i]);

    if (cls == FnClass::None)
        return Evidence::make_supported("class:None", params, 0.0);

    if (k_like && std::abs(vals.front()) > tol)
        return refute("nonzero_at_zero", {{"r", g.front()}, {"value", vals.front()}});

    if (cls == FnClass::K || cls == FnClass::Kinf) {
        for (size_t i = 0; i + 1 < g.size(); ++i) {
            double d = vals[i + 1] - vals[i];
            if (d <= -tol)
                return refute("not_strictly_increasing",
                              {{"pair", {g[i], g[i + 1]}}, {"values", {vals[i], vals[i + 1]}}});
        }
    }
    if (cls == FnClass::PositiveDefinite) {
        for (size_t i = 0; i < g.size(); ++i)
            if (g[i] > 0.0 && !(vals[i] > 0.0))
                return refute("not_positive", {{"r", g[i]}, {"value", vals[i]}});
    }
    if (cls == FnClass::Kinf) {
        ProbeResult probe = doubling_probe(f, g.back(), tol, /*want_vanish=*/false);
        if (probe.decreased)
            return refute("not_strictly_increasing",
                          {{"pair", {probe.prev_arg, probe.arg}},
                           {"values", {probe.prev_value, probe.value}}});
        if (probe.stalled)
            return refute("bounded", {{"observed_supremum", probe.value}, {"probe_r", probe.arg}});
    }
    if (cls == FnClass::L) {
        for (size_t i = 0; i < g.size(); ++i)
            if (vals[i] < -tol) return refute("negative_value", {{"r", g[i]}, {"value", vals[i]}});
        for (size_t i = 0; i + 1 < g.size(); ++i) {
            double d = vals[i + 1] - vals[i];
            if (d >= tol)
                return refute("not_nonincreasing",
                              {{"pair", {g[i], g[i + 1]}}, {"values", {vals[i], vals[i + 1]}}});
        }
        ProbeResult probe = doubling_probe(f, g.back(), tol, /*want_vanish=*/true);
        if (!probe.vanished)
            return refute("does_not_vanish", {{"probe_r", probe.arg}, {"value", probe.value}});
    }

    double worst = std::numeric_limits<double>::infinity();
    if (cls == FnClass::K || cls == FnClass::Kinf)
        for (size_t i = 0; i + 1 < g.size(); ++i)
            worst = std::min(worst, vals[i + 1] - vals[i]);
    else
        worst = 0.0;
    return Evidence::make_supported("class:" + to_string(cls), params, worst);
}

double invert_monotone(const ScalarFunction& f, double y, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("invert_monotone: tol must be positive");
    if (y < 0.0) throw std::invalid_argument("invert_monotone: target must be nonnegative");
    if (std::abs(f(0.0) - y) <= tol) return 0.0;

    double lo = 0.0, hi = 1.0;
    double fhi = f(hi);
    int stall_count = 0;
    double prev = fhi;
    while (fhi < y) {
        lo = hi;
        hi *= 2.0;
        fhi = f(hi);
        if (fhi - prev < 1e-14 * std::max(1.0, std::abs(fhi))) {
            if (++stall_count >= 4) throw SupremumRangeError(y, fhi);
        } else {
            stall_count = 0;
        }
        prev = fhi;
        if (hi > 1e150) throw SupremumRangeError(y, fhi);
    }

    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (std::abs(fm - y) <= tol) return mid;
        if (fm < y)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-300) break;
    }
    double mid = 0.5 * (lo + hi);
    if (std::abs(f(mid) - y) <= tol) return mid;
    throw std::runtime_error("invert_monotone: bisection did not reach the requested tolerance");
}

}  // namespace lyocert::comparison
