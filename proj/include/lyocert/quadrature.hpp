#ifndef LYOCERT_QUADRATURE_HPP
#define LYOCERT_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <limits>

#include "lyocert/evidence.hpp"

namespace lyocert::metrics {

struct QuadraturePolicy {
    double horizon = 50.0;  // truncation T for improper integrals
    double tol = 1e-8;

    json to_json() const { return {{"horizon", horizon}, {"tol", tol}}; }
    static QuadraturePolicy from_json(const json& j) {
        QuadraturePolicy p;
        p.horizon = j.value("horizon", p.horizon);
        p.tol = j.value("tol", p.tol);
        return p;
    }
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double tol);

// Truncated improper integral with a tail remainder estimate. The reported
// total is value + tail_bound; an infinite tail_bound flags an integrand
// whose tail did not decay on the observed window.
struct TailIntegral {
    double value = 0.0;
    double horizon = 0.0;
    double tail_bound = 0.0;
    double quadrature_error = 0.0;

    double total() const { return value + tail_bound; }
    bool tail_finite() const { return std::isfinite(tail_bound); }

    json to_json() const {
        return {{"value", value},
                {"horizon", horizon},
                {"tail_bound", tail_bound},
                {"quadrature_error", quadrature_error}};
    }
};

// Fits an exponential envelope C e^{-lambda s} to the positive samples of g
// over the last decade of [a, b] and returns the implied remainder beyond b;
// 0 when g(b) is below 1e-14 and decreasing, +inf when the tail does not
// decay.
double exponential_tail_bound(const std::function<double(double)>& g, double a, double b);

}  // namespace lyocert::metrics

#endif
