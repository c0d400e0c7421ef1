#ifndef LYOCERT_SCALAR_FUNCTION_HPP
#define LYOCERT_SCALAR_FUNCTION_HPP

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyocert/evidence.hpp"

namespace lyocert::comparison {

// Declared comparison class of a scalar function R+ -> R+.
//   K        : continuous, strictly increasing, f(0)=0
//   Kinf     : unbounded K
//   L        : nonincreasing, decreasing to 0
//   PositiveDefinite : f(0)=0, f(r)>0 for r>0 (no monotonicity)
enum class FnClass { K, Kinf, L, PositiveDefinite, None };

std::string to_string(FnClass c);
FnClass fn_class_from_string(const std::string& s);

// Thrown by invert_monotone when the target lies above the supremum of a
// bounded class-K function. Carries the observed supremum estimate.
class SupremumRangeError : public std::range_error {
public:
    SupremumRangeError(double target, double supremum_estimate);
    double target() const { return target_; }
    double supremum_estimate() const { return sup_; }

private:
    double target_, sup_;
};

// Immutable scalar comparison function. Either a closed form from a small
// catalogue (id + parameters), a tabulated function with monotone linear
// interpolation and a declared extrapolation slope, a pointwise min of two
// functions, or an opaque callable (not serializable).
class ScalarFunction {
public:
    ScalarFunction() = default;

    static ScalarFunction closed_form(const std::string& id, std::vector<double> params,
                                      FnClass declared);
    static ScalarFunction identity();                      // r, Kinf
    static ScalarFunction power(double a, double p,
                                FnClass declared = FnClass::Kinf);  // a*r^p
    static ScalarFunction affine(double a, double b, FnClass declared);  // a*r + b
    static ScalarFunction constant(double c);
    static ScalarFunction bump();            // r/(1+r^2), PositiveDefinite
    static ScalarFunction bounded_ratio();   // r/(1+r), class K with sup 1
    static ScalarFunction exp_decay(double a, double b);  // a*exp(-b*r), class L

    // Abscissae must be >= 0 and strictly increasing. For declared K/Kinf the
    // ordinates are monotone-repaired with a minimum slope of 1e-12.
    static ScalarFunction tabulated(std::vector<double> abscissae, std::vector<double> ordinates,
                                    FnClass declared, double extrapolation_slope);

    static ScalarFunction from_callable(std::string label, std::function<double(double)> fn,
                                        FnClass declared);

    // single-variable expression over r, e.g. "min(r, 1)" (serializable)
    static ScalarFunction from_expression(const std::string& source, FnClass declared);

    bool valid() const { return impl_ != nullptr; }
    double operator()(double r) const;
    FnClass declared_class() const;
    const std::string& label() const;

    bool is_tabulated() const;
    bool is_closed_form() const;
    // closed-form introspection ("identity", "power", ...); empty otherwise
    std::string closed_form_id() const;
    std::vector<double> closed_form_params() const;

    json to_json() const;
    static ScalarFunction from_json(const json& j);
    std::string to_csv() const;  // tabulated only: "abscissa,ordinate" lines
    static ScalarFunction tabulated_from_csv(const std::string& csv, FnClass declared,
                                             double extrapolation_slope);

    struct Impl;

private:
    explicit ScalarFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;

    friend ScalarFunction pointwise_min(const ScalarFunction&, const ScalarFunction&);
};

// Desk-scale check of the declared class axioms on a grid. The grid is
// sorted internally, so the verdict is invariant under permutations.
// Unbounded growth / vanishing tails are probed on a doubling extension of
// the grid. Refuted evidence names the first violating pair.
Evidence verify_class(const ScalarFunction& f, std::span<const double> grid, double tol);

// Solve f(r) = y for class-K f by bisection on an automatically expanded
// bracket; returns r with |f(r) - y| <= tol. Throws SupremumRangeError when
// y is above the supremum of a bounded f.
double invert_monotone(const ScalarFunction& f, double y, double tol);

ScalarFunction pointwise_min(const ScalarFunction& f, const ScalarFunction& g);

// min(f, M): bounded class-K weight from a class-K f. M must be positive.
ScalarFunction saturate(const ScalarFunction& f, double M);

}  // namespace lyocert::comparison

#endif
