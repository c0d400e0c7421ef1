#include "lyocert/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace lyocert::systems {

json IntegratorSettings::to_json() const {
    return {{"rel_tol", rel_tol},   {"abs_tol", abs_tol},       {"initial_step", initial_step},
            {"max_step", max_step}, {"norm_guard", norm_guard}, {"max_steps", max_steps}};
}

IntegratorSettings IntegratorSettings::from_json(const json& j) {
    IntegratorSettings s;
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.abs_tol = j.value("abs_tol", s.abs_tol);
    s.initial_step = j.value("initial_step", s.initial_step);
    s.max_step = j.value("max_step", s.max_step);
    s.norm_guard = j.value("norm_guard", s.norm_guard);
    s.max_steps = j.value("max_steps", s.max_steps);
    return s;
}

FiniteEscapeError::FiniteEscapeError(double t_low_, double t_high_, double norm_)
    : std::runtime_error("finite escape: trajectory norm " + std::to_string(norm_) +
                         " crossed the overflow guard between t = " + std::to_string(t_low_) +
                         " and t = " + std::to_string(t_high_)),
      t_low(t_low_),
      t_high(t_high_),
      norm(norm_) {}

double euclidean_norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

std::vector<double> DenseTrajectory::eval(double t) const {
    if (steps.empty()) throw std::logic_error("empty trajectory");
    if (t <= steps.front().t) return steps.front().y;
    if (t >= steps.back().t) return steps.back().y;
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double v, const Step& s) { return v < s.t; });
    size_t i = static_cast<size_t>(it - steps.begin()) - 1;
    const Step& a = steps[i];
    const Step& b = steps[i + 1];
    double h = b.t - a.t;
    double s = (t - a.t) / h;
    // cubic Hermite basis
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    double h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s);
    double h11 = s * s * (s - 1);
    std::vector<double> y(a.y.size());
    for (size_t k = 0; k < y.size(); ++k)
        y[k] = h00 * a.y[k] + h10 * h * a.dy[k] + h01 * b.y[k] + h11 * h * b.dy[k];
    return y;
}

double DenseTrajectory::norm_at(double t) const { return euclidean_norm(eval(t)); }

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

DenseTrajectory integrate(const RhsFn& rhs, std::span<const double> y0, double t_end,
                          const DisturbanceSignal& d, const IntegratorSettings& st) {
    const size_t n = y0.size();
    DenseTrajectory out;
    std::vector<double> y(y0.begin(), y0.end());

    // segment boundaries: 0, breakpoints inside (0, t_end), t_end
    std::vector<double> bounds{0.0};
    for (double b : d.breakpoints())
        if (b > 0.0 && b < t_end) bounds.push_back(b);
    bounds.push_back(t_end);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    long steps_taken = 0;
    double err_accum = 0.0;

    if (euclidean_norm(y) > st.norm_guard) throw FiniteEscapeError(0.0, 0.0, euclidean_norm(y));

    for (size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
        double t = bounds[seg];
        const double t_stop = bounds[seg + 1];
        // the disturbance is constant on [t, t_stop); sample just inside
        std::span<const double> dv = d.value_at(t);

        rhs(t, y, dv, k1);
        if (seg == 0) out.steps.push_back({t, y, k1});

        double h = std::min({st.initial_step, st.max_step, t_stop - t});
        while (t < t_stop) {
            if (++steps_taken > st.max_steps)
                throw std::runtime_error("integrator exceeded the step budget");
            h = std::min(h, t_stop - t);

            auto stage = [&](std::span<double> ks, double tc, auto&&... terms) {
                for (size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    ((acc += terms.first * terms.second[i]), ...);
                    ytmp[i] = y[i] + h * acc;
                }
                rhs(t + tc * h, ytmp, dv, ks);
            };
            stage(k2, c2, std::pair{a21, k1.data()});
            stage(k3, c3, std::pair{a31, k1.data()}, std::pair{a32, k2.data()});
            stage(k4, c4, std::pair{a41, k1.data()}, std::pair{a42, k2.data()},
                  std::pair{a43, k3.data()});
            stage(k5, c5, std::pair{a51, k1.data()}, std::pair{a52, k2.data()},
                  std::pair{a53, k3.data()}, std::pair{a54, k4.data()});
            stage(k6, 1.0, std::pair{a61, k1.data()}, std::pair{a62, k2.data()},
                  std::pair{a63, k3.data()}, std::pair{a64, k4.data()},
                  std::pair{a65, k5.data()});
            for (size_t i = 0; i < n; ++i)
                ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                      b6 * k6[i]);
            rhs(t + h, ynew, dv, k7);

            double err = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                e7 * k7[i]);
                double scale = st.abs_tol + st.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                err += (e / scale) * (e / scale);
            }
            err = std::sqrt(err / static_cast<double>(n));

            if (err <= 1.0 || h <= 1e-14 * std::max(1.0, std::abs(t))) {
                double t_new = t + h;
                double nrm = euclidean_norm(ynew);
                if (!std::isfinite(nrm) || nrm > st.norm_guard)
                    throw FiniteEscapeError(t, t_new, nrm);
                y = ynew;
                t = t_new;
                out.steps.push_back({t, y, std::vector<double>(k7.begin(), k7.end())});
                k1 = k7;  // FSAL
                err_accum = std::max(err_accum, err * st.abs_tol);
            }
            double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
            h = std::min(h, st.max_step);
        }
    }
    out.error_estimate = err_accum;
    return out;
}

}  // namespace lyocert::systems
