#include "lyocert/quadrature.hpp"

#include <vector>

namespace lyocert::metrics {

namespace {

struct SimpsonCtx {
    const std::function<double(double)>& f;
    long evals = 0;
    long max_evals = 4000000;
};

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double recurse(SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb, double whole,
               double tol, int depth, double& err_out) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = ctx.f(lm), frm = ctx.f(rm);
    ctx.evals += 2;
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (depth >= 48 || ctx.evals > ctx.max_evals || std::abs(delta) <= 15.0 * tol) {
        err_out += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return recurse(ctx, a, m, fa, flm, fm, left, tol / 2.0, depth + 1, err_out) +
           recurse(ctx, m, b, fm, frm, fb, right, tol / 2.0, depth + 1, err_out);
}

}  // namespace

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double tol) {
    QuadResult out;
    if (!(b > a)) return out;
    SimpsonCtx ctx{f};
    // seed with a modest uniform split so narrow features are not missed
    const int seed_cells = 16;
    double err = 0.0, total = 0.0;
    double prev_x = a, prev_f = f(a);
    for (int i = 1; i <= seed_cells; ++i) {
        double x = a + (b - a) * i / seed_cells;
        double fx = f(x);
        double m = 0.5 * (prev_x + x);
        double fm = f(m);
        ctx.evals += 2;
        double whole = simpson(prev_f, fm, fx, x - prev_x);
        total += recurse(ctx, prev_x, x, prev_f, fm, fx, whole, tol / seed_cells, 0, err);
        prev_x = x;
        prev_f = fx;
    }
    out.value = total;
    out.error_estimate = err;
    return out;
}

double exponential_tail_bound(const std::function<double(double)>& g, double a, double b) {
    const int n = 33;
    double window_lo = std::max(a, b / 10.0);
    if (!(window_lo < b)) window_lo = a + 0.9 * (b - a);
    std::vector<double> ts, vs;
    for (int i = 0; i < n; ++i) ts.push_back(window_lo + (b - window_lo) * i / (n - 1));
    for (double t : ts) vs.push_back(g(t));

    bool nonincreasing = true;
    for (int i = 0; i + 1 < n; ++i)
        nonincreasing = nonincreasing && vs[i + 1] <= vs[i] * (1.0 + 1e-9) + 1e-300;
    if (std::abs(vs.back()) < 1e-14 && nonincreasing) return 0.0;

    // log-linear regression over the strictly positive samples
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (vs[i] <= 0.0) continue;
        double y = std::log(vs[i]);
        sx += ts[i];
        sy += y;
        sxx += ts[i] * ts[i];
        sxy += ts[i] * y;
        ++m;
    }
    if (m < 4) return std::abs(vs.back()) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    double denom = m * sxx - sx * sx;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    double slope = (m * sxy - sx * sy) / denom;
    double lambda = -slope;
    if (!(lambda > 1e-6)) return std::numeric_limits<double>::infinity();
    return std::max(vs.back(), 0.0) / lambda;
}

}  // namespace lyocert::metrics
