#ifndef LYOCERT_KL_FUNCTION_HPP
#define LYOCERT_KL_FUNCTION_HPP

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyocert/evidence.hpp"
#include "lyocert/scalar_function.hpp"

namespace lyocert::comparison {

// Finite truncation of a bi-infinite partition of (0, +inf). The points are
// strictly increasing; truncation bounds record the range the mesh was asked
// to cover (the limits toward 0 and +inf are not realizable numerically).
struct Mesh {
    std::vector<double> points;
    double target_oscillation = 0.0;
    double truncation_low = 0.0;
    double truncation_high = 0.0;

    static Mesh from_points(std::vector<double> pts, double eps = 0.0, double lo = 0.0,
                            double hi = 0.0);
    // Dyadic seed points 2^k with 2^kmin <= r_low and 2^kmax >= r_high.
    static Mesh dyadic(double r_low, double r_high);
    // Geometric time ladder {0, base, 2*base, 4*base, ...} up to horizon.
    static Mesh time_ladder(double horizon, double base = 0.25);

    size_t size() const { return points.size(); }
    double front() const { return points.front(); }
    double back() const { return points.back(); }
};

// Refines the dyadic cover of [r_low, r_high] by cell bisection until the
// sampled oscillation of z on every cell is < eps. Oscillation is estimated
// on samples_per_interval equispaced interior points. Throws when a cell
// cannot be resolved within the refinement budget.
Mesh build_partition(const std::function<double(double)>& z, double eps, double r_low,
                     double r_high, int samples_per_interval = 17);

class MeshRefinementError : public std::runtime_error {
public:
    MeshRefinementError(double cell_lo, double cell_hi, double oscillation);
    double cell_lo, cell_hi, oscillation;
};

// Two-argument comparison function: class K in r for fixed t, nonincreasing
// and decreasing to 0 in t for fixed r > 0. Either closed form, an opaque
// callable, or a mesh interpolant (triangular interpolation on rectangle
// cells, zero-extension at r = 0).
class KLFunction {
public:
    KLFunction() = default;

    // a * r^p * exp(-c*t)
    static KLFunction separable_exp(double a, double p, double c);
    static KLFunction from_callable(std::string label, std::function<double(double, double)> fn);
    // nodes are row-major over r: nodes[k * t_mesh.size() + m]
    static KLFunction mesh_interpolant(Mesh r_mesh, Mesh t_mesh, std::vector<double> nodes);

    bool valid() const { return impl_ != nullptr; }
    double operator()(double r, double t) const;
    const std::string& label() const;
    bool is_mesh() const;
    const Mesh& r_mesh() const;  // mesh interpolants only
    const Mesh& t_mesh() const;
    const std::vector<double>& nodes() const;

    json to_json() const;  // mesh: {r_mesh, t_mesh, nodes}; closed form: {id, params}
    static KLFunction from_json(const json& j);

    struct Impl;

private:
    explicit KLFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Desk-scale KL invariants on a product grid: r -> beta(r, t) of class K for
// each t (zero at zero, strictly increasing), t -> beta(r, t) nonincreasing
// with a vanishing tail for each r > 0.
Evidence verify_kl(const KLFunction& beta, std::span<const double> r_grid,
                   std::span<const double> t_grid, double tol);

// Upper KL bound for a two-argument function psi that is nondecreasing in r,
// nonincreasing in t, with psi(0, t) = 0. Node values are
//   beta(R_k, tau_m)   = psi(R_{k+1}, tau_{m-1}) + omega(R_{k+1}, tau_{m-1})
//   beta(R_k, 0)       = 2 psi(R_{k+1}, 0)       + omega(R_{k+1}, 0)
// with triangular interpolation per cell and beta(0, t) = 0. The result
// majorizes psi on the truncated mesh hull; this is asserted on an interior
// verification grid after construction. Hypothesis violations on the mesh
// throw std::invalid_argument with a witness in the message.
KLFunction kl_majorant(const std::function<double(double, double)>& psi, const KLFunction& omega,
                       const Mesh& r_mesh, const Mesh& t_mesh);

// Default weight for kl_majorant: r * exp(-t) / (1 + r).
KLFunction default_majorant_weight();

// min over an (r, t) grid of beta - psi (>= 0 means beta majorizes psi there)
double majorization_margin(const KLFunction& beta, const std::function<double(double, double)>& psi,
                           std::span<const double> r_grid, std::span<const double> t_grid);

// One rung of the eps-ladder decay data recorded per initial bound delta:
// eps_n = psi(delta) / 2^n and the (monotone-repaired) times tau_n at which
// the tail drops below eps_n. A missing tau truncates the rung.
struct LadderRung {
    double delta = 0.0;
    double psi_value = 0.0;
    std::vector<double> eps;  // eps[0..n]
    std::vector<double> tau;  // tau[0] = 0
    int truncated_at = -1;    // first n with no tau available, -1 if complete
    double residual = 0.0;    // eps level left unreached when truncated
};

struct DecayEnvelope {
    KLFunction beta;
    std::vector<LadderRung> rungs;
    json details;
};

// Builds a KL decay envelope from sampled decay data: for each delta in
// delta_grid the ladder eps_n = psi_gs(delta)/2^n with times tau_of(eps_n,
// delta), forms omega(delta, tau_n) = eps_{n-1} with omega(delta, 0) =
// 2 psi_gs(delta), takes the running sup over delta, adds the regularizing
// term r*exp(-t), and returns the KL majorant of the result.
DecayEnvelope decay_envelope_from_ladder(
    const ScalarFunction& psi_gs,
    const std::function<std::optional<double>(double eps, double delta)>& tau_of,
    std::vector<double> delta_grid, int n_max);

// Candidate parameter ranges for the factorization search: power laws
// a * r^p for both factors, plus an optional tabulated repair fallback.
struct SontagFamilies {
    std::vector<double> scales{1.0, 2.0, 4.0, 8.0};
    std::vector<double> exponents{0.5, 1.0, 2.0};
    bool tabulated_repair = true;
};

struct SontagFactorization {
    Status status = Status::Refuted;  // Supported, or Refuted = infeasible on the families
    ScalarFunction alpha1, alpha2;
    double margin = std::numeric_limits<double>::quiet_NaN();
    json details;
};

// Searches the declared families for alpha1, alpha2 (class Kinf) with
//   beta(r, t) <= alpha2(alpha1(r) * exp(-t))   at every grid node,
// minimizing the worst excess; ties break on the lexicographically smallest
// parameter vector (a1, p1, a2, p2). Such a factorization always exists for
// a KL function, but not necessarily inside the searched families, so an
// infeasible search reports Refuted rather than guessing.
SontagFactorization sontag_factorize(const KLFunction& beta, const SontagFamilies& families,
                                     std::span<const double> r_grid,
                                     std::span<const double> t_grid);

}  // namespace lyocert::comparison

#endif
