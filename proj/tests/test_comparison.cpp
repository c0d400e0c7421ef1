#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lyocert/kl_function.hpp"
#include "lyocert/scalar_function.hpp"

using namespace lyocert;
using namespace lyocert::comparison;

TEST_CASE("verify_class: identity is Kinf") {
    auto f = ScalarFunction::identity();
    std::vector<double> grid{0.0, 0.5, 1.0, 10.0};
    auto ev = verify_class(f, grid, 1e-9);
    CHECK(ev.supported());
}

TEST_CASE("verify_class: bump declared K refutes at (1,2)") {
    // r/(1+r^2) decreases past r=1: f(2)=0.4 < f(1)=0.5
    auto f = ScalarFunction::closed_form("bump", {}, FnClass::K);
    std::vector<double> grid{0.0, 1.0, 2.0};
    auto ev = verify_class(f, grid, 1e-9);
    REQUIRE(ev.refuted());
    CHECK(ev.witness["reason"] == "not_strictly_increasing");
    CHECK(ev.witness["pair"][0].get<double>() == doctest::Approx(1.0));
    CHECK(ev.witness["pair"][1].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("verify_class: saturated identity declared Kinf refutes as bounded") {
    auto f = saturate(ScalarFunction::identity(), 1.0);
    auto bounded = ScalarFunction::from_callable("min(r,1)", [&f](double r) { return f(r); },
                                                 FnClass::Kinf);
    std::vector<double> grid{0.0, 1.0, 2.0, 100.0};
    auto ev = verify_class(bounded, grid, 1e-9);
    REQUIRE(ev.refuted());
    CHECK(ev.witness["reason"] == "bounded");
    CHECK(ev.witness["observed_supremum"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("verify_class: L class") {
    auto ok = ScalarFunction::exp_decay(1.0, 1.0);
    std::vector<double> grid{0.0, 1.0, 5.0, 10.0};
    CHECK(verify_class(ok, grid, 1e-9).supported());

    auto stuck = ScalarFunction::from_callable("0.5+e^-r", [](double r) {
        return 0.5 + std::exp(-r);
    }, FnClass::L);
    auto ev = verify_class(stuck, grid, 1e-9);
    REQUIRE(ev.refuted());
    CHECK(ev.witness["reason"] == "does_not_vanish");
}

TEST_CASE("verify_class errors") {
    auto f = ScalarFunction::identity();
    CHECK_THROWS_AS(verify_class(f, std::vector<double>{}, 1e-9), std::invalid_argument);
    CHECK_THROWS_AS(verify_class(f, std::vector<double>{-1.0, 0.0, 1.0}, 1e-9),
                    std::invalid_argument);
    CHECK_THROWS_AS(verify_class(f, std::vector<double>{0.5, 1.0}, 1e-9), std::invalid_argument);
}

TEST_CASE("verify_class is order-independent and idempotent") {
    auto f = ScalarFunction::power(2.0, 1.5);
    std::vector<double> grid{0.0, 0.25, 1.0, 3.0, 7.0};
    auto base = verify_class(f, grid, 1e-9).to_json();
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::shuffle(grid.begin(), grid.end(), rng);
        CHECK(verify_class(f, grid, 1e-9).to_json() == base);
    }
}

TEST_CASE("invert_monotone closed forms") {
    auto sq = ScalarFunction::power(1.0, 2.0);
    double r = invert_monotone(sq, 4.0, 1e-9);
    CHECK(std::abs(r - 2.0) <= 1e-9);

    auto ratio = ScalarFunction::bounded_ratio();  // r/(1+r)
    CHECK(invert_monotone(ratio, 0.5, 1e-10) == doctest::Approx(1.0).epsilon(1e-7));

    auto sat = saturate(ScalarFunction::identity(), 1.0);
    CHECK_THROWS_AS(invert_monotone(sat, 2.0, 1e-9), SupremumRangeError);
    try {
        invert_monotone(sat, 2.0, 1e-9);
    } catch (const SupremumRangeError& e) {
        CHECK(e.supremum_estimate() == doctest::Approx(1.0));
    }
}

TEST_CASE("invert then evaluate round-trips within 2 tol") {
    auto f = ScalarFunction::power(3.0, 0.7);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        double y = std::ldexp(double(rng() >> 11), -53) * 50.0;
        double r = invert_monotone(f, y, 1e-8);
        CHECK(std::abs(f(r) - y) <= 2e-8);
    }
}

TEST_CASE("pointwise_min examples") {
    auto f = ScalarFunction::identity();
    auto g = ScalarFunction::power(2.0, 1.0);
    auto m = pointwise_min(f, g);
    for (double r : {0.0, 0.3, 1.0, 5.0}) CHECK(m(r) == doctest::Approx(r));

    auto msq = pointwise_min(ScalarFunction::identity(), ScalarFunction::power(1.0, 2.0));
    CHECK(msq(0.5) == doctest::Approx(0.25));
    CHECK(msq(2.0) == doctest::Approx(2.0));

    auto idem = pointwise_min(f, f);
    for (double r : {0.0, 0.1, 2.0, 9.0}) CHECK(idem(r) == f(r));
}

TEST_CASE("saturate examples") {
    auto s1 = saturate(ScalarFunction::identity(), 1.0);
    CHECK(s1(5.0) == doctest::Approx(1.0));
    auto s2 = saturate(ScalarFunction::power(1.0, 2.0), 4.0);
    CHECK(s2(1.0) == doctest::Approx(1.0));
    CHECK(s2(10.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(saturate(ScalarFunction::identity(), 0.0), std::invalid_argument);

    std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 10.0};
    CHECK(verify_class(s1, grid, 1e-9).supported());  // declared K
}

TEST_CASE("tabulated functions repair, serialize, round-trip") {
    auto t = ScalarFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}, FnClass::K, 1.0);
    CHECK(t(2.0) >= t(1.0));  // monotone repair kicked in
    CHECK(t(0.5) == doctest::Approx(0.5));
    auto csv = t.to_csv();
    auto back = ScalarFunction::tabulated_from_csv(csv, FnClass::K, 1.0);
    for (double r : {0.0, 0.4, 1.7, 3.0}) CHECK(back(r) == doctest::Approx(t(r)));

    CHECK_THROWS_AS(ScalarFunction::tabulated({1.0, 0.5}, {0.0, 1.0}, FnClass::K, 1.0),
                    std::invalid_argument);
}

TEST_CASE("build_partition: constant z keeps dyadic seeds") {
    auto mesh = build_partition([](double) { return 3.0; }, 0.1, 1.0, 8.0);
    CHECK(mesh.points == std::vector<double>{1.0, 2.0, 4.0, 8.0});
}

TEST_CASE("build_partition: identity on [1,2] with eps 0.25 gives cells of width <= 0.25") {
    // oscillation of the identity on a cell equals the cell width
    auto mesh = build_partition([](double r) { return r; }, 0.25, 1.0, 2.0);
    CHECK(mesh.points.front() == doctest::Approx(1.0));
    CHECK(mesh.points.back() == doctest::Approx(2.0));
    for (size_t i = 0; i + 1 < mesh.points.size(); ++i)
        CHECK(mesh.points[i + 1] - mesh.points[i] <= 0.25 + 1e-12);
}

TEST_CASE("build_partition: oscillation bound holds under 10x denser resampling") {
    auto z = [](double r) { return std::sin(10.0 * r); };
    auto mesh = build_partition(z, 0.1, 1.0, 2.0, 17);
    for (size_t i = 0; i + 1 < mesh.points.size(); ++i) {
        double a = mesh.points[i], b = mesh.points[i + 1];
        double lo = 1e300, hi = -1e300;
        for (int j = 0; j < 170; ++j) {
            double v = z(a + (b - a) * j / 169.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi - lo < 0.1);
    }
}

TEST_CASE("build_partition: unresolvable oscillation reports the cell") {
    auto noisy = [](double r) { return std::sin(1e9 * r); };
    CHECK_THROWS_AS(build_partition(noisy, 1e-3, 1.0, 2.0), MeshRefinementError);
}

TEST_CASE("mesh interpolant: triangular interpolation geometry") {
    // 2 x 2 mesh, nodes chosen increasing in r and decreasing in t
    Mesh rm = Mesh::from_points({1.0, 3.0});
    Mesh tm = Mesh::from_points({0.0, 2.0});
    // node(k, m): f(1,0)=2, f(1,2)=1, f(3,0)=6, f(3,2)=4   (row-major over r)
    auto beta = KLFunction::mesh_interpolant(rm, tm, {2.0, 1.0, 6.0, 4.0});

    // corners reproduce exactly
    CHECK(beta(1.0, 0.0) == 2.0);
    CHECK(beta(3.0, 2.0) == 4.0);
    // lower triangle (u + v <= 1): f00 + u (f10 - f00) + v (f01 - f00)
    // at (r,t) = (1.5, 0.5): u = 0.25, v = 0.25 -> 2 + 0.25*4 - 0.25*1 = 2.75
    CHECK(beta(1.5, 0.5) == doctest::Approx(2.75));
    // upper triangle at (2.5, 1.5): u = 0.75, v = 0.75
    // f11 + (1-u)(f01 - f11) + (1-v)(f10 - f11) = 4 - 0.75 + 0.5 = 3.75
    CHECK(beta(2.5, 1.5) == doctest::Approx(3.75));
    // both triangles agree on the diagonal u + v = 1
    for (double u : {0.2, 0.5, 0.8}) {
        double r = 1.0 + 2.0 * u, t = 2.0 * (1.0 - u);
        double expect = u * 6.0 + (1.0 - u) * 1.0;  // u f10 + (1-u) f01
        CHECK(beta(r, t) == doctest::Approx(expect));
    }
    // zero extension at r = 0, decay beyond the t mesh
    CHECK(beta(0.0, 1.0) == 0.0);
    CHECK(beta(2.0, 10.0) < beta(2.0, 2.0));
}

TEST_CASE("kl_majorant: zero target reproduces shifted omega nodes") {
    Mesh rm = Mesh::dyadic(0.25, 8.0);
    Mesh tm = Mesh::from_points({0.0, 0.5, 1.0, 2.0, 4.0});
    auto omega = KLFunction::separable_exp(1.0, 1.0, 1.0);  // r e^{-t}
    auto zero = [](double, double) { return 0.0; };
    auto beta = kl_majorant(zero, omega, rm, tm);
    REQUIRE(beta.is_mesh());
    const auto& rs = beta.r_mesh().points;
    const auto& ts = beta.t_mesh().points;
    for (size_t k = 0; k < rs.size(); ++k)
        for (size_t m = 0; m < ts.size(); ++m) {
            double want = rm.points[k + 1] * std::exp(-(m == 0 ? ts[0] : ts[m - 1]));
            CHECK(beta.nodes()[k * ts.size() + m] == doctest::Approx(want));
        }
    std::vector<double> vr{0.3, 0.7, 1.5, 3.0};
    std::vector<double> vt{0.1, 0.9, 1.7, 3.5};
    CHECK(majorization_margin(beta, zero, vr, vt) >= 0.0);
}

TEST_CASE("kl_majorant: r e^{-t} majorized on a 20x20 verification grid") {
    Mesh rm = Mesh::dyadic(0.25, 16.0);
    Mesh tm = Mesh::from_points({0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0});
    auto psi = [](double r, double t) { return r * std::exp(-t); };
    auto beta = kl_majorant(psi, KLFunction::separable_exp(1.0, 1.0, 1.0), rm, tm);
    std::vector<double> vr, vt;
    for (int i = 0; i < 20; ++i) {
        vr.push_back(0.25 + (8.0 - 0.25) * i / 19.0);
        vt.push_back(0.0 + 8.0 * i / 19.0);
    }
    CHECK(majorization_margin(beta, psi, vr, vt) >= 0.0);
    CHECK(verify_kl(beta, vr, vt, 1e-9).supported());
    CHECK(beta(0.0, 3.0) == 0.0);
}

TEST_CASE("kl_majorant: discontinuous-in-t psi passes and is majorized") {
    auto psi = [](double r, double t) { return std::min(r, r / std::max(t, 1.0)); };
    Mesh rm = Mesh::dyadic(0.25, 16.0);
    Mesh tm = Mesh::from_points({0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0});
    auto beta = kl_majorant(psi, default_majorant_weight(), rm, tm);
    std::vector<double> vr, vt;
    for (int i = 0; i < 20; ++i) {
        vr.push_back(0.25 + (8.0 - 0.25) * i / 19.0);
        vt.push_back(16.0 * i / 19.0 * 0.9);
    }
    CHECK(majorization_margin(beta, psi, vr, vt) >= 0.0);
    CHECK(verify_kl(beta, vr, vt, 1e-9).supported());
}

TEST_CASE("kl_majorant: hypothesis violations throw with witness") {
    Mesh rm = Mesh::dyadic(0.5, 4.0);
    Mesh tm = Mesh::from_points({0.0, 1.0, 2.0});
    auto growing = [](double r, double t) { return r * (1.0 + t); };  // not nonincreasing in t
    CHECK_THROWS_AS(kl_majorant(growing, default_majorant_weight(), rm, tm),
                    std::invalid_argument);
    auto offset = [](double r, double t) { return r + 1.0 + 0.0 * t; };  // psi(0,t) != 0
    CHECK_THROWS_AS(kl_majorant(offset, default_majorant_weight(), rm, tm),
                    std::invalid_argument);
}

TEST_CASE("decay_envelope_from_ladder: exponential decay oracle") {
    auto psi = ScalarFunction::identity();
    auto tau_of = [](double eps, double delta) -> std::optional<double> {
        return std::log(delta / eps);
    };
    int n_max = 8;
    auto env = decay_envelope_from_ladder(psi, tau_of, {0.0, 0.25, 0.5, 1.0, 2.0}, n_max);
    for (int n = 1; n <= n_max; ++n) {
        double t = std::log(std::ldexp(1.0, n));
        CHECK(env.beta(1.0, t) >= std::ldexp(1.0, -(n - 1)));
    }
    CHECK(env.beta(0.0, 3.0) == 0.0);

    std::vector<double> vr{0.3, 0.6, 1.0, 1.9};
    std::vector<double> vt{0.0, 1.0, 2.5, 5.0};
    CHECK(verify_kl(env.beta, vr, vt, 1e-9).supported());
}

TEST_CASE("decay_envelope_from_ladder: zero-only delta grid") {
    auto env = decay_envelope_from_ladder(
        ScalarFunction::identity(),
        [](double, double) -> std::optional<double> { return 1.0; }, {0.0}, 4);
    CHECK(env.beta(0.0, 0.5) == 0.0);
    CHECK(env.beta(0.5, 0.0) > 0.0);  // regularizing term keeps class K in r
}

TEST_CASE("decay_envelope_from_ladder: unavailable tau truncates with residual") {
    auto tau_of = [](double eps, double) -> std::optional<double> {
        if (eps < 0.25) return std::nullopt;
        return -std::log(eps);
    };
    auto env = decay_envelope_from_ladder(ScalarFunction::identity(), tau_of, {1.0}, 6);
    REQUIRE(env.rungs.size() == 1);
    CHECK(env.rungs[0].truncated_at > 0);
    CHECK(env.rungs[0].residual > 0.0);
}

TEST_CASE("sontag_factorize: r e^{-t} factors through the identity pair exactly") {
    auto beta = KLFunction::separable_exp(1.0, 1.0, 1.0);
    std::vector<double> vr, vt;
    for (int i = 0; i < 20; ++i) {
        vr.push_back(0.05 + 8.0 * i / 19.0);
        vt.push_back(6.0 * i / 19.0);
    }
    auto res = sontag_factorize(beta, SontagFamilies{}, vr, vt);
    REQUIRE(res.status == Status::Supported);
    CHECK(res.margin == 0.0);
    CHECK(res.alpha1.closed_form_id() == "identity");
    CHECK(res.alpha2.closed_form_id() == "identity");
}

TEST_CASE("sontag_factorize: 2 r e^{-t} ties break lexicographically") {
    auto beta = KLFunction::separable_exp(2.0, 1.0, 1.0);
    std::vector<double> vr{0.1, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> vt{0.0, 0.5, 1.0, 2.0, 4.0};
    auto res = sontag_factorize(beta, SontagFamilies{}, vr, vt);
    REQUIRE(res.status == Status::Supported);
    CHECK(res.margin == 0.0);
    // (1,1,2,1) precedes (2,1,1,1): alpha1 = id, alpha2 = 2s
    CHECK(res.alpha1.closed_form_id() == "identity");
    CHECK(res.alpha2.closed_form_params() == std::vector<double>{2.0, 1.0});
}

TEST_CASE("sontag_factorize: sqrt(r) e^{-t/2} either feasible with margin >= 0 or refuted") {
    auto beta = KLFunction::separable_exp(1.0, 0.5, 0.5);
    std::vector<double> vr{0.1, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> vt{0.0, 0.5, 1.0, 2.0};
    SontagFamilies fams;
    fams.tabulated_repair = false;
    auto res = sontag_factorize(beta, fams, vr, vt);
    if (res.status == Status::Supported) {
        CHECK(res.margin >= 0.0);
    } else {
        CHECK(res.details["reason"] == "infeasible_on_families");
    }
    // with the repair enabled a feasible pair must exist on the finite grid
    fams.tabulated_repair = true;
    auto repaired = sontag_factorize(beta, fams, vr, vt);
    REQUIRE(repaired.status == Status::Supported);
    CHECK(repaired.margin >= 0.0);
    for (double r : vr)
        for (double t : vt)
            CHECK(repaired.alpha2(repaired.alpha1(r) * std::exp(-t)) >= beta(r, t));
}

TEST_CASE("sontag_factorize: empty grid is an error") {
    auto beta = KLFunction::separable_exp(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(sontag_factorize(beta, SontagFamilies{}, {}, {}), std::invalid_argument);
}

TEST_CASE("KL mesh interpolant JSON round-trip") {
    Mesh rm = Mesh::dyadic(0.5, 4.0);
    Mesh tm = Mesh::from_points({0.0, 1.0, 2.0});
    auto psi = [](double r, double t) { return r * std::exp(-t); };
    auto beta = kl_majorant(psi, default_majorant_weight(), rm, tm);
    auto j = beta.to_json();
    auto back = KLFunction::from_json(j);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        double r = std::ldexp(double(rng() >> 11), -53) * 4.0;
        double t = std::ldexp(double(rng() >> 11), -53) * 4.0;
        CHECK(back(r, t) == beta(r, t));
    }
}

TEST_CASE("scalar function JSON round-trip") {
    auto f = saturate(ScalarFunction::power(2.0, 1.5), 3.0);
    auto back = ScalarFunction::from_json(f.to_json());
    for (double r : {0.0, 0.5, 1.0, 2.0, 10.0}) CHECK(back(r) == f(r));
}
