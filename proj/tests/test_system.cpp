#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lyocert/expression.hpp"
#include "lyocert/system.hpp"

using namespace lyocert;
using namespace lyocert::systems;

TEST_CASE("parse_rhs: basics and errors") {
    auto e = expr::parse_rhs("-x1", 1, 0);
    double x[1] = {2.0};
    CHECK(e.eval(0.0, x, {}) == doctest::Approx(-2.0));

    CHECK_NOTHROW(expr::parse_rhs("x1*d1 - x2", 2, 1));
    CHECK_THROWS_AS(expr::parse_rhs("x3", 2, 0), expr::ParseError);
    CHECK_THROWS_AS(expr::parse_rhs("foo(x1)", 1, 0), expr::ParseError);
    CHECK_THROWS_AS(expr::parse_rhs("min(x1)", 1, 0), expr::ParseError);  // arity
    CHECK_THROWS_AS(expr::parse_rhs("x1 +", 1, 0), expr::ParseError);
    CHECK_THROWS_AS(expr::parse_rhs("x1 ) ", 1, 0), expr::ParseError);

    try {
        expr::parse_rhs("x1 +\n @", 1, 0);
        CHECK(false);
    } catch (const expr::ParseError& err) {
        CHECK(err.line == 2);
    }
}

TEST_CASE("parse_rhs: grammar coverage and folding") {
    auto e = expr::parse_rhs("min(x1, 1) + 2^3 - sin(0)", 1, 0);
    double x[1] = {0.5};
    CHECK(e.eval(0.0, x, {}) == doctest::Approx(0.5 + 8.0));
    auto nested = expr::parse_rhs("-x1^2 + max(d1, tanh(t))", 1, 1);
    double xs[1] = {3.0};
    double ds[1] = {0.2};
    CHECK(nested.eval(1.0, xs, ds) == doctest::Approx(-9.0 + std::max(0.2, std::tanh(1.0))));
    auto scalar = expr::parse_scalar("min(r, 1)");
    CHECK(scalar.eval_scalar(5.0) == doctest::Approx(1.0));
    CHECK(scalar.eval_scalar(0.25) == doctest::Approx(0.25));
}

TEST_CASE("disturbance signals: shift and concatenate") {
    auto c = DisturbanceSignal::constant({0.7});
    auto shifted = shift(c, 3.0);
    CHECK(shifted.value_at(0.0)[0] == doctest::Approx(0.7));
    CHECK(shifted.value_at(10.0)[0] == doctest::Approx(0.7));

    auto two = DisturbanceSignal::piecewise({0.0, 1.0}, {{1.0}, {2.0}});
    auto s1 = shift(two, 1.0);
    CHECK(s1.value_at(0.0)[0] == doctest::Approx(2.0));
    CHECK(s1.value_at(5.0)[0] == doctest::Approx(2.0));

    auto cat = concatenate(two, c, 0.5);
    CHECK(cat.value_at(0.25)[0] == doctest::Approx(1.0));
    CHECK(cat.value_at(0.75)[0] == doctest::Approx(0.7));

    CHECK_THROWS_AS(concatenate(two, c, 0.0), std::invalid_argument);
}

TEST_CASE("shift composes and concatenation round-trips pointwise") {
    auto d = DisturbanceSignal::piecewise({0.0, 0.8, 2.5, 4.0},
                                          {{0.3}, {-0.9}, {0.5}, {0.1}});
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        double s = uniform01(rng()) * 3.0;
        double t = uniform01(rng()) * 3.0;
        double probe = uniform01(rng()) * 6.0;
        CHECK(shift(shift(d, s), t).value_at(probe)[0] ==
              doctest::Approx(shift(d, s + t).value_at(probe)[0]));
    }
    // concatenate(d, shift(d,t), t) equals d away from the seam
    double t = 1.7;
    auto roundtrip = concatenate(d, shift(d, t), t);
    for (double probe : {0.1, 0.79, 1.0, 1.69, 1.71, 2.0, 3.0, 5.0})
        CHECK(roundtrip.value_at(probe)[0] == doctest::Approx(d.value_at(probe)[0]));
}

TEST_CASE("ensemble: deterministic, box-valued, covers corners") {
    Box box;
    box.bounds = {{-1.0, 1.0}};
    EnsemblePolicy pol;
    auto e1 = make_ensemble(box, pol);
    auto e2 = make_ensemble(box, pol);
    REQUIRE(e1.size() == e2.size());
    for (size_t i = 0; i < e1.size(); ++i) CHECK(e1[i].to_json() == e2[i].to_json());
    CHECK(e1[0].value_at(0.0)[0] == doctest::Approx(-1.0));
    CHECK(e1[1].value_at(0.0)[0] == doctest::Approx(1.0));
    for (const auto& d : e1)
        for (const auto& v : d.values()) CHECK(box.contains(v, 1e-12));
}

TEST_CASE("evaluate_flow: closed forms") {
    auto stable = SystemDef::catalogue("scalar_stable");
    auto x = StateVector::scalar(2.0);
    DisturbanceSignal none;
    CHECK(stable.flow(1.0, x, none)[0] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(stable.flow(0.0, x, none)[0] == 2.0);

    auto unstable = SystemDef::catalogue("scalar_unstable");
    CHECK(unstable.flow(std::log(2.0), StateVector::scalar(1.0), none)[0] ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("evaluate_flow: bilinear worst case holds the state") {
    auto sys = SystemDef::catalogue("bilinear");
    auto one = DisturbanceSignal::constant({1.0});
    CHECK(sys.flow(3.0, StateVector::scalar(0.4), one)[0] == doctest::Approx(0.4));
    auto lo = DisturbanceSignal::constant({-1.0});
    CHECK(sys.flow(1.0, StateVector::scalar(1.0), lo)[0] ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("evaluate_flow: switched_2d matches the ODE integrator") {
    auto sys = SystemDef::catalogue("switched_2d");
    auto ode = SystemDef::from_rhs(
        {"(2-d1)*(-0.1*x1 + 1*x2) + (d1-1)*(-0.1*x1 + 10*x2)",
         "(2-d1)*(-10*x1 - 0.1*x2) + (d1-1)*(-1*x1 - 0.1*x2)"},
        2, Box{{{1.0, 2.0}}});
    auto d = DisturbanceSignal::piecewise({0.0, 0.7, 1.9}, {{1.0}, {2.0}, {1.3}});
    StateVector x0({0.8, -0.4});
    auto a = sys.flow(2.5, x0, d);
    auto b = ode.flow(2.5, x0, d);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-6));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-6));
}

TEST_CASE("evaluate_flow: saturating matches its implicit solution") {
    auto sys = SystemDef::catalogue("saturating");
    DisturbanceSignal none;
    double x0 = 2.0, t = 1.5;
    double y = sys.flow(t, StateVector::scalar(x0), none)[0];
    // log y + y^2/2 must equal log x0 + x0^2/2 - t
    CHECK(std::log(y) + 0.5 * y * y ==
          doctest::Approx(std::log(x0) + 0.5 * x0 * x0 - t).epsilon(1e-12));
    CHECK(sys.flow(4.0, StateVector::scalar(0.0), none)[0] == 0.0);
    CHECK(sys.flow(2.0, StateVector::scalar(-1.0), none)[0] < 0.0);
}

TEST_CASE("finite escape is detected with a time bracket") {
    auto sys = SystemDef::from_rhs({"x1^2"}, 1, Box{});  // escapes at t = 1/x0
    CHECK_THROWS_AS(sys.flow(2.0, StateVector::scalar(1.0), DisturbanceSignal{}),
                    FiniteEscapeError);
    try {
        sys.flow(2.0, StateVector::scalar(1.0), DisturbanceSignal{});
    } catch (const FiniteEscapeError& e) {
        CHECK(e.t_high <= 1.05);
        CHECK(e.norm > 1e11);
    }
}

TEST_CASE("check_axioms: analytic catalogue passes at 1e-8") {
    for (const char* name : {"scalar_stable", "bilinear", "saturating", "switched_2d"}) {
        auto sys = SystemDef::catalogue(name);
        AxiomPlan plan;
        plan.ensemble.random_count = 8;
        auto ev = check_axioms(sys, plan, 1e-8);
        CAPTURE(name);
        CHECK(ev.at("identity").supported());
        CHECK(ev.at("cocycle").supported());
        CHECK(ev.at("causality").supported());
        CHECK(ev.at("continuity").supported());
    }
}

TEST_CASE("check_axioms: ODE -x1 matches closed form within 1e-6") {
    auto ode = SystemDef::from_rhs({"-x1"}, 1, Box{});
    AxiomPlan plan;
    plan.ensemble.random_count = 4;
    auto ev = check_axioms(ode, plan, 1e-6);
    CHECK(ev.at("cocycle").supported());
    CHECK(ev.at("identity").supported());

    auto closed = SystemDef::catalogue("scalar_stable");
    DisturbanceSignal none;
    for (double t : {0.3, 1.0, 2.7}) {
        double a = ode.flow(t, StateVector::scalar(1.7), none)[0];
        double b = closed.flow(t, StateVector::scalar(1.7), none)[0];
        CHECK(std::abs(a - b) <= 1e-6);
    }
}

TEST_CASE("check_axioms: broken_cocycle_demo refuted with the documented witness") {
    auto sys = SystemDef::catalogue("broken_cocycle_demo");
    AxiomPlan plan;
    plan.times = {1.0};
    plan.hops = {1.0};
    plan.radii = {0.0};
    plan.ensemble.random_count = 0;
    auto ev = check_axioms(sys, plan, 1e-8);
    REQUIRE(ev.at("cocycle").refuted());
    auto w = ev.at("cocycle").witness;
    CHECK(w["t"].get<double>() == doctest::Approx(1.0));
    CHECK(w["h"].get<double>() == doctest::Approx(1.0));
    // phi(1, phi(1, 0)) = 2 vs phi(2, 0) = 4
    CHECK(w["lhs"][0].get<double>() == doctest::Approx(2.0));
    CHECK(w["rhs"][0].get<double>() == doctest::Approx(4.0));
    CHECK(ev.at("identity").supported());
}

TEST_CASE("equilibrium_check: examples") {
    EnsemblePolicy pol;
    pol.random_count = 16;
    pol.horizon = 10.0;

    auto stable = SystemDef::catalogue("scalar_stable");
    auto ens0 = make_ensemble(stable.disturbance_box(), pol);
    CHECK(equilibrium_check(stable, 10.0, ens0, 1e-9).supported());

    // additive disturbance moves the origin: refuted with d = 1
    auto additive = SystemDef::from_rhs({"-x1 + d1"}, 1, Box{{{-1.0, 1.0}}});
    auto ens1 = make_ensemble(additive.disturbance_box(), pol);
    auto ev = equilibrium_check(additive, 10.0, ens1, 1e-6);
    REQUIRE(ev.refuted());
    CHECK(ev.witness["norm"].get<double>() > 0.5);

    auto bilinear = SystemDef::catalogue("bilinear");
    auto ens2 = make_ensemble(bilinear.disturbance_box(), pol);
    CHECK(equilibrium_check(bilinear, 10.0, ens2, 1e-9).supported());
}

TEST_CASE("integrator convergence: halving tolerance shrinks cocycle residual") {
    std::vector<double> residuals;
    for (double rt : {1e-6, 1e-8, 1e-10}) {
        IntegratorSettings st;
        st.rel_tol = rt;
        st.abs_tol = rt * 1e-2;
        auto sys = SystemDef::from_rhs({"-x1 + 0.2*sin(x1)"}, 1, Box{}, st);
        DisturbanceSignal none;
        StateVector x0 = StateVector::scalar(1.3);
        double t = 0.9, h = 1.1;
        auto lhs = sys.flow(h, sys.flow(t, x0, none), none);
        auto rhs = sys.flow(t + h, x0, none);
        residuals.push_back(std::abs(lhs[0] - rhs[0]));
    }
    CHECK(residuals[1] <= residuals[0]);
    CHECK(residuals[2] <= residuals[1]);
    CHECK(residuals[2] <= 1e-9);
}

TEST_CASE("system config round-trip") {
    auto sys = SystemDef::from_config(
        json{{"dimension", 1},
             {"disturbance", {{"dim", 1}, {"box", {{-1.0, 1.0}}}}},
             {"rhs", {"-x1 + d1*x1"}}});
    CHECK(sys.dimension() == 1);
    auto cfg = sys.to_config();
    auto back = SystemDef::from_config(cfg);
    auto d = DisturbanceSignal::constant({0.5});
    CHECK(back.flow(1.0, StateVector::scalar(1.0), d)[0] ==
          doctest::Approx(sys.flow(1.0, StateVector::scalar(1.0), d)[0]));

    auto cat = SystemDef::from_config(json{{"catalogue", {{"name", "scalar_stable"}}}});
    CHECK(cat.analytic());
}
