import json
import math

import pytest

import lyocert


def test_scalar_functions():
    f = lyocert.ScalarFunction.identity()
    assert f(2.5) == 2.5
    sat = lyocert.saturate(f, 1.0)
    assert sat(5.0) == 1.0
    ev = lyocert.verify_class(lyocert.ScalarFunction.bump(), [0.0, 0.5, 1.0], tol=1e-9)
    assert ev["status"] == "Supported"  # declared positive definite
    assert lyocert.invert_monotone(lyocert.ScalarFunction.power(1.0, 2.0), 4.0) == pytest.approx(
        2.0, abs=1e-6
    )


def test_expression_weights():
    rho = lyocert.ScalarFunction.expression("min(r, 1)", "K")
    assert rho(0.25) == 0.25
    assert rho(7.0) == 1.0


def test_flow_and_integral():
    sys = lyocert.SystemDef.catalogue("scalar_stable")
    assert sys.flow(1.0, [2.0])[0] == pytest.approx(2.0 * math.exp(-1.0))
    unstable = lyocert.SystemDef.catalogue("scalar_unstable")
    ti = lyocert.integral_transform(unstable, lyocert.ScalarFunction.bump(), [1.0])
    total = ti["value"] + ti["tail_bound"]
    assert total == pytest.approx(math.pi / 4.0, abs=1e-5)


def test_certify_reports():
    sys = lyocert.SystemDef.catalogue("scalar_stable")
    beta = lyocert.KLFunction.separable_exp(1.0, 1.0, 1.0)
    report = lyocert.certify(sys, "UGAS", beta=beta)
    assert report["evidence"]["status"] == "Supported"
    assert report["exit_code"] == 0

    unstable = lyocert.SystemDef.catalogue("scalar_unstable")
    plan = {"radii": [1.0], "eps0": 0.5, "eps_levels": 0, "horizon": 20.0}
    bad = lyocert.certify(unstable, "UGWA", plan=plan)
    assert bad["evidence"]["status"] == "Refuted"
    assert "x" in bad["evidence"]["witness"]


def test_nclf_construction():
    sys = lyocert.SystemDef.catalogue("scalar_stable")
    rho = lyocert.saturate(lyocert.ScalarFunction.identity(), 1.0)
    V = lyocert.construct_nclf(sys, rho)
    assert V.value([2.0]) == pytest.approx(math.log(2.0) + 1.0, abs=1e-3)
    assert V.value([0.0]) == 0.0

    dini = lyocert.dini_derivative(V, sys, [2.0])
    assert dini["converged"]
    assert dini["estimate"] == pytest.approx(-1.0, abs=1e-3)

    bellman = lyocert.verify_bellman(V, sys, [2.0], [math.log(2.0)])
    assert bellman["status"] == "Supported"


def test_kl_machinery():
    rm = lyocert.Mesh.dyadic(0.25, 16.0)
    tm = lyocert.Mesh.from_points([0.0, 0.5, 1.0, 2.0, 4.0, 8.0])
    beta = lyocert.kl_majorant(
        lambda r, t: r * math.exp(-t), lyocert.default_majorant_weight(), rm, tm
    )
    assert beta(0.0, 1.0) == 0.0
    assert beta(1.0, 1.0) >= math.exp(-1.0)

    fact = lyocert.sontag_factorize(
        lyocert.KLFunction.separable_exp(1.0, 1.0, 1.0),
        [0.1 + 0.4 * i for i in range(20)],
        [0.3 * i for i in range(20)],
    )
    assert fact["status"] == "Supported"
    assert fact["margin"] == 0.0


def test_inference():
    closure = lyocert.infer_closure(["NCLF"])["closure"]
    assert "iUGAS" in closure and "UGWA" in closure
    assert "UGAS" not in closure
    dot = lyocert.lattice_dot()
    assert dot.startswith("digraph")
    assert len(lyocert.rule_table()) > 18


def test_axioms():
    broken = lyocert.SystemDef.catalogue("broken_cocycle_demo")
    ev = lyocert.check_axioms(broken)
    assert ev["cocycle"]["status"] == "Refuted"
    good = lyocert.SystemDef.catalogue("bilinear")
    ev2 = lyocert.check_axioms(good)
    assert ev2["cocycle"]["status"] == "Supported"


def test_klfit_roundtrip():
    rows = ["r,t,value"]
    for i in range(0, 17):
        for j in range(0, 13):
            r, t = 0.25 * i, 0.5 * j
            rows.append(f"{r},{t},{r * math.exp(-t)}")
    report = lyocert.klfit_from_csv("\n".join(rows))
    assert report["exit_code"] == 0
    beta = lyocert.KLFunction.from_json(report["beta"])
    assert beta(1.0, 0.0) >= 1.0
    # serialized mesh interpolant round-trips through JSON
    assert json.dumps(report["beta"])  # serializable
