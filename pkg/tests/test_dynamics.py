import math

import numpy as np
import pytest

from jetbalance.domain import ParamDomain, sample_points, sweep
from jetbalance.dynamics import (
    Connection, DynamicalForm, Variation, adjoint, balance_residual, convergence_order, covariant_adjoint,
    covariant_identity_defect, covariant_variation, prolong_variation, restrict, total_virtual_work,
    variation_spencer, virtual_work_density, virtual_work_identity_defect,
)
from jetbalance.expr import evaluate, parse, render
from jetbalance.jet import JetCoordinates, JetSection, ShapeError

from conftest import poly_text

C1 = JetCoordinates.make(["t"], ["x"], [["v"]])
T01 = ParamDomain.box(t=(0, 1, 11))


def sec(x, v):
    return JetSection.make(["t"], ["x"], [x], [[v]], [["v"]])


def form(F, P):
    return DynamicalForm.make(C1, [F], [[P]])


def test_restrict_examples():
    s = sec("cos(t)", "-sin(t)")
    F, P = restrict(form("-x", "v"), s)
    assert evaluate(F[0], {"t": 0.4}) == pytest.approx(-math.cos(0.4))
    assert evaluate(P[0][0], {"t": 0.4}) == pytest.approx(-math.sin(0.4))
    _, P = restrict(form("0", "2*v"), sec("t^2", "2*t"))
    assert evaluate(P[0][0], {"t": 0.25}) == pytest.approx(1.0)


def test_form_rejects_bad_shapes():
    with pytest.raises(ShapeError):
        DynamicalForm.make(C1, ["1", "2"], [["v"]])
    with pytest.raises(ShapeError):
        DynamicalForm.make(C1, ["1"], [["v", "x"]])


def test_virtual_work_density_examples():
    s = sec("t^2", "2*t")
    assert render(virtual_work_density(form("-x", "v"), Variation.make(["t"], ["0"], [["0"]]), s)) == "0"
    assert evaluate(virtual_work_density(form("2", "3"), Variation.make(["t"], ["1"], [["1"]]), s), {"t": 0.0}) == 5
    dL = form("0", "v")
    w = virtual_work_density(dL, prolong_variation(["t"], ["t"]), s)
    assert evaluate(w, {"t": 0.3}) == pytest.approx(0.6)


def test_prolong_variation_examples():
    assert render(prolong_variation(["t"], ["3"]).jet[0][0]) == "0"
    assert evaluate(prolong_variation(["t"], ["t^2"]).jet[0][0], {"t": 1.5}) == 3.0
    v = prolong_variation(["u1", "u2"], ["sin(u1)*u2"])
    at = {"u1": 0.3, "u2": 2.0}
    assert evaluate(v.jet[0][0], at) == pytest.approx(math.cos(0.3) * 2)
    assert evaluate(v.jet[0][1], at) == pytest.approx(math.sin(0.3))


@pytest.mark.parametrize("pos, jet, at, value", [
    ("t^3", "3*t^2", 0.7, 0.0), ("0", "1", 0.2, 1.0), ("t", "1 + t", 0.4, 0.4),
])
def test_variation_spencer(pos, jet, at, value):
    D = variation_spencer(Variation.make(["t"], [pos], [[jet]]))
    assert evaluate(D[0][0], {"t": at}) == pytest.approx(value, abs=1e-15)


def test_adjoint_examples():
    assert render(adjoint(form("0", "3"), sec("t", "1"))[0]) == "0"
    s = sec("t^3", "3*t^2")
    assert sweep(adjoint(form("6*t", "v"), s), T01).max_abs == 0.0


def test_balance_oscillator():
    phi = form("-x", "v")
    d = ParamDomain.box(t=(0, 2 * math.pi, 101))
    assert balance_residual(phi, sec("cos(t)", "-sin(t)"), d).max_abs <= 1e-15
    rep = balance_residual(phi, sec("t", "1"), T01)
    assert rep.max_abs == pytest.approx(1.0) and rep.argmax == {"t": 1.0}


def test_identity_for_sine_variation():
    s = sec("t^3", "3*t^2")
    defect = virtual_work_identity_defect(form("6*t", "v"), s, ["sin(t)"])
    pts = {"t": np.linspace(0, 1, 50)}
    assert np.max(np.abs(evaluate(defect, pts))) <= 1e-12


def _d5(fn, t, h=1e-3):
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


def _numeric_identity_defect(phi, s, dx, pts):
    # phi[j1 dx] - D*phi[dx] - d(Pi dx)/dt with every derivative by five-point differences
    F, P = restrict(phi, s)
    at = lambda e: (lambda t: np.asarray(evaluate(e, {"t": t}), float))
    f, pi, d = at(F[0]), at(P[0][0]), at(parse(dx))
    lhs = f(pts) * d(pts) + pi(pts) * _d5(d, pts)
    return lhs - (f(pts) - _d5(pi, pts)) * d(pts) - _d5(lambda t: pi(t) * d(t), pts)


@pytest.mark.parametrize("seed", range(4))
def test_identity_against_finite_differences(seed):
    rng = np.random.default_rng(seed)
    phi = DynamicalForm.make(C1, [poly_text(rng, ["t", "x", "v"], 2)], [[poly_text(rng, ["t", "x", "v"], 2)]])
    s = sec(poly_text(rng, ["t"]), poly_text(rng, ["t"]))
    dx = poly_text(rng, ["t"])
    pts = np.linspace(-1, 1, 30)
    assert np.max(np.abs(_numeric_identity_defect(phi, s, dx, pts))) <= 1e-6
    assert np.max(np.abs(evaluate(virtual_work_identity_defect(phi, s, [dx]), {"t": pts}))) <= 1e-11


def test_boundary_term_fundamental_theorem():
    vw = total_virtual_work(form("0", "3*t^2"), sec("t", "1"), ["1"], T01)
    assert vw.boundary == pytest.approx(3.0, abs=1e-15)


def test_boundary_vanishes_for_compact_variation():
    vw = total_virtual_work(form("-x", "v"), sec("t^2", "2*t"), ["t*(1 - t)"], T01)
    assert vw.boundary == 0.0


def test_virtual_work_split_converges_second_order():
    rng = np.random.default_rng(2)
    src = ["a", "b"]
    c2 = JetCoordinates.make(src, ["x"])
    names = list(c2.all_names)
    phi = DynamicalForm.make(c2, [poly_text(rng, names, 2)], [[poly_text(rng, names, 2) for _ in src]])
    s = JetSection.make(src, ["x"], ["sin(a)*b"], [["a*b", "cos(b)"]])
    dx = ["exp(a)*b^2"]
    errs, steps = [], []
    for n in (11, 21, 41):
        d = ParamDomain.box(a=(0, 1, n), b=(0, 1, n))
        errs.append(total_virtual_work(phi, s, dx, d).defect)
        steps.append(1 / (n - 1))
    assert convergence_order(errs, steps) >= 1.9


def test_covariant_adjoint_zero_connection_is_adjoint():
    phi = form("-x", "v*t")
    s = sec("cos(t)", "t")
    assert covariant_adjoint(phi, s, Connection.zero(C1)) == adjoint(phi, s)


def test_covariant_adjoint_constant_connection():
    c = 0.7
    phi = form("x", "v")
    s = sec("t^2", "exp(t)")
    omega = Connection.make(C1, [[[c]]])
    got = covariant_adjoint(phi, s, omega)[0]
    t = np.linspace(0, 1, 9)
    expected = t**2 - (np.exp(t) - c * np.exp(t))
    np.testing.assert_allclose(evaluate(got, {"t": t}), expected, atol=1e-14)


def test_connection_rejects_jet_variables():
    with pytest.raises(Exception):
        Connection.make(C1, [[["v"]]])


@pytest.mark.parametrize("seed", range(3))
def test_covariant_identity_constant_connection(seed):
    rng = np.random.default_rng(seed)
    c2 = JetCoordinates.make(["t"], ["x", "y"])
    names = list(c2.all_names)
    phi = DynamicalForm.make(c2, [poly_text(rng, names, 2) for _ in range(2)],
                             [[poly_text(rng, names, 2)] for _ in range(2)])
    s = JetSection.make(["t"], ["x", "y"], ["t^2", "sin(t)"], [["1 + t"], ["cos(t)"]])
    omega = Connection.make(c2, [[[float(rng.uniform(-1, 1))] for _ in range(2)] for _ in range(2)])
    dx = [poly_text(rng, ["t"]), poly_text(rng, ["t"])]
    pts = sample_points(["t"], 100, seed)
    assert np.max(np.abs(evaluate(covariant_identity_defect(phi, s, omega, dx), pts))) <= 1e-12
    var = covariant_variation(s, omega, dx)
    assert max(abs(evaluate(c, pts)).max() for r in variation_spencer(var) for c in r) > 0


def test_convergence_order_slope():
    assert convergence_order([4e-2, 1e-2, 2.5e-3], [0.2, 0.1, 0.05]) == pytest.approx(2.0)
