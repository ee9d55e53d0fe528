import numpy as np
import pytest
from hypothesis import given, strategies as st

from jetbalance.domain import ParamDomain, sweep
from jetbalance.expr import evaluate, parse
from jetbalance.jet import JetCoordinates, JetSection, ShapeError, SmoothMap, prolong
from jetbalance.mechanics import (
    InertiaLaw, OrthogonalityError, PointModel, RigidDynamicalState, RigidMotionCurve, body_velocity,
    comoving_defect, comoving_defect_direct, comoving_section, covariant_momentum_rate, covariant_newton_residual,
    defect_report, inertia_couple, inertial_section, iso3_act, iso3_compose, momentum, newton_residual,
    power_pairing, rigid_balance_residual, rigid_spencer, rotating_frame_section, rotating_frame_variation,
    rotating_frame_velocity, rotation_about,
)

T01 = ParamDomain.box(t=(0, 1, 21))
C3 = JetCoordinates.make(["t"], ["x", "y", "z"], [["vx"], ["vy"], ["vz"]])
C2 = JetCoordinates.make(["t"], ["x", "y"], [["vx"], ["vy"]])
EYE3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
EYE2 = [[1, 0], [0, 1]]
J = [[0, -1], [1, 0]]


def values(exprs, t):
    return np.array([np.broadcast_to(evaluate(e, {"t": t}), np.shape(t)) for e in exprs], float)


def mat(M, t=0.3):
    return np.array([[float(evaluate(c, {"t": t})) for c in r] for r in M])


def section(coords, xs):
    return prolong(SmoothMap.make(coords.source, coords.target, xs), coords.jet_names)


def test_momentum_euclidean():
    model = PointModel.make(C3, 2, EYE3, [0, 0, 0])
    s = JetSection.make(["t"], C3.target, ["3*t", "0", "0"], [["3"], ["0"], ["0"]], C3.jet_names)
    assert values(momentum(model, s), 0.5).tolist() == [6.0, 0.0, 0.0]


def test_momentum_metric_lowering():
    model = PointModel.make(C2, 1, [[1, 0], [0, 4]], [0, 0])
    p = momentum(model, section(C2, ["t", "t"]))
    assert values(p, 0.2).tolist() == [1.0, 4.0]


def test_momentum_time_varying_mass():
    model = PointModel.make(C2, "1 + t", EYE2, [0, 0])
    p = momentum(model, section(C2, ["2*t", "-t"]))
    np.testing.assert_allclose(values(p, 0.5), [3.0, -1.5])


def test_model_rejects_asymmetric_metric_and_symmetric_spin():
    with pytest.raises(ShapeError):
        PointModel.make(C2, 1, [[1, 1], [0, 1]], [0, 0])
    with pytest.raises(ShapeError):
        PointModel.make(C2, 1, EYE2, [0, 0], spin=[[0, 1], [1, 0]])


def test_newton_free_and_parabola():
    assert newton_residual(PointModel.make(C2, 1, EYE2, [0, 0]), section(C2, ["2*t", "1"]), T01).max_abs == 0
    grav = PointModel.make(C2, 1, EYE2, [0, -1])
    assert newton_residual(grav, section(C2, ["t", "-t^2/2"]), T01).max_abs <= 1e-15


def test_newton_oscillator():
    c1 = JetCoordinates.make(["t"], ["x"], [["v"]])
    osc = PointModel.make(c1, 1, [[1]], ["-x"])
    assert newton_residual(osc, section(c1, ["cos(t)"]), T01).max_abs <= 1e-15
    rep = newton_residual(osc, section(c1, ["t"]), ParamDomain.box(t=(0, 3, 7)))
    assert rep.max_abs == pytest.approx(3.0)


def test_covariant_rate_comoving_momentum_constant():
    model = PointModel.make(C2, 1, EYE2, [0, 0], spin=J)
    rate = covariant_momentum_rate(model, ["cos(t)", "sin(t)"])
    # d/dt(cos, sin) - J (cos, sin) = (-sin + sin, cos - cos)
    assert sweep(list(rate), T01).max_abs <= 1e-15


def test_covariant_rate_constant_momentum():
    model = PointModel.make(C2, 1, EYE2, [0, 0], spin=[[0, -2], [2, 0]])
    np.testing.assert_allclose(values(covariant_momentum_rate(model, [1, 3]), 0.0), [6.0, -2.0])


def test_covariant_rate_zero_spin_is_derivative():
    model = PointModel.make(C2, 1, EYE2, [0, 0], spin=[[0, 0], [0, 0]])
    np.testing.assert_allclose(values(covariant_momentum_rate(model, ["t^2", "t"]), 0.5), [1.0, 1.0])


def test_covariant_rate_requires_spin():
    with pytest.raises(ValueError):
        covariant_momentum_rate(PointModel.make(C2, 1, EYE2, [0, 0]), [1, 1])


def test_covariant_newton_on_rotating_section():
    model = PointModel.make(C2, 1, EYE2, [0, 0], spin=J)
    s = JetSection.make(["t"], C2.target, ["cos(t)", "sin(t)"], [["cos(t)"], ["sin(t)"]], C2.jet_names)
    assert covariant_newton_residual(model, s, T01).max_abs <= 1e-15


def test_rotating_frame_velocity():
    v = rotating_frame_velocity(["cos(t)", "sin(t)"], J)
    t = np.linspace(0, 1, 5)
    np.testing.assert_allclose(values(v, t), [-2 * np.sin(t), 2 * np.cos(t)], atol=1e-15)
    assert values(rotating_frame_velocity(["1", "2"], [[0, 0], [0, 0]]), 0.0).tolist() == [0.0, 0.0]
    np.testing.assert_allclose(values(rotating_frame_velocity(["1", "0"], J), 0.0), [0.0, 1.0])


def test_rotating_frame_section_not_integrable():
    s = rotating_frame_section(C2, ["1", "0"], J)
    from jetbalance.jet import spencer
    assert sweep(spencer(s).labelled(), T01).max_abs == pytest.approx(1.0)


def test_rotating_frame_variation():
    var = rotating_frame_variation(["1", "0"], J)
    np.testing.assert_allclose([float(evaluate(r[0], {})) for r in var.jet], [0.0, -1.0])


def test_iso3_identity_and_translation():
    x, e = np.array([0.5, -1.0, 2.0]), np.eye(3)
    assert all(np.array_equal(a, b) for a, b in zip(iso3_act((np.zeros(3), np.eye(3)), (x, e)), (x, e)))
    x2, e2 = iso3_act(([1, 0, 0], np.eye(3)), (np.zeros(3), e))
    assert x2.tolist() == [1.0, 0.0, 0.0] and np.array_equal(e2, e)


def test_iso3_rejects_non_rotation():
    with pytest.raises(OrthogonalityError):
        iso3_act((np.zeros(3), 2 * np.eye(3)), (np.zeros(3), np.eye(3)))


angles = st.floats(-3.0, 3.0)
shifts = st.lists(st.floats(-2, 2), min_size=3, max_size=3)


@given(angles, angles, shifts, shifts)
def test_iso3_action_is_a_group_action(a1, a2, s1, s2):
    g1 = (np.array(s1), mat(rotation_about(0, a1), 0))
    g2 = (np.array(s2), mat(rotation_about(2, a2), 0))
    frame = (np.array([0.3, -0.1, 0.7]), np.eye(3))
    lhs = iso3_act(iso3_compose(g2, g1), frame)
    rhs = iso3_act(g2, iso3_act(g1, frame))
    assert all(np.allclose(a, b, atol=1e-12) for a, b in zip(lhs, rhs))


def test_curve_orthogonality_check():
    with pytest.raises(OrthogonalityError):
        RigidMotionCurve.make([0, 0, 0], [["1 + t", 0, 0], [0, 1, 0], [0, 0, 1]], check_domain=T01)


def test_body_velocity_translation():
    v0, W = body_velocity(RigidMotionCurve.make(["t", 0, 0], EYE3))
    assert values(v0, 0.4).tolist() == [1.0, 0.0, 0.0]
    assert np.array_equal(mat(W), np.zeros((3, 3)))


def test_body_velocity_rotation_rate_two():
    _, W = body_velocity(RigidMotionCurve.make([0, 0, 0], rotation_about(2, "2*t")))
    for t in np.linspace(0, 3, 7):
        np.testing.assert_allclose(mat(W, t), [[0, -2, 0], [2, 0, 0], [0, 0, 0]], atol=1e-12)


def test_body_velocity_matches_finite_differences():
    R = rotation_about(1, "t^2 + sin(t)")
    curve = RigidMotionCurve.make(["t^2", "cos(t)", "1"], R)
    _, W = body_velocity(curve)
    t, h = 0.7, 1e-5
    Rdot = (mat(R, t + h) - mat(R, t - h)) / (2 * h)
    np.testing.assert_allclose(mat(W, t), Rdot @ mat(R, t).T, atol=1e-8)


def test_inertial_section_is_integrable():
    curve = RigidMotionCurve.make(["t", "t^2", "0"], rotation_about(2, "2*t"))
    assert max(r.max_abs for r in defect_report(rigid_spencer(inertial_section(curve)), T01)) <= 1e-15


def test_comoving_defect_rotating_body():
    curve = RigidMotionCurve.make(["t", "0", "0"], rotation_about(2, "2*t"))
    lin, rot = defect_report(comoving_defect(curve), T01)
    assert rot.max_abs > 0.1
    direct = comoving_defect_direct(curve)
    fac = comoving_defect(curve)
    for t in np.linspace(0, 1, 5):
        np.testing.assert_allclose(mat(fac[1], t), mat(direct[1], t), atol=1e-12)
        np.testing.assert_allclose(values(fac[0], t), values(direct[0], t), atol=1e-12)


def test_comoving_defect_nonrotating_body():
    curve = RigidMotionCurve.make(["t", "0", "0"], EYE3)
    assert max(r.max_abs for r in defect_report(comoving_defect(curve), T01)) == 0.0


def test_comoving_section_freezes_position():
    curve = RigidMotionCurve.make(["t", "0", "0"], rotation_about(2, "2*t"))
    s = comoving_section(curve)
    assert values(s.position, 0.9).tolist() == [0.0, 0.0, 0.0]


OMEGA_Z2 = [[0, -2, 0], [2, 0, 0], [0, 0, 0]]


def test_inertia_identity_and_scalar():
    np.testing.assert_allclose(mat(inertia_couple(InertiaLaw.scalar(), OMEGA_Z2)), OMEGA_Z2)
    np.testing.assert_allclose(mat(inertia_couple(InertiaLaw.scalar(3), OMEGA_Z2)), 3 * np.array(OMEGA_Z2))


def test_inertia_is_linear():
    rng = np.random.default_rng(0)
    I = InertiaLaw.make(np.round(rng.uniform(-1, 1, (3, 3, 3, 3)), 3).tolist())
    A, B = rng.uniform(-1, 1, (2, 3, 3))
    lhs = mat(inertia_couple(I, (2 * A + B).tolist()))
    rhs = 2 * mat(inertia_couple(I, A.tolist())) + mat(inertia_couple(I, B.tolist()))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    np.testing.assert_allclose(I.matrix_at({}) @ A.reshape(9), mat(inertia_couple(I, A.tolist())).reshape(9),
                               atol=1e-12)


def test_inertia_singular_rejected():
    with pytest.raises(ValueError):
        InertiaLaw.scalar(0).check_invertible([0.0])
    InertiaLaw.scalar(2).check_invertible([0.0, 1.0])


def test_power_pairing():
    assert float(evaluate(power_pairing(OMEGA_Z2, OMEGA_Z2), {})) == 8.0


def test_rigid_state_rejects_symmetric_torque():
    with pytest.raises(ShapeError):
        RigidDynamicalState.make([0, 0, 0], EYE3, [0, 0, 0], [[0] * 3] * 3, check_domain=T01)


def test_rigid_balance_torque_free():
    L = [[0, -5, 0], [5, 0, 0], [0, 0, 0]]
    st_ = RigidDynamicalState.make([0, 0, 0], [[0] * 3] * 3, [1, 2, 3], L)
    assert rigid_balance_residual(st_, T01).max_abs == 0.0


def test_rigid_balance_linear_torque():
    L = [[0, "t", 0], ["-t", 0, 0], [0, 0, 0]]
    tau = [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]
    st_ = RigidDynamicalState.make(["1", "0", "0"], tau, ["t", "0", "0"], L)
    assert rigid_balance_residual(st_, T01).max_abs == 0.0


def test_rigid_balance_from_inertia_law():
    curve = RigidMotionCurve.make([0, 0, 0], rotation_about(2, "t^2"))
    _, W = body_velocity(curve)
    L = inertia_couple(InertiaLaw.scalar(2), W)
    tau = [[0, -4, 0], [4, 0, 0], [0, 0, 0]]
    st_ = RigidDynamicalState.make([0, 0, 0], tau, [0, 0, 0], L)
    assert rigid_balance_residual(st_, T01).max_abs <= 1e-12


def test_rigid_balance_gyroscope():
    w = [[0, -1, 0], [1, 0, 0], [0, 0, 0]]
    Lb = np.array([[0, 0, 3], [0, 0, -1], [-3, 1, 0]], float)
    W = np.array(w, float)
    gyro = -(W @ Lb - Lb @ W)
    # axial form: -w x l with w = e3 and l read off Lb
    l_vec, w_vec = np.array([Lb[2, 1], Lb[0, 2], Lb[1, 0]]), np.array([0.0, 0.0, 1.0])
    g_vec = -np.cross(w_vec, l_vec)
    np.testing.assert_allclose([gyro[2, 1], gyro[0, 2], gyro[1, 0]], g_vec, atol=1e-15)
    st_ = RigidDynamicalState.make([0, 0, 0], gyro.tolist(), [0, 0, 0], Lb.tolist())
    assert rigid_balance_residual(st_, T01, "comoving", w).max_abs <= 1e-15
    assert rigid_balance_residual(st_, T01, "inertial").max_abs > 0.1
    with pytest.raises(ValueError):
        rigid_balance_residual(st_, T01, "comoving")
