"""Point and rigid-body mechanics.

Matrices are nested tuples of expressions with the upper index as the row:
``R[i][j]`` is R^i_j and ``omega[i][j]`` is omega^i_j.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from jetbalance.domain import GridReport, ParamDomain, sweep
from jetbalance.dynamics import DynamicalForm, Variation, adjoint
from jetbalance.expr import (
    Expr, add, as_expr, cos, differentiate, evaluate, mul, neg, sin, sub, substitute, var,
)
from jetbalance.jet import JetCoordinates, JetSection, ShapeError, _check_vars

__all__ = [
    "PointModel", "RigidMotionCurve", "RigidSection", "RigidDynamicalState", "InertiaLaw",
    "momentum", "newton_residual", "covariant_momentum_rate", "covariant_newton_residual",
    "rotating_frame_velocity", "rotating_frame_section", "rotating_frame_variation",
    "iso3_act", "iso3_compose", "body_velocity", "inertial_section", "rigid_spencer",
    "comoving_defect", "comoving_defect_direct", "inertia_couple", "rigid_balance_residual",
    "rotation_about", "power_pairing", "OrthogonalityError",
]

Matrix = tuple[tuple[Expr, ...], ...]


class OrthogonalityError(ValueError):
    pass


def _matrix(rows, n: int | None = None, what: str = "matrix") -> Matrix:
    M = tuple(tuple(as_expr(c) for c in r) for r in rows)
    k = len(M) if n is None else n
    if len(M) != k or any(len(r) != k for r in M):
        raise ShapeError(f"{what}: expected a {k}x{k} matrix")
    return M


def _matvec(M: Matrix, v) -> tuple[Expr, ...]:
    return tuple(add(*(mul(M[i][j], v[j]) for j in range(len(v)))) for i in range(len(M)))


def _matmul(A: Matrix, B: Matrix) -> Matrix:
    n, k, m = len(A), len(B), len(B[0])
    return tuple(tuple(add(*(mul(A[i][l], B[l][j]) for l in range(k))) for j in range(m))
                 for i in range(n))


def _transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A))


def _ddt(M, t: str):
    if isinstance(M, Expr):
        return differentiate(M, t)
    return tuple(_ddt(r, t) for r in M)


def _numeric(M, binding) -> np.ndarray:
    return np.array([[evaluate(c, binding) for c in row] for row in M], dtype=float)


def _sample_times(domain: ParamDomain | None, t: str, n: int = 50):
    if domain is None:
        return np.linspace(0.0, 1.0, n)
    ax = {a.name: a for a in domain.axes}[t]
    return np.linspace(ax.lo, ax.hi, max(n, ax.n))


# ---------------------------------------------------------------------------
# point mechanics

@dataclass(frozen=True)
class PointModel:
    """Mass m(t), metric g_ij(x), force F_i(t, x, v) and optional frame spin omega(t)."""

    coords: JetCoordinates
    mass: Expr
    metric: Matrix
    force: tuple[Expr, ...]
    spin: Matrix | None = None

    @classmethod
    def make(cls, coords: JetCoordinates, mass, metric, force, spin=None,
             check_domain: ParamDomain | None = None) -> "PointModel":
        if coords.m != 1:
            raise ShapeError("point mechanics needs a single time parameter")
        n = coords.n
        t = coords.source[0]
        g = _matrix(metric, n, "metric")
        F = tuple(as_expr(f) for f in force)
        if len(F) != n:
            raise ShapeError(f"expected {n} force components")
        m = as_expr(mass)
        _check_vars([m], (t,), "mass")
        _check_vars([c for r in g for c in r], coords.target, "metric")
        _check_vars(F, coords.all_names, "force")
        w = None
        if spin is not None:
            w = _matrix(spin, n, "spin")
            _check_vars([c for r in w for c in r], (t,), "spin")
        model = cls(coords, m, g, F, w)
        model._check_symmetry(check_domain)
        return model

    def _check_symmetry(self, domain: ParamDomain | None, count: int = 50) -> None:
        rng = np.random.default_rng(0)
        pts = {x: rng.uniform(-1, 1, count) for x in self.coords.target}
        pts[self.coords.source[0]] = _sample_times(domain, self.coords.source[0], count)[:count]
        g = _numeric_stack(self.metric, pts, count)
        if np.max(np.abs(g - np.swapaxes(g, 0, 1))) > 1e-12:
            raise ShapeError("metric must be symmetric")
        if self.spin is not None:
            w = _numeric_stack(self.spin, pts, count)
            if np.max(np.abs(w + np.swapaxes(w, 0, 1))) > 1e-12:
                raise ShapeError("spin matrix must be antisymmetric")

    def momentum_form(self) -> tuple[Expr, ...]:
        """p_i = m(t) g_ij(x) v^j as functions on J^1."""
        v = [var(name) for name in self.coords.flat_jet_names]
        return tuple(mul(self.mass, p) for p in _matvec(self.metric, v))

    def dynamical_form(self) -> DynamicalForm:
        p = self.momentum_form()
        return DynamicalForm.make(self.coords, self.force, [[pi] for pi in p])


def _numeric_stack(M, pts, count) -> np.ndarray:
    return np.array([[np.broadcast_to(evaluate(c, pts), (count,)) for c in row] for row in M])


def momentum(model: PointModel, s: JetSection) -> tuple[Expr, ...]:
    """p_i(t) = m(t) g_ij(x(t)) v^j(t)."""
    if s.coords != model.coords:
        raise ShapeError("section and point model use different coordinates")
    return tuple(s.pull(p) for p in model.momentum_form())


def newton_residual(model: PointModel, s: JetSection, domain: ParamDomain) -> GridReport:
    """Grid max of F_i - dp_i/dt, i.e. the adjoint D*phi of phi = F dx + p dv."""
    return sweep(adjoint(model.dynamical_form(), s), domain)


def covariant_momentum_rate(model: PointModel, p: Sequence) -> tuple[Expr, ...]:
    """nabla_t p_i = dp_i/dt - omega_i^j p_j."""
    if model.spin is None:
        raise ValueError("covariant rate needs a frame spin matrix")
    t = model.coords.source[0]
    p = tuple(as_expr(c) for c in p)
    wp = _matvec(model.spin, p)
    return tuple(sub(differentiate(pi, t), c) for pi, c in zip(p, wp))


def covariant_newton_residual(model: PointModel, s: JetSection, domain: ParamDomain) -> GridReport:
    """Grid max of F_i - nabla_t p_i."""
    rate = covariant_momentum_rate(model, momentum(model, s))
    F = tuple(s.pull(f) for f in model.force)
    return sweep([sub(f, r) for f, r in zip(F, rate)], domain)


def rotating_frame_velocity(position: Sequence, spin: Sequence, t: str = "t") -> tuple[Expr, ...]:
    """v^j = dx^j/dt + omega^j_i x^i."""
    x = tuple(as_expr(c) for c in position)
    w = _matrix(spin, len(x), "spin")
    return tuple(add(differentiate(xi, t), c) for xi, c in zip(x, _matvec(w, x)))


def rotating_frame_section(coords: JetCoordinates, position, spin) -> JetSection:
    v = rotating_frame_velocity(position, spin, coords.source[0])
    return JetSection.make(coords.source, coords.target, position, [[c] for c in v], coords.jet_names)


def rotating_frame_variation(dx: Sequence, spin: Sequence, t: str = "t") -> Variation:
    """Variation with dv^i = -omega^i_j dx^j."""
    dx = tuple(as_expr(c) for c in dx)
    w = _matrix(spin, len(dx), "spin")
    return Variation.make((t,), dx, [[neg(c)] for c in _matvec(w, dx)])


# ---------------------------------------------------------------------------
# rigid bodies

def _check_orthogonal(R: np.ndarray, tol: float = 1e-9) -> None:
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise OrthogonalityError("rotation matrix is not special orthogonal")


def iso3_act(g, frame):
    """(a, R).(x, e) = (a + R x, R e); rows of ``e`` are the frame vectors e_j."""
    a, R = (np.asarray(c, float) for c in g)
    x, e = (np.asarray(c, float) for c in frame)
    _check_orthogonal(R)
    return a + R @ x, R @ e


def iso3_compose(g2, g1):
    """Group product g2 g1 = (a2 + R2 a1, R2 R1)."""
    a2, R2 = (np.asarray(c, float) for c in g2)
    a1, R1 = (np.asarray(c, float) for c in g1)
    return a2 + R2 @ a1, R2 @ R1


def rotation_about(axis: int, angle) -> Matrix:
    """Rotation matrix about coordinate axis 0, 1 or 2 by a symbolic angle."""
    th = as_expr(angle)
    c, s = cos(th), sin(th)
    i, j = [k for k in range(3) if k != axis]
    M = [[as_expr(0)] * 3 for _ in range(3)]
    M[axis][axis] = as_expr(1)
    M[i][i], M[j][j] = c, c
    M[i][j], M[j][i] = neg(s), s
    return tuple(tuple(r) for r in M)


@dataclass(frozen=True)
class RigidMotionCurve:
    """t -> (a^i(t), R^i_j(t)) in ISO(3)."""

    t: str
    translation: tuple[Expr, ...]
    rotation: Matrix

    @classmethod
    def make(cls, translation, rotation, t: str = "t", check_domain: ParamDomain | None = None,
             tol: float = 1e-9) -> "RigidMotionCurve":
        a = tuple(as_expr(c) for c in translation)
        if len(a) != 3:
            raise ShapeError("translation needs 3 components")
        R = _matrix(rotation, 3, "rotation")
        _check_vars(a + tuple(c for r in R for c in r), (t,), "rigid motion")
        curve = cls(t, a, R)
        for tv in _sample_times(check_domain, t):
            _check_orthogonal(_numeric(R, {t: tv}), tol)
        return curve

    def inverse_rotation(self) -> Matrix:
        return _transpose(self.rotation)


def body_velocity(curve: RigidMotionCurve) -> tuple[tuple[Expr, ...], Matrix]:
    """Right-translated velocities  v0 = R~ dx/dt,  Omega = (dR/dt) R~  with R~ = R^T."""
    Rt = curve.inverse_rotation()
    xdot = _ddt(curve.translation, curve.t)
    v0 = _matvec(Rt, xdot)
    Omega = _matmul(_ddt(curve.rotation, curve.t), Rt)
    return v0, Omega


@dataclass(frozen=True)
class RigidSection:
    """Section t -> (x(t), R(t), v(t), V(t)) of J^1(R, ISO(3))."""

    t: str
    position: tuple[Expr, ...]
    rotation: Matrix
    velocity: tuple[Expr, ...]
    rotation_velocity: Matrix


def inertial_section(curve: RigidMotionCurve) -> RigidSection:
    return RigidSection(curve.t, curve.translation, curve.rotation,
                        _ddt(curve.translation, curve.t), _ddt(curve.rotation, curve.t))


def comoving_section(curve: RigidMotionCurve, t0: float = 0.0) -> RigidSection:
    """Frozen position (x(t0), R(t0)) carrying the body velocities."""
    v0, Omega = body_velocity(curve)
    x0 = tuple(substitute(c, {curve.t: t0}) for c in curve.translation)
    R0 = tuple(tuple(substitute(c, {curve.t: t0}) for c in r) for r in curve.rotation)
    return RigidSection(curve.t, x0, R0, v0, Omega)


def rigid_spencer(s: RigidSection) -> tuple[tuple[Expr, ...], Matrix]:
    """Ds = (xdot - v, Rdot - V)."""
    xdot = _ddt(s.position, s.t)
    Rdot = _ddt(s.rotation, s.t)
    lin = tuple(sub(a, b) for a, b in zip(xdot, s.velocity))
    rot = tuple(tuple(sub(a, b) for a, b in zip(r1, r2)) for r1, r2 in zip(Rdot, s.rotation_velocity))
    return lin, rot


def comoving_defect(curve: RigidMotionCurve) -> tuple[tuple[Expr, ...], Matrix]:
    """Factored co-moving defect  ((I - R~) xdot,  Rdot (I - R~))."""
    Rt = curve.inverse_rotation()
    I_minus = tuple(tuple(sub(1.0 if i == j else 0.0, Rt[i][j]) for j in range(3)) for i in range(3))
    xdot = _ddt(curve.translation, curve.t)
    return _matvec(I_minus, xdot), _matmul(_ddt(curve.rotation, curve.t), I_minus)


def comoving_defect_direct(curve: RigidMotionCurve) -> tuple[tuple[Expr, ...], Matrix]:
    """(xdot - v0, Rdot - Omega) computed from the body velocities."""
    v0, Omega = body_velocity(curve)
    xdot = _ddt(curve.translation, curve.t)
    Rdot = _ddt(curve.rotation, curve.t)
    return (tuple(sub(a, b) for a, b in zip(xdot, v0)),
            tuple(tuple(sub(a, b) for a, b in zip(r1, r2)) for r1, r2 in zip(Rdot, Omega)))


def defect_report(defect, domain: ParamDomain) -> tuple[GridReport, GridReport]:
    lin, rot = defect
    return (sweep(list(lin), domain),
            sweep({(i, j): c for i, r in enumerate(rot) for j, c in enumerate(r)}, domain))


@dataclass(frozen=True)
class InertiaLaw:
    """coeffs[i][k][j][l] = I_ik^jl(t)."""

    coeffs: tuple

    @classmethod
    def make(cls, coeffs) -> "InertiaLaw":
        arr = np.empty((3, 3, 3, 3), dtype=object)
        src = np.asarray(coeffs, dtype=object)
        if src.shape != (3, 3, 3, 3):
            raise ShapeError("inertia coefficients must have shape (3, 3, 3, 3)")
        for idx in np.ndindex(3, 3, 3, 3):
            arr[idx] = as_expr(src[idx])
        return cls(tuple(arr.reshape(81)))

    @classmethod
    def scalar(cls, c=1) -> "InertiaLaw":
        c = as_expr(c)
        return cls.make([[[[c if (i == k and j == l) else 0 for l in range(3)] for j in range(3)]
                          for k in range(3)] for i in range(3)])

    def entry(self, i, k, j, l) -> Expr:
        return self.coeffs[((i * 3 + k) * 3 + j) * 3 + l]

    def matrix_at(self, binding) -> np.ndarray:
        """9x9 matrix of the map Omega -> L at one point."""
        M = np.zeros((9, 9))
        for i, k, j, l in np.ndindex(3, 3, 3, 3):
            M[i * 3 + j, k * 3 + l] = evaluate(self.entry(i, k, j, l), binding)
        return M

    def check_invertible(self, times, t: str = "t") -> None:
        """Invertibility on antisymmetric matrices at the given times."""
        basis = []
        for a, b in ((0, 1), (0, 2), (1, 2)):
            E = np.zeros((3, 3))
            E[a, b], E[b, a] = -1.0, 1.0
            basis.append(E.reshape(9))
        B = np.array(basis).T
        for tv in times:
            image = self.matrix_at({t: tv}) @ B
            if np.linalg.matrix_rank(image, tol=1e-12) < 3:
                raise ValueError(f"inertia law is singular on antisymmetric matrices at {t}={tv}")


def inertia_couple(I: InertiaLaw, Omega) -> Matrix:
    """L_i^j = I_ik^jl Omega^k_l."""
    W = _matrix(Omega, 3, "angular velocity")
    return tuple(tuple(add(*(mul(I.entry(i, k, j, l), W[k][l]) for k in range(3) for l in range(3)))
                       for j in range(3)) for i in range(3))


def power_pairing(torque, Omega) -> Expr:
    """Instantaneous power, the full contraction sum_ij tau[i][j] Omega[i][j]."""
    T, W = _matrix(torque, 3), _matrix(Omega, 3)
    return add(*(mul(T[i][j], W[i][j]) for i in range(3) for j in range(3)))


@dataclass(frozen=True)
class RigidDynamicalState:
    """Force F, torque tau, momentum p, angular momentum L as functions of t."""

    t: str
    force: tuple[Expr, ...]
    torque: Matrix
    momentum: tuple[Expr, ...]
    angular_momentum: Matrix

    @classmethod
    def make(cls, force, torque, momentum, angular_momentum, t: str = "t",
             check_domain: ParamDomain | None = None) -> "RigidDynamicalState":
        F = tuple(as_expr(c) for c in force)
        p = tuple(as_expr(c) for c in momentum)
        tau = _matrix(torque, 3, "torque")
        L = _matrix(angular_momentum, 3, "angular momentum")
        if len(F) != 3 or len(p) != 3:
            raise ShapeError("force and momentum need 3 components")
        _check_vars(F + p + tuple(c for r in tau + L for c in r), (t,), "rigid dynamical state")
        for tv in _sample_times(check_domain, t):
            for M, what in ((tau, "torque"), (L, "angular momentum")):
                A = _numeric(M, {t: tv})
                if np.max(np.abs(A + A.T)) > 1e-9:
                    raise ShapeError(f"{what} must be antisymmetric")
        return cls(t, F, tau, p, L)


@dataclass
class RigidBalanceReport:
    linear: GridReport
    angular: GridReport

    @property
    def max_abs(self) -> float:
        return max(self.linear.max_abs, self.angular.max_abs)


def rigid_balance_residual(state: RigidDynamicalState, domain: ParamDomain, frame: str = "inertial",
                           spin=None) -> RigidBalanceReport:
    """Balance of linear and angular momentum.

    inertial:  F - dp/dt,  tau - dL/dt.
    comoving:  F - (dp/dt - w p),  tau - (dL/dt - [w, L])  with spin matrix w.

    The spin acts on the mixed tensor L by the commutator, so the rate stays
    antisymmetric; on axial vectors this is l' - w x l, matching the rate of p.
    """
    t = state.t
    pdot = _ddt(state.momentum, t)
    Ldot = _ddt(state.angular_momentum, t)
    if frame == "inertial":
        lin_rate, ang_rate = pdot, Ldot
    elif frame == "comoving":
        if spin is None:
            raise ValueError("co-moving balance needs a spin matrix")
        w = _matrix(spin, 3, "spin")
        wp = _matvec(w, state.momentum)
        wL = _matmul(w, state.angular_momentum)
        Lw = _matmul(state.angular_momentum, w)
        lin_rate = tuple(sub(a, b) for a, b in zip(pdot, wp))
        ang_rate = tuple(tuple(sub(Ldot[i][j], sub(wL[i][j], Lw[i][j])) for j in range(3)) for i in range(3))
    else:
        raise ValueError(f"unknown frame {frame!r}")
    lin = sweep([sub(f, r) for f, r in zip(state.force, lin_rate)], domain)
    ang = sweep({(i, j): sub(state.torque[i][j], ang_rate[i][j]) for i in range(3) for j in range(3)},
                domain)
    return RigidBalanceReport(lin, ang)
