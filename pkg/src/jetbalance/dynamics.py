"""Dynamical states, virtual displacements and balance residuals.

A dynamical state is a 1-form  phi = F_i dx^i + Pi_i^a dx^i_a  on J^1(M, N).
Its adjoint D*phi along a section s has components  F_i - d(Pi_i^a)/du^a,
where the divergence is the total derivative of Pi restricted to s.  That
reading is the one for which

    phi[j^1 dx] = D*phi[dx] + d(Pi_i^a dx^i)/du^a

holds; :func:`virtual_work_identity_defect` returns the difference of the two
sides so the identity can be checked rather than assumed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from jetbalance.domain import GridReport, ParamDomain, face_integral, integrate, sweep
from jetbalance.expr import Expr, ExprError, add, as_expr, differentiate, free_vars, mul, sub
from jetbalance.jet import JetCoordinates, JetSection, ShapeError, _check_vars, _grid

__all__ = [
    "DynamicalForm", "Variation", "Connection", "VirtualWork",
    "restrict", "virtual_work_density", "prolong_variation", "variation_spencer",
    "adjoint", "balance_residual", "covariant_adjoint", "covariant_balance_residual",
    "covariant_variation", "total_virtual_work", "virtual_work_identity_defect",
    "covariant_identity_defect", "divergence_term",
]


@dataclass(frozen=True)
class DynamicalForm:
    """Components F_i and Pi_i^a as functions on J^1.

    There is deliberately no du^a slot.
    """

    coords: JetCoordinates
    force: tuple[Expr, ...]
    stress: tuple[tuple[Expr, ...], ...]

    @classmethod
    def make(cls, coords: JetCoordinates, force, stress) -> "DynamicalForm":
        F = tuple(as_expr(f) for f in force)
        if len(F) != coords.n:
            raise ShapeError(f"expected {coords.n} force components, got {len(F)}")
        P = _grid(stress, coords.n, coords.m, "stress-momentum components")
        _check_vars(F + tuple(c for r in P for c in r), coords.all_names, "dynamical form")
        return cls(coords, F, P)


@dataclass(frozen=True)
class Variation:
    """Virtual displacement (dx^i(u), dx^i_a(u)) along a section."""

    source: tuple[str, ...]
    position: tuple[Expr, ...]
    jet: tuple[tuple[Expr, ...], ...]

    @classmethod
    def make(cls, source, position, jet) -> "Variation":
        pos = tuple(as_expr(p) for p in position)
        jet = _grid(jet, len(pos), len(source), "variation jet components")
        _check_vars(pos + tuple(c for r in jet for c in r), source, "variation")
        return cls(tuple(source), pos, jet)


@dataclass(frozen=True)
class Connection:
    """Coefficients omega[i][j][a] (omega^i_{ja}) depending on (u, x) only."""

    coords: JetCoordinates
    coeffs: tuple[tuple[tuple[Expr, ...], ...], ...]

    @classmethod
    def make(cls, coords: JetCoordinates, coeffs) -> "Connection":
        n, m = coords.n, coords.m
        arr = tuple(tuple(tuple(as_expr(c) for c in row) for row in plane) for plane in coeffs)
        if len(arr) != n or any(len(p) != n or any(len(r) != m for r in p) for p in arr):
            raise ShapeError(f"connection coefficients must have shape ({n}, {n}, {m})")
        _check_vars([c for p in arr for r in p for c in r], coords.source + coords.target,
                    "connection (no jet variables allowed)")
        return cls(coords, arr)

    @classmethod
    def zero(cls, coords: JetCoordinates) -> "Connection":
        return cls.make(coords, [[[0] * coords.m for _ in range(coords.n)] for _ in range(coords.n)])


def _check_compatible(phi: DynamicalForm, s: JetSection) -> None:
    if phi.coords != s.coords:
        raise ShapeError("dynamical form and section use different jet coordinates")


def restrict(phi: DynamicalForm, s: JetSection) -> tuple[tuple[Expr, ...], tuple[tuple[Expr, ...], ...]]:
    """(F o s, Pi o s) as functions of u."""
    _check_compatible(phi, s)
    F = tuple(s.pull(f) for f in phi.force)
    P = tuple(tuple(s.pull(p) for p in row) for row in phi.stress)
    for e in F + tuple(c for r in P for c in r):
        extra = free_vars(e) - set(s.source)
        if extra:
            raise ExprError(f"unbound variable(s) {sorted(extra)} after restriction")
    return F, P


def virtual_work_density(phi: DynamicalForm, dxi: Variation, s: JetSection) -> Expr:
    """phi[dxi] = F_i dx^i + Pi_i^a dx^i_a along s."""
    if len(dxi.position) != phi.coords.n or dxi.source != s.source:
        raise ShapeError("variation does not match the section")
    F, P = restrict(phi, s)
    terms = [mul(f, d) for f, d in zip(F, dxi.position)]
    terms += [mul(P[i][a], dxi.jet[i][a]) for i in range(len(F)) for a in range(len(s.source))]
    return add(*terms)


def prolong_variation(source, dx) -> Variation:
    dx = tuple(as_expr(d) for d in dx)
    jet = tuple(tuple(differentiate(d, u) for u in source) for d in dx)
    return Variation.make(source, dx, jet)


def variation_spencer(dxi: Variation) -> tuple[tuple[Expr, ...], ...]:
    """D xi = dx^i_a - d(dx^i)/du^a."""
    return tuple(tuple(sub(dxi.jet[i][a], differentiate(dxi.position[i], u))
                       for a, u in enumerate(dxi.source))
                 for i in range(len(dxi.position)))


def adjoint(phi: DynamicalForm, s: JetSection) -> tuple[Expr, ...]:
    """Components of D*phi along s: F_i - d(Pi_i^a o s)/du^a."""
    F, P = restrict(phi, s)
    return tuple(sub(F[i], add(*(differentiate(P[i][a], u) for a, u in enumerate(s.source))))
                 for i in range(len(F)))


def balance_residual(phi: DynamicalForm, s: JetSection, domain: ParamDomain) -> GridReport:
    return sweep(adjoint(phi, s), domain)


def divergence_term(phi: DynamicalForm, s: JetSection, dx) -> Expr:
    """d(Pi_i^a dx^i)/du^a along s."""
    _, P = restrict(phi, s)
    dx = tuple(as_expr(d) for d in dx)
    return add(*(differentiate(mul(P[i][a], dx[i]), u)
                 for i in range(len(dx)) for a, u in enumerate(s.source)))


def virtual_work_identity_defect(phi: DynamicalForm, s: JetSection, dx) -> Expr:
    """LHS - RHS of  phi[j^1 dx] = D*phi[dx] + div(Pi dx); zero when the identity holds."""
    dx = tuple(as_expr(d) for d in dx)
    lhs = virtual_work_density(phi, prolong_variation(s.source, dx), s)
    dstar = adjoint(phi, s)
    rhs = add(add(*(mul(a, d) for a, d in zip(dstar, dx))), divergence_term(phi, s, dx))
    return sub(lhs, rhs)


def _restricted_connection(omega: Connection, s: JetSection):
    return tuple(tuple(tuple(s.pull(c) for c in row) for row in plane) for plane in omega.coeffs)


def covariant_adjoint(phi: DynamicalForm, s: JetSection, omega: Connection) -> tuple[Expr, ...]:
    """F_i - nabla_a Pi_i^a with nabla_a Pi_i^a = dPi_i^a/du^a - omega^j_{ia} Pi_j^a."""
    if omega.coords != phi.coords:
        raise ShapeError("connection and dynamical form use different jet coordinates")
    F, P = restrict(phi, s)
    w = _restricted_connection(omega, s)
    n, src = len(F), s.source
    out = []
    for i in range(n):
        div = add(*(differentiate(P[i][a], u) for a, u in enumerate(src)))
        corr = add(*(mul(w[j][i][a], P[j][a]) for j in range(n) for a in range(len(src))))
        out.append(sub(F[i], sub(div, corr)))
    return tuple(out)


def covariant_balance_residual(phi, s, omega, domain: ParamDomain) -> GridReport:
    return sweep(covariant_adjoint(phi, s, omega), domain)


def covariant_variation(s: JetSection, omega: Connection, dx) -> Variation:
    """Non-integrable variation  dx^i_a = d_a dx^i + omega^i_{ja} dx^j  along s."""
    dx = tuple(as_expr(d) for d in dx)
    w = _restricted_connection(omega, s)
    n = len(dx)
    jet = tuple(tuple(add(differentiate(dx[i], u), *(mul(w[i][j][a], dx[j]) for j in range(n)))
                      for a, u in enumerate(s.source)) for i in range(n))
    return Variation.make(s.source, dx, jet)


def covariant_identity_defect(phi: DynamicalForm, s: JetSection, omega: Connection, dx) -> Expr:
    """LHS - RHS of  phi[dxi] = D-bar*phi[dx] + div(Pi dx)  for the covariant variation."""
    dx = tuple(as_expr(d) for d in dx)
    lhs = virtual_work_density(phi, covariant_variation(s, omega, dx), s)
    dbar = covariant_adjoint(phi, s, omega)
    rhs = add(add(*(mul(a, d) for a, d in zip(dbar, dx))), divergence_term(phi, s, dx))
    return sub(lhs, rhs)


@dataclass
class VirtualWork:
    """Trapezoid quadratures of the virtual work and its two pieces."""

    interior: float
    boundary: float
    total: float

    @property
    def defect(self) -> float:
        return abs(self.total - self.interior - self.boundary)


def total_virtual_work(phi: DynamicalForm, s: JetSection, dx, domain: ParamDomain) -> VirtualWork:
    """Interior and boundary parts of the virtual work of the prolonged variation dx.

    interior = integral of D*phi[dx]; boundary = outward flux of Pi_i^a dx^i
    through the faces u^a = lo/hi; total = integral of phi[j^1 dx].  The
    total equals interior + boundary up to O(h^2) quadrature error.
    """
    if domain.names != s.source:
        raise ShapeError(f"domain axes {domain.names} must match section source {s.source}")
    dx = tuple(as_expr(d) for d in dx)
    _, P = restrict(phi, s)
    dstar = adjoint(phi, s)
    interior = integrate(domain.evaluate(add(*(mul(a, d) for a, d in zip(dstar, dx)))), domain.axes)
    boundary = 0.0
    for a in range(len(s.source)):
        flux = add(*(mul(P[i][a], dx[i]) for i in range(len(dx))))
        boundary += face_integral(domain.evaluate(flux), domain, a)
    density = virtual_work_density(phi, prolong_variation(s.source, dx), s)
    total = integrate(domain.evaluate(density), domain.axes)
    return VirtualWork(interior, float(boundary), total)


def convergence_order(errors, steps) -> float:
    """Least-squares slope of log(error) against log(step)."""
    errors, steps = np.asarray(errors, float), np.asarray(steps, float)
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
