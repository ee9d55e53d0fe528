"""Least action as the special case phi = dL."""
from __future__ import annotations

from dataclasses import dataclass

from jetbalance.domain import ParamDomain, integrate
from jetbalance.dynamics import DynamicalForm, VirtualWork, total_virtual_work
from jetbalance.expr import Expr, add, as_expr, differentiate, mul, render, sub
from jetbalance.jet import JetCoordinates, JetSection, SmoothMap, _check_vars, prolong, total_derivative

__all__ = [
    "LagrangianDensity", "exterior_of_lagrangian", "variational_derivative",
    "action", "first_variation", "action_directional_derivative", "euler_lagrange_equations",
]


@dataclass(frozen=True)
class LagrangianDensity:
    """Scalar L(u, x, x_a); explicit u-dependence is allowed."""

    coords: JetCoordinates
    expr: Expr

    @classmethod
    def make(cls, coords: JetCoordinates, expr) -> "LagrangianDensity":
        e = as_expr(expr)
        _check_vars([e], coords.all_names, "Lagrangian density")
        return cls(coords, e)


def exterior_of_lagrangian(L: LagrangianDensity) -> DynamicalForm:
    """phi = dL:  F_i = dL/dx^i,  Pi_i^a = dL/dx^i_a."""
    c = L.coords
    F = [differentiate(L.expr, x) for x in c.target]
    P = [[differentiate(L.expr, name) for name in row] for row in c.jet_names]
    return DynamicalForm.make(c, F, P)


def variational_derivative(L: LagrangianDensity, s: JetSection) -> tuple[Expr, ...]:
    """dL/dx^i - d_a(dL/dx^i_a) along s.

    The total derivative d_a is expanded by the chain rule on J^1, which is a
    different computation from ``adjoint(exterior_of_lagrangian(L), s)``.
    """
    c = L.coords
    out = []
    for i, x in enumerate(c.target):
        dLdx = s.pull(differentiate(L.expr, x))
        flux = add(*(total_derivative(differentiate(L.expr, c.jet_names[i][a]), c, s, a)
                     for a in range(c.m)))
        out.append(sub(dLdx, flux))
    return tuple(out)


def euler_lagrange_equations(L: LagrangianDensity) -> list[str]:
    """Rendered equations ``F_i - d/du^a(Pi_i^a) = 0`` with F, Pi as jet functions."""
    phi = exterior_of_lagrangian(L)
    lines = []
    for i in range(L.coords.n):
        parts = [render(phi.force[i])]
        for a, u in enumerate(L.coords.source):
            parts.append(f"d/d{u}({render(phi.stress[i][a])})")
        lines.append(" - ".join(parts) + " = 0")
    return lines


def _section_of(L: LagrangianDensity, f: SmoothMap) -> JetSection:
    if f.source != L.coords.source or f.target != L.coords.target:
        raise ValueError("map and Lagrangian use different coordinates")
    return prolong(f, L.coords.jet_names)


def action(L: LagrangianDensity, f: SmoothMap, domain: ParamDomain) -> float:
    """Trapezoid quadrature of L(j^1 f) over the domain."""
    s = _section_of(L, f)
    return integrate(domain.evaluate(s.pull(L.expr)), domain.axes)


def first_variation(L: LagrangianDensity, f: SmoothMap, dx, domain: ParamDomain) -> VirtualWork:
    """(interior, boundary) split of the virtual work of dL along j^1 f."""
    return total_virtual_work(exterior_of_lagrangian(L), _section_of(L, f), dx, domain)


def action_directional_derivative(L: LagrangianDensity, f: SmoothMap, dx, domain: ParamDomain,
                                  eps: float = 1e-5) -> float:
    """Central difference (S[x + eps dx] - S[x - eps dx]) / (2 eps)."""
    dx = [as_expr(d) for d in dx]

    def shifted(sign):
        comps = [add(x, mul(sign * eps, d)) for x, d in zip(f.components, dx)]
        return SmoothMap.make(f.source, f.target, comps)

    return (action(L, shifted(1.0), domain) - action(L, shifted(-1.0), domain)) / (2 * eps)
