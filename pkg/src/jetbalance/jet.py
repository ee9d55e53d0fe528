"""First-order jets: sections, prolongation, contact forms and the Spencer operator.

A section of the source projection of J^1(M, N) is stored as explicit
expressions u -> (u^a, x^i(u), x^i_a(u)).  Jet components are independent
expressions, so a section need not be a prolongation; the Spencer operator
measures by how much it fails to be one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from jetbalance.domain import GridReport, ParamDomain, sweep
from jetbalance.expr import (
    Expr, ExprError, add, as_expr, differentiate, free_vars, is_zero, mul, simplify, sub,
    substitute,
)

__all__ = [
    "JetCoordinates", "SmoothMap", "JetSection", "CotargetField", "ConstraintSet",
    "IntegrabilityReport", "ConstraintReport",
    "prolong", "spencer", "contact_pullback", "exterior_derivative_1form",
    "contact_curvature", "is_integrable", "anholonomy_residual", "constraint_residual",
    "total_derivative", "curvature_report", "ShapeError",
]


class ShapeError(ValueError):
    pass


def _grid(rows, n: int, m: int, what: str) -> tuple[tuple[Expr, ...], ...]:
    rows = tuple(tuple(as_expr(c) for c in row) for row in rows)
    if len(rows) != n or any(len(r) != m for r in rows):
        raise ShapeError(f"{what}: expected shape ({n}, {m})")
    return rows


def _check_vars(exprs, allowed: Sequence[str], what: str) -> None:
    allowed = set(allowed)
    for e in exprs:
        extra = free_vars(e) - allowed
        if extra:
            raise ExprError(f"{what}: unexpected variable(s) {sorted(extra)}")


@dataclass(frozen=True)
class JetCoordinates:
    """Names of the coordinates (u^a, x^i, x^i_a) on J^1(M, N)."""

    source: tuple[str, ...]
    target: tuple[str, ...]
    jet_names: tuple[tuple[str, ...], ...]

    @classmethod
    def make(cls, source, target, jet_names=None) -> "JetCoordinates":
        source, target = tuple(source), tuple(target)
        if jet_names is None:
            jet_names = tuple(tuple(f"{x}_{u}" for u in source) for x in target)
        jet_names = tuple(tuple(r) for r in jet_names)
        coords = cls(source, target, jet_names)
        names = list(coords.all_names)
        if len(set(names)) != len(names):
            raise ShapeError(f"jet coordinate names must be distinct: {names}")
        if len(jet_names) != len(target) or any(len(r) != len(source) for r in jet_names):
            raise ShapeError("jet names must have shape (n, m)")
        return coords

    @property
    def m(self) -> int:
        return len(self.source)

    @property
    def n(self) -> int:
        return len(self.target)

    @property
    def flat_jet_names(self) -> tuple[str, ...]:
        return tuple(name for row in self.jet_names for name in row)

    @property
    def all_names(self) -> tuple[str, ...]:
        return self.source + self.target + self.flat_jet_names


@dataclass(frozen=True)
class SmoothMap:
    """A map x: M -> N given by component expressions in the source variables."""

    source: tuple[str, ...]
    target: tuple[str, ...]
    components: tuple[Expr, ...]

    @classmethod
    def make(cls, source, target, components) -> "SmoothMap":
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != len(target):
            raise ShapeError("one component per target coordinate required")
        _check_vars(comps, source, "map component")
        return cls(tuple(source), tuple(target), comps)


@dataclass(frozen=True)
class JetSection:
    """Section u -> (u^a, x^i(u), x^i_a(u)); jet[i][a] is x^i_a."""

    coords: JetCoordinates
    position: tuple[Expr, ...]
    jet: tuple[tuple[Expr, ...], ...]

    @classmethod
    def make(cls, source, target, position, jet, jet_names=None) -> "JetSection":
        coords = JetCoordinates.make(source, target, jet_names)
        pos = tuple(as_expr(p) for p in position)
        if len(pos) != coords.n:
            raise ShapeError("one position component per target coordinate required")
        jet = _grid(jet, coords.n, coords.m, "jet components")
        _check_vars(pos + tuple(c for r in jet for c in r), coords.source, "section component")
        return cls(coords, pos, jet)

    @property
    def source(self) -> tuple[str, ...]:
        return self.coords.source

    def substitution(self) -> dict[str, Expr]:
        """Mapping from jet coordinate names to this section's expressions."""
        sub_map = dict(zip(self.coords.target, self.position))
        for names, row in zip(self.coords.jet_names, self.jet):
            sub_map.update(zip(names, row))
        return sub_map

    def pull(self, e) -> Expr:
        """Compose a function on J^1 with the section (a function of u)."""
        return substitute(as_expr(e), self.substitution())


@dataclass(frozen=True)
class CotargetField:
    """components[i][a]: coefficient of du^a (x) d/dx^i."""

    source: tuple[str, ...]
    components: tuple[tuple[Expr, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.components), len(self.source)

    def labelled(self) -> dict[tuple[int, int], Expr]:
        return {(i, a): c for i, row in enumerate(self.components) for a, c in enumerate(row)}

    def __neg__(self) -> "CotargetField":
        return CotargetField(self.source, tuple(tuple(-c for c in r) for r in self.components))

    def __add__(self, other: "CotargetField") -> "CotargetField":
        _same_shape(self, other)
        return CotargetField(self.source, tuple(
            tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.components, other.components)))

    def __sub__(self, other: "CotargetField") -> "CotargetField":
        return self + (-other)

    def is_symbolically_zero(self) -> bool:
        return all(is_zero(simplify(c)) for r in self.components for c in r)


def _same_shape(a: CotargetField, b: CotargetField) -> None:
    if a.shape != b.shape or a.source != b.source:
        raise ShapeError(f"field shapes differ: {a.shape} over {a.source} vs {b.shape} over {b.source}")


def prolong(f: SmoothMap, jet_names=None) -> JetSection:
    """1-jet prolongation j^1 f: jet components are the true partials."""
    jet = tuple(tuple(differentiate(x, u) for u in f.source) for x in f.components)
    return JetSection.make(f.source, f.target, f.components, jet, jet_names)


def spencer(s: JetSection) -> CotargetField:
    """Ds = (x^i_a - x^i_{,a}) du^a (x) d/dx^i, jet minus derivative."""
    comps = tuple(
        tuple(sub(s.jet[i][a], differentiate(s.position[i], u)) for a, u in enumerate(s.source))
        for i in range(s.coords.n))
    return CotargetField(s.source, comps)


def contact_pullback(s: JetSection) -> CotargetField:
    """s*Theta^i = (x^i_{,a} - x^i_a) du^a, computed directly (not as -Ds)."""
    comps = tuple(
        tuple(sub(differentiate(s.position[i], u), s.jet[i][a]) for a, u in enumerate(s.source))
        for i in range(s.coords.n))
    return CotargetField(s.source, comps)


def exterior_derivative_1form(alpha: CotargetField) -> tuple[tuple[tuple[Expr, ...], ...], ...]:
    """d of a vector-valued 1-form; entry [i][a][b] = 1/2 (d_a alpha_b - d_b alpha_a)."""
    src = alpha.source
    return tuple(
        tuple(tuple(mul(0.5, sub(differentiate(row[b], src[a]), differentiate(row[a], src[b])))
                    for b in range(len(src))) for a in range(len(src)))
        for row in alpha.components)


def contact_curvature(s: JetSection) -> tuple[tuple[tuple[Expr, ...], ...], ...]:
    """Pull-back of d Theta^i: entry [i][a][b] = 1/2 (x^i_{a,b} - x^i_{b,a})."""
    src = s.source
    return tuple(
        tuple(tuple(mul(0.5, sub(differentiate(row[a], src[b]), differentiate(row[b], src[a])))
                    for b in range(len(src))) for a in range(len(src)))
        for row in s.jet)


def _flatten3(arr) -> dict[tuple[int, int, int], Expr]:
    return {(i, a, b): c for i, plane in enumerate(arr) for a, row in enumerate(plane)
            for b, c in enumerate(row)}


@dataclass
class IntegrabilityReport:
    integrable: bool
    max_residual: float
    argmax: dict[str, float]
    component: tuple[int, int] | None
    tol: float


def is_integrable(s: JetSection, domain: ParamDomain, tol: float = 1e-9) -> IntegrabilityReport:
    """Grid verdict on Ds = 0 (a report, not a proof)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    rep = sweep(spencer(s).labelled(), domain)
    return IntegrabilityReport(rep.max_abs <= tol, rep.max_abs, rep.argmax, rep.component, tol)


def anholonomy_residual(s: JetSection, alpha: CotargetField) -> CotargetField:
    """s*Theta - alpha; vanishes iff the section satisfies s*Theta^i = alpha^i."""
    return contact_pullback(s) - alpha


def curvature_report(s: JetSection, domain: ParamDomain) -> GridReport:
    return sweep(_flatten3(contact_curvature(s)), domain)


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints C_rho(u, x, x_a) = c_rho."""

    functions: tuple[Expr, ...]
    levels: tuple[float, ...]

    @classmethod
    def make(cls, functions, levels=None) -> "ConstraintSet":
        fns = tuple(as_expr(f) for f in functions)
        lv = tuple(float(c) for c in (levels if levels is not None else [0.0] * len(fns)))
        if len(lv) != len(fns):
            raise ShapeError("one level per constraint function required")
        return cls(fns, lv)


@dataclass
class ConstraintReport:
    residuals: list[float]
    argmax: list[dict[str, float]]
    holonomic: list[bool]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


def constraint_residual(C: ConstraintSet, s: JetSection, domain: ParamDomain) -> ConstraintReport:
    """Per-constraint grid max of |C_rho(s(u)) - c_rho| plus a holonomy flag.

    The flag is syntactic: a constraint is holonomic when no jet variable
    survives simplification.  Something like ``v - v + x`` is holonomic, but
    an expression that only vanishes identically through a trig identity is not
    recognised.
    """
    _check_vars(C.functions, s.coords.all_names, "constraint")
    jets = set(s.coords.flat_jet_names)
    residuals, where, holo = [], [], []
    for fn, level in zip(C.functions, C.levels):
        rep = sweep([sub(s.pull(fn), level)], domain)
        residuals.append(rep.max_abs)
        where.append(rep.argmax)
        holo.append(not (free_vars(simplify(fn)) & jets))
    return ConstraintReport(residuals, where, holo)


def total_derivative(e, coords: JetCoordinates, s: JetSection, a: int) -> Expr:
    """d/du^a of a jet-space function along s, by the chain rule on J^1.

    Deliberately differs from differentiating ``s.pull(e)``: partials are
    taken on the jet manifold first and composed with s afterwards.
    """
    e = as_expr(e)
    u = coords.source[a]
    terms = [s.pull(differentiate(e, u))]
    for i, x in enumerate(coords.target):
        terms.append(mul(s.pull(differentiate(e, x)), differentiate(s.position[i], u)))
        for b, name in enumerate(coords.jet_names[i]):
            terms.append(mul(s.pull(differentiate(e, name)), differentiate(s.jet[i][b], u)))
    return add(*terms)
