"""Uniform parameter grids, field sweeps and trapezoid quadrature."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from jetbalance.expr import Expr, as_expr, evaluate

__all__ = ["Axis", "ParamDomain", "GridReport", "sweep", "integrate", "set_workers"]

_WORKERS = 1


def set_workers(n: int) -> None:
    """Number of threads used to sweep independent components (1 = serial)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis {self.name!r}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 2:
            raise ValueError(f"axis {self.name!r}: need at least 2 samples, got {self.n}")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class ParamDomain:
    """Tensor-product grid with endpoints included on every axis."""

    axes: tuple[Axis, ...]

    @classmethod
    def box(cls, **spec) -> "ParamDomain":
        """``ParamDomain.box(t=(0, 1, 11))``; keyword order fixes axis order."""
        return cls(tuple(Axis(k, float(lo), float(hi), int(n)) for k, (lo, hi, n) in spec.items()))

    def __post_init__(self):
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names in {names}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    def refined(self, n: int) -> "ParamDomain":
        return ParamDomain(tuple(Axis(a.name, a.lo, a.hi, n) for a in self.axes))

    def binding(self) -> dict[str, np.ndarray]:
        grids = np.meshgrid(*(a.points() for a in self.axes), indexing="ij")
        return dict(zip(self.names, grids))

    def evaluate(self, e, extra: Mapping[str, float] | None = None) -> np.ndarray:
        b = self.binding()
        if extra:
            b.update(extra)
        return np.broadcast_to(np.asarray(evaluate(as_expr(e), b), dtype=float), self.shape).copy()

    def location(self, flat_index: int) -> dict[str, float]:
        idx = np.unravel_index(flat_index, self.shape)
        return {a.name: float(a.points()[i]) for a, i in zip(self.axes, idx)}


@dataclass
class GridReport:
    """Max-abs reduction of one or more component fields over a grid."""

    max_abs: float
    argmax: dict[str, float]
    component: object = None
    per_component: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict, repr=False)

    def within(self, tol: float) -> bool:
        return bool(self.max_abs <= tol)


def _label_items(fields) -> list[tuple[object, Expr]]:
    if isinstance(fields, Mapping):
        return [(k, as_expr(v)) for k, v in fields.items()]
    if isinstance(fields, Expr):
        return [(None, fields)]
    return [(k, as_expr(v)) for k, v in enumerate(fields)]


def sweep(fields, domain: ParamDomain, extra: Mapping[str, float] | None = None) -> GridReport:
    """Evaluate every component on the grid and report the largest magnitude.

    ``fields`` is an Expr, a sequence, or a mapping from labels to Exprs.
    Ties keep the first component and the first grid point in C order.
    """
    items = _label_items(fields)
    if not items:
        return GridReport(0.0, {}, None, {}, {})

    def one(item):
        return item[0], domain.evaluate(item[1], extra)

    if _WORKERS > 1 and len(items) > 1:
        with ThreadPoolExecutor(_WORKERS) as pool:
            evaluated = list(pool.map(one, items))
    else:
        evaluated = [one(it) for it in items]

    best, where, which = -1.0, 0, None
    per: dict = {}
    values: dict = {}
    for label, arr in evaluated:
        mag = np.abs(arr)
        k = int(np.argmax(mag))
        m = float(mag.flat[k])
        if np.isnan(m):
            m = float("inf")
        per[label] = m
        values[label] = arr
        if m > best:
            best, where, which = m, k, label
    return GridReport(best, domain.location(where), which, per, values)


def _trapz_weights(axis: Axis) -> np.ndarray:
    w = np.full(axis.n, axis.step)
    w[0] = w[-1] = axis.step / 2
    return w


def integrate(values: np.ndarray, axes: Sequence[Axis]) -> float:
    """Composite trapezoid rule of grid samples over the listed axes."""
    out = np.asarray(values, dtype=float)
    for ax in reversed(axes):
        out = np.tensordot(out, _trapz_weights(ax), axes=([out.ndim - 1], [0]))
    return float(out)


def face_integral(values: np.ndarray, domain: ParamDomain, axis_index: int) -> float:
    """Outward flux through the pair of faces normal to one axis.

    Face ``hi`` counts with +, face ``lo`` with -; each face is integrated
    with the trapezoid rule over the remaining axes (a point if m = 1).
    """
    values = np.asarray(values, dtype=float)
    rest = [a for k, a in enumerate(domain.axes) if k != axis_index]
    hi = np.take(values, -1, axis=axis_index)
    lo = np.take(values, 0, axis=axis_index)
    if not rest:
        return float(hi - lo)
    return integrate(hi, rest) - integrate(lo, rest)


def sample_points(names: Iterable[str], count: int, seed: int = 0,
                  lo: float = -1.0, hi: float = 1.0) -> dict[str, np.ndarray]:
    """Reproducible uniform random samples, one array per variable."""
    rng = np.random.default_rng(seed)
    return {n: rng.uniform(lo, hi, count) for n in names}
