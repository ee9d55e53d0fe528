"""Pre-metric electromagnetism on four-dimensional spacetime.

Antisymmetric fields are stored by their independent components: bivectors
and 2-forms in the order (01, 02, 03, 23, 31, 12), 3-forms in the order
(012, 013, 023, 123).  The Levi-Civita symbol has eps_0123 = eps^0123 = +1.
The Poincare isomorphism # uses the symbol only, so no metric enters
anywhere except through an explicit constitutive law.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from jetbalance.domain import GridReport, ParamDomain, sweep
from jetbalance.expr import (
    Expr, add, as_expr, differentiate, div, evaluate, mul, neg, sqrt, sub,
)
from jetbalance.jet import ShapeError, _check_vars

__all__ = [
    "COORDS", "PAIRS", "TRIPLES", "VarianceError", "Field", "ConstitutiveTensor", "Metric4",
    "levi_civita", "two_form", "bivector", "vector", "one_form", "component",
    "poincare_iso", "poincare_inverse", "exterior_derivative", "field_strength",
    "potential_check", "divergence", "spacetime_split", "spacetime_assemble",
    "excitation_assemble", "excitation_split", "vacuum_chi", "vacuum_constitutive",
    "maxwell_residuals", "field_lagrangian", "hodge_matrix",
]

COORDS = ("t", "x1", "x2", "x3")
PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
_SLOTS = {1: tuple((i,) for i in range(4)), 2: PAIRS, 3: TRIPLES, 4: ((0, 1, 2, 3),)}


class VarianceError(ValueError):
    pass


def levi_civita(*idx: int) -> int:
    """Sign of the permutation (kappa, lambda, mu, nu) of 0123; 0 on repeats."""
    if len(idx) != 4:
        raise ValueError("the symbol takes four indices")
    if any(not 0 <= i <= 3 for i in idx):
        raise ValueError(f"index out of range: {idx}")
    if len(set(idx)) < 4:
        return 0
    sign, p = 1, list(idx)
    for i in range(4):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _slot_sign(rank: int, idx: tuple[int, ...]) -> tuple[int, int]:
    """(slot, sign) locating an index tuple in storage; sign 0 for repeats."""
    if len(set(idx)) < len(idx):
        return 0, 0
    for slot, ref in enumerate(_SLOTS[rank]):
        if set(ref) == set(idx):
            perm = [ref.index(i) for i in idx]
            sign = 1
            for a, b in itertools.combinations(range(len(perm)), 2):
                if perm[a] > perm[b]:
                    sign = -sign
            return slot, sign
    raise AssertionError(idx)


@dataclass(frozen=True)
class Field:
    """Antisymmetric field of the given rank and variance ('co' or 'contra')."""

    rank: int
    variance: str
    comps: tuple[Expr, ...]
    coords: tuple[str, ...] = COORDS

    @classmethod
    def make(cls, rank: int, variance: str, comps, coords=COORDS) -> "Field":
        if variance not in ("co", "contra"):
            raise VarianceError(f"unknown variance {variance!r}")
        if rank not in _SLOTS:
            raise ShapeError(f"rank must be 1..4, got {rank}")
        comps = tuple(as_expr(c) for c in comps)
        if len(comps) != len(_SLOTS[rank]):
            raise ShapeError(f"rank-{rank} field needs {len(_SLOTS[rank])} components")
        coords = tuple(coords)
        if len(coords) != 4:
            raise ShapeError("spacetime needs four coordinates")
        _check_vars(comps, coords, "field component")
        return cls(rank, variance, comps, coords)

    def __getitem__(self, idx) -> Expr:
        idx = (idx,) if isinstance(idx, int) else tuple(idx)
        slot, sign = _slot_sign(self.rank, idx)
        if sign == 0:
            return as_expr(0)
        return self.comps[slot] if sign > 0 else neg(self.comps[slot])

    def _expect(self, rank: int, variance: str) -> None:
        if self.rank != rank or self.variance != variance:
            raise VarianceError(f"expected rank {rank} {variance}variant field, got "
                                f"rank {self.rank} {self.variance}variant")

    def labelled(self) -> dict[str, Expr]:
        return {"".join(map(str, ref)): c for ref, c in zip(_SLOTS[self.rank], self.comps)}


def two_form(comps, coords=COORDS) -> Field:
    return Field.make(2, "co", comps, coords)


def bivector(comps, coords=COORDS) -> Field:
    return Field.make(2, "contra", comps, coords)


def vector(comps, coords=COORDS) -> Field:
    return Field.make(1, "contra", comps, coords)


def one_form(comps, coords=COORDS) -> Field:
    return Field.make(1, "co", comps, coords)


def component(f: Field, *idx: int) -> Expr:
    return f[idx]


def _contract(f: Field, out_rank: int) -> tuple[Expr, ...]:
    """Components of eps contracted against f on its leading slots, output indices last."""
    out = []
    for ref in _SLOTS[out_rank]:
        terms = []
        for src, c in zip(_SLOTS[f.rank], f.comps):
            e = levi_civita(*(src + ref))
            if e:
                terms.append(c if e > 0 else neg(c))
        out.append(add(*terms))
    return tuple(out)


def poincare_iso(A: Field) -> Field:
    """(#A)_I = (1/k!) eps_{J I} A^J for a rank-k multivector."""
    if A.variance != "contra" or A.rank == 4:
        raise VarianceError("# acts on contravariant fields of rank 1..3")
    return Field.make(4 - A.rank, "co", _contract(A, 4 - A.rank), A.coords)


def poincare_inverse(G: Field) -> Field:
    """(#^-1 G)^J = (1/(4-k)!) eps^{J I} G_I; inverse of :func:`poincare_iso`."""
    if G.variance != "co" or G.rank == 4:
        raise VarianceError("#^-1 acts on covariant fields of rank 1..3")
    out = []
    for ref in _SLOTS[4 - G.rank]:
        terms = []
        for src, c in zip(_SLOTS[G.rank], G.comps):
            e = levi_civita(*(ref + src))
            if e:
                terms.append(c if e > 0 else neg(c))
        out.append(add(*terms))
    return Field.make(4 - G.rank, "contra", out, G.coords)


def _top_inverse(G: Field) -> Expr:
    """#^-1 of a 4-form is the scalar eps^0123 G_0123."""
    return G.comps[0]


def exterior_derivative(F: Field) -> Field:
    """(dF)_{i0..ik} = sum_j (-1)^j d_{ij} F_{i0..^ij..ik} on covariant fields."""
    if F.variance != "co":
        raise VarianceError("d acts on covariant fields")
    if F.rank == 4:
        raise ShapeError("d of a 4-form vanishes identically in four dimensions")
    out = []
    for ref in _SLOTS[F.rank + 1]:
        terms = []
        for j, i in enumerate(ref):
            rest = ref[:j] + ref[j + 1:]
            d = differentiate(F[rest], F.coords[i])
            terms.append(d if j % 2 == 0 else neg(d))
        out.append(add(*terms))
    return Field.make(F.rank + 1, "co", out, F.coords)


def field_strength(A: Field) -> Field:
    """F = dA, so F_{mu nu} = A_nu,mu - A_mu,nu."""
    A._expect(1, "co")
    return exterior_derivative(A)


def potential_check(A: Field, F: Field, domain: ParamDomain) -> GridReport:
    F._expect(2, "co")
    dA = field_strength(A)
    return sweep({k: sub(F.labelled()[k], v) for k, v in dA.labelled().items()}, domain)


def divergence(h: Field) -> Field | Expr:
    """delta = #^-1 d #.  On bivectors this is d_nu h^{mu nu}; on vectors d_mu J^mu."""
    if h.variance != "contra":
        raise VarianceError("delta acts on contravariant fields")
    if h.rank == 1:
        return _top_inverse(exterior_derivative(poincare_iso(h)))
    return poincare_inverse(exterior_derivative(poincare_iso(h)))


def spacetime_split(F: Field) -> tuple[tuple[Expr, ...], tuple[Expr, ...]]:
    """E_i = F_0i and the axial vector B = (F_23, F_31, F_12) of the spatial block."""
    F._expect(2, "co")
    return F.comps[:3], F.comps[3:]


def spacetime_assemble(E: Sequence, B: Sequence, coords=COORDS) -> Field:
    """F = dt ^ E + (spatial #) B."""
    return two_form(list(E) + list(B), coords)


def excitation_assemble(D: Sequence, H: Sequence, coords=COORDS) -> Field:
    """h^{0i} = D^i; the spatial block carries (H_23, H_31, H_12) componentwise."""
    if len(D) != 3 or len(H) != 3:
        raise ShapeError("D and H need three components each")
    return bivector(list(D) + list(H), coords)


def excitation_split(h: Field) -> tuple[tuple[Expr, ...], tuple[Expr, ...]]:
    h._expect(2, "contra")
    return h.comps[:3], h.comps[3:]


@dataclass(frozen=True)
class ConstitutiveTensor:
    """Linear local map h = chi(F) as a 6x6 matrix on storage slots.

    matrix[A][B] = 2 chi^{A B}, so h^A = sum_B matrix[A][B] F_B equals
    chi^{kappa lambda mu nu} F_{mu nu} summed over all four indices.
    """

    matrix: tuple[tuple[Expr, ...], ...]

    @classmethod
    def make(cls, matrix) -> "ConstitutiveTensor":
        M = tuple(tuple(as_expr(c) for c in r) for r in matrix)
        if len(M) != 6 or any(len(r) != 6 for r in M):
            raise ShapeError("constitutive matrix must be 6x6")
        return cls(M)

    def chi(self, k: int, l: int, m: int, n: int) -> Expr:
        a, sa = _slot_sign(2, (k, l))
        b, sb = _slot_sign(2, (m, n))
        if sa * sb == 0:
            return as_expr(0)
        return mul(0.5 * sa * sb, self.matrix[a][b])

    def apply(self, F: Field) -> Field:
        F._expect(2, "co")
        return bivector([add(*(mul(self.matrix[a][b], F.comps[b]) for b in range(6)))
                         for a in range(6)], F.coords)

    def numeric(self, binding) -> np.ndarray:
        return np.array([[float(np.mean(evaluate(c, binding))) for c in r] for r in self.matrix])

    def check_invertible(self, domain: ParamDomain, tol: float = 1e-12) -> None:
        b = domain.binding()
        vals = np.array([[np.broadcast_to(evaluate(c, b), domain.shape) for c in r]
                         for r in self.matrix])
        mats = np.moveaxis(vals.reshape(6, 6, -1), -1, 0)
        dets = np.linalg.det(mats)
        if np.min(np.abs(dets)) <= tol:
            raise ValueError("constitutive map is singular at a grid point")


def _det(M) -> Expr:
    n = len(M)
    if n == 1:
        return M[0][0]
    terms = []
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in M[1:]]
        t = mul(M[0][j], _det(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return add(*terms)


@dataclass(frozen=True)
class Metric4:
    """Symmetric g_{mu nu}; inverse and volume factor built symbolically."""

    g: tuple[tuple[Expr, ...], ...]
    coords: tuple[str, ...] = COORDS

    @classmethod
    def make(cls, g, coords=COORDS, check_domain: ParamDomain | None = None) -> "Metric4":
        G = tuple(tuple(as_expr(c) for c in r) for r in g)
        if len(G) != 4 or any(len(r) != 4 for r in G):
            raise ShapeError("metric must be 4x4")
        _check_vars([c for r in G for c in r], coords, "metric")
        m = cls(G, tuple(coords))
        if check_domain is not None:
            m.check_lorentzian(check_domain)
        return m

    @classmethod
    def minkowski(cls) -> "Metric4":
        return cls.make(np.diag([1.0, -1.0, -1.0, -1.0]).tolist())

    def determinant(self) -> Expr:
        return _det(self.g)

    def inverse(self) -> tuple[tuple[Expr, ...], ...]:
        det = self.determinant()
        inv = []
        for i in range(4):
            row = []
            for j in range(4):
                minor = [r[:i] + r[i + 1:] for k, r in enumerate(self.g) if k != j]
                c = _det(minor)
                row.append(div(c if (i + j) % 2 == 0 else neg(c), det))
            inv.append(tuple(row))
        return tuple(inv)

    def volume(self) -> Expr:
        return sqrt(neg(self.determinant()))

    def check_lorentzian(self, domain: ParamDomain) -> None:
        b = domain.binding()
        vals = np.array([[np.broadcast_to(evaluate(c, b), domain.shape) for c in r] for r in self.g])
        mats = np.moveaxis(vals.reshape(4, 4, -1), -1, 0)
        if np.max(np.abs(mats - np.swapaxes(mats, 1, 2))) > 1e-12:
            raise ValueError("metric is not symmetric")
        ev = np.linalg.eigvalsh(mats)
        if np.any(np.abs(ev) < 1e-12) or np.any((ev > 0).sum(axis=1) != 1):
            raise ValueError("metric is not Lorentzian (signature +,-,-,-) on the grid")


def vacuum_chi(g: Metric4) -> ConstitutiveTensor:
    """chi^{klmn} = 1/2 sqrt(-g) (g^{mk} g^{nl} - g^{nk} g^{ml})."""
    ginv = g.inverse()
    vol = g.volume()
    rows = []
    for (k, l) in PAIRS:
        rows.append(tuple(mul(vol, sub(mul(ginv[k][m], ginv[l][n]), mul(ginv[k][n], ginv[l][m])))
                          for (m, n) in PAIRS))
    return ConstitutiveTensor.make(rows)


def vacuum_constitutive(g: Metric4, F: Field) -> Field:
    """h^{mu nu} = sqrt(-g) g^{mu kappa} g^{nu lambda} F_{kappa lambda}."""
    return vacuum_chi(g).apply(F)


def hodge_matrix() -> np.ndarray:
    """Matrix of # from bivector slots to 2-form slots."""
    M = np.zeros((6, 6))
    for b in range(6):
        e = [0.0] * 6
        e[b] = 1.0
        M[:, b] = [float(evaluate(c, {})) for c in poincare_iso(bivector(e)).comps]
    return M


def maxwell_residuals(F: Field, h: Field, J: Field, chi: ConstitutiveTensor,
                      domain: ParamDomain) -> dict[str, GridReport]:
    """Grid maxima of dF, delta h - J, h - chi(F) and delta J."""
    F._expect(2, "co")
    h._expect(2, "contra")
    J._expect(1, "contra")
    dh = divergence(h)
    chiF = chi.apply(F)
    return {
        "dF": sweep(exterior_derivative(F).labelled(), domain),
        "ampere_gauss": sweep({k: sub(dh.comps[i], J.comps[i]) for i, k in enumerate(J.labelled())},
                              domain),
        "constitutive": sweep({k: sub(h.comps[i], chiF.comps[i]) for i, k in enumerate(h.labelled())},
                              domain),
        "charge": sweep([divergence(J)], domain),
    }


def field_lagrangian(F: Field, h: Field) -> Expr:
    """1/2 F_{mu nu} h^{mu nu}, i.e. the sum over the six independent pairs."""
    if F.variance != "co" or h.variance != "contra" or F.rank != 2 or h.rank != 2:
        raise VarianceError("field Lagrangian pairs a 2-form with a bivector")
    return add(*(mul(a, b) for a, b in zip(F.comps, h.comps)))
