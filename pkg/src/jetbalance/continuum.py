"""Continua: strain, compatibility and the balance laws of deformable media.

Indices are raised and lowered with the Euclidean metric, so upper and lower
components coincide.  Strain uses the factor convention e_ij = u_i,j + u_j,i
(twice the engineering small strain).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from jetbalance.domain import GridReport, ParamDomain, sweep
from jetbalance.expr import Expr, add, as_expr, differentiate, evaluate, mul, sub
from jetbalance.jet import ShapeError, _check_vars

__all__ = [
    "DisplacementField", "StrainState", "MediumState", "GeneralizedStressTensor",
    "strain_rotation_split", "lie_strain", "saint_venant_residual", "saint_venant_printed",
    "lagrangian_balance_residual", "eulerian_balance_residual", "assemble_unified",
    "unified_balance_residual", "velocity_strain", "cosserat_balance_residual",
    "BalanceReport",
]

Matrix = tuple[tuple[Expr, ...], ...]


def _sym_check(M, coords, antisym=False, tol=1e-12, count=50):
    rng = np.random.default_rng(1)
    pts = {c: rng.uniform(-1, 1, count) for c in coords}
    A = np.array([[np.broadcast_to(evaluate(c, pts), (count,)) for c in r] for r in M])
    d = A + np.swapaxes(A, 0, 1) if antisym else A - np.swapaxes(A, 0, 1)
    return float(np.max(np.abs(d))) <= tol


@dataclass(frozen=True)
class DisplacementField:
    coords: tuple[str, ...]
    components: tuple[Expr, ...]

    @classmethod
    def make(cls, coords, components) -> "DisplacementField":
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != len(coords):
            raise ShapeError("displacement needs one component per coordinate")
        _check_vars(comps, coords, "displacement")
        return cls(tuple(coords), comps)

    def gradient(self) -> Matrix:
        """grad[i][j] = u_i,j."""
        return tuple(tuple(differentiate(u, x) for x in self.coords) for u in self.components)


@dataclass(frozen=True)
class StrainState:
    strain: Matrix
    rotation: Matrix


def strain_rotation_split(u: DisplacementField) -> StrainState:
    """e_ij = u_i,j + u_j,i and theta_ij = u_i,j - u_j,i, so 2 u_i,j = e + theta."""
    G = u.gradient()
    n = len(G)
    e = tuple(tuple(add(G[i][j], G[j][i]) for j in range(n)) for i in range(n))
    th = tuple(tuple(sub(G[i][j], G[j][i]) for j in range(n)) for i in range(n))
    return StrainState(e, th)


def lie_strain(v: Sequence, g: Sequence, coords: Sequence[str]) -> Matrix:
    """(L_v g)_ij = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k."""
    coords = tuple(coords)
    v = tuple(as_expr(c) for c in v)
    n = len(coords)
    G = tuple(tuple(as_expr(c) for c in r) for r in g)
    if len(v) != n or len(G) != n or any(len(r) != n for r in G):
        raise ShapeError("vector field and metric must match the coordinate count")
    if not _sym_check(G, coords):
        raise ShapeError("metric must be symmetric")
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = [mul(v[k], differentiate(G[i][j], coords[k])) for k in range(n)]
            terms += [mul(G[k][j], differentiate(v[k], coords[i])) for k in range(n)]
            terms += [mul(G[i][k], differentiate(v[k], coords[j])) for k in range(n)]
            row.append(add(*terms))
        out.append(tuple(row))
    return tuple(out)


def _strain_matrix(e, coords) -> Matrix:
    E = tuple(tuple(as_expr(c) for c in r) for r in e)
    n = len(coords)
    if len(E) != n or any(len(r) != n for r in E):
        raise ShapeError("strain must be an n x n matrix over the coordinates")
    if not _sym_check(E, coords):
        raise ShapeError("strain must be symmetric")
    return E


def saint_venant_residual(e, coords: Sequence[str], domain: ParamDomain) -> GridReport:
    """Grid max of R_ijkl = e_ij,kl + e_kl,ij - e_ik,jl - e_jl,ik over all index tuples.

    This four-term operator annihilates every symmetrised gradient; the
    three-term cyclic form is available as :func:`saint_venant_printed`.
    """
    coords = tuple(coords)
    E = _strain_matrix(e, coords)
    n = len(coords)

    def d2(i, j, k, l):
        return differentiate(differentiate(E[i][j], coords[k]), coords[l])

    comps = {(i, j, k, l): add(d2(i, j, k, l), d2(k, l, i, j), -d2(i, k, j, l), -d2(j, l, i, k))
             for i, j, k, l in itertools.product(range(n), repeat=4)}
    return sweep(comps, domain)


def saint_venant_printed(e, coords: Sequence[str], domain: ParamDomain) -> GridReport:
    """Cyclic form e_ij,kl + e_jk,li + e_li,jk evaluated verbatim (not a compatibility test)."""
    coords = tuple(coords)
    E = _strain_matrix(e, coords)
    n = len(coords)

    def d2(i, j, k, l):
        return differentiate(differentiate(E[i][j], coords[k]), coords[l])

    comps = {(i, j, k, l): add(d2(i, j, k, l), d2(j, k, l, i), d2(l, i, j, k))
             for i, j, k, l in itertools.product(range(n), repeat=4)}
    return sweep(comps, domain)


@dataclass(frozen=True)
class MediumState:
    """Fields of a medium over (t, x^1..x^m); unset optional fields are None.

    sigma[i][j] is sigma^i_j; couple_stress[i][j][k] is mu_i^jk; torque and
    spin are tau_i^j and L_i^j stored as [i][j].
    """

    time: str
    space: tuple[str, ...]
    density: Expr | None = None
    momentum: tuple[Expr, ...] | None = None
    velocity: tuple[Expr, ...] | None = None
    stress: Matrix | None = None
    body_force: tuple[Expr, ...] | None = None
    couple_stress: tuple | None = None
    torque: Matrix | None = None
    spin: Matrix | None = None

    @classmethod
    def make(cls, space, time="t", density=None, momentum=None, velocity=None, stress=None,
             body_force=None, couple_stress=None, torque=None, spin=None) -> "MediumState":
        space = tuple(space)
        m = len(space)
        allowed = (time,) + space

        def vec(v, what):
            if v is None:
                return None
            out = tuple(as_expr(c) for c in v)
            if len(out) != m:
                raise ShapeError(f"{what}: expected {m} components")
            _check_vars(out, allowed, what)
            return out

        def mat(M, what):
            if M is None:
                return None
            out = tuple(tuple(as_expr(c) for c in r) for r in M)
            if len(out) != m or any(len(r) != m for r in out):
                raise ShapeError(f"{what}: expected {m}x{m}")
            _check_vars([c for r in out for c in r], allowed, what)
            return out

        mu = None
        if couple_stress is not None:
            mu = tuple(tuple(tuple(as_expr(c) for c in r) for r in p) for p in couple_stress)
            if len(mu) != m or any(len(p) != m or any(len(r) != m for r in p) for p in mu):
                raise ShapeError(f"couple stress: expected {m}x{m}x{m}")
            _check_vars([c for p in mu for r in p for c in r], allowed, "couple stress")
        rho = None
        if density is not None:
            rho = as_expr(density)
            _check_vars([rho], allowed, "density")
        return cls(time, space, rho, vec(momentum, "momentum"), vec(velocity, "velocity"),
                   mat(stress, "stress"), vec(body_force, "body force"), mu,
                   mat(torque, "torque"), mat(spin, "spin"))

    def _zero_vec(self, v):
        return v if v is not None else tuple(as_expr(0) for _ in self.space)

    def _zero_mat(self, M):
        m = len(self.space)
        return M if M is not None else tuple(tuple(as_expr(0) for _ in range(m)) for _ in range(m))

    @property
    def domain_names(self) -> tuple[str, ...]:
        return (self.time,) + self.space


@dataclass
class BalanceReport:
    """Named grid reports; ``max_abs`` is the worst of them."""

    parts: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return max((r.max_abs for r in self.parts.values()), default=0.0)

    def __getitem__(self, key) -> GridReport:
        return self.parts[key]


def _momentum_defect(M: MediumState) -> tuple[Expr, ...]:
    f = M._zero_vec(M.body_force)
    p = M._zero_vec(M.momentum)
    S = M._zero_mat(M.stress)
    x = M.space
    return tuple(sub(sub(f[i], differentiate(p[i], M.time)),
                     add(*(differentiate(S[i][j], x[j]) for j in range(len(x)))))
                 for i in range(len(x)))


def _mass_defect(M: MediumState) -> Expr:
    rho = M.density if M.density is not None else as_expr(0)
    p = M._zero_vec(M.momentum)
    return add(differentiate(rho, M.time), *(differentiate(p[i], x) for i, x in enumerate(M.space)))


def lagrangian_balance_residual(M: MediumState, domain: ParamDomain) -> BalanceReport:
    """f_i - dp_i/dt - sigma^i_j,j  and  drho/dt + p^i_,i."""
    return BalanceReport({"momentum": sweep(_momentum_defect(M), domain),
                          "mass": sweep([_mass_defect(M)], domain)})


def eulerian_balance_residual(M: MediumState, domain: ParamDomain) -> BalanceReport:
    """L_v p_i + sigma^i_j,j - f_i  with  L_v p_i = dp_i/dt + v^j dp_i/dx^j."""
    if M.velocity is None:
        raise ValueError("Eulerian balance needs a velocity field")
    f = M._zero_vec(M.body_force)
    p = M._zero_vec(M.momentum)
    S = M._zero_mat(M.stress)
    v, x = M.velocity, M.space
    comps = []
    for i in range(len(x)):
        lie = add(differentiate(p[i], M.time), *(mul(v[j], differentiate(p[i], x[j])) for j in range(len(x))))
        div = add(*(differentiate(S[i][j], x[j]) for j in range(len(x))))
        comps.append(sub(add(lie, div), f[i]))
    return BalanceReport({"momentum": sweep(comps, domain)})


@dataclass(frozen=True)
class GeneralizedStressTensor:
    """Block array Pi[mu][nu] over (t, x) and extended source f_mu = (0, f_i)."""

    names: tuple[str, ...]
    block: Matrix
    source: tuple[Expr, ...]


def assemble_unified(M: MediumState, check_domain: ParamDomain | None = None,
                     tol: float = 1e-9) -> GeneralizedStressTensor:
    """[[rho, rho v_j], [rho v^i, sigma^i_j]] after checking p = rho v on the grid."""
    if M.density is None or M.velocity is None:
        raise ValueError("unified tensor needs density and velocity")
    rho, v = M.density, M.velocity
    p = M._zero_vec(M.momentum)
    S = M._zero_mat(M.stress)
    f = M._zero_vec(M.body_force)
    if check_domain is not None:
        rep = sweep([sub(p[i], mul(rho, v[i])) for i in range(len(v))], check_domain)
        if rep.max_abs > tol:
            raise ValueError(f"momentum is not rho*v (defect {rep.max_abs:.3g} at {rep.argmax})")
    m = len(M.space)
    top = (rho,) + tuple(mul(rho, vj) for vj in v)
    rows = [top] + [(mul(rho, v[i]),) + tuple(S[i][j] for j in range(m)) for i in range(m)]
    return GeneralizedStressTensor(M.domain_names, tuple(rows), (as_expr(0),) + f)


def unified_balance_residual(P: GeneralizedStressTensor, domain: ParamDomain) -> BalanceReport:
    """d_nu Pi[mu][nu] - f_mu; row 0 is the mass defect, rows 1..m minus the momentum defect."""
    names = P.names
    comps = [sub(add(*(differentiate(P.block[mu][nu], names[nu]) for nu in range(len(names)))),
                 P.source[mu]) for mu in range(len(names))]
    return BalanceReport({"mass": sweep([comps[0]], domain), "momentum": sweep(comps[1:], domain),
                          "rows": sweep(comps, domain)})


def velocity_strain(velocity: Sequence, jet: Sequence) -> Matrix:
    """Generalised velocity [[1, 0], [v, X]] -> [[1, v_j], [v^i, X + X^T]]."""
    v = tuple(as_expr(c) for c in velocity)
    X = tuple(tuple(as_expr(c) for c in r) for r in jet)
    m = len(v)
    if len(X) != m or any(len(r) != m for r in X):
        raise ShapeError("jet block must be m x m")
    rows = [(as_expr(1),) + v]
    rows += [(v[i],) + tuple(add(X[i][j], X[j][i]) for j in range(m)) for i in range(m)]
    return tuple(rows)


def cosserat_balance_residual(M: MediumState, domain: ParamDomain) -> BalanceReport:
    """Force defect as in the Lagrangian picture and couple defect
    tau_i^j - dL_i^j/dt - mu_i^jk,k - (sigma^i_j - sigma^j_i)."""
    if M.couple_stress is None or M.torque is None or M.spin is None:
        raise ValueError("Cosserat balance needs couple stress, torque and spin")
    S = M._zero_mat(M.stress)
    x, m = M.space, len(M.space)
    couple = {}
    for i in range(m):
        for j in range(m):
            div = add(*(differentiate(M.couple_stress[i][j][k], x[k]) for k in range(m)))
            anti = sub(S[i][j], S[j][i])
            couple[(i, j)] = sub(M.torque[i][j], add(differentiate(M.spin[i][j], M.time), div, anti))
    return BalanceReport({"force": sweep(_momentum_defect(M), domain),
                          "couple": sweep(couple, domain)})
