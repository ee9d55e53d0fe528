"""Amplitude/phase wave states on J^1(M, R^2) over Minkowski space.

Signature (+, -, -, -); the speed c multiplies the spatial part of the
metric, so c = 1 gives eta = diag(1, -1, -1, -1).  A state carries the
amplitude A, the phase theta, and independent jet components A_mu and
k_mu = (omega, k1, k2, k3).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from jetbalance.domain import GridReport, ParamDomain, sweep
from jetbalance.dynamics import DynamicalForm
from jetbalance.expr import (
    Expr, add, as_expr, cos, differentiate, div, evaluate, mul, sin, sub,
)
from jetbalance.jet import JetCoordinates, JetSection, _check_vars

__all__ = [
    "SPACETIME", "AMPLITUDE_JETS", "WAVE_JETS", "WaveError", "WaveState", "DispersionLaw",
    "minkowski", "wave_section", "wave_state", "dispersion_residual", "eikonal_residual",
    "group_velocity", "dalembertian", "dalembert_split", "recompose",
    "amplitude_phase_residuals", "divergence_form", "wave_dynamical_form", "de_broglie",
]

SPACETIME = ("t", "x1", "x2", "x3")
AMPLITUDE_JETS = ("A_t", "A_1", "A_2", "A_3")
WAVE_JETS = ("omega", "k1", "k2", "k3")


class WaveError(ValueError):
    pass


def minkowski(c: float = 1.0) -> np.ndarray:
    return np.diag([1.0, -c * c, -c * c, -c * c])


def _coords() -> JetCoordinates:
    return JetCoordinates.make(SPACETIME, ("A", "theta"), (AMPLITUDE_JETS, WAVE_JETS))


@dataclass(frozen=True)
class WaveState:
    A: Expr
    theta: Expr
    A_jet: tuple[Expr, ...]
    k: tuple[Expr, ...]

    def section(self) -> JetSection:
        c = _coords()
        return JetSection.make(c.source, c.target, (self.A, self.theta), (self.A_jet, self.k),
                               c.jet_names)


def wave_state(A, theta, A_jet, k) -> WaveState:
    """A general (possibly non-integrable) wave state."""
    A, theta = as_expr(A), as_expr(theta)
    A_jet = tuple(as_expr(c) for c in A_jet)
    k = tuple(as_expr(c) for c in k)
    if len(A_jet) != 4 or len(k) != 4:
        raise WaveError("A_mu and k_mu need four components each")
    _check_vars((A, theta) + A_jet + k, SPACETIME, "wave state")
    return WaveState(A, theta, A_jet, k)


def wave_section(A, theta) -> WaveState:
    """Integrable state with A_mu = dA/dx^mu and k_mu = dtheta/dx^mu."""
    A, theta = as_expr(A), as_expr(theta)
    return wave_state(A, theta, [differentiate(A, x) for x in SPACETIME],
                      [differentiate(theta, x) for x in SPACETIME])


@dataclass(frozen=True)
class DispersionLaw:
    """P over spacetime and (omega, k1, k2, k3), with level P0."""

    expr: Expr
    level: float = 0.0

    @classmethod
    def make(cls, expr, level: float = 0.0) -> "DispersionLaw":
        e = as_expr(expr)
        _check_vars([e], SPACETIME + WAVE_JETS, "dispersion law")
        return cls(e, float(level))

    @classmethod
    def null(cls, c: float = 1.0, level: float = 0.0) -> "DispersionLaw":
        """P = eta^{mu nu} k_mu k_nu."""
        return cls.make(_quadratic(WAVE_JETS, WAVE_JETS, c), level)


def _quadratic(a: Sequence, b: Sequence, c: float = 1.0) -> Expr:
    eta = np.diag(minkowski(c))
    return add(*(mul(float(eta[mu]), as_expr(a[mu]), as_expr(b[mu])) for mu in range(4)))


def dispersion_residual(P: DispersionLaw, w: WaveState, domain: ParamDomain) -> GridReport:
    """Grid max of |P(x, k(x)) - P0|."""
    s = w.section()
    return sweep([sub(s.pull(P.expr), P.level)], domain)


def eikonal_residual(theta, domain: ParamDomain, c: float = 1.0) -> GridReport:
    """Grid max of |eta^{mu nu} theta_mu theta_nu|."""
    grad = [differentiate(as_expr(theta), x) for x in SPACETIME]
    return sweep([_quadratic(grad, grad, c)], domain)


def group_velocity(P: DispersionLaw, at: Mapping[str, float], tol: float = 1e-12) -> np.ndarray:
    """v_g^i = -(dP/dk_i) / (dP/domega) at a point of (x, omega, k)."""
    binding = {name: float(at.get(name, 0.0)) for name in SPACETIME + WAVE_JETS}
    dw = float(evaluate(differentiate(P.expr, "omega"), binding))
    if abs(dw) < tol:
        raise WaveError("dP/domega vanishes: projective point at infinity")
    return np.array([-float(evaluate(differentiate(P.expr, k), binding)) / dw for k in WAVE_JETS[1:]])


def dalembertian(f, c: float = 1.0) -> Expr:
    """d^2f/dt^2 - c^2 (d^2f/dx1^2 + d^2f/dx2^2 + d^2f/dx3^2)."""
    f = as_expr(f)
    eta = np.diag(minkowski(c))
    return add(*(mul(float(eta[mu]), differentiate(f, x, 2)) for mu, x in enumerate(SPACETIME)))


def _check_support(A: Expr, domain: ParamDomain) -> None:
    vals = np.broadcast_to(domain.evaluate(A), domain.shape)
    if np.min(np.abs(vals)) <= 1e-12:
        idx = int(np.argmin(np.abs(vals)))
        raise WaveError(f"amplitude vanishes at {domain.location(idx)}")


def dalembert_split(w: WaveState, domain: ParamDomain | None = None,
                    c: float = 1.0) -> tuple[Expr, Expr]:
    """(real, imag) with box(A e^{-i theta}) = (real - i imag) A e^{-i theta}.

    real = box(A)/A - eta k k and imag = 2 eta A_mu k_nu / A + box(theta).
    When a domain is given the amplitude must be nonzero at every grid point.
    """
    if domain is not None:
        _check_support(w.A, domain)
    real = sub(div(dalembertian(w.A, c), w.A), _quadratic(w.k, w.k, c))
    imag = add(div(mul(2, _quadratic(w.A_jet, w.k, c)), w.A), dalembertian(w.theta, c))
    return real, imag


def recompose(real, imag, A, theta) -> tuple[Expr, Expr]:
    """Predicted box(A cos theta) and box(A sin theta) from the split."""
    A, theta = as_expr(A), as_expr(theta)
    real, imag = as_expr(real), as_expr(imag)
    c_, s_ = cos(theta), sin(theta)
    return (mul(A, sub(mul(real, c_), mul(imag, s_))),
            mul(A, add(mul(real, s_), mul(imag, c_))))


def amplitude_phase_residuals(w: WaveState, domain: ParamDomain, lam_A: float = 0.0,
                              alpha0_sq: float = 0.0, rho_theta: float = 0.0,
                              k0_sq: float = 0.0, c: float = 1.0) -> dict[str, GridReport]:
    """Residuals of box A = lam_A A, 2 eta A_mu k_nu = alpha0^2 A, box theta = rho_theta
    and eta k k = k0^2."""
    return {
        "amplitude": sweep([sub(dalembertian(w.A, c), mul(lam_A, w.A))], domain),
        "orthogonality": sweep([sub(mul(2, _quadratic(w.A_jet, w.k, c)), mul(alpha0_sq, w.A))], domain),
        "phase": sweep([sub(dalembertian(w.theta, c), rho_theta)], domain),
        "dispersion": sweep([sub(_quadratic(w.k, w.k, c), k0_sq)], domain),
    }


def divergence_form(w: WaveState, c: float = 1.0) -> dict[str, tuple[Expr, ...] | Expr]:
    """p_A^mu = eta^{mu nu} A_nu and p_theta^mu = eta^{mu nu} k_nu with their divergences."""
    eta = np.diag(minkowski(c))
    pA = tuple(mul(float(eta[mu]), w.A_jet[mu]) for mu in range(4))
    pT = tuple(mul(float(eta[mu]), w.k[mu]) for mu in range(4))
    return {
        "p_A": pA, "p_theta": pT,
        "div_p_A": add(*(differentiate(p, x) for p, x in zip(pA, SPACETIME))),
        "div_p_theta": add(*(differentiate(p, x) for p, x in zip(pT, SPACETIME))),
    }


def wave_dynamical_form(lam_A: float = 0.0, rho_theta: float = 0.0, c: float = 1.0) -> DynamicalForm:
    """phi = lam_A A dA + rho_theta dtheta + p_A^mu dA_mu + p_theta^mu dk_mu.

    Its adjoint along an integrable state is (lam_A A - box A, rho_theta - box theta).
    """
    eta = np.diag(minkowski(c))
    force = [mul(lam_A, "A"), as_expr(rho_theta)]
    stress = [[mul(float(eta[mu]), AMPLITUDE_JETS[mu]) for mu in range(4)],
              [mul(float(eta[mu]), WAVE_JETS[mu]) for mu in range(4)]]
    return DynamicalForm.make(_coords(), force, stress)


def de_broglie(k, hbar: float, g=None) -> np.ndarray:
    """p^mu = hbar g^{mu nu} k_nu (numeric); g defaults to eta."""
    g = minkowski() if g is None else np.asarray(g, float)
    if g.shape != (4, 4) or not np.allclose(g, g.T, atol=1e-12):
        raise WaveError("inverse metric must be a symmetric 4x4 matrix")
    return hbar * g @ np.asarray(k, float)
