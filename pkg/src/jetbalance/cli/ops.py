"""Check operations available to model files, grouped by subcommand."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from jetbalance import continuum, dynamics, em, jet, lagrangian, mechanics, wave
from jetbalance.domain import GridReport, sweep
from jetbalance.expr import cos, free_vars, mul, sin, sub
from jetbalance.cli.model import Model, ModelError, _build_domain, _formulas, _number

__all__ = ["OpSpec", "OPS", "FAMILIES", "Outcome", "validate_check", "run_check"]

FAMILIES = (
    "check-integrability", "balance", "euler-lagrange", "point-balance", "rigid-body", "strain",
    "saint-venant", "continuum-balance", "wave-check", "maxwell",
)

# parameter name -> model section it refers to
REFS = {
    "section": "sections", "form": "dynamical_forms", "connection": "connections",
    "constraint": "constraints", "lagrangian": "lagrangians", "point_model": "point_models",
    "curve": "rigid_curves", "state": "rigid_states", "medium": "media",
    "displacement": "displacements", "strain": "strains", "wave": "wave_states",
    "law": "dispersion_laws", "field": "em_fields",
}


@dataclass
class Outcome:
    """Named residual maxima of one check; ``details`` holds extra report data."""

    parts: dict[str, float]
    argmax: dict[str, float] = field(default_factory=dict)
    worst: str | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.parts.values(), default=0.0)


@dataclass(frozen=True)
class OpSpec:
    name: str
    family: str
    refs: tuple[str, ...]
    run: Callable
    needs_domain: bool = True
    optional_refs: tuple[str, ...] = ()
    uses: tuple[Callable, ...] = ()


OPS: dict[str, OpSpec] = {}


def op(name, family, refs=(), needs_domain=True, optional_refs=(), uses=()):
    def register(fn):
        OPS[name] = OpSpec(name, family, tuple(refs), fn, needs_domain, tuple(optional_refs), tuple(uses))
        return fn
    return register


def _from_reports(reports: dict[str, GridReport], details=None) -> Outcome:
    parts = {k: float(r.max_abs) for k, r in reports.items()}
    worst = max(parts, key=parts.get) if parts else None
    argmax = reports[worst].argmax if worst is not None else {}
    return Outcome(parts, argmax, worst, details or {})


def _matrix_sweep(M, domain) -> GridReport:
    return sweep({(i, j): c for i, r in enumerate(M) for j, c in enumerate(r)}, domain)


def _diff_matrix(A, B):
    return [[sub(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _param_formulas(check, key, path):
    if key not in check:
        raise ModelError(f"{path}.{key}", "missing required parameter")
    return _formulas(check[key], f"{path}.{key}")


# ---------------------------------------------------------------------------
# check-integrability

@op("integrability", "check-integrability", ["section"], uses=(jet.is_integrable, jet.spencer))
def _integrability(m: Model, c, d, path):
    rep = jet.is_integrable(m.sections[c["section"]], d, tol=1.0)
    return Outcome({"spencer": rep.max_residual}, rep.argmax, "spencer")


@op("contact_curvature", "check-integrability", ["section"],
    uses=(jet.curvature_report, jet.contact_curvature))
def _curvature(m, c, d, path):
    return _from_reports({"curvature": jet.curvature_report(m.sections[c["section"]], d)})


@op("pullback_commutation", "check-integrability", ["section"],
    uses=(jet.contact_pullback, jet.exterior_derivative_1form, jet.contact_curvature))
def _commutation(m, c, d, path):
    s = m.sections[c["section"]]
    lhs = jet.contact_curvature(s)
    rhs = jet.exterior_derivative_1form(jet.contact_pullback(s))
    comps = {(i, a, b): sub(lhs[i][a][b], rhs[i][a][b])
             for i in range(len(lhs)) for a in range(len(s.source)) for b in range(len(s.source))}
    return _from_reports({"commutation": sweep(comps, d)})


@op("constraint", "check-integrability", ["section", "constraint"], uses=(jet.constraint_residual,))
def _constraint(m, c, d, path):
    rep = jet.constraint_residual(m.constraints[c["constraint"]], m.sections[c["section"]], d)
    parts = {f"constraint[{i}]": r for i, r in enumerate(rep.residuals)}
    worst = max(parts, key=parts.get) if parts else None
    arg = rep.argmax[list(parts).index(worst)] if worst else {}
    return Outcome(parts, arg, worst, {"holonomic": rep.holonomic})


@op("anholonomy", "check-integrability", ["section"], uses=(jet.anholonomy_residual,))
def _anholonomy(m, c, d, path):
    s = m.sections[c["section"]]
    alpha = jet.CotargetField(s.source, tuple(tuple(r) for r in _param_formulas(c, "alpha", path)))
    return _from_reports({"anholonomy": sweep(jet.anholonomy_residual(s, alpha).labelled(), d)})


# ---------------------------------------------------------------------------
# balance

@op("balance", "balance", ["form", "section"], uses=(dynamics.balance_residual, dynamics.adjoint))
def _balance(m, c, d, path):
    return _from_reports({"adjoint": dynamics.balance_residual(
        m.dynamical_forms[c["form"]], m.sections[c["section"]], d)})


@op("covariant_balance", "balance", ["form", "section", "connection"],
    uses=(dynamics.covariant_balance_residual, dynamics.covariant_adjoint))
def _cov_balance(m, c, d, path):
    return _from_reports({"covariant_adjoint": dynamics.covariant_balance_residual(
        m.dynamical_forms[c["form"]], m.sections[c["section"]], m.connections[c["connection"]], d)})


@op("virtual_work_identity", "balance", ["form", "section"],
    uses=(dynamics.virtual_work_identity_defect, dynamics.virtual_work_density,
          dynamics.prolong_variation, dynamics.divergence_term, dynamics.restrict))
def _vw_identity(m, c, d, path):
    dx = _param_formulas(c, "variation", path)
    e = dynamics.virtual_work_identity_defect(m.dynamical_forms[c["form"]], m.sections[c["section"]], dx)
    return _from_reports({"identity": sweep([e], d)})


@op("covariant_identity", "balance", ["form", "section", "connection"],
    uses=(dynamics.covariant_identity_defect, dynamics.covariant_variation))
def _cov_identity(m, c, d, path):
    dx = _param_formulas(c, "variation", path)
    e = dynamics.covariant_identity_defect(m.dynamical_forms[c["form"]], m.sections[c["section"]],
                                           m.connections[c["connection"]], dx)
    return _from_reports({"identity": sweep([e], d)})


@op("virtual_work", "balance", ["form", "section"], uses=(dynamics.total_virtual_work,))
def _virtual_work(m, c, d, path):
    dx = _param_formulas(c, "variation", path)
    vw = dynamics.total_virtual_work(m.dynamical_forms[c["form"]], m.sections[c["section"]], dx, d)
    return Outcome({"quadrature_defect": vw.defect}, {}, "quadrature_defect",
                   {"interior": vw.interior, "boundary": vw.boundary, "total": vw.total})


@op("variation_spencer", "balance", ["section"], uses=(dynamics.variation_spencer, dynamics.Variation))
def _variation_spencer(m, c, d, path):
    s = m.sections[c["section"]]
    v = dynamics.Variation.make(s.source, _param_formulas(c, "position", path),
                                _param_formulas(c, "jet", path))
    return _from_reports({"spencer": _matrix_sweep(dynamics.variation_spencer(v), d)})


# ---------------------------------------------------------------------------
# euler-lagrange

@op("euler_lagrange", "euler-lagrange", ["lagrangian", "section"],
    uses=(lagrangian.variational_derivative, lagrangian.euler_lagrange_equations,
          lagrangian.exterior_of_lagrangian, jet.total_derivative))
def _euler_lagrange(m, c, d, path):
    L = m.lagrangians[c["lagrangian"]]
    s = m.sections[c["section"]]
    if s.coords != L.coords:
        raise ValueError("section and Lagrangian use different jet coordinates")
    rep = sweep(lagrangian.variational_derivative(L, s), d)
    return _from_reports({"euler_lagrange": rep}, {"equations": lagrangian.euler_lagrange_equations(L)})


@op("first_variation", "euler-lagrange", ["lagrangian"],
    uses=(lagrangian.first_variation, lagrangian.action_directional_derivative, lagrangian.action))
def _first_variation(m, c, d, path):
    L = m.lagrangians[c["lagrangian"]]
    f = jet.SmoothMap.make(L.coords.source, L.coords.target, _param_formulas(c, "map", path))
    dx = _param_formulas(c, "variation", path)
    fv = lagrangian.first_variation(L, f, dx, d)
    fd = lagrangian.action_directional_derivative(L, f, dx, d, float(c.get("eps", 1e-5)))
    rel = abs(fv.interior + fv.boundary - fd) / max(1.0, abs(fd))
    return Outcome({"relative": rel}, {}, "relative",
                   {"interior": fv.interior, "boundary": fv.boundary, "finite_difference": fd,
                    "action": lagrangian.action(L, f, d)})


# ---------------------------------------------------------------------------
# point-balance

@op("newton", "point-balance", ["point_model", "section"],
    uses=(mechanics.newton_residual, mechanics.momentum))
def _newton(m, c, d, path):
    return _from_reports({"newton": mechanics.newton_residual(
        m.point_models[c["point_model"]], m.sections[c["section"]], d)})


@op("covariant_newton", "point-balance", ["point_model", "section"],
    uses=(mechanics.covariant_newton_residual, mechanics.covariant_momentum_rate))
def _cov_newton(m, c, d, path):
    return _from_reports({"covariant_newton": mechanics.covariant_newton_residual(
        m.point_models[c["point_model"]], m.sections[c["section"]], d)})


@op("rotating_frame", "point-balance", ["point_model"],
    uses=(mechanics.rotating_frame_section, mechanics.rotating_frame_velocity))
def _rotating(m, c, d, path):
    pm = m.point_models[c["point_model"]]
    if pm.spin is None:
        raise ValueError("point model has no frame spin")
    s = mechanics.rotating_frame_section(pm.coords, _param_formulas(c, "position", path), pm.spin)
    return _from_reports({"covariant_newton": mechanics.covariant_newton_residual(pm, s, d)})


@op("rotating_variation", "point-balance", ["point_model"], uses=(mechanics.rotating_frame_variation,))
def _rotating_variation(m, c, d, path):
    """Spencer defect of the frame-induced variation; nonzero unless the spin vanishes."""
    pm = m.point_models[c["point_model"]]
    if pm.spin is None:
        raise ValueError("point model has no frame spin")
    v = mechanics.rotating_frame_variation(_param_formulas(c, "variation", path), pm.spin,
                                           pm.coords.source[0])
    return _from_reports({"spencer": _matrix_sweep(dynamics.variation_spencer(v), d)})


# ---------------------------------------------------------------------------
# rigid-body

@op("body_velocity", "rigid-body", ["curve"], uses=(mechanics.body_velocity,))
def _body_velocity(m, c, d, path):
    v0, Omega = mechanics.body_velocity(m.rigid_curves[c["curve"]])
    reports = {"antisymmetry": _matrix_sweep(
        [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(Omega, zip(*Omega))], d)}
    if "expected_omega" in c:
        reports["omega"] = _matrix_sweep(_diff_matrix(Omega, _param_formulas(c, "expected_omega", path)), d)
    if "expected_v0" in c:
        reports["v0"] = sweep([sub(a, b) for a, b in zip(v0, _param_formulas(c, "expected_v0", path))], d)
    return _from_reports(reports)


@op("comoving_defect", "rigid-body", ["curve"],
    uses=(mechanics.comoving_defect, mechanics.comoving_defect_direct, mechanics.rigid_spencer,
          mechanics.inertial_section))
def _comoving(m, c, d, path):
    curve = m.rigid_curves[c["curve"]]
    frame = c.get("frame", "comoving")
    if frame == "inertial":
        defect = mechanics.rigid_spencer(mechanics.inertial_section(curve))
    elif c.get("form", "factored") == "direct":
        defect = mechanics.comoving_defect_direct(curve)
    else:
        defect = mechanics.comoving_defect(curve)
    lin, rot = mechanics.defect_report(defect, d)
    return _from_reports({"linear": lin, "rotational": rot})


@op("rigid_balance", "rigid-body", ["state"],
    uses=(mechanics.rigid_balance_residual, mechanics.inertia_couple, mechanics.power_pairing))
def _rigid_balance(m, c, d, path):
    spin = _param_formulas(c, "spin", path) if "spin" in c else None
    rep = mechanics.rigid_balance_residual(m.rigid_states[c["state"]], d, c.get("frame", "inertial"), spin)
    return _from_reports({"linear": rep.linear, "angular": rep.angular})


# ---------------------------------------------------------------------------
# strain and saint-venant

@op("strain", "strain", ["displacement"], uses=(continuum.strain_rotation_split,))
def _strain(m, c, d, path):
    st = continuum.strain_rotation_split(m.displacements[c["displacement"]])
    part = c.get("part", "strain")
    if part not in ("strain", "rotation"):
        raise ModelError(f"{path}.part", 'expected "strain" or "rotation"')
    M = st.strain if part == "strain" else st.rotation
    if "expected" in c:
        M = _diff_matrix(M, _param_formulas(c, "expected", path))
    return _from_reports({part: _matrix_sweep(M, d)})


@op("lie_strain", "strain", [], uses=(continuum.lie_strain,))
def _lie(m, c, d, path):
    coords = tuple(c.get("coords", ()))
    M = continuum.lie_strain(_param_formulas(c, "vector", path), _param_formulas(c, "metric", path), coords)
    if "expected" in c:
        M = _diff_matrix(M, _param_formulas(c, "expected", path))
    return _from_reports({"lie_strain": _matrix_sweep(M, d)})


@op("velocity_strain", "strain", [], uses=(continuum.velocity_strain,))
def _velocity_strain(m, c, d, path):
    E = continuum.velocity_strain(_param_formulas(c, "velocity", path), _param_formulas(c, "jet", path))
    if "expected" in c:
        M = _diff_matrix(E, _param_formulas(c, "expected", path))
    else:
        M = _diff_matrix(E, list(zip(*E)))
    return _from_reports({"velocity_strain": _matrix_sweep(M, d)})


@op("saint_venant", "saint-venant", [], optional_refs=("strain", "displacement"),
    uses=(continuum.saint_venant_residual, continuum.saint_venant_printed))
def _saint_venant(m, c, d, path):
    if "strain" in c:
        e = m.strains[c["strain"]]
        coords, E = e["coords"], e["matrix"]
    elif "displacement" in c:
        u = m.displacements[c["displacement"]]
        coords, E = u.coords, continuum.strain_rotation_split(u).strain
    else:
        raise ModelError(path, "saint_venant needs a strain or a displacement")
    fn = continuum.saint_venant_printed if c.get("printed", False) else continuum.saint_venant_residual
    return _from_reports({"compatibility": fn(E, coords, d)})


# ---------------------------------------------------------------------------
# continuum-balance

@op("lagrangian_balance", "continuum-balance", ["medium"], uses=(continuum.lagrangian_balance_residual,))
def _lag_balance(m, c, d, path):
    return _from_reports(continuum.lagrangian_balance_residual(m.media[c["medium"]], d).parts)


@op("eulerian_balance", "continuum-balance", ["medium"], uses=(continuum.eulerian_balance_residual,))
def _eul_balance(m, c, d, path):
    return _from_reports(continuum.eulerian_balance_residual(m.media[c["medium"]], d).parts)


@op("unified_balance", "continuum-balance", ["medium"],
    uses=(continuum.assemble_unified, continuum.unified_balance_residual))
def _uni_balance(m, c, d, path):
    P = continuum.assemble_unified(m.media[c["medium"]], d)
    rep = continuum.unified_balance_residual(P, d)
    return _from_reports({"mass": rep["mass"], "momentum": rep["momentum"]})


@op("cosserat_balance", "continuum-balance", ["medium"], uses=(continuum.cosserat_balance_residual,))
def _cos_balance(m, c, d, path):
    return _from_reports(continuum.cosserat_balance_residual(m.media[c["medium"]], d).parts)


# ---------------------------------------------------------------------------
# wave-check

@op("dispersion", "wave-check", ["wave", "law"], uses=(wave.dispersion_residual,))
def _dispersion(m, c, d, path):
    return _from_reports({"dispersion": wave.dispersion_residual(
        m.dispersion_laws[c["law"]], m.wave_states[c["wave"]], d)})


@op("eikonal", "wave-check", ["wave"], uses=(wave.eikonal_residual,))
def _eikonal(m, c, d, path):
    return _from_reports({"eikonal": wave.eikonal_residual(
        m.wave_states[c["wave"]].theta, d, float(c.get("c", 1.0)))})


@op("group_velocity", "wave-check", ["law"], needs_domain=False, uses=(wave.group_velocity,))
def _group_velocity(m, c, d, path):
    at = {k: _number(v, f"{path}.at.{k}") for k, v in c.get("at", {}).items()}
    vg = wave.group_velocity(m.dispersion_laws[c["law"]], at)
    expected = np.array([_number(v, f"{path}.expected") for v in c.get("expected", [0, 0, 0])])
    if expected.shape != (3,):
        raise ModelError(f"{path}.expected", "expected three components")
    return Outcome({"group_velocity": float(np.max(np.abs(vg - expected)))}, {}, "group_velocity",
                   {"value": [float(v) for v in vg]})


@op("dalembert_recomposition", "wave-check", ["wave"],
    uses=(wave.dalembert_split, wave.recompose, wave.dalembertian))
def _recomposition(m, c, d, path):
    w = m.wave_states[c["wave"]]
    cc = float(c.get("c", 1.0))
    real, imag = wave.dalembert_split(w, d, cc)
    pc, ps = wave.recompose(real, imag, w.A, w.theta)
    direct_c = wave.dalembertian(mul(w.A, cos(w.theta)), cc)
    direct_s = wave.dalembertian(mul(w.A, sin(w.theta)), cc)
    return _from_reports({"cos": sweep([sub(pc, direct_c)], d), "sin": sweep([sub(ps, direct_s)], d)})


@op("amplitude_phase", "wave-check", ["wave"], uses=(wave.amplitude_phase_residuals,))
def _amp_phase(m, c, d, path):
    kw = {k: _number(c[k], f"{path}.{k}") for k in ("lam_A", "alpha0_sq", "rho_theta", "k0_sq", "c") if k in c}
    return _from_reports(wave.amplitude_phase_residuals(m.wave_states[c["wave"]], d, **kw))


@op("wave_balance", "wave-check", ["wave"], uses=(wave.wave_dynamical_form, wave.divergence_form))
def _wave_balance(m, c, d, path):
    w = m.wave_states[c["wave"]]
    lam = _number(c.get("lam_A", 0), f"{path}.lam_A")
    rho = _number(c.get("rho_theta", 0), f"{path}.rho_theta")
    phi = wave.wave_dynamical_form(lam, rho)
    dstar = dynamics.adjoint(phi, w.section())
    div = wave.divergence_form(w)
    expect = [sub(mul(lam, w.A), div["div_p_A"]), sub(rho, div["div_p_theta"])]
    return _from_reports({"adjoint_vs_divergence": sweep([sub(a, b) for a, b in zip(dstar, expect)], d),
                          "balance": sweep(list(dstar), d)})


@op("de_broglie", "wave-check", [], needs_domain=False, uses=(wave.de_broglie,))
def _de_broglie(m, c, d, path):
    k = [_number(v, f"{path}.k") for v in c.get("k", [])]
    p = wave.de_broglie(k, _number(c.get("hbar", 1), f"{path}.hbar"), c.get("g"))
    expected = np.array([_number(v, f"{path}.expected") for v in c.get("expected", [0] * 4)])
    return Outcome({"momentum": float(np.max(np.abs(p - expected)))}, {}, "momentum",
                   {"value": [float(v) for v in p]})


# ---------------------------------------------------------------------------
# maxwell

@op("maxwell", "maxwell", ["field"],
    uses=(em.maxwell_residuals, em.exterior_derivative, em.divergence, em.poincare_iso,
          em.poincare_inverse, em.vacuum_chi, em.vacuum_constitutive))
def _maxwell(m, c, d, path):
    f = m.em_fields[c["field"]]
    return _from_reports(em.maxwell_residuals(f.F, f.h, f.J, f.chi, d))


@op("potential", "maxwell", ["field"], uses=(em.potential_check, em.field_strength))
def _potential(m, c, d, path):
    f = m.em_fields[c["field"]]
    A = em.one_form(_param_formulas(c, "potential", path)) if "potential" in c else f.potential
    if A is None:
        raise ModelError(path, "no potential given")
    return _from_reports({"potential": em.potential_check(A, f.F, d)})


@op("field_split", "maxwell", ["field"],
    uses=(em.spacetime_split, em.spacetime_assemble, em.excitation_split, em.excitation_assemble))
def _split(m, c, d, path):
    f = m.em_fields[c["field"]]
    E, B = em.spacetime_split(f.F)
    D, H = em.excitation_split(f.h)
    F2 = em.spacetime_assemble(E, B)
    h2 = em.excitation_assemble(D, H)
    reports = {"F_roundtrip": sweep([sub(a, b) for a, b in zip(F2.comps, f.F.comps)], d),
               "h_roundtrip": sweep([sub(a, b) for a, b in zip(h2.comps, f.h.comps)], d)}
    for key, got in (("expected_E", E), ("expected_B", B), ("expected_D", D), ("expected_H", H)):
        if key in c:
            reports[key[9:]] = sweep([sub(a, b) for a, b in zip(got, _param_formulas(c, key, path))], d)
    return _from_reports(reports)


@op("field_lagrangian", "maxwell", ["field"], uses=(em.field_lagrangian,))
def _field_lagrangian(m, c, d, path):
    f = m.em_fields[c["field"]]
    return _from_reports({"lagrangian": sweep(
        [sub(em.field_lagrangian(f.F, f.h), _param_formulas(c, "expected", path))], d)})


# ---------------------------------------------------------------------------
# validation and dispatch

def _required_axes(m: Model, c: dict) -> set[str]:
    """Variables that must be domain axes for a check to be evaluable."""
    names: set[str] = set()
    if "section" in c:
        names |= set(m.sections[c["section"]].source)
    if "lagrangian" in c and "section" not in c:
        names |= set(m.lagrangians[c["lagrangian"]].coords.source)
    if "point_model" in c:
        names |= set(m.point_models[c["point_model"]].coords.source)
    if "curve" in c:
        names.add(m.rigid_curves[c["curve"]].t)
    if "state" in c:
        names.add(m.rigid_states[c["state"]].t)
    if "medium" in c:
        names |= set(m.media[c["medium"]].domain_names)
    if "displacement" in c:
        names |= set(m.displacements[c["displacement"]].coords)
    if "strain" in c:
        names |= set(m.strains[c["strain"]]["coords"])
    if "wave" in c:
        w = m.wave_states[c["wave"]]
        for e in (w.A, w.theta) + w.A_jet + w.k:
            names |= free_vars(e)
    if "field" in c:
        f = m.em_fields[c["field"]]
        for e in f.F.comps + f.h.comps + f.J.comps + tuple(x for r in f.chi.matrix for x in r):
            names |= free_vars(e)
    return names


def validate_check(m: Model, c: Any, index: int, default_tol: float, seen: set) -> dict:
    """Resolve a check entry into a normalised record, raising ModelError on problems."""
    path = f"checks[{index}]"
    if not isinstance(c, dict):
        raise ModelError(path, "expected an object")
    name = c.get("name")
    if not isinstance(name, str) or not name:
        raise ModelError(f"{path}.name", "missing check name")
    if name in seen:
        raise ModelError(f"{path}.name", f"duplicate check name {name!r}")
    seen.add(name)
    opname = c.get("op")
    if opname not in OPS:
        raise ModelError(f"{path}.op", f"unknown operation {opname!r}")
    spec = OPS[opname]
    for key in spec.refs + tuple(k for k in spec.optional_refs if k in c):
        if key not in c:
            raise ModelError(f"{path}.{key}", "missing reference")
        table = getattr(m, REFS[key])
        if c[key] not in table:
            raise ModelError(f"{path}.{key}", f"unknown {REFS[key][:-1].replace('_', ' ')} {c[key]!r}")
    tol = c.get("tol", default_tol)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol < 0:
        raise ModelError(f"{path}.tol", "tolerance must be a non-negative number")
    expect = c.get("expect", "zero")
    if expect not in ("zero", "nonzero"):
        raise ModelError(f"{path}.expect", 'expected "zero" or "nonzero"')
    domain = None
    if spec.needs_domain:
        dname = c.get("domain")
        if isinstance(dname, dict):
            domain, dname = _build_domain(dname, f"{path}.domain"), "inline"
        elif isinstance(dname, str) and dname in m.domains:
            domain = m.domains[dname]
        else:
            raise ModelError(f"{path}.domain", f"unknown domain {dname!r}")
        missing = _required_axes(m, c) - set(domain.names)
        if missing:
            raise ModelError(f"{path}.domain", f"domain {dname!r} lacks axes {sorted(missing)}")
    # formula parameters are parsed here so syntax errors surface before evaluation
    for key, value in c.items():
        if key in ("variation", "alpha", "map", "position", "jet", "spin", "expected_omega", "expected_v0",
                   "vector", "metric", "velocity", "potential") or (key.startswith("expected") and opname not in (
                       "group_velocity", "de_broglie")):
            _formulas(value, f"{path}.{key}")
    return {"name": name, "op": opname, "spec": spec, "tol": float(tol), "expect": expect,
            "domain": domain, "domain_name": dname if spec.needs_domain else None, "raw": c, "path": path}


def run_check(m: Model, rec: dict) -> Outcome:
    return rec["spec"].run(m, rec["raw"], rec["domain"], rec["path"])

