"""Loading and validating JSON model files.

Everything is built eagerly, so formula errors, unresolved names and shape
mismatches surface before any check runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from jetbalance.continuum import DisplacementField, MediumState
from jetbalance.domain import ParamDomain
from jetbalance.dynamics import Connection, DynamicalForm
from jetbalance.em import (
    ConstitutiveTensor, Metric4, bivector, field_strength, one_form, two_form, vacuum_chi, vector,
)
from jetbalance.expr import ExprError, as_expr, differentiate, evaluate, free_vars, mul, parse
from jetbalance.jet import ConstraintSet, JetCoordinates, JetSection, SmoothMap, prolong
from jetbalance.lagrangian import LagrangianDensity
from jetbalance.mechanics import (
    InertiaLaw, PointModel, RigidDynamicalState, RigidMotionCurve, body_velocity, inertia_couple,
)
from jetbalance.wave import DispersionLaw, wave_section, wave_state

__all__ = ["ModelError", "Model", "EMField", "load_model", "build_model", "SECTIONS"]

SECTIONS = (
    "domains", "sections", "dynamical_forms", "connections", "constraints", "lagrangians",
    "point_models", "rigid_curves", "rigid_states", "media", "displacements", "strains",
    "wave_states", "dispersion_laws", "em_fields", "checks",
)


class ModelError(Exception):
    """Input error with the JSON path where it was found."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class EMField:
    F: Any
    h: Any
    J: Any
    chi: ConstitutiveTensor
    potential: Any = None


@dataclass
class Model:
    domains: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    dynamical_forms: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    lagrangians: dict = field(default_factory=dict)
    point_models: dict = field(default_factory=dict)
    rigid_curves: dict = field(default_factory=dict)
    rigid_states: dict = field(default_factory=dict)
    media: dict = field(default_factory=dict)
    displacements: dict = field(default_factory=dict)
    strains: dict = field(default_factory=dict)
    wave_states: dict = field(default_factory=dict)
    dispersion_laws: dict = field(default_factory=dict)
    em_fields: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)


def _formulas(value, path: str):
    """Parse a (nested list of) formula strings or numbers, reporting the JSON path."""
    if isinstance(value, list):
        return [_formulas(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise ModelError(path, f"expected a formula string or number, got {type(value).__name__}")
    if isinstance(value, str):
        try:
            return parse(value)
        except ExprError as e:
            raise ModelError(path, f"{e} in {value!r}") from None
    return as_expr(value)


def _number(value, path: str) -> float:
    """Numbers may be written as constant formulas such as "2*pi"."""
    if isinstance(value, bool):
        raise ModelError(path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    e = _formulas(value, path)
    if isinstance(e, list) or free_vars(e) - {"pi"}:
        raise ModelError(path, "expected a constant")
    return float(evaluate(e, {"pi": math.pi}))


def _names(value, path: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ModelError(path, "expected a list of names")
    return tuple(value)


def _require(entry: dict, key: str, path: str):
    if key not in entry:
        raise ModelError(f"{path}.{key}", "missing required field")
    return entry[key]


def _coords(entry: dict, path: str, source_default=None) -> JetCoordinates:
    source = entry.get("source", source_default)
    if source is None:
        raise ModelError(f"{path}.source", "missing required field")
    jn = entry.get("jet_names")
    return JetCoordinates.make(_names(source, f"{path}.source"),
                               _names(_require(entry, "target", path), f"{path}.target"),
                               None if jn is None else [_names(r, f"{path}.jet_names") for r in jn])


def _build_domain(entry, path):
    if not isinstance(entry, dict) or not entry:
        raise ModelError(path, "a domain maps axis names to [lo, hi, n]")
    spec = {}
    for axis, triple in entry.items():
        if not isinstance(triple, list) or len(triple) != 3:
            raise ModelError(f"{path}.{axis}", "expected [lo, hi, n]")
        lo, hi = _number(triple[0], f"{path}.{axis}[0]"), _number(triple[1], f"{path}.{axis}[1]")
        n = triple[2]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ModelError(f"{path}.{axis}[2]", "point count must be a positive integer")
        if hi < lo or (n > 1 and hi == lo):
            raise ModelError(f"{path}.{axis}", "need lo < hi (or a single point)")
        spec[axis] = (lo, hi, n)
    return ParamDomain.box(**spec)


def _build_section(entry, path):
    c = _coords(entry, path)
    if "map" in entry:
        f = SmoothMap.make(c.source, c.target, _formulas(entry["map"], f"{path}.map"))
        return prolong(f, c.jet_names)
    return JetSection.make(c.source, c.target, _formulas(_require(entry, "position", path), f"{path}.position"),
                           _formulas(_require(entry, "jet", path), f"{path}.jet"), c.jet_names)


def _build_form(entry, path):
    c = _coords(entry, path)
    return DynamicalForm.make(c, _formulas(_require(entry, "force", path), f"{path}.force"),
                              _formulas(_require(entry, "stress", path), f"{path}.stress"))


def _build_connection(entry, path):
    c = _coords(entry, path)
    return Connection.make(c, _formulas(_require(entry, "coeffs", path), f"{path}.coeffs"))


def _build_constraint(entry, path):
    levels = entry.get("levels")
    return ConstraintSet.make(_formulas(_require(entry, "functions", path), f"{path}.functions"),
                              None if levels is None else [_number(v, f"{path}.levels") for v in levels])


def _build_lagrangian(entry, path):
    c = _coords(entry, path)
    return LagrangianDensity.make(c, _formulas(_require(entry, "density", path), f"{path}.density"))


def _build_point_model(entry, path):
    c = _coords(entry, path, ["t"])
    spin = entry.get("spin")
    return PointModel.make(c, _formulas(entry.get("mass", 1), f"{path}.mass"),
                           _formulas(_require(entry, "metric", path), f"{path}.metric"),
                           _formulas(_require(entry, "force", path), f"{path}.force"),
                           None if spin is None else _formulas(spin, f"{path}.spin"))


def _build_rigid_curve(entry, path):
    return RigidMotionCurve.make(_formulas(_require(entry, "translation", path), f"{path}.translation"),
                                 _formulas(_require(entry, "rotation", path), f"{path}.rotation"),
                                 entry.get("time", "t"))


def _build_rigid_state(entry, path, model: Model):
    """Explicit momenta, or momenta from a curve with a mass and an inertia law."""
    t = entry.get("time", "t")
    if "curve" in entry:
        name = entry["curve"]
        if name not in model.rigid_curves:
            raise ModelError(f"{path}.curve", f"unknown rigid curve {name!r}")
        curve = model.rigid_curves[name]
        mass = _formulas(entry.get("mass", 1), f"{path}.mass")
        inertia = entry.get("inertia", 1)
        if isinstance(inertia, list):
            law = InertiaLaw.make(_formulas(inertia, f"{path}.inertia"))
        else:
            law = InertiaLaw.scalar(_formulas(inertia, f"{path}.inertia"))
        _, Omega = body_velocity(curve)
        p = [mul(mass, differentiate(a, curve.t)) for a in curve.translation]
        L = inertia_couple(law, Omega)
        t = curve.t
    else:
        p = _formulas(_require(entry, "momentum", path), f"{path}.momentum")
        L = _formulas(_require(entry, "angular_momentum", path), f"{path}.angular_momentum")
    return RigidDynamicalState.make(_formulas(_require(entry, "force", path), f"{path}.force"),
                                    _formulas(_require(entry, "torque", path), f"{path}.torque"),
                                    p, L, t)


def _build_medium(entry, path):
    kw = {}
    for key in ("density", "momentum", "velocity", "stress", "body_force", "couple_stress", "torque", "spin"):
        if key in entry:
            kw[key] = _formulas(entry[key], f"{path}.{key}")
    return MediumState.make(_names(_require(entry, "space", path), f"{path}.space"),
                            entry.get("time", "t"), **kw)


def _build_displacement(entry, path):
    return DisplacementField.make(_names(_require(entry, "coords", path), f"{path}.coords"),
                                  _formulas(_require(entry, "components", path), f"{path}.components"))


def _build_strain(entry, path):
    coords = _names(_require(entry, "coords", path), f"{path}.coords")
    M = _formulas(_require(entry, "matrix", path), f"{path}.matrix")
    if len(M) != len(coords) or any(not isinstance(r, list) or len(r) != len(coords) for r in M):
        raise ModelError(f"{path}.matrix", f"expected a {len(coords)}x{len(coords)} matrix")
    for r in M:
        for e in r:
            extra = free_vars(e) - set(coords)
            if extra:
                raise ModelError(f"{path}.matrix", f"unexpected variable(s) {sorted(extra)}")
    return {"coords": coords, "matrix": M}


def _build_wave(entry, path):
    A = _formulas(_require(entry, "A", path), f"{path}.A")
    theta = _formulas(_require(entry, "theta", path), f"{path}.theta")
    if "A_jet" in entry or "k" in entry:
        return wave_state(A, theta, _formulas(_require(entry, "A_jet", path), f"{path}.A_jet"),
                          _formulas(_require(entry, "k", path), f"{path}.k"))
    return wave_section(A, theta)


def _build_dispersion(entry, path):
    return DispersionLaw.make(_formulas(_require(entry, "P", path), f"{path}.P"),
                              _number(entry.get("level", 0), f"{path}.level"))


def _build_em(entry, path):
    potential = None
    if "potential" in entry:
        potential = one_form(_formulas(entry["potential"], f"{path}.potential"))
        F = field_strength(potential)
    else:
        F = two_form(_formulas(_require(entry, "F", path), f"{path}.F"))
    law = entry.get("constitutive", "vacuum")
    if law == "vacuum":
        metric = entry.get("metric")
        g = Metric4.minkowski() if metric is None else Metric4.make(_formulas(metric, f"{path}.metric"))
        chi = vacuum_chi(g)
    elif isinstance(law, dict) and "chi" in law:
        chi = ConstitutiveTensor.make(_formulas(law["chi"], f"{path}.constitutive.chi"))
    else:
        raise ModelError(f"{path}.constitutive", 'expected "vacuum" or {"chi": 6x6 matrix}')
    h = chi.apply(F) if "h" not in entry else bivector(_formulas(entry["h"], f"{path}.h"))
    J = vector(_formulas(entry.get("J", [0, 0, 0, 0]), f"{path}.J"))
    return EMField(F, h, J, chi, potential)


_BUILDERS = {
    "domains": _build_domain, "sections": _build_section, "dynamical_forms": _build_form,
    "connections": _build_connection, "constraints": _build_constraint,
    "lagrangians": _build_lagrangian, "point_models": _build_point_model,
    "rigid_curves": _build_rigid_curve, "media": _build_medium,
    "displacements": _build_displacement, "strains": _build_strain, "wave_states": _build_wave,
    "dispersion_laws": _build_dispersion, "em_fields": _build_em,
}


def build_model(doc: Any) -> Model:
    if not isinstance(doc, dict):
        raise ModelError("$", "model must be a JSON object")
    unknown = sorted(set(doc) - set(SECTIONS) - {"description", "variables"})
    if unknown:
        raise ModelError("$", f"unknown section(s) {unknown}")
    model = Model()
    order = [s for s in SECTIONS if s not in ("checks", "rigid_states")] + ["rigid_states"]
    for section in order:
        entries = doc.get(section, {})
        if not isinstance(entries, dict):
            raise ModelError(section, "expected an object mapping names to entries")
        target = getattr(model, section)
        for name, entry in entries.items():
            path = f"{section}.{name}"
            if not isinstance(entry, dict):
                raise ModelError(path, "expected an object")
            try:
                if section == "rigid_states":
                    target[name] = _build_rigid_state(entry, path, model)
                else:
                    target[name] = _BUILDERS[section](entry, path)
            except ModelError:
                raise
            except (ExprError, ValueError, TypeError) as e:
                raise ModelError(path, str(e)) from None
    checks = doc.get("checks", [])
    if not isinstance(checks, list):
        raise ModelError("checks", "expected a list")
    model.checks = checks
    return model


def load_model(path: str) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ModelError(path, f"cannot read model file: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ModelError(f"{path}:{e.lineno}:{e.colno}", f"invalid JSON: {e.msg}") from None
    return build_model(doc)
