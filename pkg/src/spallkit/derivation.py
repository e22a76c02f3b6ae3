"""Equation-based closure of missing numeric fields (tier-2 derivation).

The library holds the eleven governing relations between density, wave
speeds, elastic moduli, and the HEL/spall stresses. ``close_record`` iterates
them to a fixpoint: whenever all inputs of a relation are present, its output
is filled in (tier T2) if missing, or cross-checked against the existing
value if present. Existing values are never overwritten; disagreements beyond
the tolerance produce :class:`ConflictFlag` entries with both values recorded
in the evidence log.

All arithmetic runs in 64-bit floats over SI base units; results convert to
the output field's canonical unit only when written back to the record.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

from . import schema
from .records import (
    DEFAULT_TOLERANCE,
    EPSILON,
    EvidenceEntry,
    FieldValue,
    ShotRecord,
    Tier,
)
from .units import Quantity, from_si, render_number, to_si


class DerivationError(ValueError):
    pass


class DomainError(DerivationError):
    """Inputs violate an equation's domain guard."""


# Longitudinal modulus is computed as an internal intermediate; it has no
# column in the record schema and is never exported.
INTERMEDIATE_LONGITUDINAL_MODULUS = "M"

_REGISTRY = schema.default_registry()


@dataclass(frozen=True)
class EquationSpec:
    """One governing relation: named output from named inputs."""

    name: str
    output_field: str
    input_fields: tuple[str, ...]
    formula: str
    evaluate: Callable[[Mapping[str, float]], float]
    domain_guard: Callable[[Mapping[str, float]], bool] = lambda values: True


_RHO = schema.INITIAL_DENSITY
_CL = schema.LONGITUDINAL_SOUND_SPEED
_CS = schema.SHEAR_SOUND_SPEED
_CB = schema.BULK_SOUND_SPEED
_UHEL = schema.FREE_SURFACE_VELOCITY_HEL
_SHEL = schema.LONGITUDINAL_STRESS_HEL
_THEL = schema.SHEAR_STRESS_HEL
_SSP = schema.SPALL_STRENGTH
_DUPB = schema.SPALL_PULLBACK_VELOCITY
_B = schema.BULK_MODULUS
_G = schema.SHEAR_MODULUS
_E = schema.YOUNGS_MODULUS
_NU = schema.POISSONS_RATIO
_M = INTERMEDIATE_LONGITUDINAL_MODULUS

EQUATION_LIBRARY: tuple[EquationSpec, ...] = (
    EquationSpec(
        "Longitudinal stress at HEL",
        _SHEL,
        (_RHO, _CL, _UHEL),
        "sigma_HEL = 0.5 * rho0 * cL * u_HEL",
        lambda v: 0.5 * v[_RHO] * v[_CL] * v[_UHEL],
    ),
    EquationSpec(
        "Shear stress at HEL",
        _THEL,
        (_CS, _CL, _SHEL),
        "tau_HEL = (cs / cL)^2 * sigma_HEL",
        lambda v: (v[_CS] / v[_CL]) ** 2 * v[_SHEL],
        domain_guard=lambda v: v[_CL] != 0.0,
    ),
    EquationSpec(
        "Spall strength",
        _SSP,
        (_RHO, _CB, _DUPB),
        "sigma_sp = 0.5 * rho0 * cb * du_pb",
        lambda v: 0.5 * v[_RHO] * v[_CB] * v[_DUPB],
    ),
    EquationSpec(
        "Bulk sound speed",
        _CB,
        (_CL, _CS),
        "cb = sqrt(cL^2 - (4/3) * cs^2)",
        lambda v: math.sqrt(v[_CL] ** 2 - (4.0 / 3.0) * v[_CS] ** 2),
        domain_guard=lambda v: v[_CL] ** 2 - (4.0 / 3.0) * v[_CS] ** 2 > 0.0,
    ),
    EquationSpec(
        "Shear modulus",
        _G,
        (_RHO, _CS),
        "G = rho0 * cs^2",
        lambda v: v[_RHO] * v[_CS] ** 2,
    ),
    EquationSpec(
        "Bulk modulus",
        _B,
        (_RHO, _CB),
        "B = rho0 * cb^2",
        lambda v: v[_RHO] * v[_CB] ** 2,
    ),
    EquationSpec(
        "Longitudinal modulus",
        _M,
        (_RHO, _CL),
        "M = rho0 * cL^2",
        lambda v: v[_RHO] * v[_CL] ** 2,
    ),
    EquationSpec(
        "Young's modulus",
        _E,
        (_B, _G),
        "E = 9 * B * G / (3 * B + G)",
        lambda v: 9.0 * v[_B] * v[_G] / (3.0 * v[_B] + v[_G]),
        domain_guard=lambda v: 3.0 * v[_B] + v[_G] != 0.0,
    ),
    EquationSpec(
        "Poisson's ratio",
        _NU,
        (_B, _G),
        "nu = (3 * B - 2 * G) / (6 * B + 2 * G)",
        lambda v: (3.0 * v[_B] - 2.0 * v[_G]) / (6.0 * v[_B] + 2.0 * v[_G]),
        domain_guard=lambda v: 6.0 * v[_B] + 2.0 * v[_G] != 0.0,
    ),
    EquationSpec(
        "Pullback velocity",
        _DUPB,
        (_SSP, _RHO, _CB),
        "du_pb = 2 * sigma_sp / (rho0 * cb)",
        lambda v: 2.0 * v[_SSP] / (v[_RHO] * v[_CB]),
        domain_guard=lambda v: v[_RHO] * v[_CB] != 0.0,
    ),
    EquationSpec(
        "Free surface at HEL",
        _UHEL,
        (_SHEL, _RHO, _CL),
        "u_HEL = sigma_HEL / (0.5 * rho0 * cL)",
        lambda v: v[_SHEL] / (0.5 * v[_RHO] * v[_CL]),
        domain_guard=lambda v: v[_RHO] * v[_CL] != 0.0,
    ),
)

# Evidence ids minted here carry this prefix; the response parser rejects
# model-provided ids that would collide with it.
DERIVED_EVIDENCE_PREFIX = "drv:"


def _output_unit(output_field: str) -> str:
    if output_field == _M:
        return "GPa"
    return _REGISTRY.field_spec(output_field).canonical_unit


def evaluate_equation(eq: EquationSpec, inputs: Mapping[str, Quantity]) -> Quantity:
    """Evaluate one relation on canonical-unit quantities.

    Inputs are converted to SI internally; the result comes back in the
    output field's canonical unit, with no uncertainty attached.
    """
    try:
        si_inputs = {name: to_si(inputs[name]) for name in eq.input_fields}
    except KeyError as exc:
        raise DerivationError(f"{eq.name}: missing input {exc}") from None
    if not eq.domain_guard(si_inputs):
        raise DomainError(f"{eq.name}: inputs outside equation domain")
    out_unit = _output_unit(eq.output_field)
    return Quantity(from_si(eq.evaluate(si_inputs), out_unit), out_unit)


@dataclass(frozen=True)
class ConflictFlag:
    """Existing value and fresh derivation disagree beyond tolerance."""

    field: str
    t1_value: Quantity
    t2_value: Quantity
    relative_difference: float
    tolerance: float
    doi: str = ""
    shot_id: str = ""


def check_conflict(
    t1: Quantity,
    t2: Quantity,
    tolerance: float,
    *,
    field: str = "",
    doi: str = "",
    shot_id: str = "",
) -> ConflictFlag | None:
    """Flag iff |t1 - t2| / max(|t1|, eps) exceeds the tolerance."""
    if t1.unit != t2.unit:
        raise DerivationError(
            f"conflict check requires matching units, got {t1.unit!r} vs {t2.unit!r}"
        )
    relative = abs(t1.value - t2.value) / max(abs(t1.value), EPSILON)
    if relative <= tolerance:
        return None
    return ConflictFlag(field, t1, t2, relative, tolerance, doi, shot_id)


def _describe_inputs(eq: EquationSpec, pool: Mapping[str, float]) -> str:
    parts = []
    for name in eq.input_fields:
        unit_id = _output_unit(name) if name == _M else _REGISTRY.field_spec(name).canonical_unit
        value = from_si(pool[name], unit_id)
        parts.append(f"{name} = {render_number(value)} {unit_id}")
    return "; ".join(parts)


def close_record(
    record: ShotRecord,
    library: Sequence[EquationSpec] = EQUATION_LIBRARY,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[ShotRecord, list[EvidenceEntry], list[ConflictFlag]]:
    """Derive every missing field reachable from the present ones.

    The result does not depend on library order: each relation has a unique
    output, derived and existing values are never overwritten, and input
    availability only grows. Quantities already on the record stay
    authoritative; a derivable field that already holds a value is
    cross-checked instead, and on disagreement beyond ``tolerance`` both the
    retained and the derived value are recorded in the evidence log.
    """
    if tolerance <= 0:
        raise DerivationError("tolerance must be positive")

    pool: dict[str, float] = {}
    for name, fv in record.values.items():
        q = fv.quantity
        if q is not None:
            pool[name] = to_si(q)

    derived: dict[str, FieldValue] = {}
    evidence: list[EvidenceEntry] = []
    flags: list[ConflictFlag] = []
    settled: set[str] = set()
    doi, shot_id = record.doi, record.shot_id

    progress = True
    while progress:
        progress = False
        for eq in library:
            if eq.name in settled:
                continue
            if not all(name in pool for name in eq.input_fields):
                continue
            settled.add(eq.name)
            si_inputs = {name: pool[name] for name in eq.input_fields}
            if not eq.domain_guard(si_inputs):
                continue  # silent non-derivation; the validator reports it
            out_si = eq.evaluate(si_inputs)
            out = eq.output_field

            if out == INTERMEDIATE_LONGITUDINAL_MODULUS:
                pool[out] = out_si
                progress = True
                continue

            existing = record.values[out]
            if existing.is_missing:
                q = Quantity(from_si(out_si, _output_unit(out)), _output_unit(out))
                ref = f"{DERIVED_EVIDENCE_PREFIX}{doi}:{shot_id}:{out}"
                derived[out] = FieldValue(q, Tier.T2, evidence_ref=ref)
                evidence.append(
                    EvidenceEntry(
                        id=ref,
                        doi=doi,
                        shot_id=shot_id,
                        field=out,
                        tier=Tier.T2,
                        source_locator=eq.name,
                        quote_or_inputs=_describe_inputs(eq, pool),
                    )
                )
                pool[out] = out_si
                progress = True
                continue

            q_existing = existing.quantity
            if q_existing is None:
                continue  # text payload in a numeric slot; nothing to compare
            q_derived = Quantity(from_si(out_si, _output_unit(out)), _output_unit(out))
            flag = check_conflict(
                q_existing, q_derived, tolerance, field=out, doi=doi, shot_id=shot_id
            )
            if flag is not None:
                flags.append(flag)
                evidence.append(
                    EvidenceEntry(
                        id=f"drv-check:{doi}:{shot_id}:{out}",
                        doi=doi,
                        shot_id=shot_id,
                        field=out,
                        tier=Tier.T2,
                        source_locator=f"{eq.name} (cross-check)",
                        quote_or_inputs=(
                            f"retained = {render_number(q_existing.value)} {q_existing.unit}; "
                            f"derived = {render_number(q_derived.value)} {q_derived.unit}; "
                            + _describe_inputs(eq, pool)
                        ),
                        notes="existing value retained; flagged for manual review",
                    )
                )

    field_order = {name: i for i, name in enumerate(schema.FIELD_NAMES)}
    evidence.sort(key=lambda e: field_order[e.field])
    flags.sort(key=lambda f: field_order[f.field])
    closed = record.with_values(derived) if derived else record
    return closed, evidence, flags


def guard_failures(record: ShotRecord) -> list[EquationSpec]:
    """Relations whose inputs are all present but fall outside the domain."""
    pool: dict[str, float] = {}
    for name, fv in record.values.items():
        q = fv.quantity
        if q is not None:
            pool[name] = to_si(q)
    failures = []
    for eq in EQUATION_LIBRARY:
        if all(name in pool for name in eq.input_fields):
            si_inputs = {name: pool[name] for name in eq.input_fields}
            if not eq.domain_guard(si_inputs):
                failures.append(eq)
    return failures
