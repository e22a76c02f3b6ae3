"""Post-consolidation quality gate.

Validation never mutates or rejects a record by itself; it emits
:class:`Finding` entries and ``route`` partitions records into the accepted
set and the manual-review queue. Error-severity findings and tier-conflict
flags force review; warnings and notes ride along as annotations.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import schema
from .derivation import ConflictFlag, guard_failures
from .records import DEFAULT_TOLERANCE, FieldValue, ShotRecord, Tier
from .units import UnitError, parse_quantity, render_number, to_si

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"
SEVERITY_NOTE = "note"

# Ratio sanity bands typical of metallic systems; outside is suspicious, not wrong.
SHEAR_TO_LONGITUDINAL_STRESS_BAND = (0.2, 0.35)
SOUND_SPEED_RATIO_BAND = (0.5, 0.6)

# Out-of-range severities; any field not listed here warns.
_RANGE_SEVERITY = {
    schema.POISSONS_RATIO: SEVERITY_ERROR,
    schema.FREE_SURFACE_VELOCITY_HEL: SEVERITY_NOTE,
}

VERIFICATION_PASS = "pass"
VERIFICATION_REVIEW = "review"


@dataclass(frozen=True)
class Finding:
    doi: str
    shot_id: str
    field_or_check: str
    severity: str
    message: str
    observed: str = ""
    expected: str = ""

    @property
    def record_key(self) -> tuple[str, str]:
        return (self.doi, self.shot_id)


def _numeric_value(record: ShotRecord, name: str) -> float | None:
    q = record.values[name].quantity
    return q.value if q is not None else None


def validate_record(
    record: ShotRecord,
    registry: schema.SchemaRegistry,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list[Finding]:
    """Run every check against one record; deterministic order, read-only."""
    findings: list[Finding] = []
    doi, shot_id = record.doi, record.shot_id

    def add(check: str, severity: str, message: str, observed: str = "", expected: str = "") -> None:
        findings.append(Finding(doi, shot_id, check, severity, message, observed, expected))

    for spec in registry.mandatory_fields():
        if record.values[spec.name].is_missing:
            add(spec.name, SEVERITY_ERROR, "mandatory field is missing", expected="non-missing value")

    for spec in registry.numeric_fields():
        fv = record.values[spec.name]
        if fv.is_missing:
            continue
        if isinstance(fv.payload, str):
            try:
                parse_quantity(fv.payload)
                message = "value unit does not match the field dimension"
            except UnitError:
                message = "unparseable numeric value retained as text"
            add(
                spec.name,
                SEVERITY_ERROR,
                message,
                observed=fv.payload,
                expected=f"quantity in {spec.canonical_unit}",
            )
            continue
        if spec.plausibility_range is not None:
            lower, upper = spec.plausibility_range
            value = fv.payload.value
            if not lower <= value <= upper:
                add(
                    spec.name,
                    _RANGE_SEVERITY.get(spec.name, SEVERITY_WARNING),
                    "value outside plausibility range",
                    observed=render_number(value),
                    expected=f"[{render_number(lower)}, {render_number(upper)}] {spec.canonical_unit}",
                )

    tau = _numeric_value(record, schema.SHEAR_STRESS_HEL)
    sigma = _numeric_value(record, schema.LONGITUDINAL_STRESS_HEL)
    if tau is not None and sigma is not None and sigma != 0.0:
        ratio = tau / sigma
        low, high = SHEAR_TO_LONGITUDINAL_STRESS_BAND
        if not low <= ratio <= high:
            add(
                "tau_HEL/sigma_HEL",
                SEVERITY_WARNING,
                "stress ratio outside the typical metallic band",
                observed=render_number(ratio),
                expected=f"[{low}, {high}]",
            )

    cs = _numeric_value(record, schema.SHEAR_SOUND_SPEED)
    cl = _numeric_value(record, schema.LONGITUDINAL_SOUND_SPEED)
    if cs is not None and cl is not None and cl != 0.0:
        ratio = cs / cl
        low, high = SOUND_SPEED_RATIO_BAND
        if not low <= ratio <= high:
            add(
                "cs/cL",
                SEVERITY_WARNING,
                "sound-speed ratio outside the typical metallic band",
                observed=render_number(ratio),
                expected=f"[{low}, {high}]",
            )

    quad = [
        record.values[name].quantity
        for name in (
            schema.SPALL_STRENGTH,
            schema.SPALL_PULLBACK_VELOCITY,
            schema.INITIAL_DENSITY,
            schema.BULK_SOUND_SPEED,
        )
    ]
    if all(q is not None for q in quad):
        sigma_sp, du_pb, rho0, cb = (to_si(q) for q in quad)
        implied = 0.5 * rho0 * cb * du_pb
        relative = abs(sigma_sp - implied) / max(abs(sigma_sp), 1e-12)
        if relative > tolerance:
            add(
                "spall-strength consistency",
                SEVERITY_WARNING,
                "reported spall strength disagrees with 0.5 * rho0 * cb * du_pb",
                observed=f"relative difference {render_number(relative)}",
                expected=f"<= {render_number(tolerance)}",
            )

    for eq in guard_failures(record):
        add(
            eq.name,
            SEVERITY_NOTE,
            "derivation skipped: inputs outside the equation domain",
            expected=eq.formula,
        )

    return findings


def route(
    records: list[ShotRecord],
    findings: list[Finding],
    conflict_flags: list[ConflictFlag] | tuple[ConflictFlag, ...] = (),
) -> tuple[list[ShotRecord], list[ShotRecord]]:
    """Partition records into (accepted, review_queue).

    A record is queued iff it has at least one error-severity finding or at
    least one tier-conflict flag; the partition is exhaustive and disjoint
    and preserves input order.
    """
    flagged = {(f.doi, f.shot_id) for f in findings if f.severity == SEVERITY_ERROR}
    flagged.update((c.doi, c.shot_id) for c in conflict_flags)
    accepted = [r for r in records if r.key not in flagged]
    review = [r for r in records if r.key in flagged]
    return accepted, review


def conflict_to_finding(flag: ConflictFlag) -> Finding:
    """Represent a tier conflict as an error finding for the review queue."""
    return Finding(
        doi=flag.doi,
        shot_id=flag.shot_id,
        field_or_check=flag.field,
        severity=SEVERITY_ERROR,
        message="tier-1 value and tier-2 derivation disagree; value retained, review required",
        observed=(
            f"retained = {render_number(flag.t1_value.value)} {flag.t1_value.unit}; "
            f"derived = {render_number(flag.t2_value.value)} {flag.t2_value.unit}; "
            f"relative difference {render_number(flag.relative_difference)}"
        ),
        expected=f"relative difference <= {render_number(flag.tolerance)}",
    )


def apply_verification(record: ShotRecord, queued: bool) -> ShotRecord:
    """Write the routing outcome into the Verification column.

    The outcome is computed by the pipeline, so it carries the calculated
    tier tag.
    """
    outcome = VERIFICATION_REVIEW if queued else VERIFICATION_PASS
    return record.with_values(
        {schema.VERIFICATION: FieldValue(outcome, Tier.T2)}
    )


_ = (EQUATION_LIBRARY, unit)  # re-exported indirectly via guard notes; keeps imports honest
