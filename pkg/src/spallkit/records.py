"""Domain types shared across the pipeline, plus the table-cell codec.

A :class:`ShotRecord` maps every schema field to a :class:`FieldValue` whose
payload is one of three shapes: ``None`` (missing), :class:`~.units.Quantity`
(numeric, normalized to the field's canonical unit), or ``str`` (text, or a
numeric cell that failed parsing and is retained verbatim for audit).

The codec functions at the bottom define how payloads map to and from table
cells; both the model-response parser and the dataset store use them, so a
value survives export and reload unchanged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .schema import DOI, KIND_NUMERIC, REFERENCE_TITLE, SAMPLE_ID, FieldSpec, SchemaRegistry
from .units import (
    DIMENSIONLESS,
    Quantity,
    UnitError,
    convert,
    parse_quantity,
    render_quantity,
    unit,
)

MISSING_MARKER = "--"

# Relative tolerance used for both tier-conflict detection and scoring.
DEFAULT_TOLERANCE = 0.005
EPSILON = 1e-12


class Tier(str, enum.Enum):
    """Extraction provenance, in descending priority."""

    T1 = "T1"  # direct from text or tables
    T2 = "T2"  # computed from governing relations
    T3 = "T3"  # digitized from figures
    MISSING = "MISSING"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class FieldValue:
    payload: Quantity | str | None
    tier: Tier
    evidence_ref: str | None = None

    def __post_init__(self) -> None:
        if (self.payload is None) != (self.tier is Tier.MISSING):
            raise ValueError("missing payload and MISSING tier must coincide")

    @property
    def is_missing(self) -> bool:
        return self.payload is None

    @property
    def quantity(self) -> Quantity | None:
        return self.payload if isinstance(self.payload, Quantity) else None


MISSING_VALUE = FieldValue(None, Tier.MISSING)


@dataclass(frozen=True)
class ShotRecord:
    """One experimental shot: document identity plus all 37 field values."""

    doi: str
    reference_title: str
    shot_id: str
    values: dict[str, FieldValue]

    @property
    def key(self) -> tuple[str, str]:
        return (self.doi, self.shot_id)

    def value(self, name: str) -> FieldValue:
        return self.values[name]

    def with_values(self, updates: dict[str, FieldValue]) -> ShotRecord:
        merged = dict(self.values)
        merged.update(updates)
        return replace(self, values=merged)


def empty_record(registry: SchemaRegistry, doi: str = "", title: str = "", shot_id: str = "") -> ShotRecord:
    values = {name: MISSING_VALUE for name in registry.names}
    record = ShotRecord(doi, title, shot_id, values)
    updates = {}
    if doi:
        updates[DOI] = FieldValue(doi, Tier.T1)
    if title:
        updates[REFERENCE_TITLE] = FieldValue(title, Tier.T1)
    if shot_id:
        updates[SAMPLE_ID] = FieldValue(shot_id, Tier.T1)
    return record.with_values(updates) if updates else record


@dataclass(frozen=True)
class EvidenceEntry:
    """Provenance for one extracted or derived value."""

    id: str
    doi: str
    shot_id: str
    field: str
    tier: Tier
    source_locator: str
    quote_or_inputs: str
    notes: str = ""


@dataclass(frozen=True)
class ParseIssue:
    """A row or cell the assembler could not handle cleanly."""

    message: str
    severity: str = "warning"  # "warning" or "note"
    row: int | None = None
    field: str | None = None
    doi: str = ""
    shot_id: str = ""


# --- table-cell codec -------------------------------------------------------


def interpret_cell(spec: FieldSpec, cell: str) -> tuple[Quantity | str | None, str | None]:
    """Decode one table cell into a payload.

    Returns ``(payload, problem)``. For numeric fields the cell is parsed and
    normalized to the canonical unit; a bare number is taken to already be in
    canonical units. Cells that fail to parse or convert come back as text
    payloads with a problem message, never as an exception.
    """
    text = cell.strip()
    if text == MISSING_MARKER or text == "":
        return None, None
    if spec.kind != KIND_NUMERIC:
        return text, None
    try:
        q = parse_quantity(text)
        return to_canonical(spec, q), None
    except UnitError as exc:
        return text, str(exc)


def to_canonical(spec: FieldSpec, q: Quantity) -> Quantity:
    """Convert a quantity to the field's canonical unit.

    A dimensionless quantity (no unit token in the source) is assumed to
    already be expressed in the canonical unit, per the output contract that
    table cells carry canonical units.
    """
    if spec.canonical_unit is None:
        raise UnitError(f"field {spec.name!r} is not numeric")
    if unit(q.unit).dimension == DIMENSIONLESS and spec.canonical_unit != "dimensionless":
        return Quantity(q.value, spec.canonical_unit, q.uncertainty, q.original_text)
    return convert(q, spec.canonical_unit)


def render_cell(spec: FieldSpec, fv: FieldValue) -> str:
    """Encode a payload as a table cell.

    Source text is kept byte-exact whenever it is already expressed in the
    canonical unit (or carries no unit token); otherwise the converted value
    is rendered. ``render_cell`` and ``interpret_cell`` round-trip.
    """
    if fv.payload is None:
        return MISSING_MARKER
    if isinstance(fv.payload, str):
        return fv.payload
    q = fv.payload
    if q.original_text:
        try:
            parsed_unit = unit(parse_quantity(q.original_text).unit)
        except UnitError:
            parsed_unit = None
        if parsed_unit is not None and (
            parsed_unit.dimension == DIMENSIONLESS or parsed_unit.identifier == q.unit
        ):
            return q.original_text
    return render_quantity(q)


def link_evidence(
    records: list[ShotRecord], evidence: list[EvidenceEntry]
) -> list[ShotRecord]:
    """Attach evidence references to matching field values.

    Candidates are matched on (doi, shot_id, field); among several, an entry
    whose tier matches the value's tier wins, ties broken by entry id. The
    rule depends only on the evidence set, not its order, so assembling a
    response and reloading an exported bundle link identically.
    """
    by_key: dict[tuple[str, str, str], list[EvidenceEntry]] = {}
    for entry in evidence:
        by_key.setdefault((entry.doi, entry.shot_id, entry.field), []).append(entry)
    linked = []
    for record in records:
        updates = {}
        for name, fv in record.values.items():
            if fv.is_missing:
                continue
            candidates = by_key.get((record.doi, record.shot_id, name))
            if not candidates:
                if fv.evidence_ref is not None:
                    updates[name] = replace(fv, evidence_ref=None)
                continue
            best = min(candidates, key=lambda e: (e.tier != fv.tier, e.id))
            if fv.evidence_ref != best.id:
                updates[name] = replace(fv, evidence_ref=best.id)
        linked.append(record.with_values(updates) if updates else record)
    return linked
