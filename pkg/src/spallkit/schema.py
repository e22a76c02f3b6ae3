"""Declarative registry of the 37 fields every shot record carries.

The field list, its order, and the canonical reporting units are the contract
shared by the prompt, the response parser, the derivation engine, the
validator, the scorer, and the exported tables. The registry is immutable
after load; a schema document may override symbols, plausibility ranges, and
mandatory flags, but never the field names, order, kinds, or units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .units import UnknownUnitError, unit


class SchemaError(ValueError):
    """Schema document or registry violates the field contract."""


class UnknownFieldError(SchemaError):
    """Requested field name is not in the registry."""


KIND_NUMERIC = "numeric"
KIND_CATEGORICAL = "categorical"
KIND_FREE_TEXT = "free-text"
KIND_IDENTITY = "identity"
FIELD_KINDS = frozenset({KIND_NUMERIC, KIND_CATEGORICAL, KIND_FREE_TEXT, KIND_IDENTITY})

# Canonical field names, used as column headers verbatim.
METAL_SYMBOL = "Metal Symbol"
SAMPLE_ID = "Sample ID"
SYNTHESIS_METHOD = "Synthesis Method"
TREATMENT = "Treatment"
INITIAL_TEMPERATURE = "Initial Temperature (K)"
YIELD_STRESS = "Quasi-static Yield Stress (MPa)"
FREE_SURFACE_VELOCITY_HEL = "Free Surface Velocity at Hugoniot Elastic Limit (HEL) (m/s)"
SHEAR_STRESS_HEL = "Shear Stress at HEL (GPa)"
HARDNESS = "Hardness"
BULK_MODULUS = "Bulk Modulus (GPa)"
SHEAR_MODULUS = "Shear Modulus (GPa)"
YOUNGS_MODULUS = "Young's Modulus (GPa)"
POISSONS_RATIO = "Poisson's Ratio"
MELTING_POINT = "Melting Point (K)"
SAMPLE_THICKNESS = "Sample Thickness (mm)"
SAMPLE_DIAMETER = "Sample Diameter (mm)"
GRAIN_SIZE = "Grain Size (µm)"
INITIAL_DENSITY = "Initial Density (g/cm³)"
LONGITUDINAL_SOUND_SPEED = "Longitudinal Sound Speed (m/s)"
SHEAR_SOUND_SPEED = "Shear Sound Speed (m/s)"
BULK_SOUND_SPEED = "Bulk Sound Speed (m/s)"
FLYER_MATERIAL_NAME = "Flyer Material Name"
FLYER_MATERIAL_CODE = "Flyer Material Code"
FLYER_THICKNESS = "Flyer Thickness (mm)"
FLYER_DIAMETER = "Flyer Diameter (mm)"
IMPACT_VELOCITY = "Impact Velocity (m/s)"
LONGITUDINAL_STRESS_HEL = "Longitudinal Stress at HEL (GPa)"
PEAK_STRESS = "Peak Stress (GPa)"
STRAIN_RATE = "Strain Rate (s⁻¹)"
PULSE_DURATION = "Pulse Duration (µs)"
EXPERIMENT_TYPE = "Experiment Type"
GAS_GUN_DIAMETER = "Gas Gun Diameter (mm)"
SPALL_STRENGTH = "Spall Strength (GPa)"
SPALL_PULLBACK_VELOCITY = "Spall Pullback Velocity (m/s)"
REFERENCE_TITLE = "Reference Title"
DOI = "DOI"
VERIFICATION = "Verification"

FIELD_COUNT = 37


@dataclass(frozen=True)
class FieldSpec:
    """Definition of one schema field."""

    name: str
    kind: str
    symbol: str | None = None
    canonical_unit: str | None = None
    plausibility_range: tuple[float, float] | None = None
    mandatory: bool = False

    def __post_init__(self) -> None:
        if self.kind not in FIELD_KINDS:
            raise SchemaError(f"unknown kind {self.kind!r} for field {self.name!r}")
        if (self.kind == KIND_NUMERIC) != (self.canonical_unit is not None):
            raise SchemaError(
                f"field {self.name!r}: numeric fields require a canonical unit "
                "and only numeric fields may carry one"
            )
        if self.canonical_unit is not None:
            try:
                resolved = unit(self.canonical_unit).identifier
            except UnknownUnitError as exc:
                raise SchemaError(str(exc)) from exc
            if resolved != self.canonical_unit:
                object.__setattr__(self, "canonical_unit", resolved)
        if self.plausibility_range is not None:
            lower, upper = self.plausibility_range
            if not lower < upper:
                raise SchemaError(
                    f"field {self.name!r}: plausibility range must have lower < upper"
                )
            if self.kind != KIND_NUMERIC:
                raise SchemaError(
                    f"field {self.name!r}: plausibility range on non-numeric field"
                )


def _numeric(name, symbol, canonical_unit, rng=None, mandatory=False) -> FieldSpec:
    return FieldSpec(name, KIND_NUMERIC, symbol, canonical_unit, rng, mandatory)


_DEFAULT_FIELDS: tuple[FieldSpec, ...] = (
    FieldSpec(METAL_SYMBOL, KIND_CATEGORICAL, mandatory=True),
    FieldSpec(SAMPLE_ID, KIND_IDENTITY, mandatory=True),
    FieldSpec(SYNTHESIS_METHOD, KIND_CATEGORICAL),
    FieldSpec(TREATMENT, KIND_FREE_TEXT),
    _numeric(INITIAL_TEMPERATURE, "T0", "K"),
    _numeric(YIELD_STRESS, "sigma_y", "MPa"),
    _numeric(FREE_SURFACE_VELOCITY_HEL, "u_HEL", "m/s", (10.0, 1000.0)),
    _numeric(SHEAR_STRESS_HEL, "tau_HEL", "GPa"),
    # Source material reports hardness in mixed scales ("120 HV"); kept verbatim.
    FieldSpec(HARDNESS, KIND_FREE_TEXT),
    _numeric(BULK_MODULUS, "B", "GPa"),
    _numeric(SHEAR_MODULUS, "G", "GPa"),
    _numeric(YOUNGS_MODULUS, "E", "GPa"),
    _numeric(POISSONS_RATIO, "nu", "dimensionless", (-1.0, 0.5)),
    _numeric(MELTING_POINT, "Tm", "K"),
    _numeric(SAMPLE_THICKNESS, None, "mm"),
    _numeric(SAMPLE_DIAMETER, None, "mm"),
    _numeric(GRAIN_SIZE, None, "um"),
    _numeric(INITIAL_DENSITY, "rho0", "g/cm3", (0.5, 25.0)),
    _numeric(LONGITUDINAL_SOUND_SPEED, "cL", "m/s", (1000.0, 15000.0)),
    _numeric(SHEAR_SOUND_SPEED, "cs", "m/s", (500.0, 9000.0)),
    _numeric(BULK_SOUND_SPEED, "cb", "m/s", (500.0, 12000.0)),
    FieldSpec(FLYER_MATERIAL_NAME, KIND_CATEGORICAL),
    FieldSpec(FLYER_MATERIAL_CODE, KIND_CATEGORICAL),
    _numeric(FLYER_THICKNESS, None, "mm"),
    _numeric(FLYER_DIAMETER, None, "mm"),
    _numeric(IMPACT_VELOCITY, "vi", "m/s"),
    _numeric(LONGITUDINAL_STRESS_HEL, "sigma_HEL", "GPa"),
    _numeric(PEAK_STRESS, "sigma_peak", "GPa"),
    _numeric(STRAIN_RATE, "eps_dot", "1/s"),
    _numeric(PULSE_DURATION, None, "us"),
    FieldSpec(EXPERIMENT_TYPE, KIND_CATEGORICAL),
    _numeric(GAS_GUN_DIAMETER, None, "mm"),
    _numeric(SPALL_STRENGTH, "sigma_sp", "GPa"),
    _numeric(SPALL_PULLBACK_VELOCITY, "du_pb", "m/s"),
    FieldSpec(REFERENCE_TITLE, KIND_IDENTITY, mandatory=True),
    FieldSpec(DOI, KIND_IDENTITY, mandatory=True),
    FieldSpec(VERIFICATION, KIND_CATEGORICAL),
)

FIELD_NAMES: tuple[str, ...] = tuple(spec.name for spec in _DEFAULT_FIELDS)

DEFAULT_SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class SchemaRegistry:
    """Immutable, ordered collection of the 37 field specs."""

    fields: tuple[FieldSpec, ...]
    version: str = DEFAULT_SCHEMA_VERSION
    _by_name: dict[str, FieldSpec] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        if len(self.fields) != FIELD_COUNT:
            raise SchemaError(
                f"field count mismatch: expected {FIELD_COUNT}, got {len(self.fields)}"
            )
        names = [spec.name for spec in self.fields]
        if len(set(names)) != len(names):
            seen: set[str] = set()
            dup = next(n for n in names if n in seen or seen.add(n))
            raise SchemaError(f"duplicate field name {dup!r}")
        if tuple(names) != FIELD_NAMES:
            raise SchemaError("field names or order do not match the schema contract")
        for ours, default in zip(self.fields, _DEFAULT_FIELDS):
            if ours.kind != default.kind or ours.canonical_unit != default.canonical_unit:
                raise SchemaError(
                    f"field {ours.name!r}: kind and canonical unit are fixed by the "
                    "schema contract and cannot be overridden"
                )
        self._by_name.update({spec.name: spec for spec in self.fields})

    def field_spec(self, name: str) -> FieldSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownFieldError(f"unknown field name {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __iter__(self):
        return iter(self.fields)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.fields)

    def field_index(self, name: str) -> int:
        self.field_spec(name)
        return FIELD_NAMES.index(name)

    def field_by_symbol(self, symbol: str) -> FieldSpec:
        matches = [spec for spec in self.fields if spec.symbol == symbol]
        if len(matches) != 1:
            raise UnknownFieldError(
                f"symbol {symbol!r} resolves to {len(matches)} fields, expected 1"
            )
        return matches[0]

    def numeric_fields(self) -> tuple[FieldSpec, ...]:
        return tuple(spec for spec in self.fields if spec.kind == KIND_NUMERIC)

    def mandatory_fields(self) -> tuple[FieldSpec, ...]:
        return tuple(spec for spec in self.fields if spec.mandatory)


def default_registry() -> SchemaRegistry:
    """The built-in schema shipped with the package."""
    return SchemaRegistry(_DEFAULT_FIELDS)


def _spec_from_entry(entry: dict, position: int) -> FieldSpec:
    if not isinstance(entry, dict):
        raise SchemaError(f"field entry {position} is not an object")
    unknown = set(entry) - {"name", "kind", "symbol", "unit", "range", "mandatory"}
    if unknown:
        raise SchemaError(f"field entry {position}: unknown keys {sorted(unknown)}")
    try:
        name = entry["name"]
        kind = entry["kind"]
    except KeyError as exc:
        raise SchemaError(f"field entry {position}: missing key {exc}") from None
    rng = entry.get("range")
    if rng is not None:
        if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
            raise SchemaError(f"field {name!r}: range must be a [lower, upper] pair")
        rng = (float(rng[0]), float(rng[1]))
    return FieldSpec(
        name=name,
        kind=kind,
        symbol=entry.get("symbol"),
        canonical_unit=entry.get("unit"),
        plausibility_range=rng,
        mandatory=bool(entry.get("mandatory", False)),
    )


def load_schema(document: str) -> SchemaRegistry:
    """Parse a JSON schema document into a registry.

    The document must list all 37 fields in canonical order; per-field
    symbols, plausibility ranges, and mandatory flags may differ from the
    built-in defaults.
    """
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema document is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "fields" not in payload:
        raise SchemaError("schema document must be an object with a 'fields' list")
    entries = payload["fields"]
    if not isinstance(entries, list):
        raise SchemaError("'fields' must be a list")
    if len(entries) != FIELD_COUNT:
        raise SchemaError(
            f"field count mismatch: expected {FIELD_COUNT}, got {len(entries)}"
        )
    specs = tuple(_spec_from_entry(e, i) for i, e in enumerate(entries))
    return SchemaRegistry(specs, version=str(payload.get("version", DEFAULT_SCHEMA_VERSION)))


def dump_schema(registry: SchemaRegistry) -> str:
    """Serialize a registry back to the JSON document form."""
    entries = []
    for spec in registry.fields:
        entries.append(
            {
                "name": spec.name,
                "kind": spec.kind,
                "symbol": spec.symbol,
                "unit": spec.canonical_unit,
                "range": list(spec.plausibility_range)
                if spec.plausibility_range is not None
                else None,
                "mandatory": spec.mandatory,
            }
        )
    return json.dumps(
        {"version": registry.version, "fields": entries},
        indent=2,
        ensure_ascii=False,
    ) + "\n"


def with_overrides(registry: SchemaRegistry, **ranges: tuple[float, float]) -> SchemaRegistry:
    """Convenience for tests/tools: replace plausibility ranges by field name."""
    specs = []
    for spec in registry.fields:
        if spec.name in ranges:
            specs.append(replace(spec, plausibility_range=ranges[spec.name]))
        else:
            specs.append(spec)
    return SchemaRegistry(tuple(specs), version=registry.version)
