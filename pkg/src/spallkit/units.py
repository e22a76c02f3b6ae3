"""Physical-quantity parsing, uncertainty notation, and unit conversion.

Numeric strings from source material arrive in heterogeneous shapes:
``3730 ± 20 m/s``, ``2.664 g/cm3``, ``6.367(5) mm/µs``, ``0.594 km/s``,
scientific notation, comma or thin-space thousands separators. This module
parses them into :class:`Quantity` objects, preserving the source text
byte-exact, and converts between the small fixed set of units that occur in
the record schema. There is deliberately no general symbolic unit algebra.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field


class UnitError(ValueError):
    """Base class for quantity and unit problems."""


class QuantityParseError(UnitError):
    """Text could not be parsed as a numeric quantity."""


class UnknownUnitError(UnitError):
    """Unit token is not in the unit registry."""


class DimensionMismatchError(UnitError):
    """Conversion requested between incompatible dimensions."""


# Base-dimension exponents: (length, mass, time, temperature, current,
# amount of substance, luminous intensity).
Dimension = tuple[int, int, int, int, int, int, int]

DIMENSIONLESS: Dimension = (0, 0, 0, 0, 0, 0, 0)
_LENGTH: Dimension = (1, 0, 0, 0, 0, 0, 0)
_TIME: Dimension = (0, 0, 1, 0, 0, 0, 0)
_VELOCITY: Dimension = (1, 0, -1, 0, 0, 0, 0)
_PRESSURE: Dimension = (-1, 1, -2, 0, 0, 0, 0)
_DENSITY: Dimension = (-3, 1, 0, 0, 0, 0, 0)
_RATE: Dimension = (0, 0, -1, 0, 0, 0, 0)
_TEMPERATURE: Dimension = (0, 0, 0, 1, 0, 0, 0)


@dataclass(frozen=True)
class UnitSpec:
    """One entry of the unit registry.

    ``si_factor`` and ``si_offset`` map a value ``v`` in this unit to SI base
    units via ``v * si_factor + si_offset``; the offset is nonzero only for
    temperature scales.
    """

    identifier: str
    dimension: Dimension
    si_factor: float
    si_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.si_factor <= 0:
            raise UnitError(f"si_factor must be positive for {self.identifier!r}")


_UNITS: dict[str, UnitSpec] = {
    u.identifier: u
    for u in (
        UnitSpec("dimensionless", DIMENSIONLESS, 1.0),
        # velocity
        UnitSpec("m/s", _VELOCITY, 1.0),
        UnitSpec("km/s", _VELOCITY, 1e3),
        UnitSpec("mm/us", _VELOCITY, 1e3),
        UnitSpec("m/us", _VELOCITY, 1e6),
        UnitSpec("cm/s", _VELOCITY, 1e-2),
        UnitSpec("mm/s", _VELOCITY, 1e-3),
        # pressure / stress
        UnitSpec("Pa", _PRESSURE, 1.0),
        UnitSpec("kPa", _PRESSURE, 1e3),
        UnitSpec("MPa", _PRESSURE, 1e6),
        UnitSpec("GPa", _PRESSURE, 1e9),
        # length
        UnitSpec("m", _LENGTH, 1.0),
        UnitSpec("cm", _LENGTH, 1e-2),
        UnitSpec("mm", _LENGTH, 1e-3),
        UnitSpec("um", _LENGTH, 1e-6),
        UnitSpec("nm", _LENGTH, 1e-9),
        # density
        UnitSpec("kg/m3", _DENSITY, 1.0),
        UnitSpec("g/cm3", _DENSITY, 1e3),
        # time
        UnitSpec("s", _TIME, 1.0),
        UnitSpec("ms", _TIME, 1e-3),
        UnitSpec("us", _TIME, 1e-6),
        UnitSpec("ns", _TIME, 1e-9),
        # rate
        UnitSpec("1/s", _RATE, 1.0),
        # temperature
        UnitSpec("K", _TEMPERATURE, 1.0),
        UnitSpec("degC", _TEMPERATURE, 1.0, 273.15),
    )
}

# Spellings seen in source material, mapped onto registry identifiers.
# U+00B5 (micro sign) and U+03BC (Greek mu) both occur in the wild.
_ALIASES: dict[str, str] = {
    "": "dimensionless",
    "-": "dimensionless",
    "mm/µs": "mm/us",
    "mm/μs": "mm/us",
    "m/µs": "m/us",
    "m/μs": "m/us",
    "µs": "us",
    "μs": "us",
    "µm": "um",
    "μm": "um",
    "micron": "um",
    "g/cm³": "g/cm3",
    "g/cc": "g/cm3",
    "kg/m³": "kg/m3",
    "kg/m3": "kg/m3",
    "s⁻¹": "1/s",
    "s^-1": "1/s",
    "s-1": "1/s",
    "/s": "1/s",
    "1/s": "1/s",
    "°C": "degC",
    "℃": "degC",
    "degC": "degC",
}


def unit(identifier: str) -> UnitSpec:
    """Resolve a unit token (registry identifier or alias) to its spec."""
    token = re.sub(r"\s*/\s*", "/", identifier.strip())
    token = _ALIASES.get(token, token)
    try:
        return _UNITS[token]
    except KeyError:
        raise UnknownUnitError(f"unknown unit token {identifier!r}") from None


def known_units() -> tuple[str, ...]:
    return tuple(_UNITS)


@dataclass(frozen=True)
class Quantity:
    """A parsed physical value with optional uncertainty.

    ``original_text`` is the source string byte-exact and is excluded from
    equality: two quantities are equal when value, uncertainty, and unit
    agree, regardless of how they were spelled in the source.
    """

    value: float
    unit: str
    uncertainty: float | None = None
    original_text: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.uncertainty is not None and self.uncertainty < 0:
            raise UnitError(f"uncertainty must be non-negative, got {self.uncertainty}")


# One numeric literal: optional sign, comma-grouped or plain digits, optional
# fraction, optional exponent. Thin spaces are stripped before matching.
_NUM = r"[+-]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"

_THIN_SPACES = str.maketrans("", "", "   ")

_RE_PARENTHETICAL = re.compile(rf"({_NUM})\s*\(\s*(\d+)\s*\)\s*(.*)", re.DOTALL)
_RE_ASYMMETRIC = re.compile(
    rf"({_NUM})\s*\(?\s*\+\s*({_NUM})\s*/\s*[-−]\s*({_NUM})\s*\)?\s*(.*)",
    re.DOTALL,
)
_RE_PLUSMINUS = re.compile(
    rf"({_NUM})\s*(?:±|\+/-)\s*({_NUM})\s*(.*)", re.DOTALL
)
_RE_PLAIN = re.compile(rf"({_NUM})\s*(.*)", re.DOTALL)


def _to_float(literal: str) -> float:
    return float(literal.replace(",", ""))


def _parenthetical_uncertainty(base: str, digits: str) -> float:
    """Expand last-digit parenthetical notation: 6.367(5) -> 0.005."""
    parts = re.split(r"[eE]", base)
    exp = int(parts[1]) if len(parts) > 1 else 0
    mantissa = parts[0]
    decimals = len(mantissa.split(".")[1]) if "." in mantissa else 0
    return int(digits) * 10.0 ** (exp - decimals)


def parse_quantity(text: str) -> Quantity:
    """Parse a numeric string with optional uncertainty and unit.

    Supported uncertainty notations: ``a ± b`` (with or without spaces),
    parenthetical last-digit ``a(b)``, and asymmetric ``a +b/-c`` which is
    stored as the larger bound. A missing unit token parses as
    ``dimensionless``. Raises :class:`QuantityParseError` or
    :class:`UnknownUnitError`.
    """
    if not text or not text.strip():
        raise QuantityParseError("empty quantity text")
    cleaned = text.translate(_THIN_SPACES).strip()

    m = _RE_PARENTHETICAL.fullmatch(cleaned)
    if m:
        base, digits, unit_token = m.groups()
        return Quantity(
            value=_to_float(base),
            unit=unit(unit_token).identifier,
            uncertainty=_parenthetical_uncertainty(base, digits),
            original_text=text,
        )

    m = _RE_ASYMMETRIC.fullmatch(cleaned)
    if m:
        base, upper, lower, unit_token = m.groups()
        return Quantity(
            value=_to_float(base),
            unit=unit(unit_token).identifier,
            uncertainty=max(_to_float(upper), _to_float(lower)),
            original_text=text,
        )

    m = _RE_PLUSMINUS.fullmatch(cleaned)
    if m:
        base, unc, unit_token = m.groups()
        return Quantity(
            value=_to_float(base),
            unit=unit(unit_token).identifier,
            uncertainty=_to_float(unc),
            original_text=text,
        )

    m = _RE_PLAIN.fullmatch(cleaned)
    if m:
        base, unit_token = m.groups()
        return Quantity(
            value=_to_float(base),
            unit=unit(unit_token).identifier,
            original_text=text,
        )

    raise QuantityParseError(f"unparseable numeric text {text!r}")


def convert(q: Quantity, target: UnitSpec | str) -> Quantity:
    """Convert a quantity to another unit of the same dimension.

    Uncertainty scales with the unit factor; temperature offsets do not apply
    to it, so an uncertainty survives a K/°C conversion unscaled.
    """
    src = unit(q.unit)
    tgt = target if isinstance(target, UnitSpec) else unit(target)
    if src.dimension != tgt.dimension:
        raise DimensionMismatchError(
            f"cannot convert {src.identifier!r} to {tgt.identifier!r}: "
            "dimensions differ"
        )
    value = (q.value * src.si_factor + src.si_offset - tgt.si_offset) / tgt.si_factor
    uncertainty = (
        q.uncertainty * src.si_factor / tgt.si_factor
        if q.uncertainty is not None
        else None
    )
    return Quantity(value, tgt.identifier, uncertainty, q.original_text)


def to_si(q: Quantity) -> float:
    """SI base-unit magnitude of the quantity's central value."""
    spec = unit(q.unit)
    return q.value * spec.si_factor + spec.si_offset


def from_si(si_value: float, target: UnitSpec | str) -> float:
    tgt = target if isinstance(target, UnitSpec) else unit(target)
    return (si_value - tgt.si_offset) / tgt.si_factor


def render_number(x: float) -> str:
    """Shortest round-trip decimal form; integral floats drop the '.0'."""
    if not math.isfinite(x):
        raise UnitError(f"cannot render non-finite number {x!r}")
    text = repr(x)
    return text[:-2] if text.endswith(".0") else text


def render_quantity(q: Quantity) -> str:
    """Canonical cell form: value, then ' ± u' when uncertainty is present."""
    text = render_number(q.value)
    if q.uncertainty is not None:
        text += f" ± {render_number(q.uncertainty)}"
    return text
