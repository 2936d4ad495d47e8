"""Helpers for scenario values, enums and checksums."""

from __future__ import annotations

import hashlib
import re
from typing import TYPE_CHECKING, Any, TypeVar

from .const import ATOMIC_MASS_UNIT
from .exceptions import ScenarioError

if TYPE_CHECKING:
    from collections.abc import Mapping
    from enum import Enum
    from pathlib import Path

_EnumT = TypeVar("_EnumT", bound="Enum")

LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "μm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
TIME_UNITS = {"ps": 1e-12, "ns": 1e-9, "us": 1e-6, "μs": 1e-6, "ms": 1e-3, "s": 1.0}
VELOCITY_UNITS = {"um/s": 1e-6, "μm/s": 1e-6, "mm/s": 1e-3, "cm/s": 1e-2, "m/s": 1.0}
MASS_UNITS = {"u": ATOMIC_MASS_UNIT, "kg": 1.0}

_RATE = re.compile(r"^hbar\s*/\s*(?P<time>.+)$")


def to_enum(enum_class: type[_EnumT], value: Any, key: str) -> _EnumT:
    """Convert a value to an enum, naming the supported values if it fails."""
    try:
        return enum_class(value)
    except ValueError as exception:
        supported = ", ".join(str(member.value) for member in enum_class)
        msg = f"{value!r} is an unsupported value for {key}; expected one of {supported}."
        raise ScenarioError(msg) from exception


def parse_number(text: str, key: str) -> float:
    """Parse a dimensionless number."""
    try:
        return float(text)
    except ValueError as exception:
        msg = f"Invalid number {text!r} for {key}."
        raise ScenarioError(msg) from exception


def parse_quantity(text: str, units: Mapping[str, float], key: str) -> float:
    """Parse ``<number> <unit>`` into SI using the factors in ``units``."""
    number, _, unit = text.strip().partition(" ")
    unit = unit.strip()
    if not unit:
        msg = f"Value {text!r} for {key} has no unit; expected one of {', '.join(units)}."
        raise ScenarioError(msg)
    if unit not in units:
        msg = f"Unknown unit {unit!r} for {key}; expected one of {', '.join(units)}."
        raise ScenarioError(msg)
    return parse_number(number, key) * units[unit]


def parse_rate(text: str, key: str) -> float:
    """Parse a coupling written as ``hbar/<time>`` into V0 / hbar in 1/s.

    The time may omit its number, so ``hbar/ms`` equals ``hbar/1 ms``.
    """
    match = _RATE.match(text.strip())
    if match is None:
        msg = f"Coupling {text!r} for {key} must be written as hbar/<time>."
        raise ScenarioError(msg)
    time = match["time"].strip()
    if time in TIME_UNITS:
        time = f"1 {time}"
    seconds = parse_quantity(time, TIME_UNITS, key)
    if not seconds > 0:
        msg = f"Coupling {text!r} for {key} needs a positive time."
        raise ScenarioError(msg)
    return 1 / seconds


def parse_list(text: str, key: str) -> list[float]:
    """Parse a comma-separated list of numbers."""
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        msg = f"Empty list for {key}."
        raise ScenarioError(msg)
    return [parse_number(item, key) for item in items]


def sha256_text(text: str) -> str:
    """Return the hex SHA-256 of UTF-8 text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    """Return the hex SHA-256 of a file's contents."""
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
