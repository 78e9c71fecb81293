"""Quantity parsing and frequency-unit conventions.

Frequencies are Hz on every external surface (scenario files, reports,
grids) and rad/s only inside dynamics code; these helpers are the single
conversion point.  Scenario values may carry a unit suffix ("0.03 Nm",
"0.1745 mrad", "3.8 Hz"); each schema field declares a target dimension
and the suffix is normalized away at parse time.
"""

from __future__ import annotations

import math

from .errors import ScenarioError

TWO_PI = 2.0 * math.pi


def hz_to_rad(f_hz: float) -> float:
    return TWO_PI * f_hz


def rad_to_hz(w_rad: float) -> float:
    return w_rad / TWO_PI


def _canon(unit: str) -> str:
    return unit.replace("·", "").replace("*", "").replace(".", "").replace(" ", "")


# target dimension -> {canonical suffix: factor to target unit}
_UNIT_TABLES: dict[str, dict[str, float]] = {
    "angle_rad": {
        "rad": 1.0,
        "mrad": 1e-3,
        "urad": 1e-6,
        "µrad": 1e-6,
        "deg": math.pi / 180.0,
        "arcsec": math.pi / (180.0 * 3600.0),
    },
    "torque_Nm": {"Nm": 1.0, "mNm": 1e-3, "uNm": 1e-6, "µNm": 1e-6},
    "frequency_Hz": {"Hz": 1.0, "mHz": 1e-3, "kHz": 1e3, "rad/s": 1.0 / TWO_PI},
    "angular_rate_rad_s": {"rad/s": 1.0, "Hz": TWO_PI, "deg/s": math.pi / 180.0},
    "time_s": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "min": 60.0},
    "mass_kg": {"kg": 1.0, "g": 1e-3},
    "length_m": {"m": 1.0, "mm": 1e-3, "cm": 1e-2},
    "inertia_kgm2": {"kgm^2": 1.0, "kgm2": 1.0},
    # PSD levels stay in their declared unit^2 / Hz; no rescaling.
    "psd_level": {
        "rad^2/Hz": 1.0,
        "rad2/Hz": 1.0,
        "(rad/s)^2/Hz": 1.0,
        "(rad/s)2/Hz": 1.0,
        "Nm^2/Hz": 1.0,
    },
    "dimensionless": {},
}


def parse_quantity(value, dimension: str, field: str) -> float:
    """Normalize a scenario value to the target unit of ``dimension``.

    Accepts bare numbers (already in target units) or strings with a
    recognized suffix.  Raises ScenarioError naming the offending field.
    """
    if isinstance(value, bool):
        raise ScenarioError(field, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ScenarioError(field, f"expected number or quantity string, got {type(value).__name__}")

    text = value.strip()
    parts = text.split(None, 1)
    try:
        number = float(parts[0])
    except ValueError:
        raise ScenarioError(field, f"cannot parse number from {value!r}") from None
    if len(parts) == 1:
        return number

    table = _UNIT_TABLES.get(dimension)
    if table is None:
        raise ScenarioError(field, f"unknown dimension {dimension!r}")
    suffix = parts[1].strip()
    for candidate in (suffix, _canon(suffix)):
        if candidate in table:
            return number * table[candidate]
    canon_table = {_canon(k): v for k, v in table.items()}
    canon = _canon(suffix)
    if canon in canon_table:
        return number * canon_table[canon]
    raise ScenarioError(field, f"unit {suffix!r} not valid for {dimension}")
