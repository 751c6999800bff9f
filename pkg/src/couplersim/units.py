"""Parsing of unit-suffixed quantities from config files and CLI arguments.

Everything is stored in SI base units internally (henry, farad, hertz,
ampere, radian).  Angles additionally accept "turn" (1 turn = 2*pi rad),
which is the natural unit for flux-bias sweeps.
"""

from __future__ import annotations

import math
import re

from .exceptions import ConfigError

_PREFIX = {
    "": 1.0,
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,  # micro sign
    "m": 1e-3,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
}

# base unit -> dimension name
_BASE = {
    "H": "inductance",
    "F": "capacitance",
    "Hz": "frequency",
    "A": "current",
    "rad": "angle",
    "turn": "angle",
    "s": "time",
}

_QUANTITY_RE = re.compile(
    r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*"
    r"([fpnuµmkMG]?)(H|F|Hz|A|rad|turn|s)?\s*$"
)


def parse_quantity(value, dimension: str | None = None) -> float:
    """Parse a config value like ``"2.023 nH"`` or ``0.053`` into SI units.

    Bare numbers are taken as SI base units (or as dimensionless when
    ``dimension`` is None or ``"dimensionless"``).  When ``dimension`` is
    given, a mismatching unit suffix raises :class:`ConfigError`.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"cannot parse quantity from {value!r}")

    m = _QUANTITY_RE.match(value)
    if m is None:
        raise ConfigError(f"malformed quantity {value!r}")
    number, prefix, base = m.groups()
    x = float(number)
    if base is None:
        if prefix:
            raise ConfigError(f"unit prefix without a unit in {value!r}")
        return x

    dim = _BASE[base]
    if dimension is not None and dimension != "dimensionless" and dim != dimension:
        raise ConfigError(
            f"expected a {dimension} but got {value!r} ({dim})"
        )
    if base == "turn":
        if prefix:
            raise ConfigError(f"prefixed turns are not supported: {value!r}")
        return x * math.tau
    return x * _PREFIX[prefix]


def parse_angle(value) -> float:
    """Parse an angle given in turns by default.

    Accepts bare numbers (turns), ``"0.5turn"`` and ``"3.14rad"``.  Used by
    CLI flags, where flux-bias axes are written in turns.
    """
    if isinstance(value, (int, float)):
        return float(value) * math.tau
    m = _QUANTITY_RE.match(value)
    if m is None:
        raise ConfigError(f"malformed angle {value!r}")
    number, prefix, base = m.groups()
    if prefix:
        raise ConfigError(f"unit prefixes are not supported for angles: {value!r}")
    x = float(number)
    if base is None or base == "turn":
        return x * math.tau
    if base == "rad":
        return x
    raise ConfigError(f"expected an angle but got {value!r}")
