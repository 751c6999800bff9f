"""Lumped-element parameter sets, flux biases and calibration constants.

All values are SI (henry, farad, radian).  Parameter sets are immutable;
derived quantities are recomputed from them on demand, so instances can be
shared freely between threads and sweep workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from importlib import resources

from .exceptions import ConfigError
from .units import parse_quantity


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class CircuitParams:
    """Element values of the two-resonator circuit with a single-loop tunable junction.

    ``L_a``/``L_b`` are the resonator self-inductances, ``C_a``/``C_b`` the
    resonator capacitances.  The coupler is described by the shared
    inductance ``L_sh`` on each side, the junction inductance scale
    ``L_J0``, the geometric mutual inductance ``M_0``, the unshared loop
    inductance ``L_0`` and the dimensionless modulation offset ``gamma``
    that accounts for the junction's shunt capacitance.
    """

    L_a: float
    L_b: float
    C_a: float
    C_b: float
    L_sh: float
    L_J0: float
    M_0: float
    L_0: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("L_a", "L_b", "C_a", "C_b", "L_J0"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value <= 0.0:
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        # A vanishing shared/mutual/loop inductance is a legal degenerate
        # network (it just removes a coupling path), so only forbid negatives.
        for name in ("L_sh", "M_0", "L_0"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value < 0.0:
                raise ConfigError(f"{name} must be non-negative, got {value}")
        _require_finite("gamma", self.gamma)
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must satisfy 0 <= gamma < 1, got {self.gamma}")

    @property
    def loop_inductance(self) -> float:
        """Linear inductance of the coupler loop, 2*L_sh + L_0."""
        return 2.0 * self.L_sh + self.L_0

    @property
    def screening(self) -> float:
        """Screening parameter 2*L_sh / L_J0 of the loop."""
        return 2.0 * self.L_sh / self.L_J0

    @property
    def monostable(self) -> bool:
        """True when the loop potential has a single minimum for every bias.

        The quadratic term dominates the cosine term for all phases exactly
        when (2*L_sh + L_0) / L_J0 < 1; at or above 1 the potential can
        develop several minima and branch selection applies.
        """
        return self.loop_inductance < self.L_J0

    def replace(self, **changes) -> "CircuitParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ThreeJunctionParams:
    """Element values of the coupler variant with tunable junctions in both arms.

    The two arm junctions (scales ``L_JsL``/``L_JsR`` with series
    inductances ``L_0L``/``L_0R``) replace the fixed shared inductance; the
    bridge junction has scale ``L_Jalpha`` with series inductance ``L_0``.
    """

    L_a: float
    L_b: float
    C_a: float
    C_b: float
    M_0: float
    L_0: float
    L_0L: float
    L_0R: float
    L_JsL: float
    L_JsR: float
    L_Jalpha: float

    def __post_init__(self):
        for name in ("L_a", "L_b", "C_a", "C_b", "L_JsL", "L_JsR", "L_Jalpha"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value <= 0.0:
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        for name in ("M_0", "L_0", "L_0L", "L_0R"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value < 0.0:
                raise ConfigError(f"{name} must be non-negative, got {value}")

    @property
    def loop_inductance(self) -> float:
        """Linear inductance of the three-junction loop, L_0L + L_0R + L_0."""
        return self.L_0L + self.L_0R + self.L_0

    def replace(self, **changes) -> "ThreeJunctionParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FluxBias:
    """External phases applied to the coupler loops.

    ``phi_ex`` threads the main (single-junction) loop, ``phi_dc`` the small
    two-junction loop.  Derived circuit quantities are 2*pi periodic in both.
    """

    phi_ex: float = 0.0
    phi_dc: float = 0.0

    def __post_init__(self):
        _require_finite("phi_ex", self.phi_ex)
        _require_finite("phi_dc", self.phi_dc)

    @classmethod
    def from_turns(cls, ex: float, dc: float = 0.0) -> "FluxBias":
        return cls(phi_ex=ex * math.tau, phi_dc=dc * math.tau)

    @classmethod
    def coerce(cls, value) -> "FluxBias":
        """Accept a FluxBias or a bare phi_ex in radians."""
        if isinstance(value, cls):
            return value
        return cls(phi_ex=float(value))


@dataclass(frozen=True)
class CalibrationConstants:
    """Affine map from (coil, local) line currents to loop phases.

    ``phi_ex = a_coil*I_coil + a_local*I_local + offset_ex`` and
    ``phi_dc = b_coil*I_coil + (a_local/rf_dc_ratio)*I_local + offset_dc``.
    The rf:dc flux ratio of the local line is fixed by the loop-area ratio;
    its default of 313 should not normally be overridden.
    """

    a_coil: float = 0.0    # rad/A into the main loop
    a_local: float = 0.0   # rad/A into the main loop
    b_coil: float = 0.0    # rad/A into the two-junction loop
    offset_ex: float = 0.0
    offset_dc: float = 0.0
    rf_dc_ratio: float = 313.0

    def __post_init__(self):
        for f in fields(self):
            _require_finite(f.name, getattr(self, f.name))
        if self.rf_dc_ratio <= 0:
            raise ConfigError("rf_dc_ratio must be positive")


# ---------------------------------------------------------------------------
# Config-file loading
# ---------------------------------------------------------------------------

_CIRCUIT_DIMENSIONS = {
    "L_a": "inductance",
    "L_b": "inductance",
    "L_ab": "inductance",
    "C_a": "capacitance",
    "C_b": "capacitance",
    "L_sh": "inductance",
    "L_J0": "inductance",
    "M_0": "inductance",
    "L_0": "inductance",
    "gamma": "dimensionless",
}

_THREEJ_DIMENSIONS = {
    "L_a": "inductance",
    "L_b": "inductance",
    "L_ab": "inductance",
    "C_a": "capacitance",
    "C_b": "capacitance",
    "M_0": "inductance",
    "L_0": "inductance",
    "L_0L": "inductance",
    "L_0R": "inductance",
    "L_JsL": "inductance",
    "L_JsR": "inductance",
    "L_Jalpha": "inductance",
}

_IGNORED_KEYS = {"label", "comment"}


def _params_from_mapping(data: dict, dimensions: dict, cls):
    values = {}
    for key, raw in data.items():
        if key in _IGNORED_KEYS:
            continue
        if key not in dimensions:
            raise ConfigError(f"unknown parameter key {key!r}")
        values[key] = parse_quantity(raw, dimensions[key])
    if "L_ab" in values:
        shared = values.pop("L_ab")
        for key in ("L_a", "L_b"):
            if key in values:
                raise ConfigError(f"give either L_ab or {key}, not both")
            values[key] = shared
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"incomplete parameter set: {exc}") from None


def circuit_params_from_dict(data: dict) -> CircuitParams:
    return _params_from_mapping(data, _CIRCUIT_DIMENSIONS, CircuitParams)


def three_junction_params_from_dict(data: dict) -> ThreeJunctionParams:
    return _params_from_mapping(data, _THREEJ_DIMENSIONS, ThreeJunctionParams)


def load_circuit_params(path) -> CircuitParams:
    """Load a :class:`CircuitParams` from a JSON file with unit-suffixed values."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return circuit_params_from_dict(data)


def load_three_junction_params(path) -> ThreeJunctionParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return three_junction_params_from_dict(data)


def _load_packaged(name: str) -> dict:
    text = resources.files("couplersim.data").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def sample_circuit_params() -> CircuitParams:
    """Fitted element values of the bundled single-junction coupler sample."""
    return circuit_params_from_dict(_load_packaged("sample_rf_squid.json"))


def sample_three_junction_params() -> ThreeJunctionParams:
    """Fitted element values of the bundled three-junction coupler sample."""
    return three_junction_params_from_dict(_load_packaged("sample_three_junction.json"))
