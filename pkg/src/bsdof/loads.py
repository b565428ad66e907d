"""Reflective load constraint families and samplers.

Three families cover the practically relevant programmable loads:

* PIN: two measured diode states (defaults below), or any custom two-state
  pair with magnitudes <= 1.
* PM:  idealized phase modulation, exactly +1 / -1.
* UNI: continuous loads, magnitude uniform on [0, 1] and phase uniform on
  [0, 2*pi), drawn independently.

Sampling always takes an explicit stream (see streams.substream); nothing
here touches global RNG state.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentStateError, UnsupportedOperationError

# Measured reflection coefficients of a representative PIN-diode element.
PIN_ON = -0.8116 + 0.0j
PIN_OFF = 0.6366 - 0.7712j

# Measured coefficients are rounded, so near-unit magnitudes can land a few
# 1e-6 above 1 (|PIN_OFF| does).  Accept that much and no more.
LOAD_MAG_TOL = 1e-4

PM_ON = 1.0 + 0.0j
PM_OFF = -1.0 + 0.0j

_KINDS = ("PIN", "PM", "UNI")


@dataclass(frozen=True)
class LoadConstraint:
    """A load family: two-state (PIN, PM) or continuous (UNI).

    For two-state kinds, on_value / off_value are the admissible reflection
    coefficients.  UNI carries no state values.
    """

    kind: str
    on_value: complex | None = None
    off_value: complex | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "UNI":
            if self.on_value is not None or self.off_value is not None:
                raise ValueError("UNI constraint takes no on/off values")
            return
        on = complex(self.on_value if self.on_value is not None else _DEFAULTS[self.kind][0])
        off = complex(self.off_value if self.off_value is not None else _DEFAULTS[self.kind][1])
        for name, value in (("on_value", on), ("off_value", off)):
            if abs(value) > 1.0 + LOAD_MAG_TOL:
                raise ValueError(f"{name} magnitude {abs(value):.6g} exceeds 1")
        if on == off:
            raise ValueError("on_value and off_value must differ")
        object.__setattr__(self, "on_value", on)
        object.__setattr__(self, "off_value", off)

    @property
    def discrete(self) -> bool:
        return self.kind != "UNI"

    @classmethod
    def pin(cls, on: complex = PIN_ON, off: complex = PIN_OFF) -> "LoadConstraint":
        return cls("PIN", on, off)

    @classmethod
    def pm(cls) -> "LoadConstraint":
        return cls("PM", PM_ON, PM_OFF)

    @classmethod
    def uni(cls) -> "LoadConstraint":
        return cls("UNI")

    def to_dict(self) -> dict:
        if self.kind == "UNI":
            return {"kind": "UNI"}
        return {
            "kind": self.kind,
            "on": [self.on_value.real, self.on_value.imag],
            "off": [self.off_value.real, self.off_value.imag],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LoadConstraint":
        kind = payload["kind"]
        if kind == "UNI":
            return cls.uni()
        on = payload.get("on")
        off = payload.get("off")
        return cls(
            kind,
            complex(*on) if on is not None else None,
            complex(*off) if off is not None else None,
        )


_DEFAULTS = {"PIN": (PIN_ON, PIN_OFF), "PM": (PM_ON, PM_OFF)}


def sample_loads(constraint: LoadConstraint, n_s: int, stream: np.random.Generator) -> np.ndarray:
    """Draw one load configuration of length n_s from the given stream.

    Two-state kinds are i.i.d. fair coin flips between on and off.  UNI
    draws the magnitude array first, then the phase array, so the layout of
    stream consumption is fixed.
    """
    n_s = int(n_s)
    if n_s < 1:
        raise ValueError("n_s must be at least 1")
    if constraint.discrete:
        flips = stream.random(n_s)
        return np.where(flips < 0.5, constraint.on_value, constraint.off_value)
    mag = stream.random(n_s)
    phase = 2.0 * np.pi * stream.random(n_s)
    return mag * np.exp(1j * phase)


def toggle(r: np.ndarray, index: int, constraint: LoadConstraint) -> np.ndarray:
    """Flip the state of one two-state load; returns a new configuration.

    The entry at index must equal the constraint's on or off value exactly
    (sampled configurations always do).
    """
    if not constraint.discrete:
        raise UnsupportedOperationError("toggle is undefined for continuous (UNI) loads")
    r = np.asarray(r, dtype=complex)
    value = r[index]
    if value == constraint.on_value:
        flipped = constraint.off_value
    elif value == constraint.off_value:
        flipped = constraint.on_value
    else:
        raise InconsistentStateError(
            f"load {index} value {value} is neither on ({constraint.on_value}) "
            f"nor off ({constraint.off_value})"
        )
    out = r.copy()
    out[index] = flipped
    return out
