"""Parameter records and thermal-occupancy conversions.

Every rate and frequency handled by the solvers is a dimensionless multiple
of a reference rate chosen by the caller.  Only
:func:`occupancy_ratio_from_thermo` deals in SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

# Exact SI values (identical in CODATA 2018 and later adjustments).
PLANCK = 6.62607015e-34
HBAR = PLANCK / (2 * math.pi)
BOLTZMANN = 1.380649e-23

# Below this ratio the Bose-Einstein factor is evaluated from its Laurent series.
SMALL_X = 1e-8


class ParameterError(ValueError):
    """A parameter record violates one of its invariants.

    The offending field name is kept on ``field`` so callers (the config
    loader in particular) can point at it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class CascadedParams:
    """Two bosonic modes joined by a one-way (cascaded) link.

    ``gamma1``/``gamma2`` couple each mode to the shared bath 3, ``kappa1``/
    ``kappa2`` to the private baths 1 and 2.  ``F`` is the residual
    reciprocal coupling; ``F = 0`` is the perfectly non-reciprocal case.
    """

    omega1: float = 0.0
    omega2: float = 0.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    phi: float = 0.0
    F: complex = 0.0
    nbar1: float = 0.0
    nbar2: float = 0.0
    nbar3: float = 0.0

    @property
    def detuning(self) -> float:
        return self.omega1 - self.omega2

    @property
    def nbar(self) -> tuple[float, float, float]:
        return (self.nbar1, self.nbar2, self.nbar3)


@dataclass(frozen=True)
class DriveCoupling:
    """Single-photon couplings ``g1, g2`` and complex drive amplitudes ``E1, E2``."""

    g1: float
    g2: float
    E1: complex
    E2: complex


@dataclass(frozen=True)
class LinearCoupling:
    """Linearised couplings in the gauge where both are real and non-negative."""

    G1: float
    G2: float
    phi: float = 0.0


@dataclass(frozen=True)
class OptomechParams:
    """Two driven cavities sharing one mechanical oscillator, plus direct hopping ``J``."""

    delta1: float
    delta2: float
    kappa1: float
    kappa2: float
    omega_m: float
    gamma_m: float
    J: float
    coupling: Union[DriveCoupling, LinearCoupling]
    nbar1: float = 0.0
    nbar2: float = 0.0
    nbar_m: float = 0.0


@dataclass(frozen=True)
class BathThermo:
    """A thermal bath given by angular frequency (rad/s) and temperature (K)."""

    frequency: float
    temperature: float

    def __post_init__(self):
        for name in ("frequency", "temperature"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(name, f"{name} must be finite")
            if value <= 0:
                raise ParameterError(name, f"{name} must be positive")


def _check(name: str, value, kind: str) -> None:
    if isinstance(value, complex):
        finite = math.isfinite(value.real) and math.isfinite(value.imag)
    else:
        finite = math.isfinite(value)
    if not finite:
        raise ParameterError(name, f"{name} must be finite")
    if kind == "positive" and not value > 0:
        raise ParameterError(name, f"{name} must be positive")
    if kind == "nonnegative" and not value >= 0:
        raise ParameterError(name, f"{name} must be non-negative")


_CASCADED_RULES = {
    "gamma1": "positive",
    "gamma2": "positive",
    "kappa1": "nonnegative",
    "kappa2": "nonnegative",
    "nbar1": "nonnegative",
    "nbar2": "nonnegative",
    "nbar3": "nonnegative",
}


def validate_cascaded(params: CascadedParams) -> CascadedParams:
    """Return ``params`` unchanged, or raise :class:`ParameterError` for the first bad field."""
    for f in fields(params):
        _check(f.name, getattr(params, f.name), _CASCADED_RULES.get(f.name, "any"))
    return params


_OPTOMECH_RULES = {
    "kappa1": "positive",
    "kappa2": "positive",
    "omega_m": "positive",
    "gamma_m": "positive",
    "nbar1": "nonnegative",
    "nbar2": "nonnegative",
    "nbar_m": "nonnegative",
}


def validate_optomech(params: OptomechParams) -> OptomechParams:
    for f in fields(params):
        if f.name == "coupling":
            continue
        _check(f.name, getattr(params, f.name), _OPTOMECH_RULES.get(f.name, "any"))
    c = params.coupling
    if isinstance(c, LinearCoupling):
        _check("G1", c.G1, "nonnegative")
        _check("G2", c.G2, "nonnegative")
        _check("phi", c.phi, "any")
    elif isinstance(c, DriveCoupling):
        for name in ("g1", "g2", "E1", "E2"):
            _check(name, getattr(c, name), "any")
    else:
        raise ParameterError("coupling", "coupling must be DriveCoupling or LinearCoupling")
    return params


def bose_einstein(x):
    """Mean thermal occupancy ``1 / (exp(x) - 1)`` for ``x = hbar*omega / (k_B*T)``.

    Accepts scalars or arrays.  Raises ``ValueError`` for ``x <= 0``, where
    the occupancy diverges or is undefined.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("bose_einstein requires x > 0")
    small = arr < SMALL_X
    # expm1 is accurate down to SMALL_X; the series takes over below it
    safe = np.where(small, 1.0, arr)
    with np.errstate(over="ignore"):
        out = np.where(small, 1.0 / arr - 0.5 + arr / 12.0, 1.0 / np.expm1(safe))
    if out.ndim == 0:
        return float(out)
    return out


def occupancy_ratio_from_thermo(bath: BathThermo) -> float:
    """Dimensionless ratio ``hbar*omega / (k_B*T)`` for a physical bath."""
    return HBAR * bath.frequency / (BOLTZMANN * bath.temperature)


def occupancy_from_thermo(bath: BathThermo) -> float:
    return bose_einstein(occupancy_ratio_from_thermo(bath))
