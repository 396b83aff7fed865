"""Two cavities coupled through one mechanical mode, and its map onto the cascaded network.

Cavity modes are indexed 1, 2 and the mechanics ``m``.  All quantities are
in a frame rotating with the (common) drive frequency, so cavity
frequencies appear as detunings ``delta_i``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import DriftModel
from .model import (
    CascadedParams,
    DriveCoupling,
    LinearCoupling,
    OptomechParams,
    ParameterError,
    validate_optomech,
)

DAMPING = 0.5
MAX_ITER = 10_000
RESIDUAL_TOL = 1e-10


class LinearizationError(RuntimeError):
    """The classical fixed-point iteration failed to converge."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ClassicalSteadyState:
    alpha1: complex
    alpha2: complex
    beta: complex
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class LinearizedOptomech:
    """Linearised three-mode model in the gauge with ``G1, G2`` real and non-negative."""

    G1: float
    G2: float
    phi: float
    delta1: float
    delta2: float
    J: float
    kappa1: float
    kappa2: float
    omega_m: float
    gamma_m: float
    nbar1: float = 0.0
    nbar2: float = 0.0
    nbar_m: float = 0.0

    def __post_init__(self):
        for name in ("G1", "G2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(name, f"{name} must be finite")
            if value < 0:
                raise ParameterError(name, f"{name} must be non-negative")
        for name in ("kappa1", "kappa2", "gamma_m", "omega_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, f"{name} must be positive")
        for name in ("nbar1", "nbar2", "nbar_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(name, f"{name} must be non-negative")
        object.__setattr__(self, "phi", wrap_phase(self.phi))


def wrap_phase(x: float) -> float:
    """Map an angle onto ``(-pi, pi]``."""
    return math.pi - (math.pi - x) % (2 * math.pi)


def _classical_residual(p: OptomechParams, a1: complex, a2: complex, beta: complex) -> float:
    c = p.coupling
    x = 2 * beta.real
    # each equation's residual is scaled by the size of its largest term
    terms1 = (
        -(1j * p.delta1 + p.kappa1 / 2) * a1,
        -1j * p.J * a2,
        -1j * c.g1 * x * a1,
        -1j * c.E1,
    )
    terms2 = (
        -(1j * p.delta2 + p.kappa2 / 2) * a2,
        -1j * p.J * a1,
        -1j * c.g2 * x * a2,
        -1j * c.E2,
    )
    terms3 = (
        -(1j * p.omega_m + p.gamma_m / 2) * beta,
        -1j * (c.g1 * abs(a1) ** 2 + c.g2 * abs(a2) ** 2),
    )
    worst = 0.0
    for terms in (terms1, terms2, terms3):
        size = max(abs(t) for t in terms)
        if size > 0:
            worst = max(worst, abs(sum(terms)) / size)
    return worst


def classical_steady_state(
    p: OptomechParams, damping: float = DAMPING, max_iter: int = MAX_ITER
) -> ClassicalSteadyState:
    """Self-consistent classical amplitudes of the driven cavities and the mechanics.

    Damped fixed-point iteration: for the current ``beta`` the cavity
    amplitudes follow from a linear 2x2 solve, then ``beta`` is relaxed
    towards the value set by the resulting radiation pressure.  The returned
    ``residual`` is the largest relative imbalance of the three defining
    equations.  Bistable or runaway regimes raise :class:`LinearizationError`.
    """
    validate_optomech(p)
    c = p.coupling
    if not isinstance(c, DriveCoupling):
        raise TypeError("classical_steady_state needs single-photon couplings and drives")
    drive = -1j * np.array([c.E1, c.E2], dtype=complex)
    mech = 1j * p.omega_m + p.gamma_m / 2

    beta = 0j
    for it in range(1, max_iter + 1):
        x = 2 * beta.real
        A = np.array(
            [
                [1j * (p.delta1 + c.g1 * x) + p.kappa1 / 2, 1j * p.J],
                [1j * p.J, 1j * (p.delta2 + c.g2 * x) + p.kappa2 / 2],
            ]
        )
        a1, a2 = np.linalg.solve(A, drive)
        target = -1j * (c.g1 * abs(a1) ** 2 + c.g2 * abs(a2) ** 2) / mech
        step = target - beta
        beta = beta + (1 - damping) * step
        if not (np.isfinite(a1) and np.isfinite(a2) and np.isfinite(beta)):
            break
        if abs(step) <= 1e-15 * (1 + abs(beta)):
            break

    x = 2 * beta.real
    A = np.array(
        [
            [1j * (p.delta1 + c.g1 * x) + p.kappa1 / 2, 1j * p.J],
            [1j * p.J, 1j * (p.delta2 + c.g2 * x) + p.kappa2 / 2],
        ]
    )
    a1, a2 = (complex(v) for v in np.linalg.solve(A, drive))
    beta = complex(beta)
    residual = _classical_residual(p, a1, a2, beta)
    if not residual <= RESIDUAL_TOL:
        raise LinearizationError(
            f"classical steady state did not converge after {it} iterations "
            f"(residual {residual:.3g}); the drive may be in a bistable regime",
            residual,
            it,
        )
    return ClassicalSteadyState(a1, a2, beta, residual, it)


def gauge_fix(G1c: complex, G2c: complex) -> tuple[float, float, float]:
    """Move the common phase of two complex couplings into the mechanics.

    Returns ``(|G1c|, |G2c|, phi)`` with ``phi = arg G2c - arg G1c`` wrapped to
    ``(-pi, pi]``.  If either coupling vanishes the relative phase is
    meaningless and 0 is returned.
    """
    G1, G2 = abs(G1c), abs(G2c)
    if G1 == 0 or G2 == 0:
        return G1, G2, 0.0
    return G1, G2, wrap_phase(np.angle(G2c) - np.angle(G1c))


def linearize(p: OptomechParams) -> LinearizedOptomech:
    """Reduce an optomechanical parameter set to the linearised, gauge-fixed model.

    From the drive level the couplings are ``G_i = g_i alpha_i`` and the
    detunings pick up the static radiation-pressure shift
    ``g_i (beta + beta*)``.  From the linearised level everything is taken
    as given.
    """
    validate_optomech(p)
    c = p.coupling
    if isinstance(c, LinearCoupling):
        G1, G2, phi = c.G1, c.G2, c.phi
        delta1, delta2 = p.delta1, p.delta2
    else:
        css = classical_steady_state(p)
        G1, G2, phi = gauge_fix(c.g1 * css.alpha1, c.g2 * css.alpha2)
        shift = 2 * css.beta.real
        delta1 = p.delta1 + c.g1 * shift
        delta2 = p.delta2 + c.g2 * shift
    return LinearizedOptomech(
        G1=G1,
        G2=G2,
        phi=phi,
        delta1=delta1,
        delta2=delta2,
        J=p.J,
        kappa1=p.kappa1,
        kappa2=p.kappa2,
        omega_m=p.omega_m,
        gamma_m=p.gamma_m,
        nbar1=p.nbar1,
        nbar2=p.nbar2,
        nbar_m=p.nbar_m,
    )


def build_three_mode_rwa_drift(l: LinearizedOptomech) -> DriftModel:
    """Beam-splitter (sideband-resolved) model of modes ``(a1, a2, b)``."""
    rot = np.exp(1j * l.phi)
    M = np.array(
        [
            [-(1j * l.delta1 + l.kappa1 / 2), -1j * l.J, -1j * l.G1],
            [-1j * l.J, -(1j * l.delta2 + l.kappa2 / 2), -1j * l.G2 * rot],
            [-1j * l.G1, -1j * l.G2 * np.conj(rot), -(1j * l.omega_m + l.gamma_m / 2)],
        ]
    )
    L = np.diag([math.sqrt(l.kappa1), math.sqrt(l.kappa2), math.sqrt(l.gamma_m)]).astype(complex)
    return DriftModel(M, L, [l.nbar1, l.nbar2, l.nbar_m])


def mechanical_susceptibility(omega, omega_m: float, gamma_m: float):
    """Lorentzian response ``1 / (gamma_m/2 - i (omega - omega_m))``."""
    if not gamma_m > 0:
        raise ValueError("gamma_m must be positive")
    return 1.0 / (gamma_m / 2 - 1j * (np.asarray(omega) - omega_m))


def susceptibility_phase(omega: float, omega_m: float, gamma_m: float) -> float:
    return float(np.angle(mechanical_susceptibility(omega, omega_m, gamma_m)))


def elimination_ratio(l: LinearizedOptomech, Omega: float | None = None) -> float:
    """How far the mechanics is from being broadband: small is good."""
    Omega = l.omega_m if Omega is None else Omega
    return max(l.kappa1, l.kappa2, l.G1, l.G2, abs(Omega - l.omega_m)) / l.gamma_m


def adiabatic_eliminate(l: LinearizedOptomech, Omega: float | None = None) -> DriftModel:
    """Two-cavity model with the mechanics replaced by its susceptibility at ``Omega``.

    ``Omega`` defaults to the mechanical frequency.  The mechanical input is
    rephased by ``-arg chi_m(Omega)`` so its coupling is real at ``Omega``.
    """
    Omega = l.omega_m if Omega is None else Omega
    ratio = elimination_ratio(l, Omega)
    if ratio >= 1:
        warnings.warn(f"mechanics is not broadband (ratio {ratio:.3g}); elimination is unreliable")
    chi = complex(mechanical_susceptibility(Omega, l.omega_m, l.gamma_m))
    chi_t = abs(chi)
    rot = np.exp(1j * l.phi)
    cross = chi * l.G1 * l.G2
    M = np.array(
        [
            [-1j * l.delta1 - l.kappa1 / 2 - l.G1**2 * chi, -1j * l.J - cross * np.conj(rot)],
            [-1j * l.J - cross * rot, -1j * l.delta2 - l.kappa2 / 2 - l.G2**2 * chi],
        ]
    )
    root = math.sqrt(l.gamma_m)
    L = np.array(
        [
            [math.sqrt(l.kappa1), 0.0, l.G1 * root * chi_t],
            [0.0, math.sqrt(l.kappa2), l.G2 * rot * root * chi_t],
        ]
    )
    return DriftModel(M, L, [l.nbar1, l.nbar2, l.nbar_m])


def map_to_cascaded(l: LinearizedOptomech) -> CascadedParams:
    """Cascaded-network parameters equivalent to ``l`` for broadband mechanics."""
    return CascadedParams(
        omega1=l.delta1,
        omega2=l.delta2,
        gamma1=4 * l.G1**2 / l.gamma_m,
        gamma2=4 * l.G2**2 / l.gamma_m,
        kappa1=l.kappa1,
        kappa2=l.kappa2,
        phi=l.phi,
        F=complex(l.J - 2j * l.G1 * l.G2 * np.exp(-1j * l.phi) / l.gamma_m),
        nbar1=l.nbar1,
        nbar2=l.nbar2,
        nbar3=l.nbar_m,
    )
