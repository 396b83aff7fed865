"""Linear bosonic networks: drift/noise matrices and steady-state second moments.

A network of ``n`` modes driven by ``m`` independent white-noise inputs obeys

    dc/dt = M c + L c_in,    <c_in_k^dag(t) c_in_l(t')> = nbar_k delta_kl delta(t - t'),

so the normal-ordered moments ``N[i, j] = <c_i^dag c_j>`` evolve as

    dN/dt = conj(M) N + N M^T + Q,    Q = conj(L) diag(nbar) L^T.

Three routes to the stationary ``N`` are provided and kept independent of one
another: a dense vectorised Lyapunov solve, frequency-domain integration of
the spectral density, and direct time integration of the moment equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .model import CascadedParams, validate_cascaded


class SteadyStateError(RuntimeError):
    """Base class for failures of the steady-state solvers."""


class UnstableModelError(SteadyStateError):
    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class QuadratureError(SteadyStateError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class IntegrationError(SteadyStateError):
    pass


@dataclass(frozen=True, eq=False)
class DriftModel:
    """Drift matrix ``M`` (n x n), noise-input matrix ``L`` (n x m) and bath occupancies."""

    M: np.ndarray
    L: np.ndarray
    nbar: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        L = np.atleast_2d(np.asarray(self.L, dtype=complex))
        nbar = np.atleast_1d(np.asarray(self.nbar, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"drift matrix must be square, got {M.shape}")
        if L.shape[0] != M.shape[0]:
            raise ValueError(f"noise matrix has {L.shape[0]} rows, expected {M.shape[0]}")
        if nbar.shape != (L.shape[1],):
            raise ValueError(f"expected {L.shape[1]} bath occupancies, got {nbar.shape}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "nbar", nbar)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.L.shape[1]

    @property
    def diffusion(self) -> np.ndarray:
        return np.conj(self.L) @ np.diag(self.nbar) @ self.L.T

    def damping_mismatch(self) -> float:
        """Largest entry of ``herm(-M) - L L^dag / 2``; zero for a passive network."""
        herm = -(self.M + self.M.conj().T) / 2
        return float(np.max(np.abs(herm - self.L @ self.L.conj().T / 2)))

    def with_nbar(self, nbar) -> "DriftModel":
        return DriftModel(self.M, self.L, nbar)


@dataclass(frozen=True, eq=False)
class OccupancyMatrix:
    """Stationary normal-ordered moments; ``N[i, j] = <c_i^dag c_j>``.

    ``error`` is an absolute error estimate where the method supplies one.
    """

    N: np.ndarray
    error: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def occupancies(self) -> np.ndarray:
        return self.N.diagonal().real.copy()


@dataclass(frozen=True, eq=False)
class StabilityReport:
    eigenvalues: np.ndarray
    stable: bool
    max_real: float
    threshold: float

    @property
    def decay_rate(self) -> float:
        """Slowest amplitude decay rate, ``-max Re(eig M)``."""
        return -self.max_real


def build_cascaded_drift(p: CascadedParams) -> DriftModel:
    """Drift and noise matrices of the two-mode cascaded network.

    Inputs are ordered (private bath 1, private bath 2, shared bath 3).
    """
    validate_cascaded(p)
    F = complex(p.F)
    rot = np.exp(1j * p.phi)
    link = math.sqrt(p.gamma1 * p.gamma2) * rot
    M = np.array(
        [
            [-1j * p.omega1 - (p.gamma1 + p.kappa1) / 2, -1j * F],
            [-1j * F.conjugate() - link, -1j * p.omega2 - (p.gamma2 + p.kappa2) / 2],
        ]
    )
    L = np.array(
        [
            [math.sqrt(p.kappa1), 0.0, math.sqrt(p.gamma1)],
            [0.0, math.sqrt(p.kappa2), math.sqrt(p.gamma2) * rot],
        ]
    )
    return DriftModel(M, L, p.nbar)


def stability_check(d: DriftModel) -> StabilityReport:
    eig = np.linalg.eigvals(d.M)
    threshold = -1e-12 * np.linalg.norm(d.M, 2)
    max_real = float(np.max(eig.real))
    return StabilityReport(eig, bool(max_real < threshold), max_real, float(threshold))


def _require_stable(d: DriftModel) -> StabilityReport:
    report = stability_check(d)
    if not report.stable:
        raise UnstableModelError(
            f"no steady state: max Re(eig M) = {report.max_real:.6g}", report.eigenvalues
        )
    return report


def lyapunov_steady_state(d: DriftModel) -> OccupancyMatrix:
    """Solve ``conj(M) N + N M^T + Q = 0`` by Kronecker vectorisation.

    The n^2 x n^2 system is dense; n stays small so no Schur reduction is
    attempted, and defective drift matrices need no special handling.
    """
    report = _require_stable(d)
    n = d.n
    eye = np.eye(n)
    # row-major vec: vec(A X B) = kron(A, B^T) vec(X)
    A = np.kron(np.conj(d.M), eye) + np.kron(eye, d.M)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise SteadyStateError(f"vectorised Lyapunov system is singular (cond = {cond:.3g})")
    N = np.linalg.solve(A, -d.diffusion.reshape(-1)).reshape(n, n)
    return OccupancyMatrix(N, info={"cond": float(cond), "eigenvalues": report.eigenvalues})


def _spectral_density(d: DriftModel, omega: float) -> np.ndarray:
    K = np.linalg.solve(-1j * omega * np.eye(d.n) - d.M, d.L)
    S = (np.conj(K) * d.nbar) @ K.T
    return np.stack([S.real, S.imag])


def spectral_steady_state(
    d: DriftModel, epsrel: float = 1e-8, epsabs: float | None = None
) -> OccupancyMatrix:
    """Integrate the stationary spectral density over all frequencies.

    The core window ``[-W, W]`` with ``W = max|Im eig| + 50 max|Re eig|`` is
    integrated with adaptive Gauss-Kronrod (21 point), with breakpoints at
    the mode resonances.  The two tails are folded onto ``(0, 1]`` with
    ``omega = +-W/u`` and integrated the same way, so nothing is truncated;
    their weight is kept in ``info["tail"]``.
    """
    report = _require_stable(d)
    eig = report.eigenvalues
    W = float(np.max(np.abs(eig.imag)) + 50 * np.max(np.abs(eig.real)))
    scale = float(np.max(np.abs(d.diffusion))) / max(report.decay_rate, 1e-300)
    if epsabs is None:
        epsabs = 1e-14 * max(scale, 1e-300)

    n = d.n
    if not np.any(d.nbar):
        return OccupancyMatrix(np.zeros((n, n), dtype=complex), error=0.0)

    resonances = sorted({float(r) for r in -eig.imag if -W < r < W})
    core, core_err, core_info = quad_vec(
        lambda w: _spectral_density(d, w),
        -W,
        W,
        epsabs=epsabs,
        epsrel=epsrel,
        norm="max",
        points=resonances or None,
        full_output=True,
    )

    def folded(u):
        u = max(u, 1e-300)
        w = W / u
        return (_spectral_density(d, w) + _spectral_density(d, -w)) * (W / (u * u))

    tail, tail_err, tail_info = quad_vec(
        folded, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, norm="max", full_output=True
    )
    err = float(core_err + tail_err) / (2 * math.pi)
    for info in (core_info, tail_info):
        if info.status != 0:
            raise QuadratureError(
                f"spectral quadrature did not converge (estimated error {err:.3g})", err
            )
    total = (core + tail) / (2 * math.pi)
    N = total[0] + 1j * total[1]
    tail_weight = float(np.max(np.abs(tail))) / (2 * math.pi)
    return OccupancyMatrix(N, error=err, info={"window": W, "tail": tail_weight})


def relaxation_time(d: DriftModel) -> float:
    """Amplitude relaxation time ``1 / min|Re eig M|``; moments relax twice as fast."""
    return 1.0 / _require_stable(d).decay_rate


def _moment_rhs(Mc: np.ndarray, MT: np.ndarray, Q: np.ndarray, N: np.ndarray) -> np.ndarray:
    return Mc @ N + N @ MT + Q


def time_evolve_moments(
    d: DriftModel,
    N0,
    t_end: float,
    dt: float | None = None,
) -> OccupancyMatrix:
    """Integrate the moment equation from ``N0`` to ``t_end`` with classic RK4.

    ``dt`` defaults to ``0.05 / ||M||``; it should stay below ``0.1 / ||M||``.
    The last step is shortened or stretched so the run ends exactly at
    ``t_end``.  Raises :class:`IntegrationError` if the moments blow up.
    """
    _require_stable(d)
    if isinstance(N0, OccupancyMatrix):
        N0 = N0.N
    N = np.array(N0, dtype=complex).reshape(d.n, d.n)
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    norm_M = float(np.linalg.norm(d.M, 2))
    if dt is None:
        dt = 0.05 / norm_M
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / steps

    Mc, MT, Q = np.conj(d.M), d.M.T, d.diffusion
    bound = 1e6 * (1.0 + np.max(np.abs(N)) + np.max(np.abs(Q)) * relaxation_time(d))
    for _ in range(steps):
        k1 = _moment_rhs(Mc, MT, Q, N)
        k2 = _moment_rhs(Mc, MT, Q, N + 0.5 * h * k1)
        k3 = _moment_rhs(Mc, MT, Q, N + 0.5 * h * k2)
        k4 = _moment_rhs(Mc, MT, Q, N + h * k3)
        N = N + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        peak = np.max(np.abs(N))
        if not np.isfinite(peak) or peak > bound:
            raise IntegrationError(
                f"moment integration blew up (step {h:.3g} vs 0.1/||M|| = {0.1 / norm_M:.3g})"
            )
    return OccupancyMatrix(N, info={"steps": steps, "dt": h})
