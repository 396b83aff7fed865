"""Built-in acceptance checks, run by ``thermal-routing verify`` and the test suite.

Each check returns a :class:`CheckResult` with the measured figure of merit
and the tolerance it was held to.  Random draws use fixed seeds, so a run
is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import analysis, dynamics, optomech
from .model import CascadedParams, DriveCoupling, OptomechParams


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    measured: str
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  [{self.key}] {self.title}: {self.measured} (tolerance {self.tolerance})"


def symmetric_template(m1: float = 100.0, m2: float = 100.0, F: complex = 0.0) -> CascadedParams:
    """Equal rates (all 1) with private baths chosen so that ``m3 = 0`` gives targets ``m1, m2``."""
    return CascadedParams(F=F, nbar1=2 * m1, nbar2=2 * m2, nbar3=0.0)


MAP_DELTAS = np.linspace(-10, 10, 101)
MAP_M3 = np.linspace(0, 200, 101)


def check_closed_form() -> CheckResult:
    t0 = time.perf_counter()
    grid = analysis.sweep_grid(symmetric_template(100.0, 100.0), MAP_DELTAS, MAP_M3)
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for cell in grid.rows():
        ref = analysis.closed_form_dn2(1.0, cell.delta, 100.0, cell.m3)
        worst = max(worst, abs(cell.report.dn2 - ref) / (1 + abs(ref)))
    ok = worst <= 1e-8 and elapsed < 5.0 and grid.n_valid == grid_size(grid)
    return CheckResult(
        "1",
        "closed-form dn2 on 101x101 grid",
        ok,
        f"max |dn2 - closed form|/(1+|closed form|) = {worst:.3e}, runtime {elapsed:.2f} s",
        "1e-08, runtime < 5 s",
    )


def grid_size(grid) -> int:
    return len(grid.delta_values) * len(grid.m3_values)


def random_cascaded(rng, F=None) -> CascadedParams:
    rate = lambda: rng.uniform(0.1, 10)  # noqa: E731
    if F is None:
        F = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
    return CascadedParams(
        omega1=rng.uniform(-10, 10),
        omega2=rng.uniform(-10, 10),
        gamma1=rate(),
        gamma2=rate(),
        kappa1=rate(),
        kappa2=rate(),
        phi=rng.uniform(-math.pi, math.pi),
        F=F,
        nbar1=rng.uniform(0, 500),
        nbar2=rng.uniform(0, 500),
        nbar3=rng.uniform(0, 500),
    )


def check_non_reciprocity(count: int = 100, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        p = random_cascaded(rng, F=0.0)
        r = analysis.routing_report(p)
        worst = max(worst, abs(r.dn1) / (1 + p.nbar1 + p.nbar3))
    return CheckResult(
        "2",
        f"dn1 = 0 for F = 0 ({count} random sets)",
        worst <= 1e-10,
        f"max |dn1|/(1+N1+N3) = {worst:.3e}",
        "1e-10",
    )


def check_decoupled_limit(count: int = 50, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        p = random_cascaded(rng)
        scale = max(p.gamma1, p.gamma2, p.kappa1, p.kappa2)
        far = replace(p, omega1=0.5e6 * scale, omega2=-0.5e6 * scale)
        occ = dynamics.lyapunov_steady_state(dynamics.build_cascaded_drift(far)).occupancies
        m1, m2, _ = analysis.decoupled_limit(p)
        for got, want in zip(occ, (m1, m2)):
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    exact = True
    for _ in range(count):
        k = rng.uniform(0.1, 10)
        N1, N2, N3 = rng.uniform(0, 500, 3)
        p = CascadedParams(gamma1=k, gamma2=k, kappa1=k, kappa2=k, nbar1=N1, nbar2=N2, nbar3=N3)
        m1, m2, m3 = analysis.decoupled_limit(p)
        exact &= m1 == 0.5 * (N1 + N3) and m2 == 0.5 * (N2 + N3) and m3 == N3
    return CheckResult(
        "3",
        f"decoupled limit vs Lyapunov at detuning 1e6 x rate ({count} random sets)",
        worst <= 1e-6 and exact,
        f"max relative deviation {worst:.3e}; equal-rate case exact: {exact}",
        "1e-6 relative; equal-rate case bit-exact",
    )


def random_stable_model(rng) -> dynamics.DriftModel:
    """Generic stable model with n <= 3 modes and m <= 4 inputs (not necessarily passive)."""
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 5))
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    shift = np.max(np.linalg.eigvals(A).real) + rng.uniform(0.3, 2.0)
    M = A - shift * np.eye(n)
    L = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    nbar = rng.uniform(0, 100, m)
    return dynamics.DriftModel(M, L, nbar)


def agreement(a: np.ndarray, b: np.ndarray, rel: float = 1e-6, floor: float = 1e-9) -> float:
    """Worst ratio ``|a - b| / (rel |b| + floor)``; at most 1 means agreement."""
    return float(np.max(np.abs(a - b) / (rel * np.abs(b) + floor)))


def check_three_way(count: int = 50, seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        d = random_stable_model(rng)
        ref = dynamics.lyapunov_steady_state(d).N
        spec = dynamics.spectral_steady_state(d).N
        t_end = 20 * dynamics.relaxation_time(d)
        ode = dynamics.time_evolve_moments(d, np.zeros((d.n, d.n)), t_end).N
        worst = max(worst, agreement(spec, ref), agreement(ode, ref), agreement(ode, spec))
    return CheckResult(
        "4",
        f"Lyapunov / spectral / moment-ODE agreement ({count} random models)",
        worst <= 1.0,
        f"worst error in units of tolerance {worst:.3e}",
        "1e-6 relative + 1e-9 absolute",
    )


def check_equilibrium() -> CheckResult:
    worst = 0.0
    rng = np.random.default_rng(5)
    for nbar in (0.0, 0.7, 3.2, 12.0):
        for _ in range(5):
            p = replace(random_cascaded(rng), nbar1=nbar, nbar2=nbar, nbar3=nbar)
            N = dynamics.lyapunov_steady_state(dynamics.build_cascaded_drift(p)).N
            worst = max(worst, float(np.max(np.abs(N - nbar * np.eye(2)))) / max(1.0, nbar))
            l = optomech.LinearizedOptomech(
                G1=rng.uniform(0, 5), G2=rng.uniform(0, 5), phi=rng.uniform(-3, 3),
                delta1=rng.uniform(50, 150), delta2=rng.uniform(50, 150), J=rng.uniform(-1, 1),
                kappa1=rng.uniform(0.1, 2), kappa2=rng.uniform(0.1, 2),
                omega_m=100.0, gamma_m=rng.uniform(1, 50),
                nbar1=nbar, nbar2=nbar, nbar_m=nbar,
            )
            N = dynamics.lyapunov_steady_state(optomech.build_three_mode_rwa_drift(l)).N
            worst = max(worst, float(np.max(np.abs(N - nbar * np.eye(3)))) / max(1.0, nbar))
    return CheckResult(
        "5",
        "uniform baths thermalise cascaded and three-mode models",
        worst <= 1e-10,
        f"max |N - nbar I| / max(1, nbar) = {worst:.3e}",
        "1e-10",
    )


def equivalence_point(gamma_m: float = 40.0, G: float = 2.0) -> optomech.LinearizedOptomech:
    """Perfectly non-reciprocal optomechanical point: phi = pi/2, J = 2 G1 G2 / gamma_m."""
    return optomech.LinearizedOptomech(
        G1=G, G2=G, phi=math.pi / 2, delta1=100.0, delta2=100.0, J=2 * G * G / gamma_m,
        kappa1=1.0, kappa2=1.0, omega_m=100.0, gamma_m=gamma_m,
        nbar1=200.0, nbar2=100.0, nbar_m=20.0,
    )


def check_equivalence() -> CheckResult:
    rng = np.random.default_rng(6)
    alg = 0.0
    for _ in range(20):
        l = optomech.LinearizedOptomech(
            G1=rng.uniform(0.1, 5), G2=rng.uniform(0.1, 5), phi=rng.uniform(-3, 3),
            delta1=rng.uniform(-5, 5), delta2=rng.uniform(-5, 5), J=rng.uniform(-1, 1),
            kappa1=rng.uniform(0.1, 2), kappa2=rng.uniform(0.1, 2),
            omega_m=rng.uniform(50, 150), gamma_m=rng.uniform(10, 100),
            nbar1=1.0, nbar2=2.0, nbar_m=3.0,
        )
        a = optomech.adiabatic_eliminate(l)
        b = dynamics.build_cascaded_drift(optomech.map_to_cascaded(l))
        alg = max(alg, float(np.max(np.abs(a.M - b.M))), float(np.max(np.abs(a.L - b.L))))

    F = abs(optomech.map_to_cascaded(equivalence_point()).F)

    # broadband mechanics: gamma_m = 1e3 kappa, G chosen so that gamma_i = kappa
    l = equivalence_point(gamma_m=1000.0, G=math.sqrt(1000.0 / 4))
    full = dynamics.lyapunov_steady_state(optomech.build_three_mode_rwa_drift(l)).occupancies[:2]
    mapped = analysis.routing_report(optomech.map_to_cascaded(l))
    phys = max(abs(full[0] - mapped.n1) / mapped.n1, abs(full[1] - mapped.n2) / mapped.n2)
    ok = alg <= 1e-12 and F <= 1e-15 and phys <= 0.02
    return CheckResult(
        "6",
        "optomechanical / cascaded equivalence",
        ok,
        f"(a) max entry difference {alg:.3e}; (b) |F| = {F:.3e}; (c) max relative occupancy gap {phys:.3e}",
        "(a) 1e-12, (b) 1e-15, (c) 2%",
    )


def check_figure_structure() -> CheckResult:
    """Sign structure of dn2 on the (detuning, shared-bath) plane.

    With targets ``m1 = 100, m2 = 50`` the private bath of mode 2
    would need a negative occupancy once ``m3 > 100``; those cells are flagged
    invalid but still evaluated.  For ``F = 0`` their dn2 does not depend on
    that occupancy, so the sign structure is judged on the full grid.
    """
    step = MAP_M3[1] - MAP_M3[0]
    grid = analysis.sweep_grid(symmetric_template(100.0, 50.0), MAP_DELTAS, MAP_M3)
    dn2 = grid.array("dn2")
    dn1 = grid.array("dn1")
    crossing_ok = True
    crossings = []
    for row in dn2:
        pos = MAP_M3[row > 1e-9]
        neg = MAP_M3[row < -1e-9]
        if not len(pos) or not len(neg):
            crossing_ok = False
            continue
        # all positive cells lie below all negative ones, crossing near 100
        if pos.max() >= neg.min():
            crossing_ok = False
        mid = 0.5 * (pos.max() + neg.min())
        crossings.append(mid)
        if abs(mid - 100.0) > step:
            crossing_ok = False
    dn1_zero = float(np.max(np.abs(dn1)))
    flagged = int((~grid.valid_mask()).sum())

    leaky = analysis.sweep_grid(symmetric_template(100.0, 50.0, F=1.0), MAP_DELTAS, MAP_M3)
    valid = leaky.valid_mask()
    leak = float(np.max(np.abs(leaky.array("dn1")[valid])))
    dn2_leaky = leaky.array("dn2")[valid]
    both_signs = bool(np.any(dn2_leaky > 1e-9) and np.any(dn2_leaky < -1e-9))

    ok = crossing_ok and dn1_zero <= 1e-10 and leak > 1e-6 and both_signs
    spread = f"{min(crossings):.3g}..{max(crossings):.3g}" if crossings else "none"
    return CheckResult(
        "7",
        "routing-map sign structure",
        ok,
        f"F=0: dn2 crossing at m3 = {spread} on every row ({flagged} cells flagged invalid), "
        f"max |dn1| = {dn1_zero:.2e}; F=kappa (valid cells): max |dn1| = {leak:.3g}, "
        f"dn2 of both signs: {both_signs}",
        f"crossing 100 +- {step:g}; |dn1| <= 1e-10 for F=0; |dn1| > 1e-6 for F=kappa",
    )


DESK_SCALE = OptomechParams(
    delta1=100.0, delta2=100.0, kappa1=1.0, kappa2=1.0, omega_m=100.0, gamma_m=40.0, J=0.0,
    coupling=DriveCoupling(1e-3, 1e-3, 1e3, 1e3),
)


def check_linearization() -> CheckResult:
    css = optomech.classical_steady_state(DESK_SCALE)
    free = replace(DESK_SCALE, coupling=DriveCoupling(0.0, 0.0, 1e3, 2e3 - 5e2j), delta2=-30.0, kappa2=3.0)
    lin = optomech.classical_steady_state(free)
    worst = 0.0
    for alpha, E, delta, kappa in ((lin.alpha1, 1e3, free.delta1, free.kappa1), (lin.alpha2, 2e3 - 5e2j, free.delta2, free.kappa2)):
        want = -1j * E / (1j * delta + kappa / 2)
        worst = max(worst, abs(alpha - want) / abs(want))
    ok = css.residual <= 1e-10 and worst <= 1e-12 and lin.beta == 0
    return CheckResult(
        "8",
        "classical steady state self-consistency",
        ok,
        f"desk-scale residual {css.residual:.3e} after {css.iterations} iterations; "
        f"g = 0 relative amplitude error {worst:.3e}",
        "residual 1e-10; g = 0 amplitudes 1e-12",
    )


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "1": check_closed_form,
    "2": check_non_reciprocity,
    "3": check_decoupled_limit,
    "4": check_three_way,
    "5": check_equilibrium,
    "6": check_equivalence,
    "7": check_figure_structure,
    "8": check_linearization,
}


def run_checks(keys=None) -> list[CheckResult]:
    results = []
    for key in keys or CHECKS:
        try:
            results.append(CHECKS[key]())
        except Exception as exc:  # a crashing check is a failing check
            results.append(CheckResult(key, CHECKS[key].__name__, False, f"raised {exc!r}", "-"))
    return results
