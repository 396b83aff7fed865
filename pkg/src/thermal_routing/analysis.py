"""Thermal-noise routing: occupancy changes caused by the one-way link."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dynamics import build_cascaded_drift, lyapunov_steady_state
from .model import CascadedParams, validate_cascaded


@dataclass(frozen=True)
class RoutingReport:
    """Steady occupancies ``n``, decoupled-limit occupancies ``m`` and their difference."""

    n1: float
    n2: float
    m1: float
    m2: float
    m3: float
    dn1: float
    dn2: float
    eigenvalues: tuple = ()


@dataclass(frozen=True)
class SweepCell:
    delta: float
    m3: float
    report: RoutingReport
    valid: bool = True
    error: str | None = None


@dataclass
class SweepGrid:
    """Routing reports on a (detuning, shared-bath occupancy) grid.

    ``cells[i][j]`` belongs to ``delta_values[i]`` and ``m3_values[j]``.
    """

    delta_values: list
    m3_values: list
    cells: list
    fixed: CascadedParams
    targets: tuple = field(default=())

    def rows(self):
        """Cells in row-major order (detuning outer, occupancy inner)."""
        for row in self.cells:
            yield from row

    @property
    def n_valid(self) -> int:
        return sum(c.valid for c in self.rows())

    def array(self, name: str) -> np.ndarray:
        return np.array([[getattr(c.report, name) for c in row] for row in self.cells])

    def valid_mask(self) -> np.ndarray:
        return np.array([[c.valid for c in row] for row in self.cells])


def decoupled_limit(p: CascadedParams) -> tuple[float, float, float]:
    """Occupancies in the limit of infinite detuning between the two modes.

    The inter-mode couplings average out, so each mode settles at the
    rate-weighted mixture of its private bath and the shared one.
    """
    validate_cascaded(p)
    m1 = _mixture(p.kappa1, p.gamma1, p.nbar1, p.nbar3)
    m2 = _mixture(p.kappa2, p.gamma2, p.nbar2, p.nbar3)
    return m1, m2, float(p.nbar3)


def _mixture(kappa: float, gamma: float, nbar: float, nbar3: float) -> float:
    total = kappa + gamma
    if total == 0:
        raise ValueError("mode is decoupled from every bath (kappa + gamma = 0)")
    # weight form keeps the equal-rate case exactly (nbar + nbar3) / 2
    w = kappa / total
    return w * nbar + (1 - w) * nbar3


def _report(p: CascadedParams, nbar=None) -> RoutingReport:
    d = build_cascaded_drift(p)
    if nbar is not None:
        d = d.with_nbar(nbar)
        n1_, n2_, n3_ = nbar
    else:
        n1_, n2_, n3_ = p.nbar
    sol = lyapunov_steady_state(d)
    occ = sol.occupancies
    eig = sol.info["eigenvalues"]
    m1 = _mixture(p.kappa1, p.gamma1, n1_, n3_)
    m2 = _mixture(p.kappa2, p.gamma2, n2_, n3_)
    n1, n2 = float(occ[0]), float(occ[1])
    return RoutingReport(n1, n2, m1, m2, float(n3_), n1 - m1, n2 - m2, tuple(eig))


def routing_report(p: CascadedParams) -> RoutingReport:
    """Steady occupancies of the cascaded pair against the decoupled limit."""
    decoupled_limit(p)
    return _report(p)


def closed_form_dn2(kappa: float, Delta: float, m1: float, m3: float) -> float:
    """Occupancy change of mode 2 for equal rates ``kappa`` and no reciprocal coupling."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return 2 * kappa**2 / (4 * kappa**2 + Delta**2) * (m1 - m3)


def required_private_occupancy(kappa: float, gamma: float, m: float, m3: float) -> float:
    """Private-bath occupancy that gives decoupled-limit occupancy ``m`` for shared bath ``m3``."""
    if kappa == 0:
        if math.isclose(m, m3):
            return 0.0
        raise ValueError("mode has no private bath, its decoupled occupancy equals m3")
    return ((kappa + gamma) * m - gamma * m3) / kappa


def sweep_cell(template: CascadedParams, targets, delta: float, m3: float) -> SweepCell:
    """One grid point with the decoupled-limit targets ``(m1, m2)`` held fixed.

    If a target needs a negative private-bath occupancy the cell is marked
    invalid; its numbers are still computed from the moment equations with
    that formal occupancy so the grid stays rectangular.
    """
    m1, m2 = targets
    try:
        N1 = required_private_occupancy(template.kappa1, template.gamma1, m1, m3)
        N2 = required_private_occupancy(template.kappa2, template.gamma2, m2, m3)
    except ValueError as exc:
        nan = math.nan
        return SweepCell(delta, m3, RoutingReport(nan, nan, m1, m2, m3, nan, nan), False, str(exc))
    p = replace(
        template,
        omega1=delta / 2,
        omega2=-delta / 2,
        nbar1=max(N1, 0.0),
        nbar2=max(N2, 0.0),
        nbar3=m3,
    )
    problems = [f"nbar{i} = {v:.6g} < 0" for i, v in ((1, N1), (2, N2)) if v < 0]
    report = _report(p, (N1, N2, m3))
    if problems:
        return SweepCell(delta, m3, report, False, "required " + ", ".join(problems))
    return SweepCell(delta, m3, report)


def _sweep_row(args):
    template, targets, delta, m3_values = args
    return [sweep_cell(template, targets, delta, m3) for m3 in m3_values]


def sweep_grid(
    template: CascadedParams,
    delta_values: Sequence[float],
    m3_values: Sequence[float],
    jobs: int = 1,
) -> SweepGrid:
    """Routing reports over detuning and shared-bath occupancy.

    Each detuning is split symmetrically, ``omega1 = +delta/2`` and
    ``omega2 = -delta/2``.  The decoupled-limit occupancies of ``template``
    are held fixed by back-solving the private-bath occupancies per cell.
    Rows are evaluated in parallel when ``jobs > 1``; ordering is unaffected.
    """
    validate_cascaded(template)
    delta_values = [float(v) for v in delta_values]
    m3_values = [float(v) for v in m3_values]
    if not delta_values or not m3_values:
        raise ValueError("sweep axes must be non-empty")
    if not all(math.isfinite(v) for v in delta_values + m3_values):
        raise ValueError("sweep axes must be finite")
    m1, m2, _ = decoupled_limit(template)
    targets = (m1, m2)
    tasks = [(template, targets, delta, m3_values) for delta in delta_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_sweep_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        cells = [_sweep_row(t) for t in tasks]
    return SweepGrid(delta_values, m3_values, cells, template, targets)
