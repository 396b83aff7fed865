import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermal_routing.checks import agreement, random_cascaded, random_stable_model
from thermal_routing.dynamics import (
    DriftModel,
    IntegrationError,
    UnstableModelError,
    build_cascaded_drift,
    lyapunov_steady_state,
    relaxation_time,
    spectral_steady_state,
    stability_check,
    time_evolve_moments,
)
from thermal_routing.model import CascadedParams

seeds = st.integers(0, 2**32 - 1)


def single_mode(kappa=2.0, nbar=3.0):
    return DriftModel([[-kappa / 2]], [[math.sqrt(kappa)]], [nbar])


def test_baseline_matrices(baseline):
    d = build_cascaded_drift(baseline)
    np.testing.assert_allclose(d.M, [[-1, 0], [-1, -1]])
    np.testing.assert_allclose(d.L, [[1, 0, 1], [0, 1, 1]])
    np.testing.assert_allclose(d.nbar, [200, 100, 0])


def test_drift_entries_general():
    p = CascadedParams(omega1=2, omega2=-3, gamma1=4, gamma2=9, kappa1=1, kappa2=3, phi=math.pi / 2, F=1 + 2j)
    d = build_cascaded_drift(p)
    expected = np.array([[-2j - 2.5, -1j * (1 + 2j)], [-1j * (1 - 2j) - 6j, 3j - 6]])
    np.testing.assert_allclose(d.M, expected, atol=1e-14)
    np.testing.assert_allclose(d.L[1, 2], 3j, atol=1e-15)


def test_drift_shape_checks():
    with pytest.raises(ValueError, match="square"):
        DriftModel(np.zeros((2, 3)), np.zeros((2, 1)), [0])
    with pytest.raises(ValueError, match="bath occupancies"):
        DriftModel(np.eye(2), np.zeros((2, 3)), [0, 0])


def test_cascaded_model_is_passive():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert build_cascaded_drift(random_cascaded(rng)).damping_mismatch() < 1e-12


def test_stability_examples(baseline):
    r = stability_check(build_cascaded_drift(baseline))
    assert r.stable and r.max_real == pytest.approx(-1.0)
    r = stability_check(DriftModel([[0.5]], [[1.0]], [1.0]))
    assert not r.stable and r.max_real == pytest.approx(0.5)


def test_marginal_model_is_rejected():
    p = CascadedParams(kappa1=0.0, kappa2=0.0, F=1e6, nbar3=1.0)
    d = build_cascaded_drift(p)
    assert not stability_check(d).stable
    with pytest.raises(UnstableModelError) as info:
        lyapunov_steady_state(d)
    assert len(info.value.eigenvalues) == 2


def test_lyapunov_single_mode():
    sol = lyapunov_steady_state(single_mode())
    assert sol.N.shape == (1, 1)
    assert sol.N[0, 0] == pytest.approx(3.0, rel=1e-14)


def test_lyapunov_baseline(baseline):
    N = lyapunov_steady_state(build_cascaded_drift(baseline)).N
    # mode 1 sees only its own baths; mode 2 also inherits mode 1's output
    np.testing.assert_allclose(N, [[100, -50], [-50, 100]], atol=1e-12)


def test_lyapunov_detuned_pair(baseline):
    # omega1 - omega2 = 2 kappa: the routed share drops to 2/(4+4) of (m1 - m3)
    N = lyapunov_steady_state(build_cascaded_drift(replace(baseline, omega1=1.0, omega2=-1.0))).N
    assert N[0, 0].real == pytest.approx(100.0, rel=1e-13)
    assert N[1, 1].real == pytest.approx(75.0, rel=1e-13)


def test_spectral_baseline(baseline):
    sol = spectral_steady_state(build_cascaded_drift(baseline))
    np.testing.assert_allclose(sol.N, [[100, -50], [-50, 100]], rtol=1e-7, atol=1e-7)
    assert sol.error < 1e-5
    assert sol.info["window"] == pytest.approx(50.0)


def test_spectral_vacuum_is_zero(baseline):
    d = build_cascaded_drift(replace(baseline, nbar1=0.0, nbar2=0.0))
    sol = spectral_steady_state(d)
    assert np.all(sol.N == 0) and sol.error == 0.0


def test_spectral_tails_matter():
    # window is 25 for kappa = 1; the Lorentzian weight beyond it is about 1/(25 pi)
    sol = spectral_steady_state(single_mode(kappa=1.0, nbar=1.0))
    assert sol.info["tail"] == pytest.approx(math.atan(1 / 50) * 2 / math.pi, rel=1e-6)
    assert sol.N[0, 0].real == pytest.approx(1.0, rel=1e-8)


def test_relaxation_time(baseline):
    assert relaxation_time(build_cascaded_drift(baseline)) == pytest.approx(1.0)


def test_ode_single_mode_exponential():
    kappa = 2.0
    exact = 3 + 7 * math.exp(-1)
    sol = time_evolve_moments(single_mode(kappa, 3.0), [[10.0]], t_end=1 / kappa)
    assert sol.N[0, 0].real == pytest.approx(exact, rel=1e-6)
    fine = time_evolve_moments(single_mode(kappa, 3.0), [[10.0]], t_end=1 / kappa, dt=1e-3)
    assert fine.N[0, 0].real == pytest.approx(exact, rel=1e-12)


def test_ode_fixed_point_stays_put(baseline):
    d = build_cascaded_drift(baseline)
    N = lyapunov_steady_state(d).N
    out = time_evolve_moments(d, N, t_end=10.0).N
    np.testing.assert_allclose(out, N, atol=1e-10)


def test_ode_lands_on_t_end():
    sol = time_evolve_moments(single_mode(), [[0.0]], t_end=0.3, dt=0.07)
    assert sol.info["steps"] * sol.info["dt"] == pytest.approx(0.3)


def test_ode_blow_up_is_detected():
    d = DriftModel([[-0.5]], [[1.0]], [1.0])
    with pytest.raises(IntegrationError):
        time_evolve_moments(d, [[0.0]], t_end=200.0, dt=5.0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_steady_state_is_hermitian_and_psd(seed):
    d = random_stable_model(np.random.default_rng(seed))
    N = lyapunov_steady_state(d).N
    scale = 1 + np.max(np.abs(N))
    assert np.max(np.abs(N - N.conj().T)) <= 1e-10 * scale
    assert np.min(np.linalg.eigvalsh((N + N.conj().T) / 2)) >= -1e-9 * scale


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_steady_state_is_linear_in_bath_occupancies(seed):
    rng = np.random.default_rng(seed)
    d = random_stable_model(rng)
    a, b = rng.uniform(0, 3, 2)
    other = rng.uniform(0, 50, d.m)
    lhs = lyapunov_steady_state(d.with_nbar(a * d.nbar + b * other)).N
    rhs = a * lyapunov_steady_state(d).N + b * lyapunov_steady_state(d.with_nbar(other)).N
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * (1 + np.max(np.abs(lhs)))


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(-math.pi, math.pi))
def test_occupancies_ignore_input_phases(seed, theta):
    d = random_stable_model(np.random.default_rng(seed))
    rotated = DriftModel(d.M, d.L * np.exp(1j * theta), d.nbar)
    np.testing.assert_allclose(
        lyapunov_steady_state(rotated).N, lyapunov_steady_state(d).N, rtol=1e-10, atol=1e-10
    )


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0, 1e3))
def test_equal_baths_give_equilibrium(seed, n):
    p = replace(random_cascaded(np.random.default_rng(seed)), nbar1=n, nbar2=n, nbar3=n)
    N = lyapunov_steady_state(build_cascaded_drift(p)).N
    np.testing.assert_allclose(N, n * np.eye(2), rtol=1e-10, atol=1e-10 * (1 + n))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_three_routes_agree(seed):
    d = random_stable_model(np.random.default_rng(seed))
    lyap = lyapunov_steady_state(d).N
    spec = spectral_steady_state(d).N
    ode = time_evolve_moments(d, np.zeros((d.n, d.n)), 20 * relaxation_time(d)).N
    assert agreement(spec, lyap) <= 1
    assert agreement(ode, lyap) <= 1
