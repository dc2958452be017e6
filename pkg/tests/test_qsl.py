import dataclasses
import math

import numpy as np
import pytest

from raysearch import _kernels
from raysearch.corevec import StateVector, haar_random_unitary
from raysearch.qsl import (
    HamiltonianSpec,
    IntegrationError,
    SandwichGridError,
    constant_rabi,
    delta_h,
    detuned_rabi,
    driven,
    envelope_report,
    envelopes,
    evolve,
    farhi_gutmann,
    random_pair,
    random_smooth,
    step_bounds,
    transition_rate_check,
    verify_sandwich,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
ZERO, ONE = StateVector.basis(1, 0), StateVector.basis(1, 1)


def static(h):
    h = np.asarray(h, dtype=complex)
    return HamiltonianSpec(h.shape[0], lambda t: h, "custom", static=True)


# -- delta_h ---------------------------------------------------------------------

def test_delta_h_examples():
    assert delta_h(0.5 * 1.3 * SX, ONE) == pytest.approx(0.65, abs=1e-15)
    w, v = np.linalg.eigh(np.array([[1, 0.3j], [-0.3j, -0.4]]))
    assert delta_h(np.array([[1, 0.3j], [-0.3j, -0.4]]), v[:, 0]) == pytest.approx(0, abs=1e-7)
    assert delta_h(np.diag([0, 2.5]), StateVector.uniform(1)) == pytest.approx(1.25, abs=1e-15)
    with pytest.raises(ValueError):
        delta_h(np.array([[0, 1], [0, 0]]), ZERO)


# -- evolve -------------------------------------------------------------------------

def test_zero_hamiltonian_is_stationary():
    psi0 = StateVector.normalized([0.6, 0.8j])
    tr = evolve(static(np.zeros((2, 2))), psi0, 3.0, 64, ONE)
    assert np.all(tr.states == psi0.amplitudes)
    assert np.all(tr.prob == tr.prob[0])
    assert np.all(tr.action == 0)


def test_rabi_reaches_target():
    tr = evolve(constant_rabi(math.pi), ZERO, 1.0, 2048, ONE)
    assert tr.prob[-1] == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(tr.prob, np.sin(math.pi * tr.times / 2) ** 2, atol=1e-10)


def test_evolve_argument_checks():
    with pytest.raises(ValueError):
        evolve(constant_rabi(1.0), ZERO, 1.0, 8, ONE)
    with pytest.raises(ValueError):
        evolve(constant_rabi(1.0), ZERO, 0.0, 64, ONE)
    with pytest.raises(ValueError, match="Hermitian"):
        evolve(static([[0, 1], [0, 0]]), ZERO, 1.0, 64, ONE)


def test_coarse_grid_raises():
    with pytest.raises(IntegrationError):
        evolve(constant_rabi(200.0), ZERO, 1.0, 16, ONE)


def test_callable_and_tabulated_paths_agree():
    h = driven(0.7, 1.1, 2.0)
    tab = evolve(h, ZERO, 4.0, 512, ONE)
    loose = HamiltonianSpec(2, h.matrix, "driven")
    slow = evolve(loose, ZERO, 4.0, 512, ONE)
    np.testing.assert_allclose(tab.states, slow.states, atol=1e-13)
    np.testing.assert_allclose(tab.action, slow.action, atol=1e-13)


def test_integrator_order_p_error():
    errs = []
    for n in (16, 32, 64, 128, 256):
        tr = evolve(constant_rabi(math.pi), ZERO, 1.0, n, ONE)
        errs.append(np.max(np.abs(tr.prob - np.sin(math.pi * tr.times / 2) ** 2)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 8), (errs, ratios)


def test_integrator_order_norm_drift():
    # renormalization disabled so the accumulated drift shows the local error order
    h = constant_rabi(4 * math.pi)
    psi = np.array([1, 0], dtype=complex)
    drifts = []
    for n in (32, 64, 128, 256, 512):
        hs = np.ascontiguousarray(h.matrices(np.linspace(0, 1, 2 * n + 1)))
        states, drift, ok = _kernels.rk4_tabulated(psi, hs, 1.0 / n, 1.0, 1.0)
        assert ok
        drifts.append(abs(np.linalg.norm(states[-1]) - 1))
    ratios = np.array(drifts[:-1]) / np.array(drifts[1:])
    assert np.all(ratios >= 8), (drifts, ratios)


def test_action_is_simpson_of_spread():
    h = random_smooth(5)
    a, b = random_pair(5, 2)
    tr = evolve(h, a, 3.0, 256, b)
    fine = np.linspace(0, 3.0, 20001)
    ref = np.array([delta_h(m, b) for m in h.matrices(fine)])
    want = np.sum((ref[1:] + ref[:-1]) / 2) * (fine[1] - fine[0])
    assert tr.action[-1] == pytest.approx(want, abs=1e-7)
    assert np.all(np.diff(tr.action) >= 0)


def test_state_spread_switch():
    tr = evolve(constant_rabi(1.0), ZERO, 1.0, 64, ONE, state_spread=True)
    assert tr.delta_h_state is not None
    np.testing.assert_allclose(tr.delta_h_state, 0.5, atol=1e-12)
    assert evolve(constant_rabi(1.0), ZERO, 1.0, 64, ONE).delta_h_state is None


# -- Farhi-Gutmann ---------------------------------------------------------------

def test_farhi_gutmann_matches_expm_oracle():
    from scipy.linalg import expm

    n, energy = 5, 0.8
    ini, tgt = StateVector.uniform(n), StateVector.basis(n, 19)
    h = farhi_gutmann(energy, ini, tgt)
    t_end = 1.1 * (math.pi / 2) * math.sqrt(2 ** n) / energy
    tr = evolve(h, ini, t_end, 1024, tgt)
    dense = h.matrix(0.0)
    for k in (0, 300, 700, 1024):
        want = expm(-1j * dense * tr.times[k]) @ ini.amplitudes
        assert abs(abs(np.vdot(tr.states[k], want)) - 1) <= 1e-10
    x = 2 ** (-n / 2)
    assert tr.delta_h[0] == pytest.approx(energy * x * math.sqrt(1 - x * x), abs=1e-12)


def test_farhi_gutmann_first_hit_n6():
    n, energy = 6, 1.0
    ini, tgt = StateVector.uniform(n), StateVector.basis(n, 5)
    t_star = (math.pi / 2) * math.sqrt(2 ** n) / energy
    tr = evolve(farhi_gutmann(energy, ini, tgt), ini, 1.1 * t_star, 4096, tgt)
    hit = tr.times[np.argmax(tr.prob >= 1 - 1e-6)]
    assert abs(hit - t_star) / t_star <= 0.05


# -- rate inequality ---------------------------------------------------------------

def test_rate_stationary_eigenstate():
    tr = evolve(constant_rabi(1.0), StateVector.uniform(1), 2.0, 64, ONE)
    rep = transition_rate_check(tr, constant_rabi(1.0))
    assert np.max(np.abs(rep.rate)) <= 1e-12 and np.all(rep.bound >= 0) and rep.passed


def test_rate_saturated_for_resonant_rabi():
    h = constant_rabi(math.pi)
    rep = transition_rate_check(evolve(h, ZERO, 1.0, 2048, ONE), h)
    np.testing.assert_allclose(np.abs(rep.rate), rep.bound, atol=1e-7)
    assert rep.max_fd_gap <= 1e-5


def test_rate_inequality_random_two_level():
    for seed in range(100):
        h = random_smooth(seed)
        a, b = random_pair(seed, 2)
        rep = transition_rate_check(evolve(h, a, 5.0, 2048, b), h)
        assert rep.passed, (seed, rep.violations[:3])


# -- envelopes and step bounds ------------------------------------------------------

def test_envelope_examples():
    lo, hi = envelopes(1.2, np.zeros(5))
    np.testing.assert_allclose(lo, math.cos(0.6) ** 2)
    np.testing.assert_allclose(hi, math.cos(0.6) ** 2)

    t = np.linspace(0, 1, 11)
    lo, hi = envelopes(math.pi, math.pi * t / 2)
    assert hi[-1] == pytest.approx(1, abs=1e-15) and lo[-1] == pytest.approx(0, abs=1e-15)

    lo, hi = envelopes(math.pi / 2, [0.0, math.pi / 12])
    assert hi[1] == pytest.approx(0.75, abs=1e-15) and lo[1] == pytest.approx(0.25, abs=1e-15)


def test_envelopes_clamp_and_order():
    a = np.linspace(0, 4, 400)
    lo, hi = envelopes(2.0, a)
    assert np.all(lo <= hi) and np.all((0 <= lo) & (hi <= 1))
    assert np.all(np.diff(hi) >= 0) and np.all(np.diff(lo) <= 0)
    assert hi[-1] == 1.0 and lo[-1] == pytest.approx(0, abs=1e-30)


def test_envelope_argument_checks():
    with pytest.raises(ValueError):
        envelopes(4.0, [0.0])
    with pytest.raises(ValueError):
        envelopes(1.0, [0.0, 0.2, 0.1])
    with pytest.raises(ValueError):
        envelopes(1.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        envelopes(1.0, [0.0], orientation="sideways")


def test_printed_orientation_is_violated():
    # at theta0 = pi the two pairings coincide, so use a detuned drive
    tr = evolve(detuned_rabi(2.0, 0.5), ZERO, 2.0, 512, ONE)
    assert envelope_report(tr).violations == []
    assert envelope_report(tr, orientation="printed").violations


def test_step_bound_examples():
    sb = step_bounds(math.pi / 2, math.pi / 12)
    assert sb.s_min == pytest.approx(2 / math.sqrt(3), abs=1e-9)
    assert sb.s_max == pytest.approx(2.0, abs=1e-9)
    theta0 = 2 * math.acos(0.3)
    sb = step_bounds(theta0, 0.0)
    assert sb.s_min == pytest.approx(1 / 0.3, abs=1e-12) and sb.s_max == pytest.approx(1 / 0.3, abs=1e-12)
    sb = step_bounds(2 * math.pi / 3, math.pi / 6)
    assert sb.divergent and math.isinf(sb.s_max)
    assert sb.s_min == pytest.approx(2 / math.sqrt(3), abs=1e-12)
    sb = step_bounds(math.pi / 2, math.pi / 12, p=0.5)
    assert sb.s_max == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        step_bounds(1.0, -0.1)
    with pytest.raises(ValueError):
        step_bounds(1.0, 0.1, p=1.5)


# -- sandwich --------------------------------------------------------------------------

def test_rabi_saturates_upper_envelope():
    tr = evolve(constant_rabi(math.pi), ZERO, 1.0, 2048, ONE)
    rep = envelope_report(tr, constant_rabi(math.pi))
    assert rep.violations == [] and rep.saturation_gap <= 1e-8


def test_saturation_generic_two_level_frame():
    u = haar_random_unitary(2, 31).matrix(2)
    a, b = u[:, 0], u[:, 1]
    g, e0, phi = 0.9, -0.4, 1.1
    h = static(e0 * np.eye(2) + g * (np.exp(1j * phi) * np.outer(a, b.conj())
                                   + np.exp(-1j * phi) * np.outer(b, a.conj())))
    t_peak = math.pi / (2 * g)
    tr = evolve(h, StateVector(a), t_peak, 2048, StateVector(b))
    assert envelope_report(tr, h).saturation_gap <= 1e-8


def test_corrupted_trace_is_caught():
    tr = evolve(detuned_rabi(2.0, 0.5), ZERO, 2.0, 256, ONE)
    rep = envelope_report(tr)
    assert rep.violations == []
    bad = dataclasses.replace(tr, prob=-tr.prob)
    assert verify_sandwich(bad, rep)


def test_grid_mismatch():
    tr = evolve(detuned_rabi(2.0, 0.5), ZERO, 2.0, 256, ONE)
    other = evolve(detuned_rabi(2.0, 0.5), ZERO, 2.0, 128, ONE)
    with pytest.raises(SandwichGridError):
        verify_sandwich(tr, envelope_report(other))


@pytest.mark.parametrize("seed", range(20))
def test_sandwich_four_level(seed):
    h = random_smooth(seed, 4)
    a, b = random_pair(seed, 4)
    rep = envelope_report(evolve(h, a, 5.0, 2048, b), h)
    assert rep.violations == [] and rep.rate.passed


def test_sandwich_presets():
    cases = [
        (detuned_rabi(1.5, 0.7), ZERO, ONE),
        (driven(1.0, 0.8, 1.3), ZERO, ONE),
        (driven(0.3, 1.5, 0.4), StateVector.normalized([1, 0.5j]), StateVector.normalized([0.2, 1])),
    ]
    for h, a, b in cases:
        rep = envelope_report(evolve(h, a, 6.0, 2048, b), h)
        assert rep.violations == [] and rep.rate.passed, h.tag


def test_envelope_ode_consistency():
    h = random_smooth(8)
    a, b = random_pair(8, 2)
    # centred-difference truncation is O(dt^2); dt ~ 5e-4 keeps it near 1e-6
    tr = evolve(h, a, 4.0, 8192, b)
    lo, hi = envelopes(tr.theta0, tr.action)
    dt = tr.dt
    half = tr.theta0 / 2
    inner = slice(1, -1)
    dh = tr.delta_h[inner]
    a_mid = tr.action[inner]
    for env, sign, live in ((hi, 1.0, half - a_mid > 1e-3), (lo, -1.0, half + a_mid < math.pi / 2 - 1e-3)):
        fd = (env[2:] - env[:-2]) / (2 * dt)
        rhs = sign * 2 * dh * np.sqrt(np.maximum(env[inner] - env[inner] ** 2, 0))
        assert np.count_nonzero(live) >= 1024
        assert np.max(np.abs(fd - rhs)[live]) <= 2e-6
