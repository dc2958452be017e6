"""Time-dependent evolution and speed-limit envelopes on transition probabilities.

Units: hbar = 1, so times are in inverse energy units.  Throughout,
``P(t) = |<psi_f|psi(t)>|^2`` against a fixed target and
``A(t) = int_0^t dH(s) ds`` is the action of the energy spread of ``H``
in the target state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .corevec import StateVector

HERMITIAN_TOL = 1e-12
RENORM_TOL = 1e-12
FAIL_TOL = 1e-6
RATE_TOL = 1e-7
SANDWICH_TOL = 1e-9
MIN_STEPS = 16
TABULATE_BUDGET = 1 << 24  # complex entries kept for the half-step H table

PRINTED_ORIENTATION_NOTE = (
    "printed form pairs the upper bound with theta0/2 + A and the lower bound "
    "with theta0/2 - A; since cos decreases on [0, pi/2] that pairing is "
    "reversed here: P_plus = cos^2(max(0, theta0/2 - A)), "
    "P_minus = cos^2(min(pi/2, theta0/2 + A))"
)


class IntegrationError(RuntimeError):
    """Norm drift beyond ``FAIL_TOL`` in one step: the grid is too coarse."""


class SandwichGridError(ValueError):
    """Trace and envelope report were computed on different time grids."""


# --------------------------------------------------------------------------
# Hamiltonians
# --------------------------------------------------------------------------

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A Hermitian-matrix-valued function of time.

    ``tabulate`` (vectorised over times) and ``action`` (matrix-free
    ``H(t) psi``) are optional fast paths; ``matrix`` is always available.
    """

    dim: int
    matrix: Callable[[float], np.ndarray]
    tag: str
    params: dict = field(default_factory=dict)
    tabulate: Callable[[np.ndarray], np.ndarray] | None = None
    action: Callable[[float, np.ndarray], np.ndarray] | None = None
    static: bool = False

    def __call__(self, t: float) -> np.ndarray:
        return self.matrix(t)

    def matrices(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.tabulate is not None:
            return self.tabulate(times)
        return np.stack([self.matrix(float(t)) for t in times])

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        if self.action is not None:
            return self.action(t, psi)
        return self.matrix(t) @ psi


def _static(dim, h, tag, params, action=None) -> HamiltonianSpec:
    h = np.array(h, dtype=np.complex128)
    h.setflags(write=False)
    return HamiltonianSpec(
        dim, lambda t: h, tag, params,
        tabulate=lambda ts: np.broadcast_to(h, (len(ts), dim, dim)),
        action=action, static=True,
    )


def constant_rabi(omega: float) -> HamiltonianSpec:
    """``(omega/2) sigma_x``: resonant two-level drive."""
    return _static(2, 0.5 * omega * SX, "constant_rabi", {"omega": omega})


def detuned_rabi(omega: float, delta: float) -> HamiltonianSpec:
    return _static(2, 0.5 * omega * SX + 0.5 * delta * SZ, "detuned_rabi",
                   {"omega": omega, "delta": delta})


def driven(a: float, b: float, omega: float) -> HamiltonianSpec:
    """``(a/2) sigma_z + b cos(omega t) sigma_x``."""
    def tab(ts):
        return 0.5 * a * SZ[None] + (b * np.cos(omega * ts))[:, None, None] * SX[None]

    return HamiltonianSpec(2, lambda t: tab(np.array([t]))[0], "driven",
                           {"a": a, "b": b, "omega": omega}, tabulate=tab)


def _gue(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (z + z.conj().T) / (2.0 * math.sqrt(dim))


def random_smooth(seed: int, dim: int = 2, n_terms: int = 3, omega: float = 1.0,
                  scale: float = 1.0) -> HamiltonianSpec:
    """``H0 + sum_k (A_k cos k w t + B_k sin k w t)`` with seeded Gaussian Hermitian terms.

    The k-th harmonic is damped by 1/k so the drive stays smooth.
    """
    rng = np.random.default_rng(seed)
    h0 = scale * _gue(rng, dim)
    a = np.stack([scale * _gue(rng, dim) / k for k in range(1, n_terms + 1)])
    b = np.stack([scale * _gue(rng, dim) / k for k in range(1, n_terms + 1)])
    ks = np.arange(1, n_terms + 1)

    def tab(ts):
        arg = omega * np.outer(ts, ks)
        return (h0[None] + np.einsum("tk,kij->tij", np.cos(arg), a)
                + np.einsum("tk,kij->tij", np.sin(arg), b))

    return HamiltonianSpec(dim, lambda t: tab(np.array([t]))[0], "random_smooth",
                           {"seed": seed, "dim": dim, "n_terms": n_terms,
                            "omega": omega, "scale": scale}, tabulate=tab)


def farhi_gutmann(energy: float, psi_i: StateVector, psi_f: StateVector) -> HamiltonianSpec:
    """``E (|psi_f><psi_f| + |psi_i><psi_i|)``, applied matrix-free."""
    i = psi_i.amplitudes
    f = psi_f.amplitudes

    def action(t, psi):
        return energy * (f * np.vdot(f, psi) + i * np.vdot(i, psi))

    def matrix(t):
        return energy * (np.outer(f, f.conj()) + np.outer(i, i.conj()))

    return HamiltonianSpec(psi_i.dim, matrix, "farhi_gutmann", {"energy": energy},
                           tabulate=None, action=action, static=True)


# --------------------------------------------------------------------------
# Energy spread
# --------------------------------------------------------------------------

def _variance_to_spread(var: np.ndarray | float) -> np.ndarray | float:
    v = np.asarray(var, dtype=float)
    if np.any(v < -1e-12):
        raise FloatingPointError(f"negative energy variance {v.min():.3e}")
    out = np.sqrt(np.maximum(v, 0.0))
    return float(out) if out.ndim == 0 else out


def delta_h(h_at_t: np.ndarray, reference: StateVector | np.ndarray) -> float:
    """Standard deviation of ``H`` in ``reference``: ``sqrt(<H^2> - <H>^2)``."""
    h = np.asarray(h_at_t, dtype=np.complex128)
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
        raise ValueError("Hamiltonian is not Hermitian")
    r = reference.amplitudes if isinstance(reference, StateVector) else np.asarray(reference)
    hr = h @ r
    mean = np.vdot(r, hr).real
    return _variance_to_spread(np.vdot(hr, hr).real - mean * mean)


def _spread_from_action(hr: np.ndarray, r: np.ndarray) -> float:
    mean = np.vdot(r, hr).real
    return _variance_to_spread(np.vdot(hr, hr).real - mean * mean)


def _spread_tabulated(hs: np.ndarray, r: np.ndarray) -> np.ndarray:
    hr = hs @ r
    mean = np.einsum("i,ti->t", r.conj(), hr).real
    sq = np.einsum("ti,ti->t", hr.conj(), hr).real
    return _variance_to_spread(sq - mean * mean)


# --------------------------------------------------------------------------
# Evolution
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray
    target: np.ndarray
    prob: np.ndarray
    delta_h: np.ndarray
    action: np.ndarray
    drift: np.ndarray
    renormalizations: int
    delta_h_state: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def theta0(self) -> float:
        return 2.0 * math.acos(min(math.sqrt(max(self.prob[0], 0.0)), 1.0))


def _half_grid(t_end: float, n_steps: int) -> np.ndarray:
    return np.linspace(0.0, t_end, 2 * n_steps + 1)


def _check_hermitian(hs: np.ndarray) -> None:
    err = np.max(np.abs(hs - np.conj(np.swapaxes(hs, -1, -2))))
    if err > HERMITIAN_TOL:
        raise ValueError(f"Hamiltonian evaluator is not Hermitian (max error {err:.3e})")


def _rk4_callable(h: HamiltonianSpec, psi0: np.ndarray, half_times: np.ndarray, dt: float):
    n_steps = (len(half_times) - 1) // 2
    states = np.empty((n_steps + 1, psi0.shape[0]), dtype=np.complex128)
    drift = np.zeros(n_steps + 1)
    psi = psi0.copy()
    states[0] = psi
    for k in range(n_steps):
        t0, tm, t1 = half_times[2 * k], half_times[2 * k + 1], half_times[2 * k + 2]
        k1 = -1j * h.apply(t0, psi)
        k2 = -1j * h.apply(tm, psi + 0.5 * dt * k1)
        k3 = -1j * h.apply(tm, psi + 0.5 * dt * k2)
        k4 = -1j * h.apply(t1, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = math.sqrt(np.vdot(psi, psi).real)
        drift[k + 1] = abs(nrm - 1.0)
        if drift[k + 1] > FAIL_TOL:
            return states[:k + 1], drift[:k + 2], False
        if drift[k + 1] > RENORM_TOL:
            psi = psi / nrm
        states[k + 1] = psi
    return states, drift, True


def evolve(h: HamiltonianSpec, psi0: StateVector, t_end: float, n_steps: int,
           target: StateVector, state_spread: bool = False) -> EvolutionTrace:
    """Integrate ``i dpsi/dt = H(t) psi`` with classical RK4 on a uniform grid.

    The two middle stages use ``H`` at the step midpoint.  The norm is
    restored whenever it drifts by more than 1e-12 in a step; a drift beyond
    1e-6 raises :class:`IntegrationError`.  ``state_spread`` additionally
    records the energy spread in the evolving state.
    """
    if n_steps < MIN_STEPS:
        raise ValueError(f"n_steps must be >= {MIN_STEPS}, got {n_steps}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end!r}")
    if psi0.dim != h.dim or target.dim != h.dim:
        raise ValueError("state and Hamiltonian dimensions differ")
    half = _half_grid(t_end, n_steps)
    dt = t_end / n_steps
    r = target.amplitudes
    psi = np.ascontiguousarray(psi0.amplitudes)

    tabulated = h.action is None and h.dim * h.dim * len(half) <= TABULATE_BUDGET
    if tabulated:
        hs = np.ascontiguousarray(h.matrices(half), dtype=np.complex128)
        _check_hermitian(hs)
        states, drift, ok = _kernels.rk4_tabulated(psi, hs, dt, RENORM_TOL, FAIL_TOL)
        spread_half = _spread_tabulated(hs, r)
    else:
        probe = [0.0] if h.static else [0.0, 0.5 * t_end, t_end]
        _check_hermitian(np.stack([h.matrix(t) for t in probe]))
        states, drift, ok = _rk4_callable(h, psi, half, dt)
        if h.static:
            spread_half = np.full(len(half), _spread_from_action(h.apply(0.0, r), r))
        else:
            spread_half = np.array([_spread_from_action(h.apply(t, r), r) for t in half])
    if not ok:
        k = int(np.argmax(drift > FAIL_TOL))
        raise IntegrationError(
            f"norm drift {drift[k]:.3e} at step {k} exceeds {FAIL_TOL:g}; increase n_steps"
        )

    times = half[::2]
    amp = states @ r.conj()
    prob = np.clip(np.abs(amp) ** 2, 0.0, 1.0)
    spread = spread_half[::2]
    # Simpson per step on (t_k, t_k + dt/2, t_{k+1}): the integrator's own nodes
    pieces = (dt / 6.0) * (spread_half[0:-1:2] + 4.0 * spread_half[1::2] + spread_half[2::2])
    action = np.concatenate([[0.0], np.cumsum(pieces)])

    spread_state = None
    if state_spread:
        if tabulated:
            hk = hs[::2]
            hpsi = np.einsum("tij,tj->ti", hk, states)
        else:
            hpsi = np.stack([h.apply(t, s) for t, s in zip(times, states)])
        mean = np.einsum("ti,ti->t", states.conj(), hpsi).real
        sq = np.einsum("ti,ti->t", hpsi.conj(), hpsi).real
        spread_state = _variance_to_spread(sq - mean * mean)

    return EvolutionTrace(times, states, np.array(r), prob, spread, action, drift,
                          int(np.count_nonzero(drift > RENORM_TOL)), spread_state)


# --------------------------------------------------------------------------
# Rate inequality
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RateReport:
    times: np.ndarray          # interior grid points
    rate: np.ndarray           # 2 Im(<psi|f><f|H|psi>)
    rate_fd: np.ndarray        # centred finite difference of P
    bound: np.ndarray          # 2 dH sqrt(P - P^2)
    violations: list
    tol: float

    @property
    def max_fd_gap(self) -> float:
        return float(np.max(np.abs(self.rate - self.rate_fd)))

    @property
    def max_excess(self) -> float:
        return float(np.max(np.abs(self.rate) - self.bound))

    @property
    def passed(self) -> bool:
        return not self.violations


def transition_rate_check(trace: EvolutionTrace, h: HamiltonianSpec,
                          tol: float = RATE_TOL) -> RateReport:
    """Compare ``|dP/dt|`` against ``2 dH sqrt(P - P^2)`` at every interior grid point.

    The commutator expression ``-i <f|[H, rho]|f>`` is the one tested; the
    centred difference is reported alongside as an independent cross-check.
    """
    if len(trace.times) < 3:
        raise ValueError("need at least 3 grid points for a centred difference")
    f = trace.target
    idx = np.arange(1, len(trace.times) - 1)
    psis = trace.states[idx]
    if h.action is None and h.dim * h.dim * len(idx) <= TABULATE_BUDGET:
        hpsi = np.einsum("tij,tj->ti", h.matrices(trace.times[idx]), psis)
    else:
        hpsi = np.stack([h.apply(float(trace.times[k]), trace.states[k]) for k in idx])
    rates = 2.0 * ((psis.conj() @ f) * (hpsi @ f.conj())).imag
    fd = (trace.prob[2:] - trace.prob[:-2]) / (2.0 * trace.dt)
    p = trace.prob[idx]
    bound = 2.0 * trace.delta_h[idx] * np.sqrt(np.maximum(p - p * p, 0.0))
    bad = np.nonzero(np.abs(rates) > bound + tol)[0]
    violations = [(int(idx[j]), float(trace.times[idx[j]]), float(rates[j]), float(bound[j]))
                  for j in bad]
    return RateReport(trace.times[idx], rates, fd, bound, violations, tol)


# --------------------------------------------------------------------------
# Envelopes and step bounds
# --------------------------------------------------------------------------

def _check_theta(theta0: float) -> float:
    if not 0.0 <= theta0 <= math.pi + 1e-12:
        raise ValueError(f"theta0 must lie in [0, pi], got {theta0!r}")
    return min(float(theta0), math.pi)


def envelopes(theta0: float, action, orientation: str = "consistent"):
    """Return ``(P_minus, P_plus)`` for the given action profile.

    ``orientation="printed"`` swaps the arguments to the pairing as
    typeset (upper bound with ``theta0/2 + A``); it exists so that pairing
    can be tested and shown to fail.
    """
    theta0 = _check_theta(theta0)
    a = np.asarray(action, dtype=float)
    if a.size and abs(a.flat[0]) > 1e-15:
        raise ValueError("action must start at 0")
    if np.any(np.diff(a) < -1e-15):
        raise ValueError("action must be nondecreasing")
    half = 0.5 * theta0
    fast = np.cos(np.minimum(0.5 * math.pi, half + a)) ** 2
    slow = np.cos(np.maximum(0.0, half - a)) ** 2
    if orientation == "consistent":
        return fast, slow
    if orientation == "printed":
        return np.cos(half - a) ** 2, np.cos(half + a) ** 2
    raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class StepBounds:
    s_min: float
    s_max: float
    divergent: bool
    p: float


def step_bounds(theta0: float, action_total: float, p: float = 1.0) -> StepBounds:
    """``sec^p`` of the clamped envelope arguments; ``s_max`` diverges at pi/2."""
    theta0 = _check_theta(theta0)
    if action_total < 0:
        raise ValueError(f"action must be nonnegative, got {action_total!r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    half = 0.5 * theta0
    lo = max(0.0, half - action_total)
    hi = half + action_total
    s_min = (1.0 / math.cos(lo)) ** p if lo < 0.5 * math.pi - 1e-12 else math.inf
    if hi >= 0.5 * math.pi - 1e-12:
        return StepBounds(s_min, math.inf, True, p)
    return StepBounds(s_min, (1.0 / math.cos(hi)) ** p, False, p)


@dataclass(frozen=True, eq=False)
class EnvelopeReport:
    theta0: float
    times: np.ndarray
    prob: np.ndarray
    p_minus: np.ndarray
    p_plus: np.ndarray
    rate: RateReport | None
    bounds: StepBounds
    violations: list
    orientation: str
    orientation_note: str = PRINTED_ORIENTATION_NOTE

    @property
    def saturation_gap(self) -> float:
        return float(np.max(np.abs(self.prob - self.p_plus)))


def verify_sandwich(trace: EvolutionTrace, report: "EnvelopeReport",
                    tol: float = SANDWICH_TOL) -> list:
    """Grid points where ``P`` escapes ``[P_minus - tol, P_plus + tol]``."""
    if len(trace.times) != len(report.times) or not np.array_equal(trace.times, report.times):
        raise SandwichGridError("trace and report grids differ")
    p = trace.prob
    bad = np.nonzero((p < report.p_minus - tol) | (p > report.p_plus + tol))[0]
    return [(int(k), float(trace.times[k]), float(p[k]),
             float(report.p_minus[k]), float(report.p_plus[k])) for k in bad]


def envelope_report(trace: EvolutionTrace, h: HamiltonianSpec | None = None, p: float = 1.0,
                    tol: float = SANDWICH_TOL, orientation: str = "consistent") -> EnvelopeReport:
    """Envelopes, rate check (when ``h`` is given), step bounds and sandwich violations."""
    theta0 = trace.theta0
    p_minus, p_plus = envelopes(theta0, trace.action, orientation)
    rate = transition_rate_check(trace, h) if h is not None else None
    bounds = step_bounds(theta0, float(trace.action[-1]), p)
    report = EnvelopeReport(theta0, trace.times, trace.prob, p_minus, p_plus, rate,
                            bounds, [], orientation)
    report.violations.extend(verify_sandwich(trace, report, tol))
    return report


def random_pair(seed: int, dim: int) -> tuple[StateVector, StateVector]:
    """Seeded (initial, target) pair of Gaussian random states."""
    rng = np.random.default_rng([seed, dim, 0x5eed])

    def draw():
        return StateVector.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))

    return draw(), draw()
