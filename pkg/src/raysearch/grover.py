"""Generalised Grover iteration with per-step geometric tracing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .corevec import (
    Composition,
    Scalar,
    SelectiveInversion,
    StateVector,
    SubspaceFrame,
    UnitaryOp,
    WalshHadamard,
    apply,
    haar_random_unitary,
    inner_product,
    make_frame,
)
from .geometry import bargmann_from_overlap, fs_from_overlap

NO_COUPLING_TOL = 1e-14
SLIPPAGE_TOL = 1e-9
DEFAULT_THRESHOLD = 0.5


class NoCouplingError(ValueError):
    """``|U_if| = 0``: the search operator never leaves the initial ray."""


@dataclass(frozen=True, eq=False)
class SearchSpec:
    """One search instance.

    ``initial`` defaults to ``|0>``; ``prep`` is the unitary ``U`` whose
    inverse pulls the target basis state back to ``psi_f'``.
    """

    n_qubits: int
    target: int
    prep: UnitaryOp = field(default_factory=WalshHadamard)
    initial: StateVector | None = None
    p: float = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if not 0 <= self.target < 2 ** self.n_qubits:
            raise ValueError(f"target {self.target} out of range for {self.n_qubits} qubits")
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")
        if self.initial is None:
            object.__setattr__(self, "initial", StateVector.basis(self.n_qubits, 0))
        elif self.initial.dim != 2 ** self.n_qubits:
            raise ValueError("initial state dimension does not match n_qubits")

    @classmethod
    def exhaustive(cls, n_qubits: int, target: int, p: float = 1.0) -> "SearchSpec":
        return cls(n_qubits, target, WalshHadamard(), None, p)

    @classmethod
    def haar(cls, n_qubits: int, target: int, seed: int, p: float = 1.0) -> "SearchSpec":
        return cls(n_qubits, target, haar_random_unitary(2 ** n_qubits, seed), None, p)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @cached_property
    def psi_f(self) -> StateVector:
        return StateVector.basis(self.n_qubits, self.target)

    @cached_property
    def psi_f_prime(self) -> StateVector:
        return apply(self.prep.inverse(), self.psi_f)

    @cached_property
    def u_if(self) -> complex:
        """Transition amplitude ``<psi_f|U|psi_i>`` (equals ``<psi_f'|psi_i>``)."""
        return inner_product(self.psi_f, apply(self.prep, self.initial))

    @property
    def u_abs(self) -> float:
        return min(abs(self.u_if), 1.0)


@dataclass(frozen=True, eq=False)
class IterationTrace:
    """Per-step record of a search run; row ``s`` describes the state after ``s`` steps."""

    overlap_with_target: np.ndarray
    overlap_with_initial: np.ndarray
    norms: np.ndarray
    final_state: StateVector
    threshold: float
    reached: bool
    elapsed_s: float = 0.0
    label: str = "grover"

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.overlap_with_target))

    @property
    def n_steps(self) -> int:
        return len(self.overlap_with_target) - 1

    @property
    def success_prob(self) -> np.ndarray:
        return np.clip(self.overlap_with_target ** 2, 0.0, 1.0)

    @property
    def fs_from_initial(self) -> np.ndarray:
        return fs_from_overlap(self.overlap_with_initial)

    @property
    def bargmann_from_initial(self) -> np.ndarray:
        return bargmann_from_overlap(self.overlap_with_initial)

    @property
    def first_passage(self) -> int | None:
        hits = np.nonzero(self.success_prob >= self.threshold)[0]
        return int(hits[0]) if hits.size else None

    def rows(self):
        """Yield ``(step, overlap, success_prob, fs_from_initial, bargmann_from_initial)``."""
        fs, ba, sp = self.fs_from_initial, self.bargmann_from_initial, self.success_prob
        for s in range(len(sp)):
            yield s, float(self.overlap_with_target[s]), float(sp[s]), float(fs[s]), float(ba[s])


def build_q(spec: SearchSpec) -> Composition:
    """``Q = -I_i U^-1 I_f U`` as an explicit operator product."""
    u = spec.prep
    return Composition((
        Scalar(-1.0),
        SelectiveInversion(spec.initial),
        u.inverse(),
        SelectiveInversion(spec.psi_f),
        u,
    ))


def q_plane_block(frame: SubspaceFrame) -> np.ndarray:
    """Restriction of ``-I_i I_f'`` to the frame, in (e0, e1) coordinates."""
    c, s = frame.overlap_c, frame.sine
    f = np.array([c, s], dtype=np.complex128)
    r_i = np.diag([-1.0, 1.0]).astype(np.complex128)
    r_f = np.eye(2, dtype=np.complex128) - 2.0 * np.outer(f, f.conj())
    return -(r_i @ r_f)


def iterate_in_plane(spec: SearchSpec, frame: SubspaceFrame, scale: complex,
                     block: np.ndarray, max_steps: int, threshold: float,
                     label: str) -> IterationTrace:
    """Drive ``v <- scale*v + E (block - scale) E^H v`` from ``psi_i`` on the full register."""
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if threshold <= 0.0:
        raise ValueError(f"stop_threshold must be positive, got {threshold!r}")
    m = np.ascontiguousarray(block - scale * np.eye(2), dtype=np.complex128)
    start = time.perf_counter()
    v, ov_i, ov_t, norms = _kernels.plane_iterate(
        np.ascontiguousarray(spec.initial.amplitudes),
        np.ascontiguousarray(frame.e0.amplitudes),
        np.ascontiguousarray(frame.e1.amplitudes),
        complex(scale), m, complex(frame.overlap_c), float(frame.sine),
        int(max_steps), float(threshold),
    )
    elapsed = time.perf_counter() - start
    ov_t = np.minimum(np.abs(ov_t), 1.0)
    return IterationTrace(
        overlap_with_target=ov_t,
        overlap_with_initial=np.minimum(np.abs(ov_i), 1.0),
        norms=norms,
        final_state=StateVector(v),
        threshold=threshold,
        reached=bool(ov_t[-1] ** 2 >= threshold),
        elapsed_s=elapsed,
        label=label,
    )


def _trivial_trace(spec: SearchSpec, threshold: float, label: str) -> IterationTrace:
    ov = np.array([spec.u_abs])
    return IterationTrace(ov, np.ones(1), np.ones(1), spec.initial, threshold,
                          bool(ov[0] ** 2 >= threshold), 0.0, label)


def run_grover(spec: SearchSpec, max_steps: int = 10_000,
               stop_threshold: float = DEFAULT_THRESHOLD) -> IterationTrace:
    """Apply Q repeatedly from ``psi_i`` until the success probability reaches the threshold.

    Thresholds above 1 are never reached; the run then lasts ``max_steps``.
    """
    if spec.u_abs < NO_COUPLING_TOL:
        raise NoCouplingError("|U_if| = 0: Q leaves the initial ray fixed")
    if spec.u_abs >= 1.0 - 1e-12:
        return _trivial_trace(spec, stop_threshold, "grover")
    frame = make_frame(spec.initial, spec.psi_f_prime)
    return iterate_in_plane(spec, frame, -1.0, q_plane_block(frame),
                            max_steps, stop_threshold, "grover")


def success_probability(state: StateVector, spec: SearchSpec) -> float:
    """``|<psi_f'|state>|^2``: probability of hitting the target after one final U."""
    return min(abs(inner_product(spec.psi_f_prime, state)) ** 2, 1.0)


def detect_slippage(trace: IterationTrace, tol: float = SLIPPAGE_TOL) -> int | None:
    """First step ``s >= 1`` at which the state is back on the initial ray, if any."""
    if not 0.0 < tol <= 1e-6:
        raise ValueError(f"tol must lie in (0, 1e-6], got {tol!r}")
    hits = np.nonzero(trace.overlap_with_initial[1:] >= 1.0 - tol)[0]
    return int(hits[0]) + 1 if hits.size else None
