"""Search by repeated application of a single controlled rotation V.

``V = exp[-i (alpha/2) (|psi_f'><psi_i| + |psi_i><psi_f'|)]`` with
``alpha = 2 arcsin(|U_if|^p)``, built once from the initial frame and
reapplied unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .corevec import SubspaceFrame, TwoPlaneRotation, expm_hermitian, make_frame
from .geometry import v_steps_eq7
from .grover import (
    DEFAULT_THRESHOLD,
    NO_COUPLING_TOL,
    IterationTrace,
    NoCouplingError,
    SearchSpec,
    iterate_in_plane,
    run_grover,
)


@dataclass(frozen=True, eq=False)
class VOperator:
    frame: SubspaceFrame
    alpha: float
    p: float
    embedded: TwoPlaneRotation

    @property
    def block(self) -> np.ndarray:
        return self.embedded.block


def cross_generator(frame: SubspaceFrame) -> np.ndarray:
    """``|f'><i| + |i><f'|`` in frame coordinates (e0 = psi_i)."""
    f = np.array([frame.overlap_c, frame.sine], dtype=np.complex128)
    i = np.array([1.0, 0.0], dtype=np.complex128)
    return np.outer(f, i.conj()) + np.outer(i, f.conj())


def build_v(spec: SearchSpec, overlap: float | None = None) -> VOperator:
    """Construct V for ``spec``.

    ``overlap`` overrides ``|U_if|`` in the rotation angle only; it is how the
    orthogonal test geometry (``<psi_i|psi_f'> = 0``) gets a nonzero angle.
    """
    u = spec.u_abs if overlap is None else float(overlap)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {u!r}")
    if u < NO_COUPLING_TOL:
        raise NoCouplingError("|U_if| = 0: rotation angle vanishes")
    frame = make_frame(spec.initial, spec.psi_f_prime)
    alpha = 2.0 * math.asin(min(u ** spec.p, 1.0))
    block = expm_hermitian(cross_generator(frame), alpha)
    return VOperator(frame, alpha, spec.p, TwoPlaneRotation(frame, block))


def run_vsearch(spec: SearchSpec, max_steps: int = 10_000,
                stop_threshold: float = DEFAULT_THRESHOLD,
                overlap: float | None = None) -> IterationTrace:
    """Iterate the fixed V from ``psi_i``, tracing geometry every step."""
    v = build_v(spec, overlap)
    return iterate_in_plane(spec, v.frame, 1.0, v.block, max_steps, stop_threshold, "vsearch")


def eq7_step_budget(u: float, p: float) -> int:
    """Whole number of V applications suggested by the angle-ratio formula."""
    est = v_steps_eq7(u, p)
    if est.divergent:
        raise NoCouplingError("angle-ratio estimate diverges at |U_if| = 0")
    # 1e-9 guards ratios that are integers in exact arithmetic
    return max(1, math.ceil(est.steps - 1e-9))


def first_passage(spec: SearchSpec, threshold: float = DEFAULT_THRESHOLD,
                  max_steps: int = 100_000, engine: str = "vsearch") -> int:
    run = run_vsearch if engine == "vsearch" else run_grover
    trace = run(spec, max_steps, threshold)
    if trace.first_passage is None:
        raise RuntimeError(f"threshold {threshold} not reached within {max_steps} steps")
    return trace.first_passage


def loglog_slope(dims: Iterable[float], steps: Iterable[float]) -> float:
    x = np.log(np.asarray(list(dims), dtype=float))
    y = np.log(np.asarray(list(steps), dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def scaling_fit(n_range: Iterable[int], p: float, threshold: float = DEFAULT_THRESHOLD,
                target: int = 0, engine: str = "vsearch") -> float:
    """Least-squares slope of log(first-passage) against log(N), exhaustive setup."""
    ns = list(n_range)
    if len(ns) < 3:
        raise ValueError(f"scaling fit needs at least 3 register sizes, got {len(ns)}")
    if min(ns) < 2 or max(ns) > 12:
        raise ValueError("register sizes must lie in [2, 12]")
    steps = [first_passage(SearchSpec.exhaustive(n, target, p), threshold, engine=engine)
             for n in ns]
    return loglog_slope([2.0 ** n for n in ns], steps)
