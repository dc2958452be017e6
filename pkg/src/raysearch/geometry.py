"""Gauge-invariant distances and angles between rays, plus step-count formulas.

Distances are returned as ``d`` (never ``d**2``).  Overlap magnitudes are
clamped into [0, 1] before any inverse trig call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corevec import StateVector, inner_product

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class StepEstimate:
    steps: float
    formula: str
    divergent: bool = False

    def __float__(self) -> float:
        return self.steps


def overlap_magnitude(value: float) -> float:
    """Clamp ``|<a|b>|`` into [0, 1]; values outside by more than round-off are errors."""
    v = float(value)
    if v < -CLAMP_TOL or v > 1.0 + CLAMP_TOL:
        raise ValueError(f"overlap magnitude {v!r} outside [0, 1]")
    return min(max(v, 0.0), 1.0)


def _overlap(a: StateVector, b: StateVector) -> float:
    return min(abs(inner_product(a, b)), 1.0)


def fs_distance(a: StateVector, b: StateVector) -> float:
    """Fubini-Study distance ``2 sqrt(1 - |<a|b>|^2)``, in [0, 2]."""
    ov = _overlap(a, b)
    return 2.0 * math.sqrt(max(0.0, 1.0 - ov * ov))


def bargmann_angle(a: StateVector, b: StateVector) -> float:
    """Angle ``theta`` in [0, pi] with ``|<a|b>| = cos(theta/2)``."""
    return 2.0 * math.acos(_overlap(a, b))


def fs_from_overlap(ov: np.ndarray | float) -> np.ndarray | float:
    ov = np.clip(ov, 0.0, 1.0)
    return 2.0 * np.sqrt(np.maximum(0.0, 1.0 - ov * ov))


def bargmann_from_overlap(ov: np.ndarray | float) -> np.ndarray | float:
    return 2.0 * np.arccos(np.clip(ov, 0.0, 1.0))


def _check_p(p: float) -> float:
    if not 0.0 < p <= 1.0:
        raise ValueError(f"exponent p must lie in (0, 1], got {p!r}")
    return float(p)


def grover_steps_eq2(u: float) -> StepEstimate:
    """Steps of the composite operator: ``(1/2) sqrt(1/u^2 - 1)``."""
    u = overlap_magnitude(u)
    if u == 0.0:
        return StepEstimate(math.inf, "eq2", divergent=True)
    return StepEstimate(0.5 * math.sqrt(max(0.0, 1.0 / (u * u) - 1.0)), "eq2")


def v_steps_eq5(u: float, p: float) -> StepEstimate:
    """Distance-ratio count for the controlled rotation: ``sqrt(1 - u^2) / u^p``."""
    u, p = overlap_magnitude(u), _check_p(p)
    if u == 0.0:
        return StepEstimate(math.inf, "eq5", divergent=True)
    return StepEstimate(math.sqrt(max(0.0, 1.0 - u * u)) / u ** p, "eq5")


def v_steps_eq7(u: float, p: float) -> StepEstimate:
    """Angle-ratio count: ``arccos(u) / arcsin(u^p)``."""
    u, p = overlap_magnitude(u), _check_p(p)
    if u == 0.0:
        return StepEstimate(math.inf, "eq7", divergent=True)
    if u == 1.0:
        return StepEstimate(0.0, "eq7")
    return StepEstimate(math.acos(u) / math.asin(u ** p), "eq7")


def one_step_displacement(u: float) -> tuple[float, float]:
    """Fubini-Study distance moved by one application of Q from the initial state.

    Returns ``(claimed, exact)``: ``4u`` as printed alongside the operator,
    and ``4u sqrt(1 - u^2)``, which follows from ``<psi_i|Q psi_i> = 1 - 2u^2``.
    The exact overlap is real for any phase of the transition amplitude.
    """
    u = overlap_magnitude(u)
    return 4.0 * u, 4.0 * u * math.sqrt(max(0.0, 1.0 - u * u))
