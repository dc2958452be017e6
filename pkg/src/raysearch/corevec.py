"""State vectors, unitary operators and the two-dimensional search frame.

Everything here is immutable after construction.  Amplitude arrays are
stored with ``writeable=False`` so a state can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12
SAME_RAY_TOL = 1e-12


class DimensionError(ValueError):
    """Operands live in spaces of different dimension."""


class DegenerateFrameError(ValueError):
    """The two states spanning a frame are the same ray."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalised amplitude vector of an ``n_qubits`` register."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes)
        if amps.ndim != 1:
            raise ValueError(f"amplitudes must be 1-D, got shape {amps.shape}")
        n = amps.shape[0]
        if n < 2 or n & (n - 1):
            raise ValueError(f"length must be 2**n with n >= 1, got {n}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        dim = 2 ** n_qubits
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def uniform(cls, n_qubits: int) -> "StateVector":
        dim = 2 ** n_qubits
        return cls(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))

    @classmethod
    def normalized(cls, amps: Sequence[complex] | np.ndarray) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128)
        return cls(amps / np.linalg.norm(amps))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


def _as_array(v: StateVector | np.ndarray) -> np.ndarray:
    return v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=np.complex128)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return ``<a|b>`` (conjugate-linear in the first argument)."""
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return complex(np.vdot(x, y))


# --------------------------------------------------------------------------
# Unitary operators
# --------------------------------------------------------------------------

class UnitaryOp:
    """Base class.  Subclasses implement ``_act`` on raw amplitude arrays."""

    dim: int | None = None

    def _act(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "UnitaryOp":
        raise NotImplementedError

    def matrix(self, dim: int | None = None) -> np.ndarray:
        """Dense matrix, built column by column.  Meant for tests and small N."""
        dim = dim or self.dim
        if dim is None:
            raise ValueError("dimension-free operator needs an explicit dim")
        eye = np.eye(dim, dtype=np.complex128)
        return np.stack([self._act(eye[:, j]) for j in range(dim)], axis=1)

    def __matmul__(self, other: "UnitaryOp") -> "Composition":
        return Composition((self, other))


def apply(u: UnitaryOp, v: StateVector) -> StateVector:
    """Apply ``u`` to ``v``; the result is validated as a normalised state."""
    x = _as_array(v)
    if u.dim is not None and u.dim != x.shape[0]:
        raise DimensionError(f"operator acts on dim {u.dim}, state has dim {x.shape[0]}")
    return StateVector(u._act(x))


@dataclass(frozen=True, eq=False)
class Dense(UnitaryOp):
    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"dense unitary must be square, got {m.shape}")
        err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max |U^H U - I| = {err:.3e})")
        object.__setattr__(self, "mat", _frozen(m))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def _act(self, x):
        return self.mat @ x

    def inverse(self):
        return Dense(self.mat.conj().T)

    def matrix(self, dim=None):
        return np.array(self.mat)


@dataclass(frozen=True)
class WalshHadamard(UnitaryOp):
    """``H^{(x)n}``, applied by the O(N log N) butterfly."""

    def _act(self, x):
        return _kernels.fwht(x) / np.sqrt(x.shape[0])

    def inverse(self):
        return self


@dataclass(frozen=True, eq=False)
class SelectiveInversion(UnitaryOp):
    """``1 - 2|phi><phi|``: flips the sign of the component along ``phi``."""

    ray: StateVector

    @property
    def dim(self) -> int:
        return self.ray.dim

    def _act(self, x):
        phi = self.ray.amplitudes
        return x - 2.0 * np.vdot(phi, x) * phi

    def inverse(self):
        return self


@dataclass(frozen=True, eq=False)
class Scalar(UnitaryOp):
    phase: complex

    def __post_init__(self):
        if abs(abs(self.phase) - 1.0) > UNITARY_TOL:
            raise ValueError(f"scalar {self.phase!r} is not unit modulus")

    def _act(self, x):
        return self.phase * x

    def inverse(self):
        return Scalar(np.conj(self.phase))


@dataclass(frozen=True, eq=False)
class Composition(UnitaryOp):
    """Ordered product; ``ops[0]`` is leftmost, so ``ops[-1]`` acts first."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(self.ops)
        dims = {op.dim for op in ops if op.dim is not None}
        if len(dims) > 1:
            raise DimensionError(f"composition mixes dimensions {sorted(dims)}")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self):
        for op in self.ops:
            if op.dim is not None:
                return op.dim
        return None

    def _act(self, x):
        for op in reversed(self.ops):
            x = op._act(x)
        return x

    def inverse(self):
        return Composition(tuple(op.inverse() for op in reversed(self.ops)))


# --------------------------------------------------------------------------
# Frame and plane rotations
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SubspaceFrame:
    """Orthonormal basis ``(e0, e1)`` of span{psi_i, psi_f'} with ``e0 = psi_i``.

    ``overlap_c`` is ``<psi_i|psi_f'>``; the e1 leg is phased so that
    ``psi_f' = c e0 + sqrt(1 - |c|^2) e1``.
    """

    e0: StateVector
    e1: StateVector
    overlap_c: complex

    @property
    def dim(self) -> int:
        return self.e0.dim

    @property
    def sine(self) -> float:
        return float(np.sqrt(max(0.0, 1.0 - abs(self.overlap_c) ** 2)))

    def basis_matrix(self) -> np.ndarray:
        return np.stack([self.e0.amplitudes, self.e1.amplitudes], axis=1)

    def reconstruct_target(self) -> np.ndarray:
        return self.overlap_c * self.e0.amplitudes + self.sine * self.e1.amplitudes


def make_frame(psi_i: StateVector, psi_f_prime: StateVector) -> SubspaceFrame:
    """Gram-Schmidt the pulled-back target against the initial state."""
    c = inner_product(psi_i, psi_f_prime)
    if abs(c) >= 1.0 - SAME_RAY_TOL:
        raise DegenerateFrameError(
            f"initial and target states are the same ray (|overlap| = {abs(c):.15f})"
        )
    rest = psi_f_prime.amplitudes - c * psi_i.amplitudes
    e1 = rest / np.linalg.norm(rest)
    return SubspaceFrame(psi_i, StateVector(e1), c)


@dataclass(frozen=True, eq=False)
class TwoPlaneRotation(UnitaryOp):
    """``1 + E (W - 1) E^H`` for a 2x2 unitary ``W`` in frame coordinates."""

    frame: SubspaceFrame
    block: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.block, dtype=np.complex128)
        if w.shape != (2, 2):
            raise ValueError(f"rotation block must be 2x2, got {w.shape}")
        object.__setattr__(self, "block", _frozen(w))

    @property
    def dim(self) -> int:
        return self.frame.dim

    def _act(self, x):
        e = self.frame.basis_matrix()
        coords = e.conj().T @ x
        return x + e @ ((self.block - np.eye(2)) @ coords)

    def inverse(self):
        return TwoPlaneRotation(self.frame, self.block.conj().T)


def expm_hermitian(generator: np.ndarray, angle: float) -> np.ndarray:
    """``exp(-i (angle/2) G)`` for a Hermitian ``G``, via eigendecomposition."""
    g = np.asarray(generator, dtype=np.complex128)
    if np.max(np.abs(g - g.conj().T)) > HERMITIAN_TOL:
        raise ValueError("generator is not Hermitian")
    w, vecs = np.linalg.eigh(g)
    return (vecs * np.exp(-0.5j * angle * w)) @ vecs.conj().T


def two_plane_rotation(frame: SubspaceFrame, generator_coeffs, angle: float) -> TwoPlaneRotation:
    """Embed ``exp(-i (angle/2) G)`` acting on the frame plane, identity elsewhere."""
    return TwoPlaneRotation(frame, expm_hermitian(generator_coeffs, angle))


# --------------------------------------------------------------------------
# Structured constructors
# --------------------------------------------------------------------------

def walsh_hadamard(v: StateVector) -> StateVector:
    return apply(WalshHadamard(), v)


def haar_random_unitary(dim: int, seed: int) -> Dense:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, phases fixed.

    Multiplying ``Q`` by ``diag(R)/|diag(R)|`` removes the arbitrary phase
    choice of the QR routine, which is what makes the result exactly Haar.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Dense(q * (d / np.abs(d)))
