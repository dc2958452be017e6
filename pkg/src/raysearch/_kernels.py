"""Hot numeric loops, each in a numba-compiled and a pure-numpy flavour.

The numba path is used when numba imports cleanly and the environment
variable ``RAYSEARCH_DISABLE_NUMBA`` is unset (or ``0``/``false``).  Both
flavours are importable directly (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them; the unsuffixed names are the dispatched ones.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("RAYSEARCH_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# Walsh-Hadamard butterfly
# --------------------------------------------------------------------------

def fwht_numpy(x: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform, returned as a new array."""
    x = np.array(x, dtype=np.complex128, copy=True)
    n = x.shape[0]
    h = 1
    while h < n:
        y = x.reshape(-1, 2, h)
        a = y[:, 0, :].copy()
        b = y[:, 1, :]
        y[:, 0, :] += b
        y[:, 1, :] = a - b
        h *= 2
    return x


def _fwht_loop(x):
    n = x.shape[0]
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                a = x[j]
                b = x[j + h]
                x[j] = a + b
                x[j + h] = a - b
        h *= 2
    return x


# --------------------------------------------------------------------------
# Plane-structured iteration: v <- s*v + E (M (E^H v))
#
# Both search operators have this shape.  Q = -I_i I_f' is -1 on the
# complement of span{e0, e1}; V is +1 there.  Each step also yields the
# frame coordinates (a0, a1) = E^H v for free, which carry every overlap the
# traces need, so the kernel returns them instead of the full state history.
# --------------------------------------------------------------------------

def plane_iterate_numpy(psi, e0, e1, scale, m, target_c, target_s,
                        max_steps, threshold):
    v = np.array(psi, dtype=np.complex128, copy=True)
    ov_init = np.empty(max_steps + 1, dtype=np.complex128)
    ov_targ = np.empty(max_steps + 1, dtype=np.complex128)
    norms = np.empty(max_steps + 1, dtype=np.float64)
    a0 = np.vdot(e0, v)
    a1 = np.vdot(e1, v)
    ov_init[0] = a0
    ov_targ[0] = np.conj(target_c) * a0 + target_s * a1
    norms[0] = np.sqrt(np.vdot(v, v).real)
    k = 0
    if abs(ov_targ[0]) ** 2 >= threshold:
        return v, ov_init[:1], ov_targ[:1], norms[:1]
    while k < max_steps:
        b0 = m[0, 0] * a0 + m[0, 1] * a1
        b1 = m[1, 0] * a0 + m[1, 1] * a1
        v = scale * v + b0 * e0 + b1 * e1
        k += 1
        a0 = np.vdot(e0, v)
        a1 = np.vdot(e1, v)
        ov_init[k] = a0
        ov_targ[k] = np.conj(target_c) * a0 + target_s * a1
        norms[k] = np.sqrt(np.vdot(v, v).real)
        if abs(ov_targ[k]) ** 2 >= threshold:
            break
    return v, ov_init[:k + 1], ov_targ[:k + 1], norms[:k + 1]


def _plane_iterate_loop(psi, e0, e1, scale, m, target_c, target_s,
                        max_steps, threshold):
    n = psi.shape[0]
    v = psi.copy()
    ov_init = np.empty(max_steps + 1, dtype=np.complex128)
    ov_targ = np.empty(max_steps + 1, dtype=np.complex128)
    norms = np.empty(max_steps + 1, dtype=np.float64)
    a0 = 0j
    a1 = 0j
    nrm = 0.0
    for j in range(n):
        a0 += np.conj(e0[j]) * v[j]
        a1 += np.conj(e1[j]) * v[j]
        nrm += v[j].real * v[j].real + v[j].imag * v[j].imag
    ov_init[0] = a0
    ov_targ[0] = np.conj(target_c) * a0 + target_s * a1
    norms[0] = np.sqrt(nrm)
    k = 0
    if abs(ov_targ[0]) ** 2 >= threshold:
        return v, ov_init[:1], ov_targ[:1], norms[:1]
    while k < max_steps:
        b0 = m[0, 0] * a0 + m[0, 1] * a1
        b1 = m[1, 0] * a0 + m[1, 1] * a1
        a0 = 0j
        a1 = 0j
        nrm = 0.0
        for j in range(n):
            x = scale * v[j] + b0 * e0[j] + b1 * e1[j]
            v[j] = x
            a0 += np.conj(e0[j]) * x
            a1 += np.conj(e1[j]) * x
            nrm += x.real * x.real + x.imag * x.imag
        k += 1
        ov_init[k] = a0
        ov_targ[k] = np.conj(target_c) * a0 + target_s * a1
        norms[k] = np.sqrt(nrm)
        if abs(ov_targ[k]) ** 2 >= threshold:
            break
    return v, ov_init[:k + 1], ov_targ[:k + 1], norms[:k + 1]


# --------------------------------------------------------------------------
# RK4 for i dpsi/dt = H(t) psi with H tabulated on the half-step grid.
# hs[2k] = H(t_k), hs[2k+1] = H(t_k + dt/2).
# --------------------------------------------------------------------------

def rk4_tabulated_numpy(psi0, hs, dt, renorm_tol, fail_tol):
    n_steps = (hs.shape[0] - 1) // 2
    states = np.empty((n_steps + 1, psi0.shape[0]), dtype=np.complex128)
    drift = np.zeros(n_steps + 1, dtype=np.float64)
    psi = np.array(psi0, dtype=np.complex128, copy=True)
    states[0] = psi
    for k in range(n_steps):
        h0 = hs[2 * k]
        hm = hs[2 * k + 1]
        h1 = hs[2 * k + 2]
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.sqrt(np.vdot(psi, psi).real)
        d = abs(nrm - 1.0)
        drift[k + 1] = d
        if d > fail_tol:
            return states[:k + 2], drift[:k + 2], False
        if d > renorm_tol:
            psi = psi / nrm
        states[k + 1] = psi
    return states, drift, True


def _matvec(h, x, out):
    n = x.shape[0]
    for i in range(n):
        acc = 0j
        for j in range(n):
            acc += h[i, j] * x[j]
        out[i] = -1j * acc


def _rk4_tabulated_loop(psi0, hs, dt, renorm_tol, fail_tol):
    n_steps = (hs.shape[0] - 1) // 2
    n = psi0.shape[0]
    states = np.empty((n_steps + 1, n), dtype=np.complex128)
    drift = np.zeros(n_steps + 1, dtype=np.float64)
    psi = psi0.copy()
    states[0] = psi
    k1 = np.empty(n, dtype=np.complex128)
    k2 = np.empty(n, dtype=np.complex128)
    k3 = np.empty(n, dtype=np.complex128)
    k4 = np.empty(n, dtype=np.complex128)
    tmp = np.empty(n, dtype=np.complex128)
    half = 0.5 * dt
    for k in range(n_steps):
        _matvec(hs[2 * k], psi, k1)
        for i in range(n):
            tmp[i] = psi[i] + half * k1[i]
        _matvec(hs[2 * k + 1], tmp, k2)
        for i in range(n):
            tmp[i] = psi[i] + half * k2[i]
        _matvec(hs[2 * k + 1], tmp, k3)
        for i in range(n):
            tmp[i] = psi[i] + dt * k3[i]
        _matvec(hs[2 * k + 2], tmp, k4)
        nrm = 0.0
        for i in range(n):
            psi[i] = psi[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            nrm += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        nrm = np.sqrt(nrm)
        d = abs(nrm - 1.0)
        drift[k + 1] = d
        if d > fail_tol:
            states[k + 1] = psi
            return states[:k + 2], drift[:k + 2], False
        if d > renorm_tol:
            for i in range(n):
                psi[i] = psi[i] / nrm
        states[k + 1] = psi
    return states, drift, True


if HAVE_NUMBA:
    _fwht_jit = numba.njit(cache=True)(_fwht_loop)
    plane_iterate_numba = numba.njit(cache=True)(_plane_iterate_loop)
    _matvec = numba.njit(cache=True)(_matvec)
    rk4_tabulated_numba = numba.njit(cache=True)(_rk4_tabulated_loop)

    def fwht_numba(x: np.ndarray) -> np.ndarray:
        """Unnormalised Walsh-Hadamard transform via the compiled butterfly."""
        return _fwht_jit(np.array(x, dtype=np.complex128, copy=True))
else:  # pragma: no cover
    fwht_numba = fwht_numpy
    plane_iterate_numba = plane_iterate_numpy
    rk4_tabulated_numba = rk4_tabulated_numpy


if USE_NUMBA:
    fwht = fwht_numba
    plane_iterate = plane_iterate_numba
    rk4_tabulated = rk4_tabulated_numba
else:
    fwht = fwht_numpy
    plane_iterate = plane_iterate_numpy
    rk4_tabulated = rk4_tabulated_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
