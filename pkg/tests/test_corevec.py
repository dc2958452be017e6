import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from raysearch.corevec import (
    Composition,
    DegenerateFrameError,
    Dense,
    DimensionError,
    Scalar,
    SelectiveInversion,
    StateVector,
    TwoPlaneRotation,
    WalshHadamard,
    apply,
    haar_random_unitary,
    inner_product,
    make_frame,
    two_plane_rotation,
    walsh_hadamard,
)

from conftest import random_state

SX = np.array([[0, 1], [1, 0]], dtype=complex)


def sv(x):
    return StateVector(np.asarray(x, dtype=complex))


# -- StateVector ---------------------------------------------------------------

def test_state_rejects_bad_length_and_norm():
    with pytest.raises(ValueError):
        sv([1, 0, 0])
    with pytest.raises(ValueError):
        sv([1])
    with pytest.raises(ValueError):
        sv([1, 1])


def test_state_is_immutable():
    s = StateVector.basis(2, 1)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1.0
    assert s.n_qubits == 2 and s.dim == 4


# -- inner_product --------------------------------------------------------------

def test_inner_product_examples():
    zero, one = StateVector.basis(1, 0), StateVector.basis(1, 1)
    assert inner_product(zero, zero) == 1
    assert inner_product(zero, one) == 0
    assert inner_product(StateVector.uniform(2), StateVector.basis(2, 2)) == pytest.approx(0.5, abs=1e-15)


def test_inner_product_conjugate_symmetric(rng):
    a, b = sv(random_state(rng, 8)), sv(random_state(rng, 8))
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-15)


def test_inner_product_dimension_mismatch():
    with pytest.raises(DimensionError):
        inner_product(StateVector.basis(1, 0), StateVector.basis(2, 0))


# -- apply / operators -------------------------------------------------------------

def test_selective_inversion_examples():
    one, zero = StateVector.basis(1, 1), StateVector.basis(1, 0)
    inv = SelectiveInversion(one)
    np.testing.assert_allclose(apply(inv, one).amplitudes, -one.amplitudes)
    np.testing.assert_allclose(apply(inv, zero).amplitudes, zero.amplitudes)


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(SelectiveInversion(StateVector.basis(1, 1)), StateVector.basis(2, 0))


def test_dense_rejects_non_unitary():
    with pytest.raises(ValueError, match="not unitary"):
        Dense(np.array([[1, 1], [0, 1]]))


def test_composition_applies_right_to_left():
    a = Dense(np.array([[0, 1], [1, 0]]))
    b = Dense(np.diag([1, 1j]))
    v = StateVector.basis(1, 1)
    got = apply(Composition((a, b)), v).amplitudes
    np.testing.assert_allclose(got, a.mat @ (b.mat @ v.amplitudes))


def test_composition_rejects_mixed_dims():
    with pytest.raises(DimensionError):
        Composition((SelectiveInversion(StateVector.basis(1, 0)),
                     SelectiveInversion(StateVector.basis(2, 0))))


def test_inverse_round_trips(rng):
    u = haar_random_unitary(8, 3)
    op = Composition((Scalar(1j), u, SelectiveInversion(sv(random_state(rng, 8))), WalshHadamard()))
    v = sv(random_state(rng, 8))
    back = apply(op.inverse(), apply(op, v))
    np.testing.assert_allclose(back.amplitudes, v.amplitudes, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 6))
def test_norm_preserved_by_every_variant(seed, n):
    rng = np.random.default_rng(seed)
    dim = 2 ** n
    v = sv(random_state(rng, dim))
    frame = make_frame(sv(random_state(rng, dim)), sv(random_state(rng, dim)))
    ops = [
        haar_random_unitary(dim, seed),
        WalshHadamard(),
        SelectiveInversion(sv(random_state(rng, dim))),
        two_plane_rotation(frame, SX, rng.uniform(0, 2 * np.pi)),
        Scalar(np.exp(1j * rng.uniform(0, 2 * np.pi))),
    ]
    ops.append(Composition(tuple(ops)))
    for op in ops:
        assert abs(apply(op, v).norm() - 1.0) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 6))
def test_composition_associativity(seed, n):
    rng = np.random.default_rng(seed)
    dim = 2 ** n
    a = haar_random_unitary(dim, seed)
    b = SelectiveInversion(sv(random_state(rng, dim)))
    v = sv(random_state(rng, dim))
    np.testing.assert_allclose(apply(Composition((a, b)), v).amplitudes,
                               apply(a, apply(b, v)).amplitudes, atol=1e-12)


# -- Walsh-Hadamard ---------------------------------------------------------------

def test_walsh_hadamard_examples():
    out = walsh_hadamard(StateVector.basis(3, 0))
    np.testing.assert_allclose(out.amplitudes, np.full(8, 1 / np.sqrt(8)), atol=1e-15)
    back = walsh_hadamard(StateVector.uniform(3))
    np.testing.assert_allclose(back.amplitudes, StateVector.basis(3, 0).amplitudes, atol=1e-15)
    one = walsh_hadamard(StateVector.basis(1, 1))
    np.testing.assert_allclose(one.amplitudes, np.array([1, -1]) / np.sqrt(2), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 12))
def test_walsh_hadamard_involution(seed, n):
    v = sv(random_state(np.random.default_rng(seed), 2 ** n))
    twice = walsh_hadamard(walsh_hadamard(v))
    np.testing.assert_allclose(twice.amplitudes, v.amplitudes, atol=1e-12)


# -- Haar ----------------------------------------------------------------------------

def test_haar_is_deterministic_and_unitary():
    a = haar_random_unitary(4, 11)
    b = haar_random_unitary(4, 11)
    assert np.array_equal(a.mat, b.mat)
    assert not np.array_equal(a.mat, haar_random_unitary(4, 12).mat)
    assert np.max(np.abs(a.mat.conj().T @ a.mat - np.eye(4))) <= 1e-10
    v = apply(haar_random_unitary(2, 7), StateVector.basis(1, 0))
    assert abs(v.norm() - 1) <= 1e-12


def test_haar_rejects_small_dim():
    with pytest.raises(ValueError):
        haar_random_unitary(1, 0)


def test_haar_first_moment():
    # E|U_00|^2 = 1/d under the Haar measure; QR without the phase fix also passes
    # this, so the phase-sensitive check below matters more.
    d, n = 3, 4000
    vals = np.array([abs(haar_random_unitary(d, s).mat[0, 0]) ** 2 for s in range(n)])
    assert vals.mean() == pytest.approx(1 / d, abs=0.02)
    # E[U_00] = 0: a QR routine that fixes diag(R) > 0 biases the phase of column entries
    mean = np.mean([haar_random_unitary(d, s).mat[0, 0] for s in range(n)])
    assert abs(mean) < 0.03


# -- frames and rotations ----------------------------------------------------------

def test_make_frame_examples():
    f = make_frame(StateVector.basis(1, 0), StateVector.basis(1, 1))
    assert f.overlap_c == 0
    np.testing.assert_allclose(f.e1.amplitudes, [0, 1])

    u, t = StateVector.uniform(2), StateVector.basis(2, 2)
    f = make_frame(u, t)
    assert f.overlap_c == pytest.approx(0.5)
    want = t.amplitudes - 0.5 * u.amplitudes
    np.testing.assert_allclose(f.e1.amplitudes, want / np.linalg.norm(want), atol=1e-15)

    v = sv(np.array([0.6, 0.8j]))
    with pytest.raises(DegenerateFrameError):
        make_frame(v, sv(np.exp(0.7j) * v.amplitudes))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 8))
def test_frame_invariants(seed, n):
    rng = np.random.default_rng(seed)
    a, b = sv(random_state(rng, 2 ** n)), sv(random_state(rng, 2 ** n))
    f = make_frame(a, b)
    assert abs(inner_product(f.e0, f.e1)) <= 1e-12
    assert abs(f.e1.norm() - 1) <= 1e-12
    np.testing.assert_allclose(f.reconstruct_target(), b.amplitudes, atol=1e-12)


def test_two_plane_rotation_examples(rng):
    f = make_frame(StateVector.basis(2, 0), StateVector.basis(2, 1))
    ident = two_plane_rotation(f, SX, 0.0)
    v = sv(random_state(rng, 4))
    np.testing.assert_allclose(apply(ident, v).amplitudes, v.amplitudes, atol=1e-15)

    alpha = 0.9
    out = apply(two_plane_rotation(f, SX, alpha), StateVector.basis(2, 0)).amplitudes
    np.testing.assert_allclose(out, [np.cos(alpha / 2), -1j * np.sin(alpha / 2), 0, 0], atol=1e-15)

    comp = sv(np.array([0, 0, 0.6, 0.8j]))
    np.testing.assert_allclose(apply(two_plane_rotation(f, SX, alpha), comp).amplitudes,
                               comp.amplitudes, atol=1e-12)


def test_two_plane_rotation_rejects_non_hermitian():
    f = make_frame(StateVector.basis(1, 0), StateVector.basis(1, 1))
    with pytest.raises(ValueError, match="Hermitian"):
        two_plane_rotation(f, np.array([[0, 1], [0, 0]]), 0.3)


def test_two_plane_rotation_matches_dense_expm(rng):
    from scipy.linalg import expm

    dim = 8
    a, b = sv(random_state(rng, dim)), sv(random_state(rng, dim))
    f = make_frame(a, b)
    g = np.array([[0.3, 1 - 0.2j], [1 + 0.2j, -0.7]])
    e = f.basis_matrix()
    full = expm(-0.5j * 1.3 * (e @ g @ e.conj().T))
    op = two_plane_rotation(f, g, 1.3)
    np.testing.assert_allclose(op.matrix(), full, atol=1e-12)
    assert isinstance(op, TwoPlaneRotation)
