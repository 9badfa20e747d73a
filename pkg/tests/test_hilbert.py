import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expsel import wignerfriend
from expsel.hilbert import (
    CompositeSpace,
    density_operator,
    embed,
    is_complete,
    ket,
    projector,
    random_unitary,
    state_vector,
    tensor,
    validate_projector_set,
    validate_unitary,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
SFW = CompositeSpace((("S", 2), ("F", 2), ("W", 2)))

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_tensor_identity():
    assert np.array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_basis_projectors():
    assert np.array_equal(tensor(P0, P1), np.diag([0, 1, 0, 0]))


def test_tensor_xx_flips_both_qubits():
    # |00> = e_0, |11> = e_3; X x X swaps index 0 <-> 3
    out = tensor(X, X) @ ket(0, 4)
    assert np.array_equal(out, ket(3, 4))


def test_embed_w_projector_selects_even_indices():
    m = embed(P0, "W", SFW)
    assert np.array_equal(m, np.diag([1, 0, 1, 0, 1, 0, 1, 0]))


@pytest.mark.parametrize("label", ["S", "F", "W"])
def test_embed_identity_is_identity(label):
    assert np.array_equal(embed(np.eye(2), label, SFW), np.eye(8))


def test_embed_first_factor_matches_tensor():
    space = CompositeSpace((("S", 2), ("F", 2)))
    assert np.array_equal(embed(X, "S", space), tensor(X, np.eye(2)))


def test_embed_errors():
    with pytest.raises(KeyError):
        embed(P0, "Q", SFW)
    with pytest.raises(ValueError):
        embed(np.eye(3), "S", SFW)


def test_composite_space_invariants():
    assert SFW.dim == 8
    with pytest.raises(ValueError):
        CompositeSpace((("A", 2), ("A", 3)))
    with pytest.raises(ValueError):
        CompositeSpace((("A", 0),))


def test_validate_unitary_examples():
    assert validate_unitary(np.eye(3), 1e-10)
    assert not validate_unitary(P0, 1e-10)
    assert validate_unitary(wignerfriend.build_scenario(0.3, 1.3).V, 1e-10)
    with pytest.raises(ValueError):
        validate_unitary(np.eye(2), 0.0)


def test_projector_set_examples():
    assert validate_projector_set([P0, P1]) and is_complete([P0, P1])
    assert validate_projector_set([P0]) and not is_complete([P0])
    phi = np.kron(projector(wignerfriend.PHI), np.eye(1))
    pair = [phi, np.eye(4) - phi]
    assert validate_projector_set(pair) and is_complete(pair)
    assert not validate_projector_set([P0, P0])
    assert not validate_projector_set([np.array([[1, 1], [0, 0]], dtype=complex)])
    with pytest.raises(ValueError):
        validate_projector_set([])


def test_state_and_density_validation():
    state_vector([1, 0], normalized=True)
    with pytest.raises(ValueError):
        state_vector([1, 1], normalized=True)
    density_operator(np.eye(2))
    with pytest.raises(ValueError):
        density_operator(np.diag([1.0, -0.5]))
    with pytest.raises(ValueError):
        density_operator(np.array([[1, 1], [0, 1]]))


def test_constructed_values_are_read_only():
    psi = state_vector([1, 0])
    with pytest.raises(ValueError):
        psi[0] = 2


def _random_op(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_tensor_trace_factorizes(seed, da, db):
    rng = np.random.default_rng(seed)
    a, b = _random_op(rng, da), _random_op(rng, db)
    lhs = np.trace(tensor(a, b))
    rhs = np.trace(a) * np.trace(b)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["S", "F", "W"]))
def test_embed_preserves_spectrum(seed, label):
    rng = np.random.default_rng(seed)
    h = _random_op(rng, 2)
    h = h + h.conj().T
    expected = np.sort(np.repeat(np.linalg.eigvalsh(h), 4))
    got = np.sort(np.linalg.eigvalsh(embed(h, label, SFW)))
    assert np.allclose(got, expected, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 8))
def test_unitary_composition(seed, d):
    rng = np.random.default_rng(seed)
    u, v = random_unitary(d, rng), random_unitary(d, rng)
    tol = 1e-12
    assert validate_unitary(u, tol) and validate_unitary(v, tol)
    assert validate_unitary(v @ u, 10 * tol)
