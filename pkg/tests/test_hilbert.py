import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bjjprobe.hilbert import (
    CompositeSpace,
    DensityMatrix,
    InvariantError,
    Operator,
    build_space,
    cavity_annihilation,
    cavity_number,
    coherent_amplitudes,
    coherent_tail,
    embed,
    fock_state,
    number_op_well1,
    onsite_interaction_op,
    product_state,
    tunneling_op,
)


def two_mode_sector(n_atoms):
    """Oracle: full two-mode Fock space projected onto the N-atom sector."""
    d = n_atoms + 1
    b = np.diag(np.sqrt(np.arange(1, d)), 1)
    c1, c2 = np.kron(b, np.eye(d)), np.kron(np.eye(d), b)
    # sector basis |n1, N - n1>, ordered by n1
    proj = np.zeros((d * d, d))
    for n1 in range(d):
        proj[n1 * d + (n_atoms - n1), n1] = 1.0
    return proj, c1, c2


@pytest.mark.parametrize("n_atoms", [1, 2, 5])
def test_atomic_operators_match_two_mode_oracle(n_atoms):
    proj, c1, c2 = two_mode_sector(n_atoms)
    space = build_space(n_atoms, 0)
    hop = proj.T @ (c1.T @ c2 + c2.T @ c1) @ proj
    n1 = proj.T @ (c1.T @ c1) @ proj
    n2 = proj.T @ (c2.T @ c2) @ proj
    onsite = n1 @ (n1 - np.eye(n_atoms + 1)) + n2 @ (n2 - np.eye(n_atoms + 1))
    np.testing.assert_allclose(tunneling_op(space).matrix, hop, atol=1e-12)
    np.testing.assert_allclose(number_op_well1(space).matrix, n1, atol=1e-12)
    np.testing.assert_allclose(onsite_interaction_op(space).matrix, onsite, atol=1e-12)


def test_index_convention():
    space = build_space(3, 4)
    assert space.dims == (4, 5)
    assert space.index(2, 3) == 13
    assert space.label(13) == (2, 3)
    n1 = number_op_well1(space).matrix.diagonal().real
    na = cavity_number(space).matrix.diagonal().real
    for i in range(space.total_dim):
        assert (n1[i], na[i]) == space.label(i)


def test_cavity_commutator_fails_only_on_top_level():
    space = build_space(1, 5)
    a = cavity_annihilation(space).matrix
    comm = a @ a.conj().T - a.conj().T @ a
    diag = comm.diagonal().real.reshape(2, 6)
    np.testing.assert_allclose(diag[:, :-1], 1.0)
    np.testing.assert_allclose(diag[:, -1], -5.0)


def test_embed_factors_commute():
    space = build_space(2, 3)
    a = cavity_annihilation(space)
    assert np.allclose(a.commutator(tunneling_op(space)).matrix, 0)
    with pytest.raises(ValueError):
        embed(np.eye(2), space, "atom")
    with pytest.raises(ValueError):
        embed(np.eye(3), space, "spin")


def test_invalid_spaces():
    with pytest.raises(ValueError):
        CompositeSpace(-1, 3)
    with pytest.raises(TypeError):
        CompositeSpace(1.5, 3)
    with pytest.raises(IndexError):
        build_space(1, 1).index(2, 0)


def test_operators_on_different_spaces_do_not_mix():
    with pytest.raises(ValueError):
        identity_a = Operator(build_space(1, 1), np.eye(4))
        identity_a + Operator(build_space(0, 3), np.eye(4))


def test_density_matrix_invariants():
    space = build_space(1, 1)
    with pytest.raises(InvariantError):
        DensityMatrix(space, np.diag([0.5, 0.5, 0.5, 0.0]))
    with pytest.raises(InvariantError):
        DensityMatrix(space, np.diag([1.2, -0.2, 0.0, 0.0]))
    bad = np.eye(4) / 4
    bad[0, 1] = 0.1
    with pytest.raises(InvariantError):
        DensityMatrix(space, bad)
    rho = DensityMatrix(space, np.eye(4) / 4)
    assert rho.purity() == pytest.approx(0.25)


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=40, deadline=None)
def test_coherent_state_eigenvalue(re, im):
    alpha = complex(re, im)
    cutoff = 40
    v = coherent_amplitudes(alpha, cutoff)
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    # a|alpha> = alpha|alpha> away from the truncation edge
    np.testing.assert_allclose((a @ v)[:20], alpha * v[:20], atol=1e-10)
    assert coherent_tail(alpha, cutoff) < 1e-12


def test_coherent_tail_matches_poisson_sum():
    from scipy.stats import poisson
    for alpha, cutoff in ((1.5, 6), (2.0, 10), (0.3, 2)):
        assert coherent_tail(alpha, cutoff) == pytest.approx(poisson.sf(cutoff, alpha ** 2), rel=1e-8)


def test_product_state_layout():
    space = build_space(2, 3)
    psi = product_state(space, fock_state(3, 1), fock_state(4, 2))
    assert np.argmax(np.abs(psi)) == space.index(1, 2)
    with pytest.raises(ValueError):
        product_state(space, fock_state(4, 1), fock_state(4, 2))
    with pytest.raises(ValueError):
        fock_state(3, 3)
