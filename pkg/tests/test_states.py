import json

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from qutrit_oam.entanglement import MesParams, mes_state
from qutrit_oam.states import (
    InvalidStateError,
    check_density_matrix,
    fidelity_pure,
    joint_index,
    ket,
    load_density_matrix,
    maximally_mixed,
    partial_trace,
    product_ket,
    projector,
    random_density_matrix,
    random_ket,
    random_unitary,
    save_density_matrix,
    schmidt_rank,
    tensor,
)

L, G, R = np.eye(3, dtype=complex)
l, g, r = np.eye(3, dtype=complex)


def test_basis_ordering_is_photon_major():
    assert joint_index("L", "r") == 2
    assert joint_index("G", "g") == 4
    assert joint_index("R", "l") == 6


def test_tensor_basis_product():
    v = tensor(L, r)
    assert v[joint_index(0, 2)] == 1
    assert np.count_nonzero(v) == 1


def test_tensor_linearity():
    v = tensor(ket(1, 1, 0), g)
    expected = np.zeros(9, dtype=complex)
    expected[joint_index(1, 1)] = expected[joint_index(0, 1)] = 1 / np.sqrt(2)
    np.testing.assert_allclose(v, expected, atol=1e-15)


def test_tensor_norm(rng):
    for _ in range(20):
        v = tensor(random_ket(3, rng), random_ket(3, rng))
        assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_projector_examples():
    np.testing.assert_array_equal(projector(G), np.diag([0, 1, 0]))
    p = projector(ket(1, 0, 1))
    expected = np.zeros((3, 3))
    expected[0, 0] = expected[0, 2] = expected[2, 0] = expected[2, 2] = 0.5
    np.testing.assert_allclose(p, expected, atol=1e-15)


def test_projector_idempotent(rng):
    for dim in (3, 9):
        p = projector(random_ket(dim, rng))
        assert abs(np.trace(p @ p) - 1) < 1e-12
        assert np.max(np.abs(p @ p - p)) < 1e-12
        assert np.linalg.matrix_rank(p, tol=1e-10) == 1


def test_fidelity_pure_examples(rng):
    psi = random_ket(9, rng)
    assert abs(fidelity_pure(projector(psi), psi) - 1) < 1e-12
    assert abs(fidelity_pure(maximally_mixed(), psi) - 1 / 9) < 1e-12
    assert abs(fidelity_pure(projector(product_ket("Gg")), mes_state(MesParams(0, 0))) - 1 / 3) < 1e-12


def test_fidelity_rejects_invalid_state():
    bad = np.eye(9)  # trace 9
    with pytest.raises(InvalidStateError):
        fidelity_pure(bad, product_ket("Gg"))


def test_fidelity_is_overlap_squared(rng):
    for _ in range(100):
        a, b = random_ket(9, rng), random_ket(9, rng)
        assert abs(fidelity_pure(projector(a), b) - abs(np.vdot(a, b)) ** 2) < 1e-12


def test_partial_trace_examples():
    mes = projector(mes_state(MesParams(0, 0)))
    np.testing.assert_allclose(partial_trace(mes, "atom"), np.eye(3) / 3, atol=1e-15)
    np.testing.assert_allclose(partial_trace(projector(product_ket("Lr")), "atom"), projector(L), atol=1e-15)
    np.testing.assert_allclose(partial_trace(projector(product_ket("Lr")), "photon"), projector(r), atol=1e-15)


def test_partial_trace_of_product_operator(rng):
    a = random_density_matrix(3, rng=rng)
    b = random_density_matrix(3, rng=rng)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), "atom"), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), "photon"), b, atol=1e-14)


@hsettings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.sampled_from(["atom", "photon"]))
def test_partial_trace_is_valid_state(seed, rank, over):
    rho = random_density_matrix(9, rank=rank, rng=seed)
    reduced = partial_trace(rho, over)
    check_density_matrix(reduced, 3)
    assert abs(np.trace(reduced) - 1) < 1e-10


@hsettings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_eigenvalues_sum_to_one(seed, rank):
    rho = random_density_matrix(9, rank=rank, rng=seed)
    assert abs(np.linalg.eigvalsh(rho).sum() - 1) < 1e-10


def test_schmidt_rank_examples():
    assert schmidt_rank(product_ket("Lr")) == 1
    assert schmidt_rank((product_ket("Lr") + product_ket("Gg")) / np.sqrt(2)) == 2
    for a, b in [(0, 0), (0.019, -0.058), (1, 0.5), (-0.3, 0.9)]:
        assert schmidt_rank(mes_state(MesParams(a, b))) == 3


def test_schmidt_rank_local_unitary_invariance(rng):
    kets = [product_ket("Lr"), (product_ket("Lr") + product_ket("Gg")) / np.sqrt(2),
            mes_state(MesParams(0.2, -0.4))]
    for trial in range(100):
        psi = kets[trial % 3]
        u, v = random_unitary(3, rng), random_unitary(3, rng)
        assert schmidt_rank(np.kron(u, v) @ psi) == schmidt_rank(psi)


def test_density_checks():
    check_density_matrix(maximally_mixed())
    with pytest.raises(InvalidStateError):
        check_density_matrix(np.diag([1.0, 0, 0, 0, 0, 0, 0, 0.5, -0.5]))
    m = maximally_mixed()
    m[0, 1] = 0.01
    with pytest.raises(InvalidStateError):
        check_density_matrix(m)


def test_json_round_trip_is_bit_exact(tmp_path, rng):
    rho = random_density_matrix(rng=rng)
    path = tmp_path / "rho.json"
    save_density_matrix(path, rho)
    doc = json.loads(path.read_text())
    assert doc["dim"] == 9 and len(doc["re"]) == 9 and len(doc["im"][0]) == 9
    back = load_density_matrix(path)
    assert np.array_equal(back, rho)
