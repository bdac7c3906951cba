import json

import numpy as np
import pytest

from qutrit_oam.measurement import (
    atom_kets,
    load_settings,
    measurement_matrix,
    perturb_setting,
    perturbed_set,
    photon_kets,
    projector_set,
    save_settings,
)
from qutrit_oam.states import projector, random_density_matrix

S2 = 1 / np.sqrt(2)


def gram_rank(kets):
    """Rank of the real matrix of Hilbert-Schmidt inner products Tr(mu_a mu_b)."""
    ops = [np.outer(k, k.conj()) for k in kets]
    gram = np.array([[np.trace(a @ b).real for b in ops] for a in ops])
    return np.linalg.matrix_rank(gram, tol=1e-10)


def test_photon_ket_list():
    k = photon_kets()
    assert len(k) == 9
    np.testing.assert_allclose(k[0], [1, 0, 0])
    np.testing.assert_allclose(k[6], [0, S2, -1j * S2])
    np.testing.assert_allclose(k[5], [1j * S2, S2, 0])
    np.testing.assert_allclose(k[8], [S2, 0, 1j * S2])
    for v in k:
        assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_atom_ket_list():
    k = atom_kets()
    assert len(k) == 9
    np.testing.assert_allclose(k[5], [-1j * S2, S2, 0])
    np.testing.assert_allclose(k[6], [0, S2, 1j * S2])
    np.testing.assert_allclose(k[8], [S2, 0, -1j * S2])
    for v in k:
        assert abs(np.linalg.norm(v) - 1) < 1e-12


@pytest.mark.parametrize("kets", [photon_kets, atom_kets])
def test_single_side_lists_are_complete(kets):
    assert gram_rank(kets()) == 9


def test_projector_set_order_and_shape():
    s = projector_set()
    assert len(s) == 81
    assert [x.index for x in s] == [(i, j) for i in range(9) for j in range(9)]
    expected = np.kron(np.diag([1, 0, 0]), np.diag([0, 0, 1]))
    np.testing.assert_allclose(s[2].op, expected, atol=1e-15)
    for x in s:
        assert abs(np.trace(x.op) - 1) < 1e-12
        assert np.linalg.matrix_rank(x.op, tol=1e-10) == 1


def test_measurement_matrix_full_rank():
    m = measurement_matrix(projector_set())
    sv = np.linalg.svd(m, compute_uv=False)
    assert m.shape == (81, 81)
    assert np.all(sv > 1e-6 * sv[0])


def test_measurement_matrix_gives_probabilities(rng):
    s = projector_set()
    rho = random_density_matrix(rng=rng)
    np.testing.assert_allclose(measurement_matrix(s) @ rho.ravel(), [x.probability(rho) for x in s], atol=1e-14)


def test_perturb_zero_is_identity():
    s = projector_set()[10]
    assert perturb_setting(s, 0.0, seed=3) is s


def test_perturb_is_psd_trace_one_and_seeded():
    s = projector_set()[40]
    a = perturb_setting(s, 0.2, seed=7)
    b = perturb_setting(s, 0.2, seed=7)
    assert not a.ideal
    assert abs(np.trace(a.op) - 1) < 1e-12
    assert np.linalg.eigvalsh(a.op).min() > -1e-12
    assert np.array_equal(a.op, b.op)
    assert not np.array_equal(a.op, perturb_setting(s, 0.2, seed=8).op)


def test_perturb_rejects_bad_eps():
    s = projector_set()[0]
    for eps in (-0.1, 1.2):
        with pytest.raises(ValueError):
            perturb_setting(s, eps, 0)


def test_perturbed_probabilities_in_unit_interval(rng):
    ps = perturbed_set(0.2, seed=11)
    for _ in range(20):
        rho = random_density_matrix(rank=int(rng.integers(1, 10)), rng=rng)
        probs = np.array([x.probability(rho) for x in ps])
        assert probs.min() >= -1e-12 and probs.max() <= 1 + 1e-12


def test_settings_json_round_trip(tmp_path):
    ps = perturbed_set(0.2, seed=1)
    path = tmp_path / "settings.json"
    save_settings(path, ps)
    doc = json.loads(path.read_text())
    assert {"i", "j", "op"} <= set(doc[0])
    back = load_settings(path)
    for a, b in zip(ps, back):
        assert a.index == b.index and a.ideal == b.ideal
        assert np.array_equal(a.op, b.op)


def test_basis_projector_matches_states_projector():
    s = projector_set()
    np.testing.assert_allclose(s[4 * 9 + 3].photon_op, projector(photon_kets()[4]))
