import json

import numpy as np
import pytest

from stacz.dynamics import ComputationalChannel
from stacz.tomography import (
    PAULI_2Q,
    PAULI_LABELS,
    ChiMatrix,
    chi_from_unitary,
    ideal_cz_chi,
    prepared_basis,
    process_fidelity,
    process_tomography,
    project_physical,
    state_tomography,
)

CZ = np.diag([1, 1, 1, -1]).astype(complex)
BLOCK = [PAULI_LABELS.index(k) for k in ("II", "IZ", "ZI", "ZZ")]


def unitary_channel(u):
    return lambda rho: u @ rho @ u.conj().T


def depolarize_each(p):
    def channel(rho):
        r = rho.reshape(2, 2, 2, 2)
        rho = (1 - p) * rho + p * np.kron(np.eye(2) / 2, np.einsum("abac->bc", r))
        r = rho.reshape(2, 2, 2, 2)
        return (1 - p) * rho + p * np.kron(np.einsum("abcb->ac", r), np.eye(2) / 2)

    return channel


def random_kraus_channel(rng, n=3):
    g = rng.standard_normal((n * 4, 4)) + 1j * rng.standard_normal((n * 4, 4))
    q, _ = np.linalg.qr(g)  # isometry 4 -> 4n, i.e. Kraus operators
    kraus = q.reshape(n, 4, 4)
    return lambda rho: sum(k @ rho @ k.conj().T for k in kraus)


def haar_unitary(rng):
    q, r = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    return q * (np.diag(r) / abs(np.diag(r)))


def test_prepared_basis():
    states = prepared_basis()
    assert len(states) == 36
    for rho in states:
        assert np.trace(rho) == pytest.approx(1)
        assert np.allclose(rho @ rho, rho)


def test_identity_channel():
    chi = np.array(process_tomography(lambda rho: rho))
    assert chi[0, 0] == pytest.approx(1)
    chi[0, 0] = 0
    assert np.abs(chi).max() < 1e-12


class TestIdealCZ:
    def test_block_structure(self):
        chi = np.asarray(process_tomography(unitary_channel(CZ)))
        np.testing.assert_allclose(np.abs(chi[np.ix_(BLOCK, BLOCK)]), 0.25, atol=1e-12)
        mask = np.ones((16, 16), bool)
        mask[np.ix_(BLOCK, BLOCK)] = False
        assert np.abs(chi[mask]).max() < 1e-12
        np.testing.assert_allclose(chi, np.asarray(ideal_cz_chi()), atol=1e-12)

    def test_coefficients(self):
        chi = np.asarray(ideal_cz_chi())
        np.testing.assert_allclose(chi[BLOCK, 0] / chi[0, 0] * 0.5, [0.5, 0.5, 0.5, -0.5], atol=1e-15)
        assert np.count_nonzero(np.abs(chi) > 1e-12) == 16
        assert np.trace(chi) == pytest.approx(1)
        assert process_fidelity(ideal_cz_chi(), ideal_cz_chi()) == pytest.approx(1)

    def test_depolarized_cz(self):
        weights = []
        for p in (0.0, 0.05, 0.2):
            dep = depolarize_each(p)
            chi = np.asarray(process_tomography(lambda rho: unitary_channel(CZ)(dep(rho))))
            mask = np.ones((16, 16), bool)
            mask[np.ix_(BLOCK, BLOCK)] = False
            weights.append((chi[0, 0].real, np.abs(chi[mask]).sum()))
        # chi_II,II = (1 - p/2)^2 / 4 falls from 1/4 toward the fully mixed 1/16
        np.testing.assert_allclose([w[0] for w in weights], [(1 - p / 2) ** 2 / 4 for p in (0.0, 0.05, 0.2)])
        assert weights[0][1] < 1e-12 < weights[1][1] < weights[2][1]


def test_linear_inversion_exact_on_random_channel():
    rng = np.random.default_rng(11)
    channel = random_kraus_channel(rng)
    chi = process_tomography(channel)
    for rho in prepared_basis():
        np.testing.assert_allclose(chi.apply(rho), channel(rho), atol=1e-8)
    m = np.asarray(chi)
    assert np.abs(m - m.conj().T).max() < 1e-12
    np.testing.assert_allclose(chi.completeness(), np.eye(4), atol=1e-6)


def test_fidelity_matches_unitary_overlap():
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = haar_unitary(rng)
        expected = abs(np.trace(CZ.conj().T @ u)) ** 2 / 16
        assert process_fidelity(process_tomography(unitary_channel(u)), ideal_cz_chi()) == pytest.approx(
            expected, abs=1e-8)
        assert process_fidelity(chi_from_unitary(u), ideal_cz_chi()) == pytest.approx(expected, abs=1e-12)


def test_leaky_channel_has_subunit_completeness():
    channel = lambda rho: 0.9 * unitary_channel(CZ)(rho)  # noqa: E731
    chi = process_tomography(channel)
    eig = np.linalg.eigvalsh(chi.completeness())
    assert np.all(eig <= 1 + 1e-9) and eig.max() < 1
    assert process_fidelity(chi, ideal_cz_chi()) == pytest.approx(0.9)


class TestStateTomography:
    def test_exact(self):
        rng = np.random.default_rng(0)
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        np.testing.assert_allclose(state_tomography(None, psi), np.outer(psi, psi.conj()), atol=1e-14)

    def test_shots_are_seeded_and_converge(self):
        rho = prepared_basis()[14]
        a = state_tomography(None, rho, shots=500, rng=np.random.default_rng(9))
        b = state_tomography(None, rho, shots=500, rng=np.random.default_rng(9))
        assert np.array_equal(a, b)
        err_small = np.abs(state_tomography(None, rho, shots=100, rng=np.random.default_rng(1)) - rho).max()
        err_large = np.abs(state_tomography(None, rho, shots=100000, rng=np.random.default_rng(1)) - rho).max()
        assert err_large < err_small and err_large < 0.01

    def test_normalize(self):
        out = state_tomography(lambda r: 0.8 * r, prepared_basis()[0], normalize=True)
        assert np.trace(out) == pytest.approx(1)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            state_tomography(None, np.ones(3))


def test_projection():
    chi = process_tomography(unitary_channel(CZ), shots=200, rng=np.random.default_rng(4))
    raw_min = np.linalg.eigvalsh(np.asarray(chi)).min()
    phys = project_physical(chi)
    assert raw_min < -1e-3
    assert np.linalg.eigvalsh(np.asarray(phys)).min() > -1e-8
    np.testing.assert_allclose(phys.completeness(), np.eye(4), atol=1e-6)
    assert process_fidelity(phys, ideal_cz_chi()) > 0.95
    psd_only = project_physical(chi, trace_preserving=False)
    assert np.linalg.eigvalsh(np.asarray(psd_only)).min() > -1e-12


def test_chi_shape_check():
    with pytest.raises(ValueError):
        ChiMatrix(np.eye(4))


def test_export(tmp_path):
    chi = ideal_cz_chi()
    chi.to_json(tmp_path / "chi.json")
    data = json.loads((tmp_path / "chi.json").read_text())
    assert "4a + b" in data["basis"] and len(data["real"]) == 16
    np.testing.assert_allclose(np.asarray(ChiMatrix.from_json(tmp_path / "chi.json")), np.asarray(chi))
    chi.to_csv(tmp_path / "chi.csv")
    lines = (tmp_path / "chi.csv").read_text().splitlines()
    assert lines[0].startswith("operator,II,IX") and len(lines) == 17


def test_pauli_basis_orthogonal():
    gram = np.einsum("mji,nji->mn", PAULI_2Q.conj(), PAULI_2Q)
    np.testing.assert_allclose(gram, 4 * np.eye(16), atol=1e-14)


class TestSimulatedGate:
    def test_closed(self, closed_channel):
        chi = process_tomography(closed_channel)
        assert process_fidelity(chi, ideal_cz_chi()) >= 0.999
        np.testing.assert_allclose(chi.completeness(), np.eye(4), atol=1e-4)

    def test_decoherent(self, lindblad_channel):
        f = process_fidelity(process_tomography(lindblad_channel), ideal_cz_chi())
        assert f == pytest.approx(0.984, abs=0.008)
        assert f == pytest.approx(0.98828, abs=1e-4)  # frozen

    def test_channel_object_is_accepted(self):
        ch = ComputationalChannel.from_unitary(CZ)
        assert process_fidelity(process_tomography(ch), ideal_cz_chi()) == pytest.approx(1)
