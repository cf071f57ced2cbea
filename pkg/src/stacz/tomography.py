"""
Two-qubit state and process tomography in the Pauli operator basis.

Process matrices use the basis E_m = P_a (x) P_b with m = 4 a + b, qubit A
major, and per-qubit Paulis ordered I, X, Y, Z.  A channel is then
eps(rho) = sum_mn chi_mn E_m rho E_n^+, normalised so that Tr chi = 1 for a
trace-preserving process.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

PAULI_1Q = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_NAMES = "IXYZ"
BASIS_ORDER = "E_m = P_a (x) P_b, m = 4a + b, P = I, X, Y, Z, qubit A major"
PAULI_2Q = np.array([np.kron(a, b) for a in PAULI_1Q for b in PAULI_1Q])
PAULI_LABELS = tuple(a + b for a in PAULI_NAMES for b in PAULI_NAMES)

_S = 1 / math.sqrt(2)
SINGLE_QUBIT_PREPS = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([_S, _S], dtype=complex),
    np.array([_S, -_S], dtype=complex),
    np.array([_S, 1j * _S], dtype=complex),
    np.array([_S, -1j * _S], dtype=complex),
)

Channel = Callable[[np.ndarray], np.ndarray]


def prepared_basis() -> list[np.ndarray]:
    """The 36 product input states as 4x4 density matrices."""
    states = []
    for a, b in itertools.product(SINGLE_QUBIT_PREPS, repeat=2):
        psi = np.kron(a, b)
        states.append(np.outer(psi, psi.conj()))
    return states


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape == (4,):
        return np.outer(state, state.conj())
    if state.shape != (4, 4):
        raise ValueError("expected a two-qubit ket or 4x4 density matrix")
    return state


def _sampled_expectations(rho: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Pauli expectations estimated from ``shots`` projective measurements per basis setting.

    The nine settings measure each qubit in X, Y or Z.  Population missing
    from the block (leakage) is sampled as if renormalised, then scaled back.
    """
    trace = float(np.real(np.trace(rho)))
    sums = np.zeros(16)
    counts = np.zeros(16)
    sums[0], counts[0] = trace, 1
    eigvecs = [np.linalg.eigh(p)[1][:, ::-1] for p in PAULI_1Q[1:]]  # columns: +1 then -1
    signs = np.array([1, -1])
    for sa, sb in itertools.product(range(3), repeat=2):
        basis = np.kron(eigvecs[sa], eigvecs[sb])
        probs = np.clip(np.real(np.einsum("ij,jk,ki->i", basis.conj().T, rho, basis)), 0, None)
        probs = probs / probs.sum() if probs.sum() > 0 else np.full(4, 0.25)
        outcome = rng.multinomial(shots, probs).reshape(2, 2) / shots
        za = outcome.sum(axis=1) @ signs
        zb = outcome.sum(axis=0) @ signs
        zz = signs @ outcome @ signs
        for m, value in ((4 * (sa + 1), za), (sb + 1, zb), (4 * (sa + 1) + sb + 1, zz)):
            sums[m] += value * trace
            counts[m] += 1
    return sums / counts


def state_tomography(
    channel: Channel | None,
    state,
    shots: int = 0,
    rng: np.random.Generator | None = None,
    normalize: bool = False,
) -> np.ndarray:
    """Reconstruct the output of ``channel`` on ``state`` from Pauli expectation values.

    ``shots=0`` uses exact expectations.  The reconstruction keeps the trace of
    the output unless ``normalize`` is set.
    """
    rho = _as_density(state)
    out = rho if channel is None else np.asarray(channel(rho), dtype=complex)
    if shots:
        rng = np.random.default_rng() if rng is None else rng
        expect = _sampled_expectations(out, shots, rng)
    else:
        expect = np.real(np.einsum("mij,ji->m", PAULI_2Q, out))
    recon = np.einsum("m,mij->ij", expect, PAULI_2Q) / 4
    if normalize:
        recon = recon / np.real(np.trace(recon))
    return recon


@dataclass(frozen=True)
class ChiMatrix:
    matrix: np.ndarray
    kind: str = "linear"  # or "projected"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (16, 16):
            raise ValueError("chi must be 16x16")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype) if copy else np.asarray(self.matrix, dtype=dtype)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("mn,mij,jk,nlk->il", self.matrix, PAULI_2Q, rho, PAULI_2Q.conj())

    def completeness(self) -> np.ndarray:
        """sum_mn chi_mn E_n^+ E_m, the identity for trace-preserving processes."""
        return np.einsum("mn,nji,mjk->ik", self.matrix, PAULI_2Q.conj(), PAULI_2Q)

    def to_json(self, path) -> None:
        payload = {"basis": BASIS_ORDER, "labels": list(PAULI_LABELS), "real": self.matrix.real.tolist(),
                   "imag": self.matrix.imag.tolist(), "kind": self.kind}
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, path) -> "ChiMatrix":
        d = json.loads(Path(path).read_text())
        return cls(np.array(d["real"]) + 1j * np.array(d["imag"]), d.get("kind", "linear"))

    def to_csv(self, path) -> None:
        """|chi| magnitudes, one row per basis operator."""
        header = "operator," + ",".join(PAULI_LABELS)
        rows = [f"{lab}," + ",".join(f"{v:.12g}" for v in np.abs(row)) for lab, row in zip(PAULI_LABELS, self.matrix)]
        Path(path).write_text(header + "\n" + "\n".join(rows) + "\n")


def _design_matrix(inputs: list[np.ndarray]) -> np.ndarray:
    # rows: (input j, output entry ik); columns: chi index (m, n)
    blocks = [np.einsum("mij,jk,nlk->ilmn", PAULI_2Q, rho, PAULI_2Q.conj()).reshape(16, 256) for rho in inputs]
    return np.vstack(blocks)


_DESIGN = None


def _design():
    global _DESIGN
    if _DESIGN is None:
        design = _design_matrix(prepared_basis())
        rank = np.linalg.matrix_rank(design)
        assert rank == 256, f"preparation set is not informationally complete (rank {rank})"
        _DESIGN = np.linalg.pinv(design)
    return _DESIGN


def process_tomography(
    channel: Channel, shots: int = 0, rng: np.random.Generator | None = None
) -> ChiMatrix:
    """Linear-inversion chi from the 36 product preparations."""
    outputs = [state_tomography(channel, rho, shots=shots, rng=rng) for rho in prepared_basis()]
    chi = (_design() @ np.concatenate([o.reshape(-1) for o in outputs])).reshape(16, 16)
    return ChiMatrix(0.5 * (chi + chi.conj().T))


def chi_from_unitary(u: np.ndarray) -> ChiMatrix:
    coeffs = np.einsum("mij,ji->m", PAULI_2Q.conj(), np.asarray(u)) / 4
    return ChiMatrix(np.outer(coeffs, coeffs.conj()))


def ideal_cz_chi() -> ChiMatrix:
    return chi_from_unitary(np.diag([1, 1, 1, -1]).astype(complex))


def process_fidelity(chi: ChiMatrix, chi_ideal: ChiMatrix) -> float:
    return float(np.real(np.trace(np.asarray(chi) @ np.asarray(chi_ideal))))


def _tp_projector():
    # affine map chi -> completeness, as a 16 x 256 real-linear operator on vec(chi)
    a = np.einsum("nji,mjk->ikmn", PAULI_2Q.conj(), PAULI_2Q).reshape(16, 256)
    return a, np.linalg.pinv(a)


def project_physical(chi: ChiMatrix, trace_preserving: bool = True, iterations: int = 500, tol: float = 1e-12) -> ChiMatrix:
    """Closest (Frobenius) positive semidefinite chi, optionally also trace preserving.

    Dykstra's alternating projections between the PSD cone and the affine set
    sum chi_mn E_n^+ E_m = I.
    """

    def psd(m):
        m = 0.5 * (m + m.conj().T)
        e, v = np.linalg.eigh(m)
        return (v * np.clip(e, 0, None)) @ v.conj().T

    x = np.asarray(chi).copy()
    if not trace_preserving:
        return ChiMatrix(psd(x), "projected")
    a, a_pinv = _tp_projector()
    target = np.eye(4).reshape(-1)

    def affine(m):
        v = m.reshape(-1)
        return (v - a_pinv @ (a @ v - target)).reshape(16, 16)

    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(iterations):
        y = psd(x + p)
        p = x + p - y
        x_new = affine(y + q)
        q = y + q - x_new
        if np.linalg.norm(x_new - x) < tol:
            x = x_new
            break
        x = x_new
    return ChiMatrix(psd(x), "projected")
