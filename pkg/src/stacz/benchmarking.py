"""
Two-qubit Clifford randomized benchmarking.

The Clifford group is generated as four classes, each starting from a layer
of single-qubit Cliffords on both qubits:

* single-qubit class  C1 x C1                                   (576)
* CNOT-like class     C1 x C1, CZ, S1 x S1                      (5184)
* iSWAP-like class    C1 x C1, CZ, X/2 x X/2, CZ, S1 x S1       (5184)
* SWAP-like class     C1 x C1, CZ, X/2 x X/2, CZ, X/2 x X/2, CZ (576)

where C1 are the 24 single-qubit Cliffords written with {X, Y, +-X/2, +-Y/2}
and S1 = {I, Y/2 X/2, -X/2 -Y/2} is the order-three subgroup cycling X->Y->Z.
Every gate sequence is listed in time order as (gate, qubit) pairs.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from .dynamics import ComputationalChannel

GROUP_ORDER = 11520
DIMENSION = 4
N_SQ_PER_CLIFFORD = 33 / 4
N_CZ_PER_CLIFFORD = 3 / 2


def _rotation(axis: str, angle: float) -> np.ndarray:
    pauli = {"X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]])}[axis]
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * pauli


SINGLE_QUBIT_GATES = {
    "X": _rotation("X", math.pi),
    "Y": _rotation("Y", math.pi),
    "X/2": _rotation("X", math.pi / 2),
    "-X/2": _rotation("X", -math.pi / 2),
    "Y/2": _rotation("Y", math.pi / 2),
    "-Y/2": _rotation("Y", -math.pi / 2),
}
CZ = np.diag([1, 1, 1, -1]).astype(complex)

C1_SEQUENCES = (
    (), ("X",), ("Y",), ("Y", "X"),
    ("X/2", "Y/2"), ("X/2", "-Y/2"), ("-X/2", "Y/2"), ("-X/2", "-Y/2"),
    ("Y/2", "X/2"), ("Y/2", "-X/2"), ("-Y/2", "X/2"), ("-Y/2", "-X/2"),
    ("X/2",), ("-X/2",), ("Y/2",), ("-Y/2",),
    ("-X/2", "Y/2", "X/2"), ("-X/2", "-Y/2", "X/2"),
    ("X", "Y/2"), ("X", "-Y/2"), ("Y", "X/2"), ("Y", "-X/2"),
    ("X/2", "Y/2", "X/2"), ("-X/2", "Y/2", "-X/2"),
)
S1_SEQUENCES = ((), ("Y/2", "X/2"), ("-X/2", "-Y/2"))
_MIX = (("X/2", "A"), ("X/2", "B"))


def single_qubit_unitary(sequence) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for name in sequence:
        u = SINGLE_QUBIT_GATES[name] @ u
    return u


def sequence_unitary(ops) -> np.ndarray:
    """Product of time-ordered (gate, qubit) operations; qubit A is the first tensor factor."""
    u = np.eye(4, dtype=complex)
    for name, qubit in ops:
        if name == "CZ":
            g = CZ
        elif qubit == "A":
            g = np.kron(SINGLE_QUBIT_GATES[name], np.eye(2))
        else:
            g = np.kron(np.eye(2), SINGLE_QUBIT_GATES[name])
        u = g @ u
    return u


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Divide by the phase of the first entry (row-major) with modulus above 1e-6."""
    flat = np.asarray(u).ravel()
    k = int(np.flatnonzero(np.abs(flat) > 1e-6)[0])
    return np.asarray(u) * np.exp(-1j * np.angle(flat[k]))


def fingerprint(u: np.ndarray) -> bytes:
    v = canonical_phase(u).ravel()
    lattice = np.rint(np.concatenate([v.real, v.imag]) * 1e6).astype(np.int64)
    return lattice.tobytes()


@dataclass(frozen=True)
class CliffordElement:
    sequence: tuple  # ((gate, qubit), ...), qubit is None for CZ
    unitary: np.ndarray

    @property
    def n_single_qubit(self) -> int:
        return sum(1 for name, _ in self.sequence if name != "CZ")

    @property
    def n_cz(self) -> int:
        return sum(1 for name, _ in self.sequence if name == "CZ")


def _layer(a, b):
    return tuple((g, "A") for g in a) + tuple((g, "B") for g in b)


def _class_sequences():
    cz = (("CZ", None),)
    s1_pairs = [_layer(a, b) for a in S1_SEQUENCES for b in S1_SEQUENCES]
    for a in C1_SEQUENCES:
        for b in C1_SEQUENCES:
            first = _layer(a, b)
            yield first
            for post in s1_pairs:
                yield first + cz + post
            for post in s1_pairs:
                yield first + cz + _MIX + cz + post
            yield first + cz + _MIX + cz + _MIX + cz


class CliffordGroup:
    """All 11520 two-qubit Cliffords with a fingerprint lookup table."""

    def __init__(self):
        sequences = list(_class_sequences())
        unitaries = np.array([canonical_phase(sequence_unitary(s)) for s in sequences])
        table = {}
        for i, u in enumerate(unitaries):
            table.setdefault(fingerprint(u), i)
        assert len(table) == GROUP_ORDER == len(sequences), f"generated {len(table)} distinct Cliffords"
        self.sequences = sequences
        self.unitaries = unitaries
        self._table = table
        self.identity = self.lookup(np.eye(4))

    def __len__(self) -> int:
        return len(self.sequences)

    def __getitem__(self, i: int) -> CliffordElement:
        return CliffordElement(self.sequences[i], self.unitaries[i])

    def lookup(self, u: np.ndarray) -> int:
        try:
            return self._table[fingerprint(u)]
        except KeyError:
            raise LookupError("unitary is not a two-qubit Clifford") from None

    def compose(self, first: int, then: int) -> int:
        return self.lookup(self.unitaries[then] @ self.unitaries[first])

    def inverse(self, i: int) -> int:
        return self.lookup(self.unitaries[i].conj().T)

    def average_gate_counts(self) -> tuple[float, float]:
        """(single-qubit gates, CZ gates) per Clifford for this decomposition."""
        sq = np.mean([sum(1 for g, _ in s if g != "CZ") for s in self.sequences])
        cz = np.mean([sum(1 for g, _ in s if g == "CZ") for s in self.sequences])
        return float(sq), float(cz)


_GROUP = None


def build_clifford_group() -> CliffordGroup:
    """Cached two-qubit Clifford group."""
    global _GROUP
    if _GROUP is None:
        _GROUP = CliffordGroup()
    return _GROUP


# -- noise model ------------------------------------------------------------


def _superop_unitary(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


def depolarizing_superop(strength: float, qubit: str | None = None) -> np.ndarray:
    """rho -> (1 - d) rho + d (I/2 on the qubit) x partial trace, or the two-qubit version if qubit is None."""
    if not 0 <= strength <= 4 / 3:
        raise ValueError("depolarizing strength must lie in [0, 4/3]")
    out = np.zeros((16, 16), dtype=complex)
    for col in range(16):
        rho = np.zeros(16, dtype=complex)
        rho[col] = 1.0
        rho = rho.reshape(4, 4)
        if qubit is None:
            mixed = np.trace(rho) * np.eye(4) / 4
        else:
            r = rho.reshape(2, 2, 2, 2)
            if qubit == "A":
                mixed = np.kron(np.eye(2) / 2, np.einsum("abac->bc", r))
            else:
                mixed = np.kron(np.einsum("abcb->ac", r), np.eye(2) / 2)
        out[:, col] = ((1 - strength) * rho + strength * mixed).reshape(-1)
    return out


@dataclass(frozen=True)
class GateNoise:
    """Error model for RB sequences.

    Parameters
    ----------
    cz : ComputationalChannel, optional
        Channel used for every CZ inside a Clifford.  Ideal if None.
    single_qubit_error : float
        Average error r_SQ of each physical single-qubit gate, realised as a
        depolarizing channel on that qubit after the gate.
    clifford_depolarizing : float
        Two-qubit depolarizing strength applied once after every Clifford.
    """

    cz: ComputationalChannel | None = None
    single_qubit_error: float = 0.0
    clifford_depolarizing: float = 0.0

    @property
    def is_ideal(self) -> bool:
        return self.cz is None and self.single_qubit_error == 0 and self.clifford_depolarizing == 0


class _SuperopCache:
    def __init__(self, group: CliffordGroup, noise: GateNoise):
        self.group = group
        p1 = 1 - 2 * noise.single_qubit_error
        dep = {q: depolarizing_superop(1 - p1, q) for q in "AB"}
        self.gates = {}
        for name, g in SINGLE_QUBIT_GATES.items():
            self.gates[(name, "A")] = dep["A"] @ _superop_unitary(np.kron(g, np.eye(2)))
            self.gates[(name, "B")] = dep["B"] @ _superop_unitary(np.kron(np.eye(2), g))
        self.gates[("CZ", None)] = _superop_unitary(CZ) if noise.cz is None else noise.cz.superop
        self.after = depolarizing_superop(noise.clifford_depolarizing) if noise.clifford_depolarizing else None
        self._cache: dict[int, np.ndarray] = {}

    def __getitem__(self, i: int) -> np.ndarray:
        s = self._cache.get(i)
        if s is None:
            s = np.eye(16, dtype=complex)
            for op in self.group.sequences[i]:
                s = self.gates[op] @ s
            if self.after is not None:
                s = self.after @ s
            self._cache[i] = s
        return s


# -- sequences ---------------------------------------------------------------


def task_rng(seed: int, length_index: int, draw: int) -> np.random.Generator:
    """PCG64 stream for one (length, randomization) task.

    Streams come from SeedSequence(seed, spawn_key=(length_index, draw)), so
    results do not depend on execution order or thread count.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(length_index, draw)))


def _run_sequence(group, cache, interleaved, m, rng, shots):
    draws = rng.integers(0, len(group), size=m)
    rho = np.zeros(16, dtype=complex)
    rho[0] = 1.0
    total = group.identity
    for c in draws:
        rho = cache[c] @ rho
        total = group.compose(total, c)
        if interleaved is not None:
            rho = interleaved[1] @ rho
            total = group.compose(total, interleaved[0])
    rho = cache[group.inverse(total)] @ rho
    p00 = float(np.clip(rho[0].real, 0.0, 1.0))
    if shots:
        p00 = rng.binomial(shots, p00) / shots
    return p00


@dataclass
class RBRun:
    lengths: np.ndarray
    survivals: np.ndarray  # shape (len(lengths), k)
    seed: int
    kind: str = "reference"
    shots: int = 0
    fit: tuple | None = None
    covariance: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.survivals.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.survivals.mean(axis=1)

    @property
    def std(self) -> np.ndarray:
        return self.survivals.std(axis=1, ddof=1) if self.k > 1 else np.zeros(len(self.lengths))

    @property
    def p(self) -> float:
        if self.fit is None:
            raise ValueError("run has not been fitted")
        return self.fit[2]

    @property
    def p_stderr(self) -> float:
        return float(np.sqrt(self.covariance[2, 2]))

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "seed": self.seed,
            "shots": self.shots,
            "k": self.k,
            "lengths": [int(m) for m in self.lengths],
            "survival_mean": self.mean.tolist(),
            "survival_std": self.std.tolist(),
            "survivals": self.survivals.tolist(),
        }
        if self.fit is not None:
            d["fit"] = {"A0": self.fit[0], "B0": self.fit[1], "p": self.fit[2]}
            d["covariance"] = np.asarray(self.covariance).tolist()
        return d

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.lengths, self.mean, self.std]), delimiter=",",
                   header="m,mean,std", comments="", fmt=["%d", "%.12g", "%.12g"])


def _simulate(group, noise, lengths, k, seed, interleaved_channel, threads, shots, kind):
    lengths = np.asarray(lengths, dtype=int)
    if lengths.size == 0 or k < 1:
        raise ValueError("need at least one length and k >= 1")
    if np.any(lengths < 0):
        raise ValueError("sequence lengths must be non-negative")
    cache = _SuperopCache(group, noise)
    inter = None
    if interleaved_channel is not None:
        inter = (group.lookup(CZ), np.asarray(interleaved_channel.superop))
    tasks = [(li, kj) for li in range(lengths.size) for kj in range(k)]

    def work(task):
        li, kj = task
        return _run_sequence(group, cache, inter, int(lengths[li]), task_rng(seed, li, kj), shots)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(work, tasks))
    else:
        values = [work(t) for t in tasks]
    return RBRun(lengths, np.array(values).reshape(lengths.size, k), seed, kind, shots)


def rb_reference(group, noise: GateNoise, lengths, k: int, seed: int, threads: int = 1, shots: int = 0) -> RBRun:
    """Survival of |00> after m random Cliffords and their inverse, k draws per length."""
    return _simulate(group, noise, lengths, k, seed, None, threads, shots, "reference")


def rb_interleaved(
    group, noise: GateNoise, cz_channel: ComputationalChannel | None, lengths, k: int, seed: int,
    threads: int = 1, shots: int = 0,
) -> RBRun:
    """As rb_reference with a CZ (``cz_channel``, ideal if None) after every random Clifford."""
    cz_channel = ComputationalChannel.from_unitary(CZ) if cz_channel is None else cz_channel
    return _simulate(group, noise, lengths, k, seed, cz_channel, threads, shots, "interleaved")


# -- analysis ------------------------------------------------------------------


def power_law(m, a0, b0, p):
    return a0 * np.power(p, m) + b0


def fit_power_law(run: RBRun, maxfev: int = 10000) -> tuple[float, float, float]:
    """Fit A0 p^m + B0 to the mean survivals; stores fit and covariance on ``run``."""
    m = np.asarray(run.lengths, dtype=float)
    y = run.mean
    if np.unique(m).size < 4:
        raise ValueError("need at least four distinct lengths")
    order = np.argsort(m)
    excess = y - 0.25
    ok = excess > 1e-12
    if ok.sum() >= 2:
        slope = np.polyfit(m[ok], np.log(excess[ok]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
    else:
        p0 = 0.5
    a0 = float(y[order[0]] - 0.25)
    x0 = [a0, 0.25, p0]
    sigma = None
    if run.k > 1 and np.all(run.std > 0):
        sigma = run.std / np.sqrt(run.k)
    bounds = ([-np.inf, 0.0, 1e-12], [np.inf, 1.0, 1.0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, pcov = curve_fit(power_law, m, y, p0=x0, sigma=sigma, absolute_sigma=sigma is not None,
                                   bounds=bounds, max_nfev=maxfev, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    except RuntimeError as exc:
        raise RuntimeError(f"power-law fit did not converge: {exc}") from None
    run.fit = tuple(float(v) for v in popt)
    run.covariance = np.nan_to_num(pcov, nan=np.inf)
    return run.fit


def average_error(p: float, d: int = DIMENSION) -> float:
    """r = (d - 1)/d (1 - p)."""
    return (d - 1) / d * (1 - p)


def depolarizing_parameter(r: float, d: int = DIMENSION) -> float:
    return 1 - d / (d - 1) * r


def error_decomposition(
    r_ref: float, r_sq: float, n_sq: float = N_SQ_PER_CLIFFORD, n_cz: float = N_CZ_PER_CLIFFORD
) -> float:
    """CZ error from r_ref = n_sq r_SQ + n_cz r_CZ.  A negative result is returned with a warning."""
    for name, v in (("r_ref", r_ref), ("r_sq", r_sq)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    r_cz = (r_ref - n_sq * r_sq) / n_cz
    if r_cz < 0:
        warnings.warn(f"negative CZ error {r_cz:.3g}: single-qubit errors exceed the reference error", stacklevel=2)
    return r_cz


def interleaved_fidelity(p_cz: float, p_ref: float, d: int = DIMENSION) -> float:
    """F_g = 1 - (d-1)/d (1 - p_CZ/p_ref)."""
    if p_ref <= 0 or p_ref > 1:
        raise ValueError("p_ref must lie in (0, 1]")
    if p_cz < 0 or p_cz > p_ref * (1 + 1e-9):
        raise ValueError("p_CZ must lie in [0, p_ref]")
    return 1 - (d - 1) / d * (1 - min(p_cz / p_ref, 1.0))
