"""
Two-qutrit state space and Hamiltonians for a pair of coupled Xmon qubits.

Every operator here lives on the 9-dimensional product space of two
three-level systems.  Basis kets are ordered with qubit B varying fastest::

    index = 3 * level_A + level_B
    |00>, |01>, |02>, |10>, |11>, |12>, |20>, |21>, |22>

All frequencies are angular frequencies in rad/ns with hbar = 1, so the
energies below are numerically equal to angular frequencies.  Times are in ns.
Configuration and reporting use GHz values of omega / 2 pi; the ``ghz`` and
``mhz`` helpers do the conversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

LEVELS = 3
DIM = LEVELS * LEVELS
BASIS_LABELS = tuple(f"{a}{b}" for a in range(LEVELS) for b in range(LEVELS))
COMPUTATIONAL = (0, 1, 3, 4)  # |00>, |01>, |10>, |11>


def index(level_a: int, level_b: int) -> int:
    """Position of ``|level_a level_b>`` in the two-qutrit basis."""
    return LEVELS * level_a + level_b


def ghz(value_ghz: float) -> float:
    """Convert a frequency omega/2pi in GHz to rad/ns."""
    return TWO_PI * value_ghz


def mhz(value_mhz: float) -> float:
    """Convert a frequency omega/2pi in MHz to rad/ns."""
    return TWO_PI * value_mhz * 1e-3


def to_ghz(omega: float) -> float:
    return omega / TWO_PI


# single-qutrit building blocks
LOWERING = np.diag([1.0, SQRT2], k=1)  # J = |0><1| + sqrt2 |1><2|
NUMBER = np.diag([0.0, 1.0, 2.0])
_EYE3 = np.eye(LEVELS)
N_A = np.kron(NUMBER, _EYE3)
N_B = np.kron(_EYE3, NUMBER)
N_TOTAL = N_A + N_B
EXCITATION = np.array([a + b for a in range(LEVELS) for b in range(LEVELS)])


def on_a(op: np.ndarray) -> np.ndarray:
    """Embed a 3x3 operator acting on qubit A."""
    return np.kron(op, _EYE3)


def on_b(op: np.ndarray) -> np.ndarray:
    """Embed a 3x3 operator acting on qubit B."""
    return np.kron(_EYE3, op)


@dataclass(frozen=True)
class DeviceParams:
    """Physical constants of the two-qubit device.

    Frequencies are angular (rad/ns), coherence times in ns.  Infinite
    coherence times are allowed and switch the corresponding decay channel off.
    """

    omega_qA: float
    omega_qB: float
    anharmonicity: float
    g: float
    t1_A: float = math.inf
    t1_B: float = math.inf
    t2star_A: float = math.inf
    t2star_B: float = math.inf

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"coupling g must be non-negative, got {self.g}")
        for name in ("t1_A", "t1_B", "t2star_A", "t2star_B"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for q in ("A", "B"):
            t1, t2 = getattr(self, f"t1_{q}"), getattr(self, f"t2star_{q}")
            if t2 > 2 * t1 * (1 + 1e-12):
                raise ValueError(f"t2star_{q}={t2} exceeds 2*t1_{q}={2 * t1}")

    @classmethod
    def from_ghz(
        cls,
        omega_qA_ghz: float,
        omega_qB_ghz: float,
        anharmonicity_mhz: float,
        g_mhz: float,
        t1_us: tuple[float, float] = (math.inf, math.inf),
        t2star_us: tuple[float, float] = (math.inf, math.inf),
    ) -> "DeviceParams":
        return cls(
            omega_qA=ghz(omega_qA_ghz),
            omega_qB=ghz(omega_qB_ghz),
            anharmonicity=mhz(anharmonicity_mhz),
            g=mhz(g_mhz),
            t1_A=t1_us[0] * 1e3,
            t1_B=t1_us[1] * 1e3,
            t2star_A=t2star_us[0] * 1e3,
            t2star_B=t2star_us[1] * 1e3,
        )

    @classmethod
    def reference(cls, decoherence: bool = True) -> "DeviceParams":
        """Operating point of the measured device (Xmon pair idling 550 MHz apart)."""
        if not decoherence:
            return cls.from_ghz(5.52, 4.97, -240.0, 9.19)
        return cls.from_ghz(5.52, 4.97, -240.0, 9.19, t1_us=(14.4, 12.9), t2star_us=(12.3, 3.5))

    @property
    def omega_res(self) -> float:
        """Q_A frequency at which |11> and |20> are degenerate."""
        return self.omega_qB - self.anharmonicity

    def closed(self) -> "DeviceParams":
        """Same device without decoherence."""
        return DeviceParams(self.omega_qA, self.omega_qB, self.anharmonicity, self.g)

    def require_operating_regime(self) -> None:
        if not self.g > 0:
            raise ValueError("coupling g must be positive")
        if not self.anharmonicity < 0:
            raise ValueError("anharmonicity must be negative")
        if not self.omega_qA > self.omega_qB:
            raise ValueError("Q_A must idle above Q_B")


@dataclass(frozen=True)
class QutritOperator:
    """A 9x9 operator on the two-qutrit space.

    ``kind`` states the intent: ``"hermitian"`` and ``"unitary"`` are checked on
    construction, ``"general"`` is not.
    """

    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"expected a {DIM}x{DIM} matrix, got shape {m.shape}")
        if self.kind == "hermitian":
            if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(m).max()):
                raise ValueError("operator flagged hermitian is not hermitian")
        elif self.kind == "unitary":
            err = np.linalg.norm(m.conj().T @ m - np.eye(DIM), 2)
            if err > 1e-9:
                raise ValueError(f"operator flagged unitary deviates by {err:.2e}")
        elif self.kind != "general":
            raise ValueError(f"unknown operator kind {self.kind!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype) if copy else np.asarray(self.matrix, dtype=dtype)

    def element(self, bra: str, ket: str) -> complex:
        """Matrix element <bra|M|ket> with labels such as ``"11"``."""
        return self.matrix[BASIS_LABELS.index(bra), BASIS_LABELS.index(ket)]

    def computational_block(self) -> np.ndarray:
        return self.matrix[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]


@dataclass(frozen=True)
class QutritState:
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if psi.shape != (DIM,):
            raise ValueError(f"expected {DIM} amplitudes, got {psi.size}")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} differs from 1")
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @classmethod
    def basis(cls, label: str) -> "QutritState":
        psi = np.zeros(DIM, dtype=complex)
        psi[BASIS_LABELS.index(label)] = 1.0
        return cls(psi)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.amplitudes, dtype=dtype) if copy else np.asarray(self.amplitudes, dtype=dtype)

    def population(self, label: str) -> float:
        return float(abs(self.amplitudes[BASIS_LABELS.index(label)]) ** 2)


@dataclass(frozen=True)
class SubspaceHamiltonian:
    """The {|11>, |20>} block with the |11> energy subtracted."""

    delta_d: float
    offdiag: float
    offset: float = field(default=0.0)

    def matrix(self) -> np.ndarray:
        return np.array([[0.0, self.offdiag], [self.offdiag, self.delta_d]])

    def splitting(self) -> float:
        return math.sqrt(self.delta_d**2 + 4 * self.offdiag**2)


def build_single_qubit_h(omega_q: float, anharmonicity: float) -> np.ndarray:
    return np.diag([0.0, omega_q, 2 * omega_q + anharmonicity])


def build_coupling(g: float) -> QutritOperator:
    if g < 0:
        raise ValueError("coupling must be non-negative")
    hop = np.kron(LOWERING.T, LOWERING)
    return QutritOperator(g * (hop + hop.T), kind="hermitian")


def _system_matrix(params: DeviceParams, omega_qA_now, omega_shift: float = 0.0) -> np.ndarray:
    """H_sys - omega_shift * N_total, vectorised over ``omega_qA_now``.

    The excitation-conserving coupling commutes with N_total, so the shift is
    an exact frame change that keeps the diagonal small.
    """
    w = np.asarray(omega_qA_now, dtype=float)
    ha = np.diag(build_single_qubit_h(0.0, params.anharmonicity))
    hb = np.diag(build_single_qubit_h(params.omega_qB, params.anharmonicity))
    static = np.diag(np.kron(ha, np.ones(LEVELS)) + np.kron(np.ones(LEVELS), hb))
    static = static + np.asarray(build_coupling(params.g)) - omega_shift * N_TOTAL
    return static + (w[..., None, None]) * N_A


def build_system_h(params: DeviceParams, omega_qA_now: float) -> QutritOperator:
    return QutritOperator(_system_matrix(params, omega_qA_now), kind="hermitian")


def subspace_h(params: DeviceParams, omega_qA_now: float) -> SubspaceHamiltonian:
    return SubspaceHamiltonian(
        delta_d=omega_qA_now - params.omega_qB + params.anharmonicity,
        offdiag=SQRT2 * params.g,
        offset=omega_qA_now + params.omega_qB,
    )


def polar_angle(delta_d, g: float):
    """Mixing angle of the |11>/|20> pair, tan(theta) = 2 sqrt2 g / delta_d.

    atan2 keeps theta on the continuous branch (0, pi) across resonance.
    """
    if not g > 0:
        raise ValueError("polar angle needs g > 0")
    return np.arctan2(2 * SQRT2 * g, delta_d)


def detuning_from_angle(theta, g: float):
    """Inverse of :func:`polar_angle`."""
    return 2 * SQRT2 * g / np.tan(theta)


def control_phase(times, theta, g: float) -> float:
    """Conditional phase picked up by |11> while adiabatically following theta(t).

    Trapezoidal quadrature of sqrt2 g tan(theta/2) over the sampled path.
    """
    times = np.asarray(times, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if times.shape != theta.shape:
        raise ValueError("times and theta must have the same shape")
    if np.any(theta <= 0) or np.any(theta >= math.pi):
        raise ValueError("theta must stay inside (0, pi); tan(theta/2) is singular at pi")
    return float(np.trapezoid(SQRT2 * g * np.tan(theta / 2), times))


def dressed_basis(params: DeviceParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis of the idle Hamiltonian, labelled by the bare states.

    Returns ``(V, energies)``: column ``k`` of ``V`` is the eigenstate adiabatically
    connected to bare state ``k`` (maximum overlap within its excitation block),
    with the phase fixed so that ``V[k, k]`` is real and positive.
    """
    h = _system_matrix(params, params.omega_qA)
    vecs = np.zeros((DIM, DIM), dtype=complex)
    energies = np.zeros(DIM)
    for n in np.unique(EXCITATION):
        idx = np.flatnonzero(EXCITATION == n)
        e, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        rows, cols = linear_sum_assignment(-np.abs(v) ** 2)
        for r, c in zip(rows, cols):
            col = v[:, c] * np.exp(-1j * np.angle(v[r, c]))
            vecs[idx, idx[r]] = col
            energies[idx[r]] = e[c]
    return vecs, energies


def unitary_exp(h: np.ndarray, t) -> np.ndarray:
    """exp(-i h t) for a hermitian matrix or a stack of them (one time per matrix)."""
    e, v = np.linalg.eigh(h)
    phase = np.exp(-1j * e * np.asarray(t, dtype=float)[..., None])
    return (v * phase[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
