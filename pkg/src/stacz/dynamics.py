"""
Propagation of the two-qutrit system under a synthesized waveform.

Internally everything runs in a frame rotating at one common frequency
omega_bar for both qutrits.  The coupling conserves the total excitation
number, so subtracting omega_bar * N is an exact frame change that leaves
each segment Hamiltonian time independent.  Results are reported in one of
two frames:

``"dressed"`` (default)
    basis = eigenstates of the idle Hamiltonian labelled by the bare state
    they connect to, interaction picture of the idle Hamiltonian.  Idling
    is the identity in this frame, so it is the frame that gate fidelities
    refer to.
``"bare"``
    bare product basis, doubly rotating at the bare idle frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .core import (
    COMPUTATIONAL,
    DIM,
    EXCITATION,
    LOWERING,
    N_A,
    N_B,
    NUMBER,
    DeviceParams,
    QutritOperator,
    QutritState,
    _system_matrix,
    dressed_basis,
    on_a,
    on_b,
    unitary_exp,
)
from .synth import Waveform

FRAMES = ("dressed", "bare")
_NA = np.diag(N_A)
_NB = np.diag(N_B)


def _common_frequency(params: DeviceParams) -> float:
    return 0.5 * (params.omega_qA + params.omega_qB)


def _frame_maps(params: DeviceParams, duration: float, frame: str) -> tuple[np.ndarray, np.ndarray]:
    """(left, right) with U_frame = left @ U_common @ right."""
    wbar = _common_frequency(params)
    if frame == "bare":
        left = np.diag(np.exp(1j * ((params.omega_qA - wbar) * _NA + (params.omega_qB - wbar) * _NB) * duration))
        return left, np.eye(DIM)
    if frame == "dressed":
        vecs, energies = dressed_basis(params)
        left = np.exp(1j * (energies - wbar * EXCITATION) * duration)[:, None] * vecs.conj().T
        return left, vecs
    raise ValueError(f"unknown frame {frame!r}; choose from {FRAMES}")


def _chain(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product mats[-1] @ ... @ mats[0] by pairwise reduction."""
    if len(mats) == 0:
        raise ValueError("empty product")
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[0:-1:2], tail])
        else:
            mats = mats[1::2] @ mats[0::2]
    return mats[0]


def common_frame_propagator(durations, omegas, params: DeviceParams) -> np.ndarray:
    """Product of exact segment exponentials in the common rotating frame."""
    durations = np.asarray(durations, dtype=float)
    if durations.size == 0:
        return np.eye(DIM, dtype=complex)
    h = _system_matrix(params, np.asarray(omegas, dtype=float), _common_frequency(params))
    return _chain(unitary_exp(h, durations))


@dataclass(frozen=True)
class PropagationResult:
    """Gate realised by one waveform.

    ``phase_A``/``phase_B`` are the accumulated single-qubit phases
    arg(<10|U|10>/<00|U|00>) and arg(<01|U|01>/<00|U|00>).
    """

    unitary: QutritOperator
    leakage: float
    phase_A: float
    phase_B: float
    duration: float
    frame: str


def leakage(u: np.ndarray) -> float:
    """Worst-case population leaving the computational subspace."""
    comp = list(COMPUTATIONAL)
    kept = np.sum(np.abs(u[np.ix_(comp, comp)]) ** 2, axis=0)
    return float(np.clip(1.0 - kept.min(), 0.0, 1.0))


def propagate_unitary(waveform: Waveform, params: DeviceParams, frame: str = "dressed") -> PropagationResult:
    u_common = common_frame_propagator(waveform.segment_durations, waveform.segment_omega, params)
    left, right = _frame_maps(params, waveform.total_duration, frame)
    u = left @ u_common @ right
    d = np.diag(u)
    return PropagationResult(
        unitary=QutritOperator(u, kind="unitary"),
        leakage=leakage(u),
        phase_A=float(np.angle(d[3] / d[0])),
        phase_B=float(np.angle(d[1] / d[0])),
        duration=waveform.total_duration,
        frame=frame,
    )


def conditional_phase(u) -> float:
    """arg(U00 U11 / (U01 U10)) on the computational diagonal, in (-pi, pi]."""
    d = np.diag(np.asarray(u))
    return float(np.angle(d[0] * d[4] / (d[1] * d[3])))


def virtual_z(phase_A: float, phase_B: float, global_phase: float = 0.0) -> np.ndarray:
    """Frame update exp(-i phase_A n_A) exp(-i phase_B n_B), times exp(-i global_phase)."""
    return np.diag(np.exp(-1j * (phase_A * _NA + phase_B * _NB + global_phase)))


def virtual_z_compensate(result: PropagationResult) -> QutritOperator:
    """Remove single-qubit dynamic phases so <00|, <01|, <10| diagonal entries are real positive."""
    u = np.asarray(result.unitary)
    for label, k in (("01", 1), ("10", 3)):
        if abs(u[k, k]) < 0.1:
            raise ValueError(f"|<{label}|U|{label}>| = {abs(u[k, k]):.3f}; gate too broken to compensate")
    z = virtual_z(result.phase_A, result.phase_B, float(np.angle(u[0, 0])))
    return QutritOperator(z @ u, kind="unitary")


# -- open-system dynamics -------------------------------------------------


def dephasing_time(t1: float, t2star: float) -> float:
    """Pure-dephasing time from 1/T_phi = 1/T2* - 1/(2 T1)."""
    rate = 1.0 / t2star - 0.5 / t1
    if rate < -1e-15:
        raise ValueError(f"T2*={t2star} and T1={t1} imply a negative pure-dephasing rate")
    return math.inf if rate <= 0 else 1.0 / rate


def collapse_operators(params: DeviceParams) -> list[np.ndarray]:
    """Per-qubit relaxation and dephasing operators.

    Relaxation uses the three-level lowering operator, so |2> -> |1> decays
    twice as fast as |1> -> |0>.  Dephasing uses sqrt(2/T_phi) times the level
    number operator, which makes the 0-1 coherence decay as exp(-t/T2*) and the
    0-2 coherence four times faster in rate.
    """
    ops = []
    for embed, t1, t2 in ((on_a, params.t1_A, params.t2star_A), (on_b, params.t1_B, params.t2star_B)):
        if math.isfinite(t1):
            ops.append(math.sqrt(1.0 / t1) * embed(LOWERING))
        t_phi = dephasing_time(t1, t2)
        if math.isfinite(t_phi):
            ops.append(math.sqrt(2.0 / t_phi) * embed(NUMBER))
    return ops


def dissipator(collapse: list[np.ndarray]) -> np.ndarray:
    """Superoperator of sum_k L rho L^+ - {L^+L, rho}/2 for row-major vec(rho)."""
    eye = np.eye(DIM)
    out = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for op in collapse:
        lol = op.conj().T @ op
        out += np.kron(op, op.conj()) - 0.5 * (np.kron(lol, eye) + np.kron(eye, lol.T))
    return out


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[-1])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _coherence_blocks() -> list[np.ndarray]:
    # H conserves excitation number and every collapse operator shifts bra and
    # ket alike, so the generator never mixes different coherence orders n_i - n_j
    order = (EXCITATION[:, None] - EXCITATION[None, :]).ravel()
    return [np.flatnonzero(order == k) for k in np.unique(order)]


def common_frame_superoperator(durations, omegas, params: DeviceParams) -> np.ndarray:
    """Exact product of per-segment Lindblad exponentials, common rotating frame."""
    durations = np.asarray(durations, dtype=float)
    n2 = DIM * DIM
    if durations.size == 0:
        return np.eye(n2, dtype=complex)
    h = _system_matrix(params, np.asarray(omegas, dtype=float), _common_frequency(params))
    diss = dissipator(collapse_operators(params))
    out = np.zeros((n2, n2), dtype=complex)
    for block in _coherence_blocks():
        i, j = np.divmod(block, DIM)
        same_i = (i[:, None] == i[None, :]).astype(float)
        same_j = (j[:, None] == j[None, :]).astype(float)
        gen = -1j * (h[:, i[:, None], i[None, :]] * same_j - same_i * h[:, j[None, :], j[:, None]])
        gen = gen + diss[np.ix_(block, block)]
        out[np.ix_(block, block)] = _chain(scipy.linalg.expm(gen * durations[:, None, None]))
    return out


def _superop_frame(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.kron(left, left.conj()), np.kron(right, right.conj())


def lindblad_superoperator(waveform: Waveform, params: DeviceParams, frame: str = "dressed") -> np.ndarray:
    """81x81 map vec(rho_0) -> vec(rho_final), both in ``frame`` (row-major vec)."""
    s_common = common_frame_superoperator(waveform.segment_durations, waveform.segment_omega, params)
    left, right = _superop_frame(*_frame_maps(params, waveform.total_duration, frame))
    return left @ s_common @ right


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.shape != (DIM, DIM):
            raise ValueError(f"expected a {DIM}x{DIM} density matrix")
        if np.abs(rho - rho.conj().T).max() > 1e-9:
            raise ValueError("density matrix is not hermitian")
        if abs(np.trace(rho) - 1) > 1e-9:
            raise ValueError(f"density matrix trace {np.trace(rho).real} differs from 1")
        if np.linalg.eigvalsh(rho).min() < -1e-8:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        return cls(np.outer(psi, psi.conj()))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype) if copy else np.asarray(self.matrix, dtype=dtype)


def _lindblad_rhs(h: np.ndarray, collapse: list[np.ndarray]):
    terms = [(op, op.conj().T, op.conj().T @ op) for op in collapse]

    def rhs(rho):
        out = -1j * (h @ rho - rho @ h)
        for op, op_dag, lol in terms:
            out += op @ rho @ op_dag - 0.5 * (lol @ rho + rho @ lol)
        return out

    return rhs


def _rk4_common(rho, durations, omegas, params: DeviceParams, max_step: float):
    collapse = collapse_operators(params)
    hs = _system_matrix(params, np.asarray(omegas, dtype=float), _common_frequency(params))
    for h, dur in zip(hs, durations):
        f = _lindblad_rhs(h, collapse)
        n = max(1, math.ceil(dur / max_step))
        step = dur / n
        for _ in range(n):
            k1 = f(rho)
            k2 = f(rho + 0.5 * step * k1)
            k3 = f(rho + 0.5 * step * k2)
            k4 = f(rho + step * k3)
            rho = rho + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def propagate_lindblad(
    waveform: Waveform,
    params: DeviceParams,
    rho0: DensityMatrix,
    frame: str = "dressed",
    method: str = "expm",
    max_step: float = 0.01,
) -> DensityMatrix:
    """Evolve ``rho0`` (given in ``frame``) through the waveform with decoherence.

    ``method="expm"`` exponentiates the piecewise-constant Lindbladian exactly;
    ``method="rk4"`` integrates with fixed classical Runge-Kutta steps no longer
    than ``max_step`` ns.
    """
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(rho0)
    left, right = _frame_maps(params, waveform.total_duration, frame)
    rho = right @ np.asarray(rho0) @ right.conj().T
    if method == "expm":
        s = common_frame_superoperator(waveform.segment_durations, waveform.segment_omega, params)
        rho = (s @ rho.reshape(-1)).reshape(DIM, DIM)
    elif method == "rk4":
        rho = _rk4_common(rho, waveform.segment_durations, waveform.segment_omega, params, max_step)
    else:
        raise ValueError(f"unknown method {method!r}")
    rho = left @ rho @ left.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def integrate_adaptive_oracle(
    waveform: Waveform,
    params: DeviceParams,
    psi0: QutritState,
    frame: str = "dressed",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> QutritState:
    """Reference Schrodinger integration with an adaptive 8th-order Runge-Kutta.

    The frequency command is a monotone cubic through the waveform nodes, i.e.
    the smooth pulse the piecewise-constant segments approximate.
    """
    left, right = _frame_maps(params, waveform.total_duration, frame)
    psi = right @ np.asarray(psi0)
    duration = waveform.total_duration
    if duration > 0:
        omega = PchipInterpolator(waveform.tau, waveform.omega_qA)
        wbar = _common_frequency(params)

        def rhs(t, y):
            return -1j * (_system_matrix(params, float(omega(t)), wbar) @ y)

        sol = solve_ivp(rhs, (0.0, duration), psi, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"adaptive integration failed: {sol.message}")
        psi = sol.y[:, -1]
    psi = left @ psi
    return QutritState(psi / np.linalg.norm(psi))


# -- gate as a channel on the computational subspace ----------------------


_COMP_PAIRS = np.array([a * DIM + b for a in COMPUTATIONAL for b in COMPUTATIONAL])


class ComputationalChannel:
    """Gate map restricted to the two-qubit computational block.

    Stored as a 16x16 superoperator acting on row-major vec of 4x4 density
    matrices.  Population that leaks out of the block is dropped, so the map
    is trace decreasing when leakage occurs.
    """

    def __init__(self, superop: np.ndarray):
        self.superop = np.asarray(superop, dtype=complex)
        if self.superop.shape != (16, 16):
            raise ValueError("expected a 16x16 superoperator")

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "ComputationalChannel":
        u = np.asarray(u)
        if u.shape == (DIM, DIM):
            u = u[np.ix_(COMPUTATIONAL, COMPUTATIONAL)]
        return cls(np.kron(u, u.conj()))

    @classmethod
    def from_full_superop(cls, superop: np.ndarray) -> "ComputationalChannel":
        return cls(np.asarray(superop)[np.ix_(_COMP_PAIRS, _COMP_PAIRS)])

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return (self.superop @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(4, 4)

    def then(self, other: "ComputationalChannel") -> "ComputationalChannel":
        """This channel followed by ``other``."""
        return ComputationalChannel(other.superop @ self.superop)

    def average_gate_fidelity(self, target: np.ndarray) -> float:
        target = np.asarray(target)
        d = target.shape[0]
        s_target = np.kron(target, target.conj())
        f_pro = np.real(np.trace(s_target.conj().T @ self.superop)) / d**2
        survival = np.real(np.trace(self(np.eye(d) / d)))
        return float((d * f_pro + survival) / (d + 1))


def gate_channel(
    waveform: Waveform, params: DeviceParams, decoherence: bool = True, compensate: bool = True
) -> ComputationalChannel:
    """Computational-block channel of the waveform in the dressed frame.

    With ``compensate`` the virtual-Z corrections found from the closed-system
    propagation are applied after the gate, as done on hardware.
    """
    closed = propagate_unitary(waveform, params.closed(), frame="dressed")
    if decoherence:
        channel = ComputationalChannel.from_full_superop(lindblad_superoperator(waveform, params, frame="dressed"))
    else:
        channel = ComputationalChannel.from_unitary(np.asarray(closed.unitary))
    if compensate:
        u00 = np.asarray(closed.unitary)[0, 0]
        z = virtual_z(closed.phase_A, closed.phase_B, float(np.angle(u00)))
        channel = channel.then(ComputationalChannel.from_unitary(z))
    return channel
