"""
Simulated calibration experiments: swap spectroscopy and Ramsey fringes.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core import (
    BASIS_LABELS,
    DIM,
    SQRT2,
    TWO_PI,
    DeviceParams,
    _system_matrix,
    index,
    mhz,
    on_a,
)
from .dynamics import propagate_unitary, virtual_z_compensate
from .synth import Waveform

CONTROL_STATES = (0, 1)


@dataclass(frozen=True)
class ChevronScan:
    omega_qA: np.ndarray  # rad/ns, one per column of the chevron
    times: np.ndarray  # ns
    p11: np.ndarray  # shape (len(omega_qA), len(times))

    def __post_init__(self):
        p = np.asarray(self.p11)
        if p.shape != (len(self.omega_qA), len(self.times)):
            raise ValueError("p11 shape does not match the grids")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("probabilities outside [0, 1]")

    def to_csv(self, path) -> None:
        w, t = np.meshgrid(self.omega_qA / TWO_PI, self.times, indexing="ij")
        data = np.column_stack([w.ravel(), t.ravel(), np.asarray(self.p11).ravel()])
        np.savetxt(path, data, delimiter=",", header="omega_qA_GHz,t_ns,P11", comments="", fmt="%.12g")


@dataclass(frozen=True)
class RamseyTrace:
    phase: np.ndarray
    p1: np.ndarray
    control_state: int

    def to_csv(self, path) -> None:
        np.savetxt(
            path, np.column_stack([self.phase, self.p1]), delimiter=",", header="phase_rad,P1", comments="", fmt="%.12g"
        )


@dataclass(frozen=True)
class CouplingFit:
    g: float
    omega_res: float
    residual: float
    swap_frequencies: np.ndarray


def default_chevron_grids(params: DeviceParams) -> tuple[np.ndarray, np.ndarray]:
    """+-60 MHz around resonance in 41 steps, holds of 0-500 ns in 251 steps."""
    omega = params.omega_res + mhz(np.linspace(-60.0, 60.0, 41))
    return omega, np.linspace(0.0, 500.0, 251)


def _p11_column(params: DeviceParams, omega: float, times: np.ndarray, model: str) -> np.ndarray:
    if model == "full":
        h = _system_matrix(params, omega, omega_shift=0.5 * (omega + params.omega_qB))
        start = index(1, 1)
    elif model == "subspace":
        delta_d = omega - params.omega_qB + params.anharmonicity
        h = np.array([[0.0, SQRT2 * params.g], [SQRT2 * params.g, delta_d]])
        start = 0
    else:
        raise ValueError(f"unknown model {model!r}")
    e, v = np.linalg.eigh(h)
    amp = (v[start] * np.exp(-1j * np.outer(times, e))) @ v[start].conj()
    return np.clip(np.abs(amp) ** 2, 0.0, 1.0)


def swap_spectroscopy(
    params: DeviceParams,
    omega_qA=None,
    times=None,
    model: str = "full",
    threads: int = 1,
) -> ChevronScan:
    """P(|11>) after holding Q_A at each detuned frequency for each time.

    ``model="full"`` uses the two-qutrit Hamiltonian, ``"subspace"`` only the
    {|11>, |20>} pair.  The detuning pulse is an ideal rectangle.
    """
    default_w, default_t = default_chevron_grids(params)
    omega_qA = default_w if omega_qA is None else np.atleast_1d(np.asarray(omega_qA, dtype=float))
    times = default_t if times is None else np.asarray(times, dtype=float)
    if omega_qA.size == 0 or times.size == 0:
        raise ValueError("empty grid")

    def column(w):
        return _p11_column(params, w, times, model)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(column, omega_qA))
    else:
        rows = [column(w) for w in omega_qA]
    return ChevronScan(omega_qA, times, np.array(rows))


def extract_swap_frequency(p11, times, pad: int = 4) -> float:
    """Dominant oscillation frequency (rad/ns) of a uniformly sampled trace.

    The mean is removed and the trace zero-padded to ``pad`` times its length;
    the largest non-DC bin is refined by a parabola through it and its neighbours.
    """
    p = np.asarray(p11, dtype=float)
    times = np.asarray(times, dtype=float)
    if p.size < 32:
        raise ValueError("need at least 32 time samples")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
        raise ValueError("time samples must be uniformly spaced")
    x = p - p.mean()
    if np.ptp(x) < 1e-9:
        raise ValueError("trace is flat; no oscillation to extract")
    n = pad * p.size
    spectrum = np.abs(np.fft.rfft(x, n))
    k = int(np.argmax(spectrum[1:])) + 1
    shift = 0.0
    if 0 < k < spectrum.size - 1:
        a, b, c = spectrum[k - 1], spectrum[k], spectrum[k + 1]
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    return TWO_PI * (k + shift) / (n * dt[0])


def swap_frequency_model(omega_qA, g: float, omega_res: float):
    return np.sqrt(8 * g**2 + (np.asarray(omega_qA) - omega_res) ** 2)


def fit_coupling(scan: ChevronScan) -> CouplingFit:
    """Fit sqrt(8 g^2 + (omega_qA - omega_res)^2) to the per-column swap frequencies."""
    w = np.asarray(scan.omega_qA)
    if w.size < 3:
        raise ValueError("need at least three detuning columns to fit g and omega_res")
    freqs = np.array([extract_swap_frequency(row, scan.times) for row in scan.p11])
    k = int(np.argmin(freqs))
    if k == 0 or k == w.size - 1:
        raise ValueError("scan does not bracket the resonance; extend the detuning range")
    g0 = freqs[k] / (2 * SQRT2)
    scale = freqs[k]

    def resid(x):
        return (swap_frequency_model(w, x[0] * scale, w[k] + x[1] * scale) - freqs) / scale

    sol = least_squares(resid, [g0 / scale, 0.0], x_scale=1.0, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not sol.success:
        raise RuntimeError(f"coupling fit did not converge: {sol.message}")
    g, res = abs(sol.x[0]) * scale, w[k] + sol.x[1] * scale
    return CouplingFit(g=g, omega_res=res, residual=float(np.sqrt(np.mean(sol.fun**2)) * scale), swap_frequencies=freqs)


def _qubit_pulse(angle: float, axis_phase: float) -> np.ndarray:
    """Rotation by ``angle`` about cos(phi) X + sin(phi) Y on the 0-1 transition of a qutrit."""
    r = np.eye(3, dtype=complex)
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    r[:2, :2] = [[c, -1j * s * np.exp(-1j * axis_phase)], [-1j * s * np.exp(1j * axis_phase), c]]
    return r


def ramsey_phase_scan(
    params: DeviceParams,
    waveform: Waveform | None,
    control_state: int,
    phases=None,
    compensate: bool = True,
) -> RamseyTrace:
    """Q_A Ramsey fringe around the gate with Q_B prepared in ``control_state``.

    Both pi/2 pulses are instantaneous ideal rotations; the second one is
    applied about an axis rotated by each Ramsey phase.
    """
    if control_state not in CONTROL_STATES:
        raise ValueError("control_state must be 0 or 1")
    phases = np.linspace(0.0, TWO_PI, 48, endpoint=False) if phases is None else np.asarray(phases, dtype=float)
    if waveform is None or waveform.total_duration == 0:
        u = np.eye(DIM, dtype=complex)
    else:
        result = propagate_unitary(waveform, params.closed(), frame="dressed")
        u = np.asarray(virtual_z_compensate(result)) if compensate else np.asarray(result.unitary)
    psi = np.zeros(DIM, dtype=complex)
    psi[index(0, control_state)] = 1.0
    psi = u @ (on_a(_qubit_pulse(math.pi / 2, 0.0)) @ psi)
    excited = [BASIS_LABELS.index(f"1{b}") for b in range(3)]
    p1 = []
    for phi in phases:
        out = on_a(_qubit_pulse(math.pi / 2, phi)) @ psi
        p1.append(np.sum(np.abs(out[excited]) ** 2))
    return RamseyTrace(phases, np.clip(np.array(p1), 0.0, 1.0), control_state)


def fit_cosine_phase(trace: RamseyTrace) -> float:
    """Phase offset phi0 of A cos(phase - phi0) + C, linear least squares."""
    phase = np.asarray(trace.phase, dtype=float)
    if phase.size < 8:
        raise ValueError("need at least 8 Ramsey phases")
    if np.ptp(phase) < TWO_PI * (1 - 1.0 / phase.size) - 1e-9:
        raise ValueError("Ramsey phases must cover a full period")
    design = np.column_stack([np.cos(phase), np.sin(phase), np.ones_like(phase)])
    (a, b, _), *_ = np.linalg.lstsq(design, np.asarray(trace.p1, dtype=float), rcond=None)
    if math.hypot(a, b) < 0.05:
        raise ValueError(f"fringe contrast {math.hypot(a, b):.3f} too small to fit a phase")
    return float(np.angle(np.exp(1j * math.atan2(b, a))))
