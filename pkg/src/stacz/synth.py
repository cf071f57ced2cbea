"""
Shortcut-to-adiabaticity waveform synthesis for the |11>/|20> CZ gate.

The reference trajectory is a polar angle theta(t) whose rate follows a
Hanning window, ramping from the idle angle theta_i up to theta_f in time T
and straight back down in another T.  Adding the counter-diabatic term and
rotating it onto the real axis gives a 2x2 Hamiltonian with a time-dependent
coupling Omega(t) >= sqrt2 g.  Because the real coupling is fixed, each of the
2N segments is rescaled: the Hamiltonian is multiplied by s_m = sqrt2 g / Omega
and its duration divided by s_m, which leaves every segment propagator
unchanged while pinning the off-diagonal term at sqrt2 g.  The only remaining
knob is the Q_A frequency, read off the rescaled diagonal.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .core import SQRT2, TWO_PI, DeviceParams, polar_angle

WINDOWS = ("hanning",)


@dataclass(frozen=True)
class TrajectorySpec:
    theta_i: float
    theta_f: float
    half_duration: float
    segments_per_half: int = 2000
    window: str = "hanning"

    def __post_init__(self):
        if not 0 < self.theta_i <= self.theta_f < math.pi:
            raise ValueError(
                f"need 0 < theta_i <= theta_f < pi, got theta_i={self.theta_i}, theta_f={self.theta_f}"
            )
        if not self.half_duration > 0:
            raise ValueError("half_duration must be positive")
        if self.segments_per_half < 100:
            raise ValueError("segments_per_half must be at least 100")
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; available: {WINDOWS}")

    @classmethod
    def for_device(
        cls, params: DeviceParams, theta_f: float, half_duration: float = 20.0, segments_per_half: int = 2000
    ) -> "TrajectorySpec":
        """Trajectory starting from the idle polar angle of ``params``."""
        return cls(idle_angle(params), theta_f, half_duration, segments_per_half)


def idle_angle(params: DeviceParams) -> float:
    delta_d = params.omega_qA - params.omega_qB + params.anharmonicity
    return float(polar_angle(delta_d, params.g))


def _hanning_rates(t, spec: TrajectorySpec):
    """(theta_dot, theta_ddot) of the up-down Hanning trajectory."""
    T = spec.half_duration
    amp = (spec.theta_f - spec.theta_i) / T
    first = t <= T
    tau = np.where(first, t, t - T)
    sign = np.where(first, 1.0, -1.0)
    x = TWO_PI * tau / T
    return sign * amp * (1 - np.cos(x)), sign * amp * (TWO_PI / T) * np.sin(x)


def theta_dot_hanning(t, spec: TrajectorySpec):
    """Rate of change of the polar angle; zero at t = 0, T and 2T."""
    t = np.asarray(t, dtype=float)
    eps = 1e-12 * spec.half_duration
    if np.any(t < -eps) or np.any(t > 2 * spec.half_duration + eps):
        raise ValueError(f"t must lie in [0, {2 * spec.half_duration}]")
    rate, _ = _hanning_rates(np.clip(t, 0.0, 2 * spec.half_duration), spec)
    return rate if rate.ndim else float(rate)


def counter_diabatic_offdiag(theta_dot):
    """Magnitude of the imaginary |11><20| coupling of the counter-diabatic term."""
    return np.asarray(theta_dot) / 2


def effective_rabi(theta_dot, g: float):
    if not g > 0:
        raise ValueError("g must be positive")
    return np.sqrt(2 * g**2 + np.asarray(theta_dot) ** 2 / 4)


def azimuth(theta_dot, g: float):
    if not g > 0:
        raise ValueError("g must be positive")
    return np.arctan(-np.asarray(theta_dot) / (2 * SQRT2 * g))


def azimuth_rate(theta_dot, theta_ddot, g: float):
    """Closed-form time derivative of :func:`azimuth`."""
    return -np.asarray(theta_ddot) * 2 * SQRT2 * g / (8 * g**2 + np.asarray(theta_dot) ** 2)


@dataclass(frozen=True)
class TrajectorySamples:
    """Reference-trajectory quantities on the uniform base grid.

    ``t`` holds nodes and segment midpoints interleaved (step dt/2); even
    indices are segment boundaries, odd indices segment midpoints.
    """

    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    delta_d: np.ndarray
    phi_dot: np.ndarray
    rabi: np.ndarray
    scale: np.ndarray
    dt: float

    @property
    def nodes(self) -> slice:
        return slice(0, None, 2)

    @property
    def midpoints(self) -> slice:
        return slice(1, None, 2)


def trajectory_samples(params: DeviceParams, spec: TrajectorySpec) -> TrajectorySamples:
    n = spec.segments_per_half
    T = spec.half_duration
    t = np.linspace(0.0, 2 * T, 4 * n + 1)
    rate, accel = _hanning_rates(t, spec)
    theta = spec.theta_i + cumulative_trapezoid(rate, t, initial=0.0)
    if np.any(theta <= 0) or np.any(theta >= math.pi):
        bad = t[(theta <= 0) | (theta >= math.pi)][0]
        raise ValueError(f"trajectory leaves (0, pi) at t={bad:.4f} ns; tan(theta) is singular there")
    g = params.g
    rabi = effective_rabi(rate, g)
    return TrajectorySamples(
        t=t,
        theta=theta,
        theta_dot=rate,
        theta_ddot=accel,
        delta_d=2 * SQRT2 * g / np.tan(theta),
        phi_dot=azimuth_rate(rate, accel, g),
        rabi=rabi,
        scale=SQRT2 * g / rabi,
        dt=T / n,
    )


@dataclass(frozen=True)
class Waveform:
    """Rescaled Q_A frequency command.

    ``tau``/``omega_qA`` are the node samples (segment boundaries); the pulse
    actually played is piecewise constant with ``segment_omega`` held for
    ``segment_durations``.  Frequencies in rad/ns, times in ns.
    """

    tau: np.ndarray
    omega_qA: np.ndarray
    segment_durations: np.ndarray
    segment_omega: np.ndarray
    params: DeviceParams | None = None
    spec: TrajectorySpec | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if tau.size and (tau[0] != 0.0 or np.any(np.diff(tau) <= 0)):
            raise ValueError("tau must start at 0 and increase strictly")
        if len(self.segment_durations) != len(self.segment_omega):
            raise ValueError("segment arrays differ in length")

    @property
    def total_duration(self) -> float:
        return float(np.sum(self.segment_durations))

    @classmethod
    def rectangle(cls, omega_qA: float, duration: float, params: DeviceParams | None = None) -> "Waveform":
        """Constant frequency held for ``duration`` (a zero duration gives an empty pulse)."""
        if duration == 0:
            return cls(np.zeros(1), np.array([omega_qA]), np.zeros(0), np.zeros(0), params)
        return cls(
            np.array([0.0, duration]), np.array([omega_qA, omega_qA]), np.array([duration]), np.array([omega_qA]), params
        )

    def resample(self, step: float) -> tuple[np.ndarray, np.ndarray]:
        """Uniform-grid samples via monotone cubic interpolation of the nodes."""
        grid = np.arange(0.0, self.total_duration + 0.5 * step, step)
        grid = grid[grid <= self.total_duration + 1e-12]
        return grid, PchipInterpolator(self.tau, self.omega_qA)(grid)

    def to_csv(self, path, step: float | None = None) -> None:
        tau, omega = (self.tau, self.omega_qA) if step is None else self.resample(step)
        data = np.column_stack([tau, omega / TWO_PI])
        np.savetxt(path, data, delimiter=",", header="tau_ns,omega_qA_over_2pi_GHz", comments="", fmt="%.12g")

    def to_dict(self) -> dict:
        return {
            "tau_ns": self.tau.tolist(),
            "omega_qA_over_2pi_GHz": (self.omega_qA / TWO_PI).tolist(),
            "segment_durations_ns": np.asarray(self.segment_durations).tolist(),
            "segment_omega_qA_over_2pi_GHz": (np.asarray(self.segment_omega) / TWO_PI).tolist(),
            "total_duration_ns": self.total_duration,
            "device": None if self.params is None else asdict(self.params),
            "trajectory": None if self.spec is None else asdict(self.spec),
            "metadata": self.metadata,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, path) -> "Waveform":
        d = json.loads(Path(path).read_text())
        return cls(
            tau=np.array(d["tau_ns"]),
            omega_qA=np.array(d["omega_qA_over_2pi_GHz"]) * TWO_PI,
            segment_durations=np.array(d["segment_durations_ns"]),
            segment_omega=np.array(d["segment_omega_qA_over_2pi_GHz"]) * TWO_PI,
            params=None if d["device"] is None else DeviceParams(**d["device"]),
            spec=None if d["trajectory"] is None else TrajectorySpec(**d["trajectory"]),
            metadata=d.get("metadata", {}),
        )


def synthesize(params: DeviceParams, spec: TrajectorySpec) -> Waveform:
    params.require_operating_regime()
    if abs(spec.theta_i - idle_angle(params)) > 1e-9:
        raise ValueError(
            f"theta_i={spec.theta_i} does not match the idle polar angle {idle_angle(params)} of the device"
        )
    s = trajectory_samples(params, spec)
    base_offset = params.omega_qB - params.anharmonicity
    omega = s.scale * (s.delta_d + s.phi_dot) + base_offset
    mid = s.midpoints
    durations = s.dt / s.scale[mid]
    tau = np.concatenate([[0.0], np.cumsum(durations)])
    return Waveform(
        tau=tau,
        omega_qA=omega[s.nodes],
        segment_durations=durations,
        segment_omega=omega[mid],
        params=params,
        spec=spec,
    )


def segment_hamiltonians(params: DeviceParams, spec: TrajectorySpec):
    """Per-segment rotated Hamiltonians before and after rescaling.

    Returns ``(h_base, dt, h_rescaled, dtau)``: stacks of 2x2 matrices in the
    {|11>, |20>} basis with the |11> energy removed, the uniform base step and
    the rescaled segment durations.
    """
    s = trajectory_samples(params, spec)
    mid = s.midpoints
    rabi, diag, scale = s.rabi[mid], (s.delta_d + s.phi_dot)[mid], s.scale[mid]
    n = rabi.size
    h_base = np.zeros((n, 2, 2))
    h_base[:, 0, 1] = h_base[:, 1, 0] = rabi
    h_base[:, 1, 1] = diag
    h_new = h_base * scale[:, None, None]
    return h_base, s.dt, h_new, s.dt / scale


def quadrature_phase(params: DeviceParams, spec: TrajectorySpec) -> float:
    """Adiabatic control phase of the reference trajectory (exact for ideal STA tracking)."""
    s = trajectory_samples(params, spec)
    return float(np.trapezoid(SQRT2 * params.g * np.tan(s.theta / 2), s.t))


def trajectory_phase(params: DeviceParams, spec: TrajectorySpec, model: str = "propagated") -> float:
    """Conditional phase produced by the trajectory.

    ``"quadrature"`` integrates sqrt2 g tan(theta/2) along the reference path, the
    two-level prediction.  ``"propagated"`` synthesizes the waveform and reads the
    conditional phase arg(U00 U11 / U01 U10) off the full two-qutrit propagator in
    the dressed idle frame; this includes the |02> level and the static idle
    coupling, which the two-level formula omits.
    """
    if model == "quadrature":
        return quadrature_phase(params, spec)
    if model == "propagated":
        from .dynamics import conditional_phase, propagate_unitary

        result = propagate_unitary(synthesize(params, spec), params.closed(), frame="dressed")
        return conditional_phase(result.unitary)
    raise ValueError(f"unknown phase model {model!r}")


def solve_theta_f(
    params: DeviceParams,
    half_duration: float,
    target_phase: float = math.pi,
    *,
    segments_per_half: int = 2000,
    model: str = "propagated",
    scan_points: int = 24,
    tol: float = 1e-9,
) -> float:
    """Maximum polar angle for which the trajectory produces ``target_phase``.

    A coarse scan of theta_f brackets the first crossing of the (unwrapped)
    phase through the target, then Brent's method refines it.
    """
    if not 0 < target_phase < TWO_PI:
        raise ValueError("target phase must lie in (0, 2 pi)")
    theta_i = idle_angle(params)

    def phase(theta_f):
        spec = TrajectorySpec(theta_i, theta_f, half_duration, segments_per_half)
        return trajectory_phase(params, spec, model)

    grid = np.linspace(theta_i, math.pi - 0.05, scan_points)
    values = np.unwrap([phase(x) for x in grid])
    above = np.flatnonzero(values >= target_phase)
    if above.size == 0 or above[0] == 0:
        raise ValueError(
            f"no theta_f in ({theta_i:.4f}, {grid[-1]:.4f}) reaches phase {target_phase:.4f} "
            f"(phase spans {values[0]:.4f}..{values.max():.4f}); lengthen the gate or lower the target"
        )
    a, b = grid[above[0] - 1], grid[above[0]]
    if model == "quadrature":
        return brentq(lambda x: phase(x) - target_phase, a, b, xtol=tol)
    # the bracket is narrow enough that the wrapped residual is continuous in it
    return brentq(lambda x: np.angle(np.exp(1j * (phase(x) - target_phase))), a, b, xtol=tol)
