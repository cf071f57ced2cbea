"""
Run configuration: a TOML file of flat dotted keys in laboratory units.

Every key is optional; missing keys take the defaults below, which describe
the measured device and the standard experiment grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import TWO_PI, DeviceParams

DEFAULTS: dict[str, object] = {
    "device.omega_qA_over_2pi_GHz": 5.52,
    "device.omega_qB_over_2pi_GHz": 4.97,
    "device.anharmonicity_over_2pi_MHz": -240.0,
    "device.g_over_2pi_MHz": 9.19,
    "device.t1_A_us": 14.4,
    "device.t1_B_us": 12.9,
    "device.t2star_A_us": 12.3,
    "device.t2star_B_us": 3.5,
    "trajectory.half_duration_ns": 20.0,
    "trajectory.segments_per_half": 2000,
    "trajectory.theta_f": "auto",
    "trajectory.target_phase_rad": math.pi,
    "trajectory.phase_model": "propagated",
    "chevron.detuning_span_MHz": 60.0,
    "chevron.detuning_points": 41,
    "chevron.t_max_ns": 500.0,
    "chevron.t_points": 251,
    "chevron.model": "full",
    "ramsey.phase_points": 48,
    "ramsey.compensate": True,
    "qpt.decoherence": True,
    "qpt.project": True,
    "rb.lengths": [1, 5, 10, 20, 40, 80],
    "rb.k": 40,
    "rb.cz": "waveform",
    "rb.decoherence": True,
    "rb.single_qubit_error": 0.0,
    "rb.clifford_depolarizing": 0.0,
    "run.seed": 1234,
    "run.threads": 1,
    "run.shots": 0,
    "run.out": "results",
}

CHOICES = {
    "trajectory.phase_model": ("propagated", "quadrature"),
    "chevron.model": ("full", "subspace"),
    "rb.cz": ("waveform", "ideal"),
}


class ConfigError(ValueError):
    pass


def _flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _check_type(key: str, value, default):
    if key == "trajectory.theta_f":
        if value == "auto" or (isinstance(value, (int, float)) and not isinstance(value, bool)):
            return value if value == "auto" else float(value)
        raise ConfigError(f"{key}: expected \"auto\" or a number, got {value!r}")
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    else:
        ok = isinstance(value, str)
    if not ok:
        raise ConfigError(f"{key}: expected {type(default).__name__}, got {value!r}")
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key}: must be one of {CHOICES[key]}, got {value!r}")
    return value


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        values = dict(DEFAULTS)
        for key, value in _flatten(mapping).items():
            if key not in DEFAULTS:
                raise ConfigError(f"{key}: unknown configuration key")
            values[key] = _check_type(key, value, DEFAULTS[key])
        cfg = cls(values)
        cfg.device()  # validate physical parameters early
        for key in ("chevron.detuning_points", "chevron.t_points", "ramsey.phase_points", "rb.k"):
            if values[key] < 1:
                raise ConfigError(f"{key}: must be positive")
        if not values["rb.lengths"]:
            raise ConfigError("rb.lengths: must not be empty")
        return cfg

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        return cls.from_mapping(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_toml(text)

    def __getitem__(self, key: str):
        return self.values[key]

    def override(self, **run_values) -> "RunConfig":
        values = dict(self.values)
        for key, value in run_values.items():
            if value is not None:
                values[f"run.{key}"] = value
        return RunConfig(values)

    def device(self) -> DeviceParams:
        v = self.values
        try:
            return DeviceParams.from_ghz(
                v["device.omega_qA_over_2pi_GHz"],
                v["device.omega_qB_over_2pi_GHz"],
                v["device.anharmonicity_over_2pi_MHz"],
                v["device.g_over_2pi_MHz"],
                t1_us=(v["device.t1_A_us"], v["device.t1_B_us"]),
                t2star_us=(v["device.t2star_A_us"], v["device.t2star_B_us"]),
            )
        except ValueError as exc:
            raise ConfigError(f"device: {exc}") from None


def device_to_config(params: DeviceParams) -> dict:
    """Inverse of RunConfig.device for the device.* keys."""
    return {
        "device.omega_qA_over_2pi_GHz": params.omega_qA / TWO_PI,
        "device.omega_qB_over_2pi_GHz": params.omega_qB / TWO_PI,
        "device.anharmonicity_over_2pi_MHz": params.anharmonicity / TWO_PI * 1e3,
        "device.g_over_2pi_MHz": params.g / TWO_PI * 1e3,
        "device.t1_A_us": params.t1_A / 1e3,
        "device.t1_B_us": params.t1_B / 1e3,
        "device.t2star_A_us": params.t2star_A / 1e3,
        "device.t2star_B_us": params.t2star_B / 1e3,
    }


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, list):
        return "[" + ", ".join(str(v) for v in value) + "]"
    return str(value)


def default_config_text() -> str:
    lines = ["# stacz run configuration (flat dotted keys; all optional)"]
    section = None
    for key, value in DEFAULTS.items():
        head = key.split(".")[0]
        if head != section:
            lines.append("")
            section = head
        lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"
