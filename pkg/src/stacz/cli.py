"""Command-line entry point: ``stacz <experiment> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import datetime
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import benchmarking as rb
from .config import ConfigError, RunConfig, default_config_text
from .core import TWO_PI, mhz
from .dynamics import conditional_phase, gate_channel, propagate_unitary
from .experiments import fit_coupling, fit_cosine_phase, ramsey_phase_scan, swap_spectroscopy
from .synth import TrajectorySpec, idle_angle, solve_theta_f, synthesize
from .tomography import ideal_cz_chi, process_fidelity, process_tomography, project_physical

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FIT = 2, 3, 4
COMMANDS = ("synthesize", "chevron", "ramsey", "qpt", "rb", "rb-interleaved")
CZ = np.diag([1, 1, 1, -1]).astype(complex)
log = logging.getLogger("stacz")


class FitError(RuntimeError):
    pass


def _fit(fn, *args):
    try:
        return fn(*args)
    except (ValueError, RuntimeError) as exc:
        raise FitError(str(exc)) from None


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _waveform(cfg: RunConfig):
    params = cfg.device()
    half = cfg["trajectory.half_duration_ns"]
    n = cfg["trajectory.segments_per_half"]
    target = cfg["trajectory.target_phase_rad"]
    theta_f = cfg["trajectory.theta_f"]
    if theta_f == "auto":
        theta_f = solve_theta_f(params.closed(), half, target, segments_per_half=n, model=cfg["trajectory.phase_model"])
    spec = TrajectorySpec(idle_angle(params), theta_f, half, n)
    wave = synthesize(params, spec)
    closed = propagate_unitary(wave, params.closed())
    phase = conditional_phase(closed.unitary)
    info = {
        "theta_i": spec.theta_i,
        "theta_f": spec.theta_f,
        "duration_ns": wave.total_duration,
        "conditional_phase_rad": phase,
        "solver_residual_rad": float(np.angle(np.exp(1j * (phase - target)))),
        "leakage": closed.leakage,
    }
    return params, wave, info


def cmd_synthesize(cfg: RunConfig, out: Path) -> dict:
    _, wave, info = _waveform(cfg)
    wave.to_csv(out / "waveform.csv")
    wave.to_json(out / "waveform.json")
    print(f"theta_f = {info['theta_f']:.6f} rad, duration = {info['duration_ns']:.3f} ns, "
          f"residual = {info['solver_residual_rad']:.2e} rad")
    return info


def cmd_chevron(cfg: RunConfig, out: Path) -> dict:
    params = cfg.device().closed()
    span = cfg["chevron.detuning_span_MHz"]
    omega = params.omega_res + mhz(np.linspace(-span, span, cfg["chevron.detuning_points"]))
    times = np.linspace(0.0, cfg["chevron.t_max_ns"], cfg["chevron.t_points"])
    scan = swap_spectroscopy(params, omega, times, model=cfg["chevron.model"], threads=cfg["run.threads"])
    scan.to_csv(out / "chevron.csv")
    fit = _fit(fit_coupling, scan)
    g_mhz = fit.g / TWO_PI * 1e3
    print(f"fitted g/2pi = {g_mhz:.4f} MHz, omega_res/2pi = {fit.omega_res / TWO_PI:.6f} GHz")
    return {
        "g_fit_over_2pi_MHz": g_mhz,
        "g_relative_error": fit.g / params.g - 1,
        "omega_res_fit_over_2pi_GHz": fit.omega_res / TWO_PI,
        "omega_res_offset_MHz": (fit.omega_res - params.omega_res) / TWO_PI * 1e3,
        "fit_rms_residual_MHz": fit.residual / TWO_PI * 1e3,
    }


def cmd_ramsey(cfg: RunConfig, out: Path) -> dict:
    params, wave, info = _waveform(cfg)
    phases = np.linspace(0.0, TWO_PI, cfg["ramsey.phase_points"], endpoint=False)
    fitted = {}
    for control in (0, 1):
        trace = ramsey_phase_scan(params, wave, control, phases, compensate=cfg["ramsey.compensate"])
        trace.to_csv(out / f"ramsey_control{control}.csv")
        fitted[control] = _fit(fit_cosine_phase, trace)
    diff = float(np.angle(np.exp(1j * (fitted[1] - fitted[0]))))
    print(f"Ramsey phase difference = {diff:.4f} rad")
    return {"phase_control0_rad": fitted[0], "phase_control1_rad": fitted[1], "phase_difference_rad": diff,
            "theta_f": info["theta_f"]}


def cmd_qpt(cfg: RunConfig, out: Path) -> dict:
    params, wave, info = _waveform(cfg)
    rng = np.random.default_rng(cfg["run.seed"])
    channel = gate_channel(wave, params, decoherence=cfg["qpt.decoherence"])
    chi = process_tomography(channel, shots=cfg["run.shots"], rng=rng)
    chi.to_json(out / "chi.json")
    chi.to_csv(out / "chi_abs.csv")
    summary = {
        "F_P": process_fidelity(chi, ideal_cz_chi()),
        "average_gate_fidelity": channel.average_gate_fidelity(CZ),
        "leakage": info["leakage"],
        "duration_ns": info["duration_ns"],
        "decoherence": cfg["qpt.decoherence"],
    }
    if cfg["qpt.project"]:
        phys = project_physical(chi)
        phys.to_json(out / "chi_projected.json")
        summary["F_P_projected"] = process_fidelity(phys, ideal_cz_chi())
    print(f"F_P = {summary['F_P']:.5f}")
    return summary


def _rb_setup(cfg: RunConfig):
    cz = None
    extra = {}
    if cfg["rb.cz"] == "waveform":
        params, wave, _ = _waveform(cfg)
        cz = gate_channel(wave, params, decoherence=cfg["rb.decoherence"])
        extra["cz_average_gate_fidelity"] = cz.average_gate_fidelity(CZ)
    noise = rb.GateNoise(cz, cfg["rb.single_qubit_error"], cfg["rb.clifford_depolarizing"])
    return rb.build_clifford_group(), noise, cz, extra


def _rb_fit_summary(run: rb.RBRun, name: str) -> dict:
    a0, b0, p = _fit(rb.fit_power_law, run)
    return {f"{name}_A0": a0, f"{name}_B0": b0, f"p_{name}": p, f"p_{name}_stderr": run.p_stderr}


def cmd_rb(cfg: RunConfig, out: Path) -> dict:
    group, noise, _, summary = _rb_setup(cfg)
    run = rb.rb_reference(group, noise, cfg["rb.lengths"], cfg["rb.k"], cfg["run.seed"],
                          threads=cfg["run.threads"], shots=cfg["run.shots"])
    summary.update(_rb_fit_summary(run, "ref"))
    run.to_json(out / "rb_reference.json")
    run.to_csv(out / "rb_reference.csv")
    summary["r_ref"] = rb.average_error(summary["p_ref"])
    summary["survival_mean"] = run.mean.tolist()
    print(f"p_ref = {summary['p_ref']:.5f}, r_ref = {summary['r_ref']:.5f}")
    return summary


def cmd_rb_interleaved(cfg: RunConfig, out: Path) -> dict:
    group, noise, cz, summary = _rb_setup(cfg)
    kwargs = dict(threads=cfg["run.threads"], shots=cfg["run.shots"])
    ref = rb.rb_reference(group, noise, cfg["rb.lengths"], cfg["rb.k"], cfg["run.seed"], **kwargs)
    inter = rb.rb_interleaved(group, noise, cz, cfg["rb.lengths"], cfg["rb.k"], cfg["run.seed"] + 1, **kwargs)
    summary.update(_rb_fit_summary(ref, "ref"))
    summary.update(_rb_fit_summary(inter, "cz"))
    for run, name in ((ref, "reference"), (inter, "interleaved")):
        run.to_json(out / f"rb_{name}.json")
        run.to_csv(out / f"rb_{name}.csv")
    summary["F_g"] = rb.interleaved_fidelity(min(summary["p_cz"], summary["p_ref"]), summary["p_ref"])
    summary["r_ref"] = rb.average_error(summary["p_ref"])
    summary["r_CZ"] = rb.error_decomposition(summary["r_ref"], cfg["rb.single_qubit_error"])
    print(f"F_g = {summary['F_g']:.5f}, r_CZ = {summary['r_CZ']:.5f}")
    return summary


HANDLERS = {
    "synthesize": cmd_synthesize,
    "chevron": cmd_chevron,
    "ramsey": cmd_ramsey,
    "qpt": cmd_qpt,
    "rb": cmd_rb,
    "rb-interleaved": cmd_rb_interleaved,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stacz", description="STA controlled-Z gate simulator")
    parser.add_argument("--print-default-config", action="store_true", help="print the default config and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--out", type=Path, help="output directory (default: run.out)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--shots", type=int, help="shots per measurement setting, 0 = exact")
    return parser


def _sanitize(value):
    # JSON has no inf/nan; keep outputs strictly standard
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return _sanitize(value.item())
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.print_default_config:
        sys.stdout.write(default_config_text())
        return 0
    if args.command is None:
        build_parser().print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        cfg = cfg.override(seed=args.seed, threads=args.threads, shots=args.shots,
                           out=None if args.out is None else str(args.out))
        for key in ("run.threads", "run.shots"):
            if cfg[key] < (1 if key == "run.threads" else 0):
                raise ConfigError(f"{key}: out of range ({cfg[key]})")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["run.out"])
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    log.info("command %s started %s", args.command, datetime.datetime.now().isoformat())
    try:
        summary = HANDLERS[args.command](cfg, out)
    except FitError as exc:
        log.error("fit failed: %s", exc)
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        log.info("command %s finished %s", args.command, datetime.datetime.now().isoformat())
        log.removeHandler(handler)
        handler.close()
    summary = {"command": args.command, "seed": cfg["run.seed"], "results": summary,
               "config": {k: v for k, v in cfg.values.items() if k not in ("run.out", "run.threads")}}
    _write_json(out / "summary.json", _sanitize(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
