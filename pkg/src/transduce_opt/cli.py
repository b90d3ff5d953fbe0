"""``transduce-opt`` command-line entry point.

Every subcommand reads one JSON config, writes its results into a single
output directory and echoes the resolved config there. Numeric payloads
(CSV/JSON) are deterministic; wall-clock times and versions go to
``meta.json`` only.

Exit codes: 0 success, 1 validation or tolerance failure, 2 usage or config
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import ExperimentConfig, load_drive, load_ensemble
from .dynamics import StabilityError, propagate, transduction_efficiency
from .experiments import (
    FIGURES,
    count_peaks,
    failed,
    run_custom,
    run_figure,
    write_custom_outputs,
    write_rows,
)
from .model import DriveWaveform, Ensemble, SamplingSpec
from .optimize import TransductionProblem, optimize_robust
from .schema import SchemaError
from .spectra import (
    SidebandConvergenceError,
    find_spectrum_peak,
    floquet_eigenstates,
    floquet_spectrum,
    max_superradiance,
    static_spectrum,
)

log = logging.getLogger("transduce_opt")

COMMANDS = ("spectrum", "simulate", "optimize", "optimize-robust", "floquet", "experiment", "gradcheck")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="transduce-opt",
        description="Design laser drives for ensemble microwave-to-optical transduction.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides config and $TRANSDUCE_OPT_OUT)")
    p.add_argument("--seed", type=int, help="base seed; replaces the config seed list by a run of the same length")
    p.add_argument("--threads", type=int, help="worker count (default: available CPUs)")
    p.add_argument("--full", action="store_true", help="large preset: 100 ensembles and longer optimizer budgets")
    p.add_argument("--figure", choices=FIGURES, help="figure protocol for 'experiment'")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def resolve(args) -> tuple[ExperimentConfig, Path]:
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    cfg = ExperimentConfig.load(path, full=args.full)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = replace(cfg, seeds=[args.seed + i for i in range(len(cfg.seeds))])
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=args.seed))
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        cfg = replace(cfg, threads=args.threads)
    if cfg.threads is None:
        cfg = replace(cfg, threads=_available_cpus())
    cfg = replace(cfg, optimizer=replace(cfg.optimizer, threads=cfg.threads))
    out = Path(args.out or cfg.output_dir)
    cfg = replace(cfg, output_dir=str(out))
    return cfg, out


def _ensemble(cfg: ExperimentConfig) -> Ensemble:
    if cfg.ensemble_file:
        try:
            return load_ensemble(cfg.ensemble_file)
        except (OSError, ValueError) as exc:
            raise UsageError(f"ensemble_file: {exc}") from None
    return cfg.ensemble(cfg.seeds[0])


def _drive(cfg: ExperimentConfig) -> DriveWaveform | None:
    if not cfg.drive_file:
        return None
    try:
        return load_drive(cfg.drive_file)
    except (OSError, ValueError) as exc:
        raise UsageError(f"drive_file: {exc}") from None


def _json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


# ---------------------------------------------------------------------------
# subcommands; each returns (exit_code, result dict for meta.json)


def cmd_spectrum(cfg: ExperimentConfig, out: Path):
    ens = _ensemble(cfg)
    omega_c = cfg.constant_value(ens.rates)
    grid = cfg.omega_grid()
    spec = static_spectrum(ens, omega_c, grid)
    spec.to_csv(out / "spectrum.csv")
    peak = find_spectrum_peak(spec)
    result = {
        "drive": omega_c,
        "peak_omega": peak.omega,
        "peak_eta": peak.eta,
        "n_peaks": count_peaks(spec.eta),
    }
    print(f"constant drive {omega_c:.6g}: peak eta {peak.eta:.9g} at omega {peak.omega:.6g}")
    drive = _drive(cfg)
    if drive is not None:
        fgrid = np.linspace(grid[0], grid[-1], cfg.floquet_points)
        try:
            fspec = floquet_spectrum(ens, drive, fgrid, cfg.k_max)
        except SidebandConvergenceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL, result
        fspec.to_csv(out / "spectrum_floquet.csv")
        fpeak = find_spectrum_peak(fspec)
        result.update(floquet_peak_omega=fpeak.omega, floquet_peak_eta=fpeak.eta, k_max=fspec.k_max)
        print(f"driven: peak eta {fpeak.eta:.9g} at omega {fpeak.omega:.6g} (k_max {fspec.k_max})")
    return EXIT_OK, result


def cmd_simulate(cfg: ExperimentConfig, out: Path):
    ens = _ensemble(cfg)
    drive = _drive(cfg) or DriveWaveform.constant(cfg.constant_value(ens.rates))
    traj = propagate(ens, drive, cfg.wavepacket)
    eta = transduction_efficiency(traj)
    traj.to_csv(out / "trajectory.csv")
    _json(out / "result.json", {"efficiency": eta, "grid": traj.grid.to_dict()})
    print(f"efficiency {eta:.9g}")
    return EXIT_OK, {"efficiency": eta}


def cmd_optimize(cfg: ExperimentConfig, out: Path):
    ens = _ensemble(cfg)
    ens.save(out / "ensemble.json")
    run = run_custom(cfg, ens, cfg.broadening)
    result = write_custom_outputs(cfg, run, cfg.broadening, out)
    rep = run.report
    print(
        f"baseline {rep.baseline_efficiency:.6g} -> optimized {rep.best_efficiency:.6g} "
        f"(x{rep.improvement:.4g}); flags: {', '.join(rep.flags) or 'none'}"
    )
    return (EXIT_FAIL if failed(rep.flags) else EXIT_OK), result


def cmd_optimize_robust(cfg: ExperimentConfig, out: Path):
    spec = SamplingSpec(cfg.broadening, cfg.seeds[0])
    wp = replace(cfg.wavepacket, center_freq=0.0)
    rep = optimize_robust(cfg.rates, cfg.n_emitters, spec, wp, cfg.optimizer)
    rep.to_json(out / "report.json")
    rep.drive.save(out / "drive.json")
    print(
        f"training mean {rep.initial_efficiency:.6g} -> {rep.best_efficiency:.6g}; "
        f"flags: {', '.join(rep.flags) or 'none'}"
    )
    result = {"initial": rep.initial_efficiency, "best": rep.best_efficiency, "flags": rep.flags}
    return (EXIT_FAIL if failed(rep.flags) else EXIT_OK), result


def cmd_floquet(cfg: ExperimentConfig, out: Path):
    ens = _ensemble(cfg)
    drive = _drive(cfg) or DriveWaveform.constant(cfg.constant_value(ens.rates))
    period = cfg.floquet_period or 2.0 * math.pi / cfg.omega0
    analysis = floquet_eigenstates(ens, drive, period, rtol=cfg.floquet_rtol)
    analysis.to_json(out / "floquet.json", include_vectors=cfg.include_vectors)
    fmax = max_superradiance(analysis)
    print(f"max superradiance metric {fmax:.9g} over {analysis.metrics.size} eigenstates")
    return EXIT_OK, {"max_metric": fmax}


def cmd_experiment(cfg: ExperimentConfig, out: Path, figure: str | None):
    figure = figure or cfg.figure
    if figure is None:
        raise UsageError("experiment needs --figure or a 'figure' entry in the config")
    if figure not in FIGURES:
        raise UsageError(f"unknown figure {figure!r}")
    result = run_figure(figure, cfg, out)
    print(json.dumps(result, sort_keys=True, default=str))
    return EXIT_OK, result


GRADCHECK_FLOOR = 1e-3


def gradcheck_errors(adjoint, fd) -> np.ndarray:
    """Componentwise relative error with a floor at 1e-3 of the largest component.

    Components at least that large are compared at their own scale. Smaller
    ones, including derivatives that vanish by symmetry (for instance the
    phase of a lone harmonic seen by a pulse too narrow to span two
    sidebands), are compared against the gradient scale instead, since their
    finite-difference estimate is pure round-off.
    """
    fd = np.asarray(fd)
    scale = np.maximum(np.abs(fd), GRADCHECK_FLOOR * max(float(np.max(np.abs(fd))), 1e-300))
    return np.abs(np.asarray(adjoint) - fd) / scale


def cmd_gradcheck(cfg: ExperimentConfig, out: Path):
    opts = {"n_emitters": 2, "n_harmonics": 3, "step": 1e-5, "tolerance": 1e-5, "corrupt": False, **cfg.gradcheck}
    seed = cfg.seeds[0]
    rng = np.random.default_rng(seed)
    n = opts["n_emitters"]
    ens = Ensemble(n, cfg.rates, rng.normal(0, 3.0, n), rng.normal(0, 3.0, n))
    nh = opts["n_harmonics"]
    wp = replace(cfg.wavepacket, spectral_std=min(cfg.wavepacket.spectral_std, 2.0))
    prob = TransductionProblem(ens, wp, omega0=cfg.omega0, n_harmonics=nh, omega_ceiling=20.0)
    theta = np.concatenate([rng.uniform(0.5, 3.0, nh + 1), rng.uniform(-math.pi, math.pi, nh + 1)])
    j, grad = prob.value_and_grad(theta)
    if opts["corrupt"]:
        grad = grad.copy()
        grad[0] *= 1.01
    h = opts["step"]
    fd = np.empty_like(grad)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (prob.value(theta + e) - prob.value(theta - e)) / (2 * h)
    err = gradcheck_errors(grad, fd)
    write_rows(
        out / "gradcheck.csv",
        ["index", "parameter", "adjoint", "finite_difference", "relative_error"],
        [
            [i, (f"amplitude_{i}" if i <= nh else f"phase_{i - nh - 1}"), grad[i], fd[i], err[i]]
            for i in range(theta.size)
        ],
    )
    for i in range(theta.size):
        print(f"param {i:3d}: adjoint {grad[i]: .12e}  fd {fd[i]: .12e}  rel err {err[i]:.3e}")
    worst = float(err.max())
    ok = worst <= opts["tolerance"]
    print(f"objective {j:.9g}; max relative error {worst:.3e} ({'pass' if ok else 'FAIL'}, tol {opts['tolerance']:g})")
    return (EXIT_OK if ok else EXIT_FAIL), {"max_relative_error": worst, "errors": err.tolist()}


# ---------------------------------------------------------------------------


def _meta(args, cfg, started, wall, code, result) -> dict:
    return {
        "command": args.command,
        "figure": args.figure or cfg.figure,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": started,
        "wall_seconds": wall,
        "threads": cfg.threads,
        "exit_code": code,
        "result": result,
    }


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, out = resolve(args)
    except SchemaError as exc:
        print(f"config error in field '{exc.field}': {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # experiment runs keep their records next to the figure's own files
    figure = args.figure or cfg.figure
    record_dir = out / figure if args.command == "experiment" and figure else out
    record_dir.mkdir(parents=True, exist_ok=True)
    _json(record_dir / "config.json", cfg.to_dict())
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        if args.command == "experiment":
            code, result = cmd_experiment(cfg, out, args.figure)
        else:
            handler = {
                "spectrum": cmd_spectrum,
                "simulate": cmd_simulate,
                "optimize": cmd_optimize,
                "optimize-robust": cmd_optimize_robust,
                "floquet": cmd_floquet,
                "gradcheck": cmd_gradcheck,
            }[args.command]
            code, result = handler(cfg, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StabilityError, SidebandConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code, result = EXIT_FAIL, {"error": str(exc)}
    meta = _meta(args, cfg, started, time.perf_counter() - t0, code, _clean(result))
    _json(record_dir / "meta.json", meta)
    return code


def _clean(x):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    return str(x)


if __name__ == "__main__":
    sys.exit(main())
