"""Drive optimization with exact discrete-adjoint gradients.

The decision vector packs amplitudes then phases,
``theta = (A_0..A_Nh, phi_0..phi_Nh)``, for a fixed base frequency ``omega0``.
Gradients are exact derivatives of the Crank-Nicolson-discretized efficiency:
one forward sweep stores the states, one backward sweep of the transposed
recurrence gives the sensitivity to the drive value at every step midpoint,
and the chain rule through the harmonic basis yields d(eta)/d(theta).
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .dynamics import (
    MAX_STEP_NORM,
    StabilityError,
    TimeGrid,
    _step_inverses,
    _trapezoid_weights,
    check_step,
    make_grid,
    static_norm,
)
from .model import (
    DriveWaveform,
    Ensemble,
    GaussianWavepacket,
    Rates,
    SamplingSpec,
    build_static_hamiltonian,
    coupling_vectors,
    drive_coupling_matrix,
    homogeneous_optimal_drive,
    sample_ensemble,
    sample_wavepacket,
)

log = logging.getLogger(__name__)

__all__ = [
    "pack_drive",
    "unpack_drive",
    "OptimizeConfig",
    "OptimizeReport",
    "TransductionProblem",
    "objective",
    "objective_gradient",
    "initial_params",
    "lbfgs_maximize",
    "optimize_custom",
    "optimize_robust",
    "improvement_ratio",
    "training_seeds",
    "default_omega_ceiling",
]


def pack_drive(drive: DriveWaveform) -> np.ndarray:
    return np.concatenate([drive.amplitudes, drive.phases])


def unpack_drive(theta, omega0: float) -> DriveWaveform:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size % 2 or theta.size == 0:
        raise ValueError("theta must be a flat vector of even length")
    half = theta.size // 2
    return DriveWaveform(omega0, theta[:half], theta[half:])


def initial_params(ensemble: Ensemble, n_harmonics: int) -> np.ndarray:
    """Constant drive that is optimal for the unbroadened ensemble, no harmonics."""
    theta = np.zeros(2 * (n_harmonics + 1))
    theta[0] = homogeneous_optimal_drive(ensemble.n_emitters, ensemble.rates)
    return theta


@dataclass
class OptimizeConfig:
    omega0: float = 10.0
    n_harmonics: int = 40
    # quasi-Newton
    max_iters: int = 150
    gradient_tolerance: float = 1e-6
    objective_tolerance: float = 1e-9
    bounds: float | None = None
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    initial_step: float = 1.0
    max_line_search: int = 25
    omega_ceiling: float | None = None
    # sample-averaged stochastic ascent
    n_samples: int = 20
    batch_size: int = 10
    step_size: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 500
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("gradient_tolerance", "objective_tolerance", "step_size", "initial_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_samples < 1 or self.batch_size < 1:
            raise ValueError("n_samples and batch_size must be at least 1")
        if self.omega0 <= 0 and self.n_harmonics > 0:
            raise ValueError("omega0 must be positive when harmonics are optimized")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line-search constants need 0 < c1 < c2 < 1")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizeConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer option(s): {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class OptimizeReport:
    best_params: np.ndarray
    omega0: float
    objective_history: list = field(default_factory=list)
    gradient_norm_history: list = field(default_factory=list)
    baseline_efficiency: float = 0.0
    best_efficiency: float = 0.0
    initial_efficiency: float = 0.0
    improvement: float = 1.0
    n_evaluations: int = 0
    flags: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    @property
    def drive(self) -> DriveWaveform:
        return unpack_drive(self.best_params, self.omega0)

    def to_dict(self) -> dict:
        return {
            "best_params": [float(x) for x in self.best_params],
            "omega0": self.omega0,
            "drive": self.drive.to_dict(),
            "objective_history": [float(x) for x in self.objective_history],
            "gradient_norm_history": [float(x) for x in self.gradient_norm_history],
            "baseline_efficiency": float(self.baseline_efficiency),
            "initial_efficiency": float(self.initial_efficiency),
            "best_efficiency": float(self.best_efficiency),
            "improvement": _finite_or_none(self.improvement),
            "n_evaluations": int(self.n_evaluations),
            "flags": list(self.flags),
            "seeds": [int(s) for s in self.seeds],
            "config": self.config,
            "extra": self.extra,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _finite_or_none(x):
    return float(x) if math.isfinite(x) else None


def default_omega_ceiling(ensemble: Ensemble) -> float:
    """Drive amplitude the optimization grid is built to resolve.

    Optimized drives routinely need peak amplitudes comparable to the
    detuning spread, so the grid leaves room for three times the static norm.
    """
    return max(
        3.0 * static_norm(ensemble),
        4.0 * homogeneous_optimal_drive(ensemble.n_emitters, ensemble.rates),
    )


class TransductionProblem:
    """Efficiency of one ensemble as a function of the drive parameters.

    Caches everything that does not depend on ``theta``: Hamiltonian pieces,
    the sampled input, and the harmonic basis on the drive lattice.
    """

    def __init__(
        self,
        ensemble: Ensemble,
        wavepacket: GaussianWavepacket,
        grid: TimeGrid | None = None,
        *,
        omega0: float = 10.0,
        n_harmonics: int = 0,
        omega_ceiling: float | None = None,
        max_step_norm: float = MAX_STEP_NORM,
    ):
        self.ensemble = ensemble
        self.wavepacket = wavepacket
        self.omega0 = float(omega0)
        self.n_harmonics = int(n_harmonics)
        self.max_step_norm = max_step_norm
        if grid is None:
            if omega_ceiling is None:
                omega_ceiling = default_omega_ceiling(ensemble)
            grid = make_grid(
                ensemble,
                wavepacket,
                omega0=self.omega0,
                n_harmonics=self.n_harmonics,
                omega_ceiling=omega_ceiling,
                max_step_norm=max_step_norm,
            )
        self.grid = grid
        self.h0 = build_static_hamiltonian(ensemble)
        self.v = drive_coupling_matrix(ensemble)
        self.l_mu, self.l_opt = coupling_vectors(ensemble)
        times = grid.times
        self.a_mu = sample_wavepacket(wavepacket, times)
        self.coef = np.ascontiguousarray(-0.5j * grid.dt * (self.a_mu[:-1] + self.a_mu[1:]))
        self.weights = grid.dt * _trapezoid_weights(times.size)
        if self.n_harmonics > 0:
            period = 2.0 * math.pi / self.omega0
            ratio = period / grid.dt
            m = round(ratio)
            if abs(ratio - m) > 1e-8 * ratio:
                raise ValueError("grid step must divide the drive period")
            m = min(m, grid.n_steps)
        else:
            m = 1
        self.t_mid = grid.t_start + (np.arange(m) + 0.5) * grid.dt
        self.phase_angles = np.multiply.outer(self.t_mid, self.omega0 * np.arange(self.n_harmonics + 1))
        self.n_evaluations = 0

    @property
    def n_params(self) -> int:
        return 2 * (self.n_harmonics + 1)

    def drive_values(self, theta) -> np.ndarray:
        amps, phases = self._split(theta)
        return np.cos(self.phase_angles + phases) @ amps

    def _split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"theta must have length {self.n_params}, got {theta.shape}")
        h = self.n_harmonics + 1
        return theta[:h], theta[h:]

    def _forward(self, theta):
        omegas = self.drive_values(theta)
        check_step(self.ensemble, omegas, self.grid.dt, self.max_step_norm)
        pinv = _step_inverses(self.h0, self.v, self.grid.dt, omegas)
        pinv_src = np.ascontiguousarray(pinv @ self.l_mu)
        psi = kernels.cn_forward(pinv, pinv_src, self.coef, self.grid.n_steps)
        a_opt = psi @ self.l_opt
        eta = float(self.weights @ np.abs(a_opt) ** 2)
        if not math.isfinite(eta):
            raise FloatingPointError("non-finite efficiency")
        self.n_evaluations += 1
        return eta, pinv, psi, a_opt

    def value(self, theta) -> float:
        return self._forward(theta)[0]

    def value_and_grad(self, theta) -> tuple[float, np.ndarray]:
        amps, phases = self._split(theta)
        eta, pinv, psi, a_opt = self._forward(theta)
        g = np.ascontiguousarray(np.multiply.outer(self.weights * np.conj(a_opt), self.l_opt))
        per_phase = kernels.cn_adjoint(pinv, psi, g, self.grid.dt)
        arg = self.phase_angles + phases
        d_amp = per_phase @ np.cos(arg)
        d_phase = -amps * (per_phase @ np.sin(arg))
        return eta, np.concatenate([d_amp, d_phase])


def objective(theta, ensemble, wavepacket, grid=None, *, omega0: float = 10.0) -> float:
    """Transduction efficiency for the drive encoded by ``theta``."""
    nh = len(theta) // 2 - 1
    return TransductionProblem(ensemble, wavepacket, grid, omega0=omega0, n_harmonics=nh).value(theta)


def objective_gradient(theta, ensemble, wavepacket, grid=None, *, omega0: float = 10.0):
    """Efficiency and its exact discrete-adjoint gradient with respect to ``theta``."""
    nh = len(theta) // 2 - 1
    prob = TransductionProblem(ensemble, wavepacket, grid, omega0=omega0, n_harmonics=nh)
    return prob.value_and_grad(theta)


# ---------------------------------------------------------------------------
# quasi-Newton ascent


class _LineSearchFailure(Exception):
    pass


def _safe_eval(fg, x):
    try:
        f, g = fg(x)
    except (StabilityError, FloatingPointError):
        return math.inf, None
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        return math.inf, None
    return f, g


def _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
    d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi)
    rad = d1 * d1 - d_lo * d_hi
    if rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), a_hi - a_lo)
    denom = d_hi - d_lo + 2.0 * d2
    if denom == 0:
        return None
    return a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / denom


def _strong_wolfe(fg, x, f0, g0, p, alpha0, alpha_max, c1, c2, max_evals):
    """Strong-Wolfe line search for minimization (bracketing + zoom).

    Returns ``(alpha, f, g, weak)``; ``weak`` marks an accepted point that only
    satisfies sufficient decrease because the evaluation budget ran out.
    """
    dphi0 = float(g0 @ p)
    evals = 0

    def phi(a):
        nonlocal evals
        evals += 1
        f, g = _safe_eval(fg, x + a * p)
        return f, g, (float(g @ p) if g is not None else math.nan)

    def zoom(lo, hi):
        nonlocal evals
        a_lo, f_lo, g_lo, d_lo = lo
        a_hi, f_hi, _, d_hi = hi
        while evals < max_evals:
            width = a_hi - a_lo
            trial = None
            if math.isfinite(f_hi) and math.isfinite(d_hi):
                trial = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            lo_edge, hi_edge = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
            if trial is None or not lo_edge <= trial <= hi_edge:
                trial = a_lo + 0.5 * width
            f, g, d = phi(trial)
            if not math.isfinite(f) or f > f0 + c1 * trial * dphi0 or f >= f_lo:
                a_hi, f_hi, d_hi = trial, f, d
            else:
                if abs(d) <= -c2 * dphi0:
                    return trial, f, g, False
                if d * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, g_lo, d_lo = trial, f, g, d
        if a_lo > 0:
            return a_lo, f_lo, g_lo, True
        raise _LineSearchFailure("no point with sufficient decrease")

    prev = (0.0, f0, g0, dphi0)
    a = min(alpha0, alpha_max)
    first = True
    while evals < max_evals:
        f, g, d = phi(a)
        if not math.isfinite(f) or f > f0 + c1 * a * dphi0 or (not first and f >= prev[1]):
            return zoom(prev, (a, f, g, d))
        if abs(d) <= -c2 * dphi0:
            return a, f, g, False
        if d >= 0:
            return zoom((a, f, g, d), prev)
        if a >= alpha_max:
            return a, f, g, True
        prev = (a, f, g, d)
        a = min(2.0 * a, alpha_max)
        first = False
    if prev[0] > 0:
        return prev[0], prev[1], prev[2], True
    raise _LineSearchFailure("line-search budget exhausted")


def _two_loop(g, s_list, y_list, free):
    q = g * free
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append(a)
        q = q - a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q = q * ((s @ y) / (y @ y))
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        rho = 1.0 / (y @ s)
        b = rho * (y @ q)
        q = q + (a - b) * s
    return -q * free


def lbfgs_maximize(fun_grad, theta0, config: OptimizeConfig, lower=None, upper=None):
    """Maximize ``fun_grad``'s value with limited-memory BFGS and strong-Wolfe steps.

    ``fun_grad(theta) -> (J, dJ/dtheta)``. The objective is internally rescaled
    by its initial magnitude and minimized as ``-J / |J0|``. Optional box
    bounds are enforced by freezing variables that sit on an active bound and
    capping each step at the first bound it would cross.

    Returns ``(theta_best, J_best, history, grad_norms, flags)``. Every accepted
    step satisfies the sufficient-increase condition, so ``history`` is
    non-decreasing.
    """
    x = np.array(theta0, dtype=float)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)
    j0, g0 = fun_grad(x)
    scale = abs(j0) if j0 != 0 else 1.0

    def fg(z):
        j, gj = fun_grad(z)
        return -j / scale, -np.asarray(gj) / scale

    f, g = -j0 / scale, -np.asarray(g0) / scale
    history = [float(j0)]
    gnorms = [float(np.max(np.abs(g0)))]
    flags = []
    s_list, y_list = [], []
    for _ in range(config.max_iters):
        free = ~(((x <= lower) & (g > 0)) | ((x >= upper) & (g < 0)))
        gfree = np.max(np.abs(g * free)) if n else 0.0
        if gfree <= config.gradient_tolerance:
            flags.append("converged:gradient")
            break
        p = _two_loop(g, s_list, y_list, free)
        if not g @ p < 0:
            s_list.clear()
            y_list.clear()
            p = -g * free
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(p > 0, (upper - x) / p, np.where(p < 0, (lower - x) / p, np.inf))
        alpha_max = float(np.min(room)) if n else np.inf
        if alpha_max <= 0:
            flags.append("stalled:bounds")
            break
        alpha0 = 1.0 if s_list else min(1.0, config.initial_step / float(np.max(np.abs(p))))
        try:
            a, f_new, g_new, weak = _strong_wolfe(
                fg, x, f, g, p, alpha0, alpha_max, config.c1, config.c2, config.max_line_search
            )
        except _LineSearchFailure as exc:
            flags.append(f"line_search_failed:{exc}")
            break
        if weak:
            log.debug("accepted step without curvature condition")
        x_new = np.clip(x + a * p, lower, upper)
        s, y = x_new - x, g_new - g
        if s @ y > 1e-12 * (s @ s):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > config.memory:
                s_list.pop(0)
                y_list.pop(0)
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        history.append(float(-f * scale))
        gnorms.append(float(np.max(np.abs(g)) * scale))
        if decrease <= config.objective_tolerance * max(abs(f), 1.0):
            flags.append("converged:objective")
            break
    else:
        flags.append("max_iters")
    return x, float(-f * scale), history, gnorms, flags


def _problem_for(ensemble, wavepacket, config: OptimizeConfig, grid=None):
    return TransductionProblem(
        ensemble,
        wavepacket,
        grid,
        omega0=config.omega0,
        n_harmonics=config.n_harmonics,
        omega_ceiling=config.omega_ceiling,
    )


def _amplitude_bounds(config: OptimizeConfig):
    h = config.n_harmonics + 1
    if config.bounds is None:
        return None, None
    lo = np.concatenate([np.full(h, -config.bounds), np.full(h, -np.inf)])
    return lo, -lo


def optimize_custom(
    ensemble: Ensemble,
    wavepacket: GaussianWavepacket,
    config: OptimizeConfig | None = None,
    grid: TimeGrid | None = None,
    theta0=None,
) -> OptimizeReport:
    """Design a drive for one known ensemble.

    Starts from the homogeneous optimum ``(N gamma + Gamma) / 2`` with all
    harmonics off. The input wavepacket should already be centred on the peak
    of the undriven-harmonics spectrum (see ``spectra.refine_static_peak``).
    """
    config = config or OptimizeConfig()
    prob = _problem_for(ensemble, wavepacket, config, grid)
    base = initial_params(ensemble, config.n_harmonics)
    start = base if theta0 is None else np.asarray(theta0, dtype=float)
    lo, hi = _amplitude_bounds(config)
    t0 = time.perf_counter()
    theta, best, history, gnorms, flags = lbfgs_maximize(prob.value_and_grad, start, config, lo, hi)
    baseline = prob.value(base)
    return OptimizeReport(
        best_params=theta,
        omega0=config.omega0,
        objective_history=history,
        gradient_norm_history=gnorms,
        baseline_efficiency=baseline,
        initial_efficiency=history[0],
        best_efficiency=best,
        improvement=best / baseline if baseline >= 1e-12 else math.inf,
        n_evaluations=prob.n_evaluations,
        flags=flags,
        config=asdict(config),
        extra={"grid": prob.grid.to_dict()},
        wall_seconds=time.perf_counter() - t0,
    )


def improvement_ratio(ensemble, theta_opt, theta_baseline, wavepacket, grid=None, *, omega0=10.0) -> float:
    """``J(theta_opt) / J(theta_baseline)``; ``inf`` when the baseline is below 1e-12."""
    nh = len(theta_opt) // 2 - 1
    if len(theta_baseline) != len(theta_opt):
        theta_baseline = _pad(theta_baseline, nh)
    prob = TransductionProblem(ensemble, wavepacket, grid, omega0=omega0, n_harmonics=nh)
    base = prob.value(theta_baseline)
    if base < 1e-12:
        return math.inf
    return prob.value(theta_opt) / base


def _pad(theta, n_harmonics):
    theta = np.asarray(theta, dtype=float)
    h = theta.size // 2
    out = np.zeros(2 * (n_harmonics + 1))
    out[:h] = theta[:h]
    out[n_harmonics + 1:n_harmonics + 1 + h] = theta[h:]
    return out


# ---------------------------------------------------------------------------
# sample-averaged stochastic ascent


def training_seeds(base_seed: int, count: int, stream: int) -> list[int]:
    """Independent 64-bit seeds; different ``stream`` values never overlap."""
    ss = np.random.SeedSequence([int(base_seed), int(stream)])
    return [int(s) for s in ss.generate_state(count, dtype=np.uint64)]


TRAIN_STREAM = 0
TEST_STREAM = 1


def _mean_eval(problems, theta, with_grad, pool):
    def one(prob):
        return prob.value_and_grad(theta) if with_grad else (prob.value(theta), None)

    results = list(pool.map(one, problems)) if pool is not None else [one(p) for p in problems]
    # fixed-order reduction keeps results independent of thread scheduling
    j = sum(r[0] for r in results) / len(results)
    if not with_grad:
        return j, None
    g = np.zeros_like(results[0][1])
    for r in results:
        g = g + r[1]
    return j, g / len(results)


def optimize_robust(
    rates: Rates,
    n_emitters: int,
    sampling_spec: SamplingSpec,
    wavepacket: GaussianWavepacket,
    config: OptimizeConfig | None = None,
) -> OptimizeReport:
    """One drive for the whole broadening distribution.

    Maximizes the mean efficiency over ``n_samples`` training ensembles drawn
    once from the training seed stream of ``sampling_spec.seed`` using Adam on
    minibatches. The returned drive is the iterate with the best full
    training-set mean, evaluated after every epoch.
    """
    config = config or OptimizeConfig()
    seeds = training_seeds(sampling_spec.seed, config.n_samples, TRAIN_STREAM)
    ensembles = [
        sample_ensemble(n_emitters, rates, SamplingSpec(sampling_spec.broadening, s)) for s in seeds
    ]
    problems = [_problem_for(e, wavepacket, config) for e in ensembles]
    rng = np.random.default_rng(config.seed)
    theta = initial_params(ensembles[0], config.n_harmonics)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    flags = []
    t0 = time.perf_counter()
    try:
        best_j, _ = _mean_eval(problems, theta, False, pool)
        initial = best_j
        best_theta = theta.copy()
        history = [best_j]
        gnorms = []
        for epoch in range(config.epochs):
            order = rng.permutation(config.n_samples)
            batch_g = []
            try:
                for start in range(0, config.n_samples, config.batch_size):
                    batch = sorted(order[start:start + config.batch_size])
                    j, g = _mean_eval([problems[i] for i in batch], theta, True, pool)
                    if not (math.isfinite(j) and np.all(np.isfinite(g))):
                        raise FloatingPointError("non-finite objective")
                    step += 1
                    m = config.beta1 * m + (1 - config.beta1) * g
                    v = config.beta2 * v + (1 - config.beta2) * g * g
                    m_hat = m / (1 - config.beta1**step)
                    v_hat = v / (1 - config.beta2**step)
                    theta = theta + config.step_size * m_hat / (np.sqrt(v_hat) + config.epsilon)
                    batch_g.append(float(np.max(np.abs(g))))
                full_j, _ = _mean_eval(problems, theta, False, pool)
            except StabilityError as exc:
                flags.append(f"stopped:drive_exceeds_grid_ceiling:{exc}")
                break
            except FloatingPointError as exc:
                flags.append(f"diverged:{exc}")
                break
            if not math.isfinite(full_j):
                flags.append("diverged:non-finite objective")
                break
            history.append(full_j)
            gnorms.append(max(batch_g))
            if full_j > best_j:
                best_j, best_theta = full_j, theta.copy()
        else:
            flags.append("max_epochs")
    finally:
        if pool is not None:
            pool.shutdown()
    baseline = initial
    return OptimizeReport(
        best_params=best_theta,
        omega0=config.omega0,
        objective_history=history,
        gradient_norm_history=gnorms,
        baseline_efficiency=baseline,
        initial_efficiency=initial,
        best_efficiency=best_j,
        improvement=best_j / baseline if baseline >= 1e-12 else math.inf,
        n_evaluations=sum(p.n_evaluations for p in problems),
        flags=flags,
        seeds=seeds,
        config=asdict(config),
        extra={
            "broadening": sampling_spec.broadening,
            "base_seed": int(sampling_spec.seed),
        },
        wall_seconds=time.perf_counter() - t0,
    )
