"""Time-domain solution of the driven single-photon input-output equations.

The state obeys ``i dpsi/dt = (H0 + Omega(t) V) psi + a_mu(t) l_mu`` from
``psi = 0`` and the output envelope is ``a_opt = l_opt . psi``. Steps use the
Crank-Nicolson (implicit midpoint) rule with the drive sampled at step
midpoints:

    (I + i dt/2 H_k) psi_{k+1} = (I - i dt/2 H_k) psi_k - i dt/2 (a_k + a_{k+1}) l_mu

When the step divides the drive period, midpoint drive values repeat every
``M`` steps, so only ``M`` step matrices are ever factorized.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import (
    DriveWaveform,
    Ensemble,
    GaussianWavepacket,
    build_static_hamiltonian,
    coupling_vectors,
    drive_coupling_matrix,
    sample_wavepacket,
)

log = logging.getLogger(__name__)

__all__ = [
    "StabilityError",
    "TimeGrid",
    "Trajectory",
    "make_grid",
    "static_norm",
    "propagate",
    "transduction_efficiency",
    "monodromy",
]

MAX_STEP_NORM = 0.1
MONODROMY_STEP_NORM = 0.05
_CHUNK = 4096


class StabilityError(ValueError):
    """Raised when ``dt * ||H_eff||_inf`` exceeds the allowed bound."""


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be at least 1")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def t_end(self) -> float:
        return self.t_start + self.dt * self.n_steps

    def shifted(self, tau: float) -> "TimeGrid":
        return TimeGrid(self.t_start + tau, self.dt, self.n_steps)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_start, self.dt / factor, self.n_steps * factor)

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "dt": self.dt, "n_steps": self.n_steps}


def _trapezoid_weights(n_points: int) -> np.ndarray:
    w = np.ones(n_points)
    w[0] = w[-1] = 0.5
    return w


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    a_mu: np.ndarray
    a_opt: np.ndarray
    efficiency: float
    grid: TimeGrid

    @property
    def excited_norm(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def to_csv(self, path) -> None:
        header = (
            f"efficiency={self.efficiency:.17g}\n"
            f"t_start={self.grid.t_start:.17g} dt={self.grid.dt:.17g} "
            f"n_steps={self.grid.n_steps}\n"
            "t,re_a_mu,im_a_mu,re_a_opt,im_a_opt,excited_norm"
        )
        data = np.column_stack(
            [
                self.times,
                self.a_mu.real,
                self.a_mu.imag,
                self.a_opt.real,
                self.a_opt.imag,
                self.excited_norm,
            ]
        )
        np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")


def static_norm(ensemble: Ensemble) -> float:
    """Max-row-sum norm of the drive-free Hamiltonian.

    Adding ``Omega V`` puts exactly one extra entry of modulus ``|Omega|`` in
    every row, so ``||H_eff(t)||_inf = static_norm + |Omega(t)|``.
    """
    return float(np.max(np.sum(np.abs(build_static_hamiltonian(ensemble)), axis=1)))


def _ring_down_time(ensemble: Ensemble, drive: DriveWaveform | None, max_tail: float) -> float:
    r = ensemble.rates
    slowest = min(r.Gamma_mu, r.Gamma_opt)
    if slowest <= 0:
        h = build_static_hamiltonian(ensemble)
        if drive is not None:
            h = h + drive.constant_value * drive_coupling_matrix(ensemble)
        decays = -2.0 * np.linalg.eigvals(h).imag
        decays = decays[decays > 1e-9]
        slowest = float(decays.min()) if decays.size else 0.0
    if slowest <= 0:
        return max_tail
    return min(10.0 / slowest, max_tail)


def make_grid(
    ensemble: Ensemble,
    wavepacket: GaussianWavepacket,
    drive: DriveWaveform | None = None,
    *,
    omega0: float | None = None,
    n_harmonics: int | None = None,
    omega_ceiling: float = 0.0,
    tail: float | None = None,
    max_tail: float = 200.0,
    dt: float | None = None,
    max_step_norm: float = MAX_STEP_NORM,
    resolution: float = 0.02,
) -> TimeGrid:
    """Default simulation grid.

    The grid starts where the input envelope has fallen to 1e-8 of its peak
    and runs past the pulse by a ring-down tail of ``10 / slowest decay``.
    The step is ``min(resolution * 2 pi / omega_max, max_step_norm / ||H||)``
    where ``||H||`` uses the larger of the drive's peak bound and
    ``omega_ceiling``; a nonzero ceiling leaves room for the drive to grow
    during optimization. When the drive lattice is periodic the step is
    shrunk so that it divides the period exactly.
    """
    if drive is not None:
        omega0 = drive.omega0 if omega0 is None else omega0
        n_harmonics = drive.n_harmonics if n_harmonics is None else n_harmonics
        peak = drive.peak_bound()
    else:
        peak = 0.0
    omega0 = omega0 or 0.0
    n_harmonics = n_harmonics or 0
    r = ensemble.rates
    n = ensemble.n_emitters
    max_detuning = max(
        float(np.max(np.abs(ensemble.delta_mu))),
        float(np.max(np.abs(ensemble.delta_opt))),
        abs(wavepacket.center_freq),
    )
    omega_max = max(
        n_harmonics * omega0,
        max_detuning + 4.0 * wavepacket.spectral_std,
        n * max(r.gamma_mu, r.gamma_opt) + max(r.Gamma_mu, r.Gamma_opt),
    )
    hnorm = static_norm(ensemble) + max(peak, omega_ceiling)
    step = min(resolution * 2.0 * math.pi / omega_max, max_step_norm / hnorm) * (1.0 - 1e-12)
    if dt is not None:
        step = dt
    if omega0 > 0 and n_harmonics > 0:
        period = 2.0 * math.pi / omega0
        step = period / math.ceil(period / step - 1e-9)
    half = wavepacket.half_width()
    if tail is None:
        tail = _ring_down_time(ensemble, drive, max_tail)
    n_steps = math.ceil((2.0 * half + tail) / step)
    return TimeGrid(wavepacket.center_time - half, step, n_steps)


def _lattice(drive: DriveWaveform, grid: TimeGrid) -> np.ndarray:
    """Drive values at the distinct step midpoints (one period's worth)."""
    period = drive.period
    if period is None:
        return np.array([drive.constant_value])
    ratio = period / grid.dt
    m = round(ratio)
    if m < 1 or abs(ratio - m) > 1e-8 * ratio:
        raise ValueError(
            f"time step {grid.dt!r} does not divide the drive period {period!r}; "
            "build the grid with make_grid(..., drive=...)"
        )
    m = min(m, grid.n_steps)
    t_mid = grid.t_start + (np.arange(m) + 0.5) * grid.dt
    return np.atleast_1d(drive(t_mid))


def _step_inverses(h0: np.ndarray, v: np.ndarray, dt: float, omegas: np.ndarray) -> np.ndarray:
    d = h0.shape[0]
    p = np.eye(d) + 0.5j * dt * (h0[None, :, :] + omegas[:, None, None] * v[None, :, :])
    return np.ascontiguousarray(np.linalg.inv(p))


def check_step(ensemble: Ensemble, omegas: np.ndarray, dt: float, max_step_norm: float = MAX_STEP_NORM):
    worst = dt * (static_norm(ensemble) + float(np.max(np.abs(omegas))))
    if worst > max_step_norm * (1.0 + 1e-9):
        raise StabilityError(
            f"dt={dt:.6g} gives dt*||H_eff||_inf={worst:.4g} > {max_step_norm}; "
            f"use dt <= {dt * max_step_norm / worst:.6g}"
        )


@dataclass
class _Forward:
    """Intermediate products of one forward solve, reused by the adjoint pass."""

    omegas: np.ndarray
    pinv: np.ndarray
    psi: np.ndarray
    a_mu: np.ndarray
    a_opt: np.ndarray
    l_opt: np.ndarray
    efficiency: float


def _forward(ensemble, drive, wavepacket, grid, *, source_scale=1.0, max_step_norm=MAX_STEP_NORM):
    omegas = _lattice(drive, grid)
    check_step(ensemble, omegas, grid.dt, max_step_norm)
    h0 = build_static_hamiltonian(ensemble)
    v = drive_coupling_matrix(ensemble)
    l_mu, l_opt = coupling_vectors(ensemble)
    times = grid.times
    a_mu = source_scale * sample_wavepacket(wavepacket, times)
    coef = np.ascontiguousarray(-0.5j * grid.dt * (a_mu[:-1] + a_mu[1:]))
    pinv = _step_inverses(h0, v, grid.dt, omegas)
    pinv_src = np.ascontiguousarray(pinv @ l_mu)
    psi = kernels.cn_forward(pinv, pinv_src, coef, grid.n_steps)
    if not np.all(np.isfinite(psi)):
        bad = int(np.argmin(np.all(np.isfinite(psi), axis=1)))
        raise FloatingPointError(
            f"non-finite state at step {bad} (t={times[bad]:.6g}); dt={grid.dt:.6g}, "
            f"max|Omega|={np.max(np.abs(omegas)):.6g}"
        )
    a_opt = psi @ l_opt
    eta = float(grid.dt * (_trapezoid_weights(times.size) @ np.abs(a_opt) ** 2))
    return _Forward(omegas, pinv, psi, a_mu, a_opt, l_opt, eta)


def propagate(
    ensemble: Ensemble,
    drive: DriveWaveform,
    wavepacket: GaussianWavepacket,
    grid: TimeGrid | None = None,
    *,
    source_scale: complex = 1.0,
    max_step_norm: float = MAX_STEP_NORM,
) -> Trajectory:
    """Integrate the input-output equations and return the full trajectory.

    ``source_scale`` multiplies the (unit-normalized) input envelope; it exists
    for linearity checks and for switching the source off.
    """
    if grid is None:
        grid = make_grid(ensemble, wavepacket, drive)
    fw = _forward(
        ensemble, drive, wavepacket, grid, source_scale=source_scale, max_step_norm=max_step_norm
    )
    return Trajectory(grid.times, fw.psi, fw.a_mu, fw.a_opt, fw.efficiency, grid)


def transduction_efficiency(trajectory: Trajectory, warn_population: float = 1e-4) -> float:
    """Trapezoidal integral of the output power; warns if the tail was too short."""
    w = _trapezoid_weights(trajectory.times.size)
    eta = float(trajectory.grid.dt * (w @ np.abs(trajectory.a_opt) ** 2))
    left = float(np.linalg.norm(trajectory.states[-1]) ** 2)
    if left > warn_population:
        warnings.warn(
            f"excited population {left:.3g} remains at the end of the grid; "
            "efficiency is underestimated",
            RuntimeWarning,
            stacklevel=2,
        )
    return eta


def monodromy(
    ensemble: Ensemble,
    drive: DriveWaveform,
    period: float | None = None,
    *,
    n_steps: int | None = None,
    max_step_norm: float = MONODROMY_STEP_NORM,
    rtol: float | None = None,
    max_steps: int = 200_000,
) -> np.ndarray:
    """Source-free propagator over one drive period starting at t = 0.

    The step count satisfies ``dt * ||H_eff||_inf <= max_step_norm``. When
    ``rtol`` is given it is raised further until the Crank-Nicolson error
    estimate ``T ||H||^3 dt^2 / 12`` drops below ``rtol``, up to ``max_steps``.
    """
    t_period = drive.period if drive.period is not None else period
    if t_period is None:
        raise ValueError("constant drives need an explicit nominal period")
    hnorm = static_norm(ensemble) + drive.peak_bound()
    if n_steps is None:
        x = t_period * hnorm
        n_steps = math.ceil(x / max_step_norm)
        if rtol is not None:
            n_steps = max(n_steps, math.ceil(x * math.sqrt(x / (12.0 * rtol))))
        if n_steps > max_steps:
            log.info("monodromy step count capped at %d (requested %d)", max_steps, n_steps)
            n_steps = max_steps
    dt = t_period / n_steps
    h0 = build_static_hamiltonian(ensemble)
    v = drive_coupling_matrix(ensemble)
    d = h0.shape[0]
    if drive.is_constant:
        pinv = _step_inverses(h0, v, dt, np.array([drive.constant_value]))[0]
        out = np.linalg.matrix_power(2.0 * pinv - np.eye(d), n_steps)
    else:
        out = np.eye(d, dtype=complex)
        for start in range(0, n_steps, _CHUNK):
            k = np.arange(start, min(start + _CHUNK, n_steps))
            omegas = np.atleast_1d(drive((k + 0.5) * dt))
            out = kernels.cn_chain(_step_inverses(h0, v, dt, omegas), out)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite monodromy entries")
    return out
