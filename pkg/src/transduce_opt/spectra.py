"""Frequency-domain transduction spectra and Floquet eigenstate analysis."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import splu

from .dynamics import monodromy
from .model import (
    DriveWaveform,
    Ensemble,
    build_static_hamiltonian,
    coupling_vectors,
    drive_coupling_matrix,
)

log = logging.getLogger(__name__)

__all__ = [
    "Spectrum",
    "FloquetAnalysis",
    "Peak",
    "SidebandConvergenceError",
    "default_omega_grid",
    "static_spectrum",
    "floquet_spectrum",
    "floquet_eigenstates",
    "superradiance_metric",
    "max_superradiance",
    "find_spectrum_peak",
    "refine_static_peak",
]


class SidebandConvergenceError(RuntimeError):
    pass


@dataclass
class Spectrum:
    omega: np.ndarray
    eta: np.ndarray
    per_sideband: np.ndarray | None = None
    orders: np.ndarray | None = None
    k_max: int | None = None

    def to_csv(self, path) -> None:
        cols = [self.omega, self.eta]
        names = ["omega", "eta"]
        if self.per_sideband is not None:
            cols.extend(self.per_sideband)
            names.extend(f"eta_{k}" for k in self.orders)
        np.savetxt(
            path,
            np.column_stack(cols),
            delimiter=",",
            header=",".join(names),
            comments="",
            fmt="%.17g",
        )


@dataclass
class FloquetAnalysis:
    monodromy: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    metrics: np.ndarray
    period: float

    @property
    def quasienergies(self) -> np.ndarray:
        """Complex quasienergies ``E`` with ``eigenvalue = exp(-i E T)``."""
        return 1j * np.log(self.eigenvalues) / self.period

    def to_dict(self, include_vectors: bool = False) -> dict:
        out = {
            "period": self.period,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "metrics": [float(x) for x in self.metrics],
            "max_metric": max_superradiance(self),
        }
        if include_vectors:
            out["eigenvectors"] = [
                [[float(z.real), float(z.imag)] for z in col] for col in self.eigenvectors.T
            ]
        return out

    def to_json(self, path, include_vectors: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_vectors), fh, indent=2)


class Peak(NamedTuple):
    omega: float
    eta: float
    degenerate: bool


def default_omega_grid(broadening: float, spectral_std: float = 5.0, n_points: int = 2001) -> np.ndarray:
    half = 3.0 * broadening + 5.0 * spectral_std
    return np.linspace(-half, half, n_points)


def _resolvent_amplitudes(h: np.ndarray, l_in, l_out, omega_grid, chunk: int = 256) -> np.ndarray:
    d = h.shape[0]
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    out = np.empty(omega_grid.size, dtype=complex)
    eye = np.eye(d)
    for start in range(0, omega_grid.size, chunk):
        w = omega_grid[start:start + chunk]
        mats = w[:, None, None] * eye - h[None, :, :]
        rhs = np.broadcast_to(l_in, (w.size, d))[..., None]
        x = np.linalg.solve(mats, rhs)[..., 0]
        out[start:start + chunk] = x @ l_out
    return out


def static_spectrum(ensemble: Ensemble, omega_const: float, omega_grid) -> Spectrum:
    """``eta(w) = |l_opt . (w - H0 - Omega V)^-1 l_mu|^2`` for a constant drive."""
    h = build_static_hamiltonian(ensemble) + omega_const * drive_coupling_matrix(ensemble)
    l_mu, l_opt = coupling_vectors(ensemble)
    omega_grid = np.asarray(omega_grid, dtype=float)
    try:
        amp = _resolvent_amplitudes(h, l_mu, l_opt, omega_grid)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "singular resolvent; a lossless ensemble has real eigenvalues on the grid"
        ) from exc
    return Spectrum(omega_grid, np.abs(amp) ** 2)


def _sideband_operator(ensemble: Ensemble, drive: DriveWaveform, k_max: int):
    """Sparse ``B`` such that the sideband system reads ``(w I + B) x = b``."""
    h0 = build_static_hamiltonian(ensemble)
    v = sp.csr_matrix(drive_coupling_matrix(ensemble))
    d = h0.shape[0]
    n_sb = 2 * k_max + 1
    amps, phases = drive.amplitudes, drive.phases
    h_dc = sp.csr_matrix(h0 + amps[0] * math.cos(phases[0]) * drive_coupling_matrix(ensemble))
    orders = np.arange(-k_max, k_max + 1)
    blocks = sp.kron(sp.diags(orders * drive.omega0), sp.identity(d)) - sp.kron(
        sp.identity(n_sb), h_dc
    )
    for n in range(1, min(amps.size - 1, 2 * k_max) + 1):
        if amps[n] == 0:
            continue
        # x_k couples to x_{k-n} through H_{+n} and to x_{k+n} through H_{-n}
        up = 0.5 * amps[n] * np.exp(-1j * phases[n])
        down = 0.5 * amps[n] * np.exp(1j * phases[n])
        shift = sp.diags(np.ones(n_sb - n), -n) * up + sp.diags(np.ones(n_sb - n), n) * down
        blocks = blocks - sp.kron(shift, v)
    return sp.csc_matrix(blocks), orders


def _sideband_solve(ensemble, drive, omega_grid, k_max):
    b_op, orders = _sideband_operator(ensemble, drive, k_max)
    l_mu, l_opt = coupling_vectors(ensemble)
    d = l_mu.size
    n_sb = orders.size
    rhs = np.zeros(n_sb * d, dtype=complex)
    rhs[k_max * d:(k_max + 1) * d] = l_mu
    eye = sp.identity(n_sb * d, format="csc")
    power = np.empty((n_sb, len(omega_grid)))
    for i, w in enumerate(omega_grid):
        x = splu(b_op + w * eye).solve(rhs)
        power[:, i] = np.abs(x.reshape(n_sb, d) @ l_opt) ** 2
    return power, orders


def default_k_max(ensemble: Ensemble, drive: DriveWaveform) -> int:
    spread = max(float(np.std(ensemble.delta_mu)), float(np.std(ensemble.delta_opt)))
    return drive.n_harmonics + math.ceil(4.0 * spread / drive.omega0)


def floquet_spectrum(
    ensemble: Ensemble,
    drive: DriveWaveform,
    omega_grid,
    k_max: int | None = None,
    *,
    tol: float = 1e-8,
    max_doublings: int = 3,
    n_check: int = 21,
) -> Spectrum:
    """Transduction spectrum under a periodic drive from the truncated sideband system.

    Solves ``(w + k w0) x_k - sum_m H_m x_{k-m} = delta_k0 l_mu`` for
    ``|k| <= k_max`` with ``H_{+-n} = (A_n / 2) exp(-+i phi_n) V``. The total
    efficiency sums the output power over all sidebands. Truncation is checked
    afterwards by re-solving at ``k_max + 2`` on a subsample of frequencies;
    ``k_max`` is doubled until the change is below ``tol``.
    """
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if drive.is_constant or drive.omega0 == 0:
        spec = static_spectrum(ensemble, drive.constant_value, omega_grid)
        k = 0 if k_max is None else k_max
        per = np.zeros((2 * k + 1, omega_grid.size))
        per[k] = spec.eta
        return Spectrum(omega_grid, spec.eta, per, np.arange(-k, k + 1), k)
    if k_max is None:
        k_max = default_k_max(ensemble, drive)
    if k_max < drive.n_harmonics:
        raise ValueError(f"k_max={k_max} must be at least the number of harmonics {drive.n_harmonics}")
    idx = np.unique(np.linspace(0, omega_grid.size - 1, min(n_check, omega_grid.size)).astype(int))
    for _ in range(max_doublings + 1):
        power, orders = _sideband_solve(ensemble, drive, omega_grid, k_max)
        eta = power.sum(axis=0)
        probe = np.unique(np.append(idx, int(np.argmax(eta))))
        check, _ = _sideband_solve(ensemble, drive, omega_grid[probe], k_max + 2)
        err = float(np.max(np.abs(check.sum(axis=0) - eta[probe])))
        if err < tol:
            return Spectrum(omega_grid, eta, power, orders, k_max)
        log.info("sideband truncation k_max=%d not converged (%.3g); doubling", k_max, err)
        k_max *= 2
    raise SidebandConvergenceError(
        f"sideband truncation not converged at k_max={k_max // 2} (change {err:.3g} > {tol}); "
        "pass a larger k_max"
    )


def superradiance_metric(state: np.ndarray, ensemble: Ensemble, atol: float = 1e-9) -> float:
    """``(2 / (N sqrt(g_mu g_opt))) |<G|L_opt|phi><phi|L_mu^dag|G>|`` for a unit state."""
    state = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state must have unit norm, got {norm:.12g}")
    l_mu, l_opt = coupling_vectors(ensemble)
    r = ensemble.rates
    scale = 2.0 / (ensemble.n_emitters * math.sqrt(r.gamma_mu * r.gamma_opt))
    return float(scale * abs((l_opt @ state) * np.conj(l_mu @ state)))


def floquet_eigenstates(
    ensemble: Ensemble,
    drive: DriveWaveform,
    period: float | None = None,
    *,
    rtol: float | None = 1e-6,
    max_steps: int = 200_000,
) -> FloquetAnalysis:
    """Diagonalize the one-period propagator and score each eigenvector.

    Constant drives need a nominal ``period``. Right eigenvectors are scaled to
    unit Euclidean norm; no biorthogonality is assumed.
    """
    t_period = drive.period if drive.period is not None else period
    mono = monodromy(ensemble, drive, t_period, rtol=rtol, max_steps=max_steps)
    try:
        vals, vecs = np.linalg.eig(mono)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigendecomposition failed; cond(monodromy)={np.linalg.cond(mono):.3g}"
        ) from exc
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    metrics = np.array([superradiance_metric(vecs[:, j], ensemble) for j in range(vecs.shape[1])])
    return FloquetAnalysis(mono, vals, vecs, metrics, t_period)


def max_superradiance(analysis: FloquetAnalysis) -> float:
    return float(np.max(analysis.metrics))


def find_spectrum_peak(spectrum: Spectrum) -> Peak:
    """Global argmax of the spectrum.

    Exact ties go to the smallest ``|w|``, then the smallest ``w``. An all-zero
    spectrum yields ``Peak(0.0, 0.0, degenerate=True)``.
    """
    eta = np.asarray(spectrum.eta)
    if eta.size == 0:
        raise ValueError("empty spectrum")
    top = float(np.max(eta))
    if top <= 0:
        return Peak(0.0, 0.0, True)
    cand = np.asarray(spectrum.omega)[eta == top]
    best = min(cand, key=lambda w: (abs(w), w))
    return Peak(float(best), top, False)


def refine_static_peak(ensemble: Ensemble, omega_const: float, omega_grid) -> Peak:
    """Grid argmax of the constant-drive spectrum, polished to sub-bin accuracy."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    coarse = find_spectrum_peak(static_spectrum(ensemble, omega_const, omega_grid))
    if coarse.degenerate or omega_grid.size < 2:
        return coarse
    step = float(omega_grid[1] - omega_grid[0])

    def neg_eta(w):
        return -static_spectrum(ensemble, omega_const, [w]).eta[0]

    res = minimize_scalar(
        neg_eta,
        bounds=(coarse.omega - step, coarse.omega + step),
        method="bounded",
        options={"xatol": 1e-6 * max(step, 1e-12)},
    )
    if -res.fun > coarse.eta:
        return Peak(float(res.x), float(-res.fun), False)
    return coarse
