"""Physical data types and single-excitation operators.

Everything is expressed in units of the channel decay rate gamma (gamma = 1
fixes the unit system): rates and frequencies in gamma, times in 1/gamma.

Basis convention for all vectors and matrices of dimension 2N: indices
``0..N-1`` hold the microwave excited states ``|e_mu^(i)>`` and indices
``N..2N-1`` hold the optical excited states ``|e_opt^(i)>``. The ensemble
ground state is the implicit vacuum and is never stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Rates",
    "Ensemble",
    "DriveWaveform",
    "GaussianWavepacket",
    "SamplingSpec",
    "build_static_hamiltonian",
    "drive_coupling_matrix",
    "coupling_vectors",
    "evaluate_drive",
    "sample_ensemble",
    "wavepacket_amplitude",
    "sample_wavepacket",
    "homogeneous_optimal_drive",
    "rates_from_cooperativity",
]


@dataclass(frozen=True)
class Rates:
    """Channel decay rates (``gamma_*``) and parasitic loss rates (``Gamma_*``)."""

    gamma_mu: float = 1.0
    gamma_opt: float = 1.0
    Gamma_mu: float = 0.0
    Gamma_opt: float = 0.0

    def __post_init__(self):
        for name in ("gamma_mu", "gamma_opt", "Gamma_mu", "Gamma_opt"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative rate, got {value}")
            object.__setattr__(self, name, value)
        if self.gamma_mu + self.Gamma_mu <= 0 or self.gamma_opt + self.Gamma_opt <= 0:
            raise ValueError("each transition needs a positive total decay rate")

    @property
    def cooperativity_mu(self) -> float:
        return self.gamma_mu / self.Gamma_mu if self.Gamma_mu > 0 else math.inf

    @property
    def cooperativity_opt(self) -> float:
        return self.gamma_opt / self.Gamma_opt if self.Gamma_opt > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "gamma_mu": self.gamma_mu,
            "gamma_opt": self.gamma_opt,
            "Gamma_mu": self.Gamma_mu,
            "Gamma_opt": self.Gamma_opt,
        }


def rates_from_cooperativity(cooperativity: float, gamma: float = 1.0) -> Rates:
    """Symmetric rates with ``Gamma = gamma / C`` on both transitions."""
    if cooperativity <= 0:
        raise ValueError("cooperativity must be positive")
    loss = gamma / cooperativity
    return Rates(gamma, gamma, loss, loss)


@dataclass(frozen=True)
class Ensemble:
    """N three-level emitters with per-emitter detunings in the rotating frame."""

    n_emitters: int
    rates: Rates
    delta_mu: np.ndarray
    delta_opt: np.ndarray

    def __post_init__(self):
        n = int(self.n_emitters)
        if n < 1:
            raise ValueError("n_emitters must be at least 1")
        d_mu = np.array(self.delta_mu, dtype=float).reshape(-1)
        d_opt = np.array(self.delta_opt, dtype=float).reshape(-1)
        if d_mu.shape != (n,) or d_opt.shape != (n,):
            raise ValueError(
                f"detuning vectors must have length n_emitters={n}, "
                f"got {d_mu.shape[0]} and {d_opt.shape[0]}"
            )
        if not (np.all(np.isfinite(d_mu)) and np.all(np.isfinite(d_opt))):
            raise ValueError("detunings must be finite")
        d_mu.flags.writeable = False
        d_opt.flags.writeable = False
        object.__setattr__(self, "n_emitters", n)
        object.__setattr__(self, "delta_mu", d_mu)
        object.__setattr__(self, "delta_opt", d_opt)

    @classmethod
    def homogeneous(cls, n_emitters: int, rates: Rates) -> "Ensemble":
        return cls(n_emitters, rates, np.zeros(n_emitters), np.zeros(n_emitters))

    @property
    def dim(self) -> int:
        return 2 * self.n_emitters

    def to_dict(self) -> dict:
        return {
            "n_emitters": self.n_emitters,
            "rates": self.rates.to_dict(),
            "delta_mu": [float(x) for x in self.delta_mu],
            "delta_opt": [float(x) for x in self.delta_opt],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Ensemble":
        return cls(
            int(data["n_emitters"]),
            Rates(**data["rates"]),
            np.asarray(data["delta_mu"], dtype=float),
            np.asarray(data["delta_opt"], dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "Ensemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DriveWaveform:
    """Band-limited drive ``Omega(t) = sum_n A_n cos(n omega0 t + phi_n)``."""

    omega0: float
    amplitudes: np.ndarray
    phases: np.ndarray = field(default=None)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float).reshape(-1)
        phases = (
            np.zeros_like(amps)
            if self.phases is None
            else np.array(self.phases, dtype=float).reshape(-1)
        )
        if amps.size == 0 or phases.shape != amps.shape:
            raise ValueError("amplitudes and phases must be non-empty and of equal length")
        if not (np.all(np.isfinite(amps)) and np.all(np.isfinite(phases))):
            raise ValueError("drive coefficients must be finite")
        omega0 = float(self.omega0)
        if not math.isfinite(omega0) or omega0 < 0:
            raise ValueError("omega0 must be finite and non-negative")
        if omega0 == 0 and np.any(amps[1:] != 0):
            raise ValueError("harmonics n >= 1 need omega0 > 0")
        amps.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "omega0", omega0)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def constant(cls, value: float, omega0: float = 0.0, n_harmonics: int = 0) -> "DriveWaveform":
        amps = np.zeros(n_harmonics + 1)
        amps[0] = value
        return cls(omega0, amps, np.zeros(n_harmonics + 1))

    @property
    def n_harmonics(self) -> int:
        return self.amplitudes.size - 1

    @property
    def is_constant(self) -> bool:
        return not np.any(self.amplitudes[1:] != 0)

    @property
    def period(self) -> float | None:
        """``2 pi / omega0``, or None when only the constant term is present."""
        if self.is_constant or self.omega0 == 0:
            return None
        return 2.0 * math.pi / self.omega0

    @property
    def constant_value(self) -> float:
        return float(self.amplitudes[0] * math.cos(self.phases[0]))

    def peak_bound(self) -> float:
        """Upper bound on ``|Omega(t)|``."""
        return float(np.sum(np.abs(self.amplitudes[1:])) + abs(self.constant_value))

    def __call__(self, t):
        return evaluate_drive(self, t)

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "amplitudes": [float(x) for x in self.amplitudes],
            "phases": [float(x) for x in self.phases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DriveWaveform":
        return cls(float(data["omega0"]), data["amplitudes"], data["phases"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "DriveWaveform":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GaussianWavepacket:
    """Single-photon input with a Gaussian spectrum.

    ``spectral_std`` is the standard deviation of the amplitude spectrum, so
    the temporal envelope is ``exp(-spectral_std**2 (t - center_time)**2 / 2)``.
    """

    center_freq: float = 0.0
    spectral_std: float = 5.0
    center_time: float = 0.0

    def __post_init__(self):
        if not self.spectral_std > 0:
            raise ValueError(f"spectral_std must be positive, got {self.spectral_std}")

    def half_width(self, rel_cutoff: float = 1e-8) -> float:
        """Time from the centre at which ``|a_mu|`` falls to ``rel_cutoff`` of peak."""
        return math.sqrt(-2.0 * math.log(rel_cutoff)) / self.spectral_std

    def shifted(self, center_freq: float) -> "GaussianWavepacket":
        return GaussianWavepacket(center_freq, self.spectral_std, self.center_time)

    def to_dict(self) -> dict:
        return {
            "center_freq": self.center_freq,
            "spectral_std": self.spectral_std,
            "center_time": self.center_time,
        }


@dataclass(frozen=True)
class SamplingSpec:
    broadening: float
    seed: int = 0

    def __post_init__(self):
        if not self.broadening >= 0:
            raise ValueError(f"broadening must be non-negative, got {self.broadening}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def build_static_hamiltonian(ensemble: Ensemble) -> np.ndarray:
    """Drive-free part of the non-Hermitian effective Hamiltonian.

    Detunings on the diagonal, parasitic loss ``-i Gamma / 2`` per emitter and
    collective channel decay ``-i gamma / 2`` on every element of the
    corresponding N x N block.
    """
    r = ensemble.rates
    n = ensemble.n_emitters
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, :n] = -0.5j * r.gamma_mu
    h[n:, n:] = -0.5j * r.gamma_opt
    idx = np.arange(n)
    h[idx, idx] += ensemble.delta_mu - 0.5j * r.Gamma_mu
    h[idx + n, idx + n] += ensemble.delta_opt - 0.5j * r.Gamma_opt
    return h


def drive_coupling_matrix(ensemble: Ensemble) -> np.ndarray:
    """Unit coupling between the two excited states of each emitter."""
    n = ensemble.n_emitters
    v = np.zeros((2 * n, 2 * n), dtype=complex)
    idx = np.arange(n)
    v[idx, idx + n] = 1.0
    v[idx + n, idx] = 1.0
    return v


def coupling_vectors(ensemble: Ensemble) -> tuple[np.ndarray, np.ndarray]:
    """``L_mu^dag |G>`` and ``L_opt^dag |G>`` in the single-excitation basis."""
    n = ensemble.n_emitters
    l_mu = np.zeros(2 * n, dtype=complex)
    l_opt = np.zeros(2 * n, dtype=complex)
    l_mu[:n] = math.sqrt(ensemble.rates.gamma_mu)
    l_opt[n:] = math.sqrt(ensemble.rates.gamma_opt)
    return l_mu, l_opt


def evaluate_drive(drive: DriveWaveform, t):
    t = np.asarray(t, dtype=float)
    n = np.arange(drive.amplitudes.size)
    arg = np.multiply.outer(t, n * drive.omega0) + drive.phases
    out = np.cos(arg) @ drive.amplitudes
    return float(out) if out.ndim == 0 else out


def homogeneous_optimal_drive(n_emitters: int, rates: Rates) -> float:
    """Constant drive ``(N gamma + Gamma) / 2`` that is optimal without broadening.

    For asymmetric rates the geometric mean of the two collective half-widths
    is used, which reduces to the symmetric formula when the rates agree.
    """
    k_mu = n_emitters * rates.gamma_mu + rates.Gamma_mu
    k_opt = n_emitters * rates.gamma_opt + rates.Gamma_opt
    return 0.5 * math.sqrt(k_mu * k_opt)


def sample_ensemble(n: int, rates: Rates, spec: SamplingSpec) -> Ensemble:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(int(spec.seed))
    z = rng.standard_normal((2, n))
    # + 0.0 turns -0.0 into 0.0 when broadening is zero
    deltas = spec.broadening * z + 0.0
    return Ensemble(n, rates, deltas[0], deltas[1])


def wavepacket_amplitude(wp: GaussianWavepacket, t):
    """Analytically normalized input envelope ``a_mu(t)``."""
    tau = np.asarray(t, dtype=float) - wp.center_time
    s = wp.spectral_std
    norm = (s * s / math.pi) ** 0.25
    return norm * np.exp(-0.5 * (s * tau) ** 2 - 1j * wp.center_freq * tau)


def sample_wavepacket(wp: GaussianWavepacket, times: np.ndarray) -> np.ndarray:
    """Input envelope on a uniform grid, renormalized to unit trapezoidal norm."""
    a = wavepacket_amplitude(wp, times)
    dt = times[1] - times[0]
    power = np.abs(a) ** 2
    norm = dt * (power.sum() - 0.5 * (power[0] + power[-1]))
    if norm <= 0:
        raise ValueError("time grid does not overlap the wavepacket")
    return a / math.sqrt(norm)
