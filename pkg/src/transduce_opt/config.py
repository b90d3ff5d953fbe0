"""Run configuration: one JSON document, validated and fully resolved."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import (
    DriveWaveform,
    Ensemble,
    GaussianWavepacket,
    Rates,
    SamplingSpec,
    homogeneous_optimal_drive,
    sample_ensemble,
)
from .optimize import OptimizeConfig
from .schema import CONFIG, DRIVE, ENSEMBLE, SchemaError, validate
from .spectra import default_omega_grid

OUTPUT_ENV = "TRANSDUCE_OPT_OUT"

DESK_ENSEMBLES = 20
FULL_ENSEMBLES = 100
DESK_OPTIMIZER = {"max_iters": 60, "epochs": 100, "n_samples": 20}
FULL_OPTIMIZER = {"max_iters": 300, "epochs": 500, "n_samples": 100}


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def load_json(path) -> dict:
    """Read a JSON document; NaN and Infinity literals are rejected."""
    return json.loads(Path(path).read_text(), parse_constant=_reject_constant)


def load_ensemble(path) -> Ensemble:
    doc = load_json(path)
    validate(doc, ENSEMBLE)
    return Ensemble.from_dict(doc)


def load_drive(path) -> DriveWaveform:
    doc = load_json(path)
    validate(doc, DRIVE)
    return DriveWaveform.from_dict(doc)


@dataclass
class ExperimentConfig:
    n_emitters: int = 10
    rates: Rates = field(default_factory=lambda: Rates(1.0, 1.0, 10.0, 10.0))
    broadening: float = 200.0
    seeds: list = field(default_factory=lambda: list(range(DESK_ENSEMBLES)))
    wavepacket: GaussianWavepacket = field(default_factory=GaussianWavepacket)
    omega0: float = 10.0
    n_harmonics: int = 40
    constant_drive: float | None = None
    drive_file: str | None = None
    ensemble_file: str | None = None
    dt: float | None = None
    tail: float | None = None
    omega_ceiling: float | None = None
    n_points: int = 2001
    floquet_points: int = 401
    omega_min: float | None = None
    omega_max: float | None = None
    k_max: int | None = None
    optimizer: OptimizeConfig = field(default_factory=OptimizeConfig)
    broadenings: list = field(default_factory=lambda: [0.0, 25.0, 50.0, 100.0, 200.0])
    cooperativities: list = field(default_factory=lambda: [0.01, 0.1, 1.0])
    n_values: list = field(default_factory=lambda: list(range(1, 31)))
    include_vectors: bool = False
    floquet_period: float | None = None
    floquet_rtol: float | None = 1e-6
    gradcheck: dict = field(default_factory=dict)
    figure: str | None = None
    output_dir: str = "run"
    threads: int | None = None
    full: bool = False

    @property
    def cooperativity(self) -> float:
        return self.rates.cooperativity_mu

    def rates_for(self, cooperativity: float) -> Rates:
        """Sweep helper: symmetric rates keeping this config's gamma."""
        g = self.rates.gamma_mu
        return Rates(g, g, g / cooperativity, g / cooperativity)

    def ensemble(self, seed: int, broadening: float | None = None, rates: Rates | None = None) -> Ensemble:
        spec = SamplingSpec(self.broadening if broadening is None else broadening, seed)
        return sample_ensemble(self.n_emitters, rates or self.rates, spec)

    def constant_value(self, rates: Rates | None = None) -> float:
        if self.constant_drive is not None:
            return self.constant_drive
        return homogeneous_optimal_drive(self.n_emitters, rates or self.rates)

    def omega_grid(self, broadening: float | None = None) -> np.ndarray:
        b = self.broadening if broadening is None else broadening
        grid = default_omega_grid(b, self.wavepacket.spectral_std, self.n_points)
        lo = grid[0] if self.omega_min is None else self.omega_min
        hi = grid[-1] if self.omega_max is None else self.omega_max
        return np.linspace(lo, hi, self.n_points)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rates"] = self.rates.to_dict()
        out["wavepacket"] = self.wavepacket.to_dict()
        out["optimizer"] = asdict(self.optimizer)
        return out

    @classmethod
    def from_dict(cls, doc: dict, *, full: bool = False) -> "ExperimentConfig":
        validate(doc, CONFIG)
        full = full or doc.get("full", False)
        kw = {"full": full}
        phys = doc.get("physics", {})
        if "n_emitters" in phys:
            kw["n_emitters"] = phys["n_emitters"]
        gamma = phys.get("gamma", 1.0)
        coop = phys.get("cooperativity", 0.1)
        loss = gamma / coop
        # explicit rates win over the cooperativity shorthand
        try:
            kw["rates"] = Rates(
                phys.get("gamma_mu", gamma),
                phys.get("gamma_opt", gamma),
                phys.get("Gamma_mu", loss),
                phys.get("Gamma_opt", loss),
            )
        except ValueError as exc:
            raise SchemaError("physics", str(exc)) from None
        if "broadening" in doc:
            kw["broadening"] = float(doc["broadening"])
        if "seeds" in doc:
            kw["seeds"] = [int(s) for s in doc["seeds"]]
        else:
            n = doc.get("n_ensembles", FULL_ENSEMBLES if full else DESK_ENSEMBLES)
            base = doc.get("seed", 0)
            kw["seeds"] = list(range(base, base + n))
        wp = doc.get("wavepacket", {})
        kw["wavepacket"] = GaussianWavepacket(
            float(wp.get("center_freq", 0.0)),
            float(wp.get("spectral_std", 5.0)),
            float(wp.get("center_time", 0.0)),
        )
        drive = doc.get("drive", {})
        kw["omega0"] = float(drive.get("omega0", 10.0))
        kw["n_harmonics"] = int(drive.get("n_harmonics", 40))
        kw["constant_drive"] = drive.get("constant")
        for key in ("drive_file", "ensemble_file"):
            if doc.get(key):
                kw[key] = doc[key]
        grid = doc.get("grid", {})
        for key in ("dt", "tail", "omega_ceiling"):
            kw[key] = grid.get(key)
        spec = doc.get("spectrum", {})
        for key in ("n_points", "floquet_points", "omega_min", "omega_max", "k_max"):
            if key in spec:
                kw[key] = spec[key]
        opt = dict(FULL_OPTIMIZER if full else DESK_OPTIMIZER)
        opt.update(omega0=kw["omega0"], n_harmonics=kw["n_harmonics"], omega_ceiling=kw["omega_ceiling"])
        opt.update(doc.get("optimizer", {}))
        try:
            kw["optimizer"] = OptimizeConfig.from_dict(opt)
        except (TypeError, ValueError) as exc:
            raise SchemaError("optimizer", str(exc)) from None
        sweep = doc.get("sweep", {})
        for key in ("broadenings", "cooperativities", "n_values"):
            if key in sweep:
                kw[key] = list(sweep[key])
        flo = doc.get("floquet", {})
        kw["include_vectors"] = flo.get("include_vectors", False)
        kw["floquet_period"] = flo.get("period")
        if "rtol" in flo:
            kw["floquet_rtol"] = flo["rtol"]
        kw["gradcheck"] = dict(doc.get("gradcheck", {}))
        kw["figure"] = doc.get("figure")
        kw["output_dir"] = os.environ.get(OUTPUT_ENV) or doc.get("output_dir", "run")
        kw["threads"] = doc.get("threads")
        return cls(**kw)

    @classmethod
    def load(cls, path, *, full: bool = False) -> "ExperimentConfig":
        try:
            doc = load_json(path)
        except ValueError as exc:
            raise SchemaError("<root>", f"invalid JSON: {exc}") from None
        return cls.from_dict(doc, full=full)
