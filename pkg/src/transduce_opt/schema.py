"""JSON schemas for the interchange documents and the run configuration."""

from __future__ import annotations

import jsonschema

_number = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_numbers = {"type": "array", "items": _number}

RATES = {
    "type": "object",
    "properties": {
        "gamma_mu": _nonneg,
        "gamma_opt": _nonneg,
        "Gamma_mu": _nonneg,
        "Gamma_opt": _nonneg,
    },
    "required": ["gamma_mu", "gamma_opt", "Gamma_mu", "Gamma_opt"],
    "additionalProperties": False,
}

ENSEMBLE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Ensemble",
    "type": "object",
    "properties": {
        "n_emitters": {"type": "integer", "minimum": 1},
        "rates": RATES,
        "delta_mu": _numbers,
        "delta_opt": _numbers,
    },
    "required": ["n_emitters", "rates", "delta_mu", "delta_opt"],
    "additionalProperties": False,
}

DRIVE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "DriveWaveform",
    "type": "object",
    "properties": {
        "omega0": _nonneg,
        "amplitudes": {**_numbers, "minItems": 1},
        "phases": {**_numbers, "minItems": 1},
    },
    "required": ["omega0", "amplitudes", "phases"],
    "additionalProperties": False,
}

REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "OptimizeReport",
    "type": "object",
    "properties": {
        "best_params": _numbers,
        "omega0": _nonneg,
        "drive": DRIVE,
        "objective_history": _numbers,
        "gradient_norm_history": _numbers,
        "baseline_efficiency": _nonneg,
        "initial_efficiency": _nonneg,
        "best_efficiency": _nonneg,
        "improvement": {"type": ["number", "null"]},
        "n_evaluations": {"type": "integer", "minimum": 0},
        "flags": {"type": "array", "items": {"type": "string"}},
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "config": {"type": "object"},
        "extra": {"type": "object"},
    },
    "required": [
        "best_params",
        "omega0",
        "drive",
        "objective_history",
        "baseline_efficiency",
        "best_efficiency",
        "improvement",
        "config",
    ],
}

FIGURES = ["fig1b", "fig1c", "fig1d", "fig2", "fig3", "fig4", "fig5"]

CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "properties": {
        "figure": {"enum": FIGURES},
        "physics": {
            "type": "object",
            "properties": {
                "n_emitters": {"type": "integer", "minimum": 1},
                "cooperativity": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "gamma_mu": _nonneg,
                "gamma_opt": _nonneg,
                "Gamma_mu": _nonneg,
                "Gamma_opt": _nonneg,
            },
            "additionalProperties": False,
        },
        "broadening": _nonneg,
        "seed": {"type": "integer", "minimum": 0},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "n_ensembles": {"type": "integer", "minimum": 1},
        "wavepacket": {
            "type": "object",
            "properties": {
                "center_freq": _number,
                "spectral_std": {"type": "number", "exclusiveMinimum": 0},
                "center_time": _number,
            },
            "additionalProperties": False,
        },
        "drive": {
            "type": "object",
            "properties": {
                "omega0": {"type": "number", "exclusiveMinimum": 0},
                "n_harmonics": {"type": "integer", "minimum": 0},
                "constant": {"type": ["number", "null"]},
            },
            "additionalProperties": False,
        },
        "drive_file": {"type": ["string", "null"]},
        "ensemble_file": {"type": ["string", "null"]},
        "grid": {
            "type": "object",
            "properties": {
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "tail": {"type": ["number", "null"], "minimum": 0},
                "omega_ceiling": {"type": ["number", "null"], "minimum": 0},
            },
            "additionalProperties": False,
        },
        "spectrum": {
            "type": "object",
            "properties": {
                "n_points": {"type": "integer", "minimum": 2},
                "floquet_points": {"type": "integer", "minimum": 2},
                "omega_min": {"type": ["number", "null"]},
                "omega_max": {"type": ["number", "null"]},
                "k_max": {"type": ["integer", "null"], "minimum": 0},
            },
            "additionalProperties": False,
        },
        "optimizer": {"type": "object"},
        "sweep": {
            "type": "object",
            "properties": {
                "broadenings": {"type": "array", "items": _nonneg, "minItems": 1},
                "cooperativities": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 1,
                },
                "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "floquet": {
            "type": "object",
            "properties": {
                "include_vectors": {"type": "boolean"},
                "period": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "rtol": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "gradcheck": {
            "type": "object",
            "properties": {
                "n_emitters": {"type": "integer", "minimum": 1, "maximum": 3},
                "n_harmonics": {"type": "integer", "minimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "corrupt": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "full": {"type": "boolean"},
    },
    "additionalProperties": False,
}


class SchemaError(ValueError):
    """Document does not match its schema; ``field`` names the offending path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def validate(document, schema: dict) -> None:
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(path, exc.message) from None
