"""Drive-shaping optimizer for ensemble microwave-to-optical transduction.

Units: the channel decay rate gamma is 1; frequencies and rates are in units
of gamma and times in units of 1/gamma. State vectors order the microwave
excitations of all emitters first, then the optical excitations.
"""

__version__ = "0.1.0"

from .dynamics import StabilityError, TimeGrid, Trajectory, monodromy, propagate, transduction_efficiency
from .model import (
    DriveWaveform,
    Ensemble,
    GaussianWavepacket,
    Rates,
    SamplingSpec,
    build_static_hamiltonian,
    coupling_vectors,
    drive_coupling_matrix,
    evaluate_drive,
    sample_ensemble,
    wavepacket_amplitude,
)
from .optimize import (
    OptimizeConfig,
    OptimizeReport,
    improvement_ratio,
    objective,
    objective_gradient,
    optimize_custom,
    optimize_robust,
)
from .spectra import (
    FloquetAnalysis,
    Spectrum,
    find_spectrum_peak,
    floquet_eigenstates,
    floquet_spectrum,
    max_superradiance,
    static_spectrum,
    superradiance_metric,
)
from .stats import DensityEstimate, SummaryStats, gaussian_kde, summarize

__all__ = [
    "DensityEstimate",
    "DriveWaveform",
    "Ensemble",
    "FloquetAnalysis",
    "GaussianWavepacket",
    "OptimizeConfig",
    "OptimizeReport",
    "Rates",
    "SamplingSpec",
    "Spectrum",
    "StabilityError",
    "SummaryStats",
    "TimeGrid",
    "Trajectory",
    "build_static_hamiltonian",
    "coupling_vectors",
    "drive_coupling_matrix",
    "evaluate_drive",
    "find_spectrum_peak",
    "floquet_eigenstates",
    "floquet_spectrum",
    "gaussian_kde",
    "improvement_ratio",
    "max_superradiance",
    "monodromy",
    "objective",
    "objective_gradient",
    "optimize_custom",
    "optimize_robust",
    "propagate",
    "sample_ensemble",
    "static_spectrum",
    "summarize",
    "superradiance_metric",
    "transduction_efficiency",
    "wavepacket_amplitude",
]
