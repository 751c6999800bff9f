"""Simulator and spectrum fitter for a flux-tunable coupler between LC resonators.

The package splits into a classical circuit chain (:mod:`couplersim.circuit`),
a truncated-basis quantum model (:mod:`couplersim.fock`), the driven
open-system response with port crosstalk (:mod:`couplersim.response`),
spectrum fitting with a scikit-learn style estimator
(:mod:`couplersim.fitting`) and file formats plus a CLI
(:mod:`couplersim.io`, :mod:`couplersim.cli`).
"""

from .circuit import (
    EffectiveCoupler,
    ModeCoefficients,
    ModeRecord,
    coefficients_at,
    effective_qubit_coupling,
    eigenmodes,
    flux_calibration,
    infinite_mutual_limits,
    junction_inductance,
    minimize_3j_potential,
    minimize_rf_potential,
    mode_coefficients,
    rf_potential,
    rf_potential_grad,
    rwa_modes,
    star_delta,
    sweep_coefficients,
    three_junction_coefficients,
    threej_potential,
    threej_potential_grad,
    zpf_coupling_approx,
)
from .fitting import (
    CircuitSpectrumFitter,
    FitResult,
    PeakExtractor,
    g_range,
    predict_modes,
    rwa_shift,
)
from .fock import (
    DensityMatrix,
    FockSpace,
    WignerGrid,
    build_hamiltonian,
    eigen_state,
    fock_distribution,
    ground_state,
    mean_photon,
    numeric_eigenmodes,
    reduced_density,
    von_neumann_entropy,
    wigner,
)
from .params import (
    CalibrationConstants,
    CircuitParams,
    FluxBias,
    ThreeJunctionParams,
    load_circuit_params,
    load_three_junction_params,
    sample_circuit_params,
    sample_three_junction_params,
)
from .response import (
    DisappearancePoint,
    DriveConfig,
    ResponseAmplitudes,
    SpectrumGrid,
    find_disappearance,
    lindblad_steady_state_oracle,
    scan_spectrum,
    steady_state_moments,
    transmission_reflection,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationConstants",
    "CircuitParams",
    "CircuitSpectrumFitter",
    "DensityMatrix",
    "DisappearancePoint",
    "DriveConfig",
    "EffectiveCoupler",
    "FitResult",
    "FluxBias",
    "FockSpace",
    "ModeCoefficients",
    "ModeRecord",
    "PeakExtractor",
    "ResponseAmplitudes",
    "SpectrumGrid",
    "ThreeJunctionParams",
    "WignerGrid",
    "build_hamiltonian",
    "coefficients_at",
    "effective_qubit_coupling",
    "eigen_state",
    "eigenmodes",
    "find_disappearance",
    "flux_calibration",
    "fock_distribution",
    "g_range",
    "ground_state",
    "infinite_mutual_limits",
    "junction_inductance",
    "lindblad_steady_state_oracle",
    "load_circuit_params",
    "load_three_junction_params",
    "mean_photon",
    "minimize_3j_potential",
    "minimize_rf_potential",
    "mode_coefficients",
    "numeric_eigenmodes",
    "predict_modes",
    "reduced_density",
    "rf_potential",
    "rf_potential_grad",
    "rwa_modes",
    "rwa_shift",
    "sample_circuit_params",
    "sample_three_junction_params",
    "scan_spectrum",
    "star_delta",
    "steady_state_moments",
    "sweep_coefficients",
    "three_junction_coefficients",
    "threej_potential",
    "threej_potential_grad",
    "transmission_reflection",
    "von_neumann_entropy",
    "wigner",
    "zpf_coupling_approx",
]
