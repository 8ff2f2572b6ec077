"""Networks of parametrically driven Kerr resonators.

Mean-field steady states and phase diagrams, linearized fluctuation
spectra, stochastic (Langevin) dynamics, small-network Lindblad steady
states and a lab-frame integrator validating the rotating-frame
reduction.  The command-line entry point lives in :mod:`kponet.cli`.
"""

from .params import (CalibrationInputs, NetworkParams, NormalModeBasis,
                     calibrate_drive, calibrate_noise, detunings,
                     lobe_threshold, normal_mode_basis, normal_mode_drives)
from .meanfield import (SteadyState, bifurcation_sweep,
                        characteristic_exponents, classify_state,
                        detect_exceptional_points, find_steady_states,
                        params_at, phase_diagram)
from .fluctuations import (FluctuationSpectrum, analytic_psd, bdg_matrix,
                           fluctuation_spectrum, stationary_covariance,
                           transfer_psd)
from .langevin import (DivergedError, NoiseSpec, Trajectory, integrate,
                       pump_noisy_probe, welch_psd)
from .quantum import (FockSpace, QuantumSteadyState, build_liouvillian,
                      cat_state, ensemble_mean_amplitude,
                      quadrature_distribution, steady_state,
                      steady_state_converged)
from .labframe import (LabParams, demodulate, integrate_lab,
                       lab_instability_threshold, lab_params)

__version__ = "0.1.0"

__all__ = [
    "CalibrationInputs", "NetworkParams", "NormalModeBasis",
    "calibrate_drive", "calibrate_noise", "detunings", "lobe_threshold",
    "normal_mode_basis", "normal_mode_drives",
    "SteadyState", "bifurcation_sweep", "characteristic_exponents",
    "classify_state", "detect_exceptional_points", "find_steady_states",
    "params_at", "phase_diagram",
    "FluctuationSpectrum", "analytic_psd", "bdg_matrix",
    "fluctuation_spectrum", "stationary_covariance", "transfer_psd",
    "DivergedError", "NoiseSpec", "Trajectory", "integrate",
    "pump_noisy_probe", "welch_psd",
    "FockSpace", "QuantumSteadyState", "build_liouvillian", "cat_state",
    "ensemble_mean_amplitude", "quadrature_distribution", "steady_state",
    "steady_state_converged",
    "LabParams", "demodulate", "integrate_lab",
    "lab_instability_threshold", "lab_params",
    "__version__",
]
