"""qgalv: simulator and analysis toolkit for a condensate galvanometer.

A trapped Bose-Einstein condensate senses the current in a vibrating
nanotube through the tube's oscillating magnetic near field: the
current-noise spectrum S(omega) maps linearly onto the number of atoms
transferred between Zeeman sublevels, with a resolution kernel set by
the condensate chemical potential.  The package computes that kernel,
runs the forward map for analytic or tabulated noise models, validates
it against brute-force stochastic trajectories, simulates shot-limited
counting, and inverts measured scans back to S(omega) by regularized
deconvolution.
"""

__version__ = "0.1.0"

from .constants import RB87, PhysicalConstants
from .errors import (NumericalError, QgalvError, QgalvWarning,
                     StatisticalError, ValidationError)
from .condensate import (CondensateTF, TrapConfig, chemical_potential,
                         interaction_g, tf_density, trap_potential)
from .nanowire import (NanowireConfig, boffs_from_omega, detuning,
                       drive_prefactor, driving_amplitude, omega_from_boffs,
                       u_factor, u_factor_grid)
from .kernel import (ResponseKernel, Window, build_kernel, d_tilde,
                     kernel_freq, kernel_time, n_det, resolution_function,
                     window_ft, window_time)
from .spectra import (DetailedBalanceNoise, FlatNoise, LineNoise,
                      LorentzianNoise, ScanResult, TabulatedNoise,
                      asymmetry, autocorrelation, is_classical, scan,
                      sensitivity_estimate, spectral_density,
                      transferred_atoms)
from .oracle import (BandLimitedWhite, OrnsteinUhlenbeck,
                     SinusoidRandomPhase, equivalent_model, oracle_scan,
                     sample_current, tf_quadrature_grid)
from .counting import DetectionConfig, estimate_means, simulate_counts
from .inversion import (InverseProblem, ReconstructionResult,
                        build_kernel_matrix, choose_lambda_discrepancy,
                        deconvolve, lambda_scan)
from .config import ScenarioConfig, parse_scenario

__all__ = [
    "__version__",
    "PhysicalConstants", "RB87",
    "QgalvError", "ValidationError", "NumericalError", "StatisticalError",
    "QgalvWarning",
    "TrapConfig", "CondensateTF", "interaction_g", "chemical_potential",
    "trap_potential", "tf_density",
    "NanowireConfig", "u_factor", "u_factor_grid", "drive_prefactor",
    "driving_amplitude", "detuning", "omega_from_boffs", "boffs_from_omega",
    "ResponseKernel", "Window", "build_kernel", "d_tilde", "kernel_time",
    "kernel_freq", "window_time", "window_ft", "n_det", "resolution_function",
    "FlatNoise", "LineNoise", "LorentzianNoise", "DetailedBalanceNoise",
    "TabulatedNoise", "ScanResult", "spectral_density", "autocorrelation",
    "is_classical", "transferred_atoms", "scan", "asymmetry",
    "sensitivity_estimate",
    "SinusoidRandomPhase", "OrnsteinUhlenbeck", "BandLimitedWhite",
    "equivalent_model", "sample_current", "tf_quadrature_grid", "oracle_scan",
    "DetectionConfig", "simulate_counts", "estimate_means",
    "InverseProblem", "ReconstructionResult", "build_kernel_matrix",
    "deconvolve", "lambda_scan", "choose_lambda_discrepancy",
    "ScenarioConfig", "parse_scenario",
]
