"""Steady-state fluorescence of laser-driven multilevel atoms in weak magnetic fields.

Builds Lindblad master equations for a 4-level toy model and the 8-level
S1/2-P1/2-D3/2 ion, solves for stationary states, scans drive power and detuning,
and fits IR spectra to calibrate field and Rabi frequencies.
"""

__version__ = "0.1.0"

from .atom import (
    EightLevelParams,
    FourLevelParams,
    LaserDrive,
    LevelScheme,
    MagneticField,
    Manifold,
    build_h4,
    build_h8,
    clebsch_gordan,
    larmor_splitting,
    linear_perp_polarization,
)
from .fitting import FitResult, SpectrumData, SpectrumFitter, fit_spectrum, model_spectrum
from .master import (
    JumpOperator,
    assemble_liouvillian,
    dissipator_4level,
    evolve,
    jump_operators_8level,
    liouvillian,
)
from .scans import ScanResult, SlopeResult, detuning_scan, power_scan, threshold_slope
from .steady import SteadyStateResult, omega2_max, pe_analytic, steady_state

__all__ = [
    "EightLevelParams",
    "FitResult",
    "FourLevelParams",
    "JumpOperator",
    "LaserDrive",
    "LevelScheme",
    "MagneticField",
    "Manifold",
    "ScanResult",
    "SlopeResult",
    "SpectrumData",
    "SpectrumFitter",
    "SteadyStateResult",
    "assemble_liouvillian",
    "build_h4",
    "build_h8",
    "clebsch_gordan",
    "detuning_scan",
    "dissipator_4level",
    "evolve",
    "fit_spectrum",
    "jump_operators_8level",
    "larmor_splitting",
    "linear_perp_polarization",
    "liouvillian",
    "model_spectrum",
    "omega2_max",
    "pe_analytic",
    "power_scan",
    "steady_state",
    "threshold_slope",
]
