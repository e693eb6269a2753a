"""Coupled-dipole simulations of atoms in a single-mode 1D waveguide."""

from .core import AtomArray, DipoleCouplingInputs, DriveField, LatticeSpec, WaveguideParams
from .eigenmodes import EigenmodeSet, decompose, mode_weights
from .errors import ConfigError, IntegrationError, PoleError, SingularSystemError, TotalReflection
from .steady_state import ScatteringCoefficients, SpectrumTable, solve_steady, spectrum

__version__ = "0.1.0"

__all__ = [
    "AtomArray",
    "ConfigError",
    "DipoleCouplingInputs",
    "DriveField",
    "EigenmodeSet",
    "IntegrationError",
    "LatticeSpec",
    "PoleError",
    "ScatteringCoefficients",
    "SingularSystemError",
    "SpectrumTable",
    "TotalReflection",
    "WaveguideParams",
    "__version__",
    "decompose",
    "mode_weights",
    "solve_steady",
    "spectrum",
]
