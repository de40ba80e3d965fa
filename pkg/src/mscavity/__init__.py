"""Pseudospectral simulator and verification suite for a damped, driven
Maxwell-Schrodinger system in a rectangular conducting cavity."""

from .drive import PumpSpec, PumpTerm, phi_preset
from .dynamics import (
    DiagnosticsRow,
    Params,
    SimulationDiverged,
    State,
    make_initial,
    run,
)
from .matter import PotentialSet
from .spectral import (
    BasisFamily,
    BoxDomain,
    DomainError,
    SpectralScalar,
    SpectralVector,
    curl,
    divergence,
    gradient,
    laplacian,
    make_domain,
)

__all__ = [
    "BasisFamily",
    "BoxDomain",
    "DiagnosticsRow",
    "DomainError",
    "Params",
    "PotentialSet",
    "PumpSpec",
    "PumpTerm",
    "SimulationDiverged",
    "SpectralScalar",
    "SpectralVector",
    "State",
    "curl",
    "divergence",
    "gradient",
    "laplacian",
    "make_domain",
    "make_initial",
    "phi_preset",
    "run",
]

__version__ = "0.1.0"
