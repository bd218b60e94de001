"""Lattice Boltzmann linear-stability laboratory.

LBGK with product-form equilibria (isotropic and asymptotically free
pressure closures) plus the second-order polynomial equilibrium, the
hydrodynamic mode analytics, a Fourier-space stability engine and a
periodic time-stepping solver for cross-validation.
"""

from lbstab.lattice import FlowState, Lattice, build_lattice, moments
from lbstab.equilibrium import (
    ASYMPTOTICALLY_FREE,
    ISOTROPIC,
    POLY2,
    EquilibriumModel,
    PressureModel,
    VelocityRangeError,
    equilibrium_jacobian,
    equilibrium_poly2,
    equilibrium_product,
    get_model,
    pressure_af,
    pressure_isotropic,
    psi_triplet,
)

__all__ = [
    "ASYMPTOTICALLY_FREE",
    "ISOTROPIC",
    "POLY2",
    "EquilibriumModel",
    "FlowState",
    "Lattice",
    "PressureModel",
    "VelocityRangeError",
    "build_lattice",
    "equilibrium_jacobian",
    "equilibrium_poly2",
    "equilibrium_product",
    "get_model",
    "moments",
    "pressure_af",
    "pressure_isotropic",
    "psi_triplet",
]

__version__ = "0.1.0"
