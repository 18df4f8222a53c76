"""Random-matrix reservoir equilibration laboratory.

A small n-level system coupled to an N-level reservoir through a GUE random
matrix equilibrates, for convolution-structured reservoirs and large block
counts, to the canonical state of the isolated system.  This package cross
validates Monte Carlo exact diagonalization of the composite model against
the self-consistent matrix equation for the dressed resolvent and probes the
large-J Gibbs limit.
"""

from .ensemble import EnergyWindow, SystemSpec
from .reservoir import ReservoirModel, exponential, gaussian, lattice, tabulated

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SystemSpec",
    "EnergyWindow",
    "ReservoirModel",
    "gaussian",
    "exponential",
    "lattice",
    "tabulated",
]
