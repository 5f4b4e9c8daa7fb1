"""Simulation and analysis toolkit for the q-state Potts model on K_{n,n}.

Spins live on the two sides of a complete bipartite graph and interact only
across sides. The package computes the model's equilibrium phase structure
(critical and spinodal inverse temperatures, macrostate sets, free-energy
landscapes), runs single-site heat-bath (Glauber) dynamics and a greedy
maximal coupling of two chains, and measures mixing behaviour: exact total
variation decay for small systems, coupling-time scaling for large ones, and
metastable escape times past the transition.
"""

__version__ = "0.1.0"

from .model import (
    BipartiteConfig,
    LatticePoint,
    MagnetizationPair,
    ModelParams,
    ProbVector,
    SpinConfig,
    config_distance,
    hamiltonian,
    hamiltonian_exact,
    interaction_energy,
    magnetization,
)

__all__ = [
    "BipartiteConfig",
    "LatticePoint",
    "MagnetizationPair",
    "ModelParams",
    "ProbVector",
    "SpinConfig",
    "config_distance",
    "hamiltonian",
    "hamiltonian_exact",
    "interaction_energy",
    "magnetization",
    "__version__",
]
