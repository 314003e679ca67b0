"""LP-based randomized rounding for the Virtual Network Embedding Problem.

Submodules: :mod:`model` (substrates, requests, mappings), :mod:`cactus`
(reorientation and cycle/forest partition), :mod:`lp` (solvers and export),
:mod:`formulations` (the two LP models), :mod:`decompose` (convex-combination
extraction), :mod:`rounding` (randomized rounding strategies and bounds),
:mod:`oracle` (brute-force ground truth), :mod:`scenarios` (instance
generation), :mod:`serde` (JSON schema), :mod:`cli` (experiment driver).
"""

from .model import (
    AllocationVector,
    ConvexDecomposition,
    DecompositionEntry,
    Instance,
    Request,
    SubstrateNetwork,
    ValidMapping,
    allocations,
    is_feasible_embedding,
    max_allocation_exact,
    max_demand,
    validate_mapping,
)

__all__ = [
    "AllocationVector",
    "ConvexDecomposition",
    "DecompositionEntry",
    "Instance",
    "Request",
    "SubstrateNetwork",
    "ValidMapping",
    "allocations",
    "is_feasible_embedding",
    "max_allocation_exact",
    "max_demand",
    "validate_mapping",
]

__version__ = "0.1.0"
