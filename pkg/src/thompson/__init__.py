"""Exact computations in Thompson's groups F, T and V.

The package implements the groups as exact cell-pair maps over dyadic
rationals, explores the coset graphs of the pairs (G, G_[0,1/2]) by
deterministic BFS, gathers finite-radius evidence for the relative-ends
lower bounds (almost-invariant affine part, Sageev cuts, component
doubling via covering translations), and builds machine-checkable
fixed-point certificates for T and V, cross-validated on the Bass-Serre
tree of the modular group.
"""

from .dyadic import Dyadic, StdInterval
from .elements import (
    AffinePatch,
    CellMap,
    arc_subgroup_generators,
    identity,
    rotation,
    standard_generator,
    supported_copy,
)
from .cosetgraph import CosetBall, CosetState, explore, state_of, step, translate

__all__ = [
    "Dyadic",
    "StdInterval",
    "AffinePatch",
    "CellMap",
    "identity",
    "rotation",
    "standard_generator",
    "supported_copy",
    "arc_subgroup_generators",
    "CosetBall",
    "CosetState",
    "explore",
    "state_of",
    "step",
    "translate",
]

__version__ = "0.1.0"
