"""Exact piecewise-affine Markov interval maps with escape gaps."""

from .analysis import (
    RepresentationError,
    TransitionMatrix,
    escape_hit_set,
    induced_ultragraph,
    transition_matrix,
    validate_markov,
    x_hypothesis_check,
)
from .model import FamilyRule, IntervalData, MarkovError, MarkovMap, Piece, PieceRule
from .orbit import (
    EscapeData,
    NotEscaping,
    OrbitNode,
    OrbitSearch,
    OrbitTree,
    backward_orbit,
    escape_data,
    preimage_set,
)

__all__ = [
    "EscapeData", "FamilyRule", "IntervalData", "MarkovError", "MarkovMap", "NotEscaping",
    "OrbitNode", "OrbitSearch", "OrbitTree", "Piece", "PieceRule", "RepresentationError",
    "TransitionMatrix", "backward_orbit", "escape_data", "escape_hit_set", "induced_ultragraph",
    "preimage_set", "transition_matrix", "validate_markov", "x_hypothesis_check",
]
