"""Ranking-based black-box optimisation: oracles, unbiased operators and the algorithms that use them."""
from .algorithms import ALGORITHMS, AlgorithmSpec, Transcript, run_algorithm
from .bitstring import BitString, InstanceKind, Permutation, ProblemInstance
from .oracle import AccessMode, Oracle, ranking_of

__all__ = [
    "ALGORITHMS", "AlgorithmSpec", "Transcript", "run_algorithm",
    "BitString", "InstanceKind", "Permutation", "ProblemInstance",
    "AccessMode", "Oracle", "ranking_of",
]
__version__ = "0.1.0"
