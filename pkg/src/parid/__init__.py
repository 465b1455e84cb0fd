"""PARID: preferential attachment with random initial degrees.

A simulator for the multigraph growth process in which each new vertex
arrives with a power-law random number of edges attached preferentially,
plus the analytic machinery (limit degree distribution, scale constants,
truncation schemes, inequality checks) needed to verify its behaviour.
"""

from .sampling import (
    FiniteLaw,
    HeavyTailConstants,
    PowerLawSpec,
    beta_normalizer,
    sample,
    scale_constants,
    truncated_moments,
    truncation_point,
    zeta_tail,
)

__version__ = "0.1.0"

__all__ = [
    "FiniteLaw",
    "HeavyTailConstants",
    "PowerLawSpec",
    "beta_normalizer",
    "sample",
    "scale_constants",
    "truncated_moments",
    "truncation_point",
    "zeta_tail",
    "__version__",
]
