"""Rateless erasure-coding toolkit with multi-configuration LT codes.

Modules:

* :mod:`mclt.distributions` — soliton-family degree distributions and the
  starter/closer pair
* :mod:`mclt.codec` — LT encoder, wire format, peeling decoder
* :mod:`mclt.analysis` — utility degrees, domination, release probabilities
* :mod:`mclt.session` — multi-stream sessions with receiver-side switching
* :mod:`mclt.smallk` — exact state enumeration and optimal small-k codes
* :mod:`mclt.harness` — Monte-Carlo experiments, metrics, persistence
"""

__version__ = "0.1.0"

from .distributions import (
    DegreeDistribution,
    SolitonParams,
    closer,
    compute_R,
    ideal_soliton,
    robust_soliton,
    sample_degree,
    starter,
)

__all__ = [
    "DegreeDistribution",
    "SolitonParams",
    "closer",
    "compute_R",
    "ideal_soliton",
    "robust_soliton",
    "sample_degree",
    "starter",
    "__version__",
]
