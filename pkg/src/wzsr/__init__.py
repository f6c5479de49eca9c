"""Successive refinement of Wyner-Ziv coding with degraded side informations.

Modules
-------
probkit        finite joint pmfs, entropies, binary helpers
finite_region  rate region of a general finite source and its optimizer
dsbs           doubly symmetric binary source closed forms
gaussian       quadratic Gaussian closed forms
refinability   strict / generalized successive refinability checks
scsep          source-channel separation feasibility
"""

from .dsbs import DsbsParams, hb_rate, wz_rate_binary
from .finite_region import DegradedSource, RegionSample, TestChannel, optimize_region
from .gaussian import GaussParams, hb_rate_gauss
from .probkit import JointPmf, cond_mutual_info, entropy, markov_check

__version__ = "0.1.0"

__all__ = [
    "DegradedSource",
    "DsbsParams",
    "GaussParams",
    "JointPmf",
    "RegionSample",
    "TestChannel",
    "cond_mutual_info",
    "entropy",
    "hb_rate",
    "hb_rate_gauss",
    "markov_check",
    "optimize_region",
    "wz_rate_binary",
]
