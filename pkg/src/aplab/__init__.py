"""aplab: long arithmetic progressions in A+B+C inside Z/NZ.

Fourier analysis on Z/NZ, Bohr sets, almost periods, increment-or-structure
transforms and three end-to-end pipelines, each of which returns a
progression verified against exact representation counts.
"""

from .bohr import BohrSet, Progression, ap_in_bohr, dilate, find_regular_dilate, make_bohr
from .cyclic import GroupFunction, SetOnZN, Spectrum, convolve, dft, idft, representation_counts, spectrum
from .errors import AplabError, HypothesisNotMet, MeasuredFailure, PipelineFailure
from .pipelines import PIPELINES, PipelineResult, VerifiedAP, cls_pipeline, increment_pipeline, levelset_pipeline
from .policy import DEFAULT_POLICY, Policy

__version__ = "0.1.0"

__all__ = [
    "BohrSet", "Progression", "ap_in_bohr", "dilate", "find_regular_dilate", "make_bohr",
    "GroupFunction", "SetOnZN", "Spectrum", "convolve", "dft", "idft", "representation_counts", "spectrum",
    "AplabError", "HypothesisNotMet", "MeasuredFailure", "PipelineFailure",
    "PIPELINES", "PipelineResult", "VerifiedAP", "cls_pipeline", "increment_pipeline", "levelset_pipeline",
    "DEFAULT_POLICY", "Policy",
]
