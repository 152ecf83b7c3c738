"""Curie-Weiss spins through their De Finetti randomisation and contour identities."""

__version__ = "0.1.0"

from .definetti import ModelParams, RandomisationSample, normalise, sample_v, unnorm_logdensity
from .errors import CurieFieldError

__all__ = ["ModelParams", "RandomisationSample", "normalise", "sample_v",
           "unnorm_logdensity", "CurieFieldError", "__version__"]
