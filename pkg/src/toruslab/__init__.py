"""Lattice counting, spectral NLS solving and estimate measurements on irrational tori."""

from .kernels import BACKEND
from .quadform import QuadForm, count, count_leq, count_less, fit_remainder_exponent
from .spectral import Field, FourierGrid, TorusGeometry
from .nls import NLSParams, evolve, picard_iterate
from .estimates import SweepConfig, strichartz_sweep, bilinear_sweep
from .xsb import XsbParams, lift, xsb_norm, dyadic_decompose
from .growth import RecurrenceParams, track_growth, fit_growth_exponent

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "QuadForm", "count", "count_leq", "count_less", "fit_remainder_exponent",
    "Field", "FourierGrid", "TorusGeometry", "NLSParams", "evolve", "picard_iterate",
    "SweepConfig", "strichartz_sweep", "bilinear_sweep", "XsbParams", "lift", "xsb_norm",
    "dyadic_decompose", "RecurrenceParams", "track_growth", "fit_growth_exponent",
]
