"""Sparse blind deconvolution of 1-D signals by alternating lp-l2 projections."""

from .alpa import AlpaConfig, DeconvolutionResult, run_alpa, verify_trace
from .convolution import ConvOperator, RieszReport, convolve, make_operator, riesz_report
from .costs import PenaltyParams, cost_pair
from .errors import (
    BoundInapplicable,
    DeconvolutionError,
    DegenerateExcitation,
    DimensionMismatch,
    InvalidArgument,
    IOFailure,
    ModelMismatch,
    NumericalFailure,
    UnsupportedFormat,
)
from .synth import SynthSpec, make_instance, sec4_spec

__version__ = "0.1.0"

__all__ = [
    "AlpaConfig",
    "BoundInapplicable",
    "ConvOperator",
    "DeconvolutionError",
    "DeconvolutionResult",
    "DegenerateExcitation",
    "DimensionMismatch",
    "IOFailure",
    "InvalidArgument",
    "ModelMismatch",
    "NumericalFailure",
    "PenaltyParams",
    "RieszReport",
    "SynthSpec",
    "UnsupportedFormat",
    "convolve",
    "cost_pair",
    "make_instance",
    "make_operator",
    "riesz_report",
    "run_alpa",
    "sec4_spec",
    "verify_trace",
]
