"""Exact densities for sums of independent exponential, Erlang and gamma
random variables, built on divided differences."""

from .density import (
    ComponentSpec,
    EvalGrid,
    EvalOptions,
    EvalResult,
    SumDistribution,
    canonicalize,
    cdf,
    erlang,
    exponential,
    gamma,
    mgf,
    pdf,
    pdf_value,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentSpec",
    "EvalGrid",
    "EvalOptions",
    "EvalResult",
    "SumDistribution",
    "canonicalize",
    "cdf",
    "erlang",
    "exponential",
    "gamma",
    "mgf",
    "pdf",
    "pdf_value",
]
