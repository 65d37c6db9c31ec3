"""Compound expectations (CE) and conditional compound expectations (CCE).

A CE splits the mean of an outcome into components: the average of the
quantile function over each interval of a grid of population proportions.
"""

from ._core import (
    CCEError,
    CoefficientProcess,
    CoefficientVector,
    ComponentCoefficients,
    Decomposition,
    ProportionGrid,
    aggregate_mean,
    bootstrap,
    component_coefficients,
    contrast,
    contributions,
    default_mesh_size,
    empirical_cce,
    fit_process,
    fit_quantile_regression,
    midpoint_mesh,
    oracle,
    rearranged_cce,
)

__all__ = [
    "CCEError",
    "CoefficientProcess",
    "CoefficientVector",
    "ComponentCoefficients",
    "Decomposition",
    "ProportionGrid",
    "aggregate_mean",
    "bootstrap",
    "component_coefficients",
    "contrast",
    "contributions",
    "default_mesh_size",
    "empirical_cce",
    "fit_process",
    "fit_quantile_regression",
    "midpoint_mesh",
    "oracle",
    "rearranged_cce",
]
