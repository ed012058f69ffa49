"""Graphon mean-field predictions for synchronization in random Kuramoto networks.

Submodules:
    graphon       kernels, random-graph sampling, degree and cut-norm diagnostics
    cutnorm       certified lower bounds on the cut-norm distance
    freqdist      frequency densities, quantiles, empirical step quantiles
    meanfield     Ermentrout profile, onset coupling, spectral diagnostics, fold coefficients
    finite_system Kuramoto right-hand side, bordered Newton, RK4, order parameter
    continuation  pseudo-arclength branches, fold location, critical-coupling sweeps
    experiments   deterministic experiment drivers behind the CLI
"""

__version__ = "0.1.0"

from . import continuation, cutnorm, finite_system, freqdist, graphon, meanfield, rng

__all__ = [
    "__version__",
    "continuation",
    "cutnorm",
    "finite_system",
    "freqdist",
    "graphon",
    "meanfield",
    "rng",
]
