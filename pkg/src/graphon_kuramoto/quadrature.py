"""Quadrature helpers shared across the mean-field computations.

tanh-sinh is the workhorse: it handles both smooth integrands and the
inverse-square-root endpoint singularities that show up at the edge of
the synchronization region.  Gauss-Legendre tensor rules are used for
cell averaging and the center-manifold double integrals.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad, tanhsinh


def integrate(f: Callable, a: float, b: float, atol: float = 1e-12) -> float:
    """Adaptive integral of a vectorizable f over [a, b].

    tanh-sinh first, Gauss-Kronrod fallback if it reports failure.
    """
    if a == b:
        return 0.0
    res = tanhsinh(f, a, b, atol=atol, rtol=atol)
    if res.success and np.isfinite(res.integral):
        return float(res.integral)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, _ = quad(f, a, b, epsabs=atol, epsrel=max(atol, 1e-12), limit=200)
    return float(val)


def integrate_01(f: Callable, atol: float = 1e-12) -> float:
    return integrate(f, 0.0, 1.0, atol=atol)


@lru_cache(maxsize=32)
def gauss_legendre_01(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0
