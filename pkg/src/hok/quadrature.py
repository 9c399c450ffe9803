"""Small quadrature helpers used as independent oracles.

``adaptive_simpson`` is a plain interval-bisection Simpson rule; it is slow but
has no dependencies on the code paths it is used to check.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = ["QuadratureError", "adaptive_simpson", "damped_moment"]


class QuadratureError(RuntimeError):
    """Raised when an integral did not reach its tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


def adaptive_simpson(
    func: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 40,
) -> float:
    """Integrate ``func`` over ``[a, b]`` with adaptive Simpson bisection.

    Parameters
    ----------
    func : callable
        Scalar integrand.
    a, b : float
        Integration limits.
    tol : float
        Absolute tolerance for the whole interval.
    max_depth : int
        Maximum number of bisections along any branch.

    Returns
    -------
    float
        The integral estimate, including the Richardson correction term.

    Raises
    ------
    QuadratureError
        If some branch hit ``max_depth`` without meeting its share of ``tol``.
    """
    if a == b:
        return 0.0
    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    total = 0.0
    failed_err = 0.0
    # iterative to stay clear of the recursion limit at depth 40
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = func(lm)
        frm = func(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            total += left + right + delta / 15.0
            failed_err += abs(delta) / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
    if failed_err > tol:
        raise QuadratureError("adaptive_simpson did not converge", failed_err)
    return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _damped_integral(func, j: int, eps: float, panel: float) -> float:
    # integrand is negligible beyond exp(-50)
    cut = math.sqrt(50.0 / eps)
    npanel = int(math.ceil(cut / panel))
    edges = np.linspace(-npanel * panel, npanel * panel, 2 * npanel + 1)
    a = edges[:-1, None]
    b = edges[1:, None]
    u = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
    w = 0.5 * (b - a) * _GL_WEIGHTS
    vals = w * u**j * func(u) * np.exp(-eps * u * u)
    return float(np.sum(vals))


def damped_moment(
    func: Callable[[np.ndarray], np.ndarray],
    j: int,
    eps: float = 4e-3,
    levels: int = 3,
    panel: float = 0.5,
) -> float:
    """Moment ``int u**j func(u) du`` of a slowly decaying, oscillating function.

    The integrand is damped by ``exp(-eps u**2)`` and the damped integrals at
    ``eps, eps/2, ...`` are Richardson-extrapolated to ``eps -> 0``. This gives
    the (Gauss-summed) moment even when the integral is only conditionally
    convergent, which is the case for band-limited kernels.

    ``func`` must accept arrays. Composite 16-point Gauss-Legendre panels of
    width ``panel`` are used over the effective support.
    """
    table = [[_damped_integral(func, j, eps / 2**k, panel)] for k in range(levels)]
    for k in range(1, levels):
        for m in range(1, k + 1):
            fac = 2.0**m
            prev = table[k][m - 1]
            table[k].append((fac * prev - table[k - 1][m - 1]) / (fac - 1.0))
    return table[-1][-1]
