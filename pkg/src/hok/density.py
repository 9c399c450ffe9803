"""Kernel density estimates on an equispaced grid, bandwidth rules and the
nonnegativity / unit-mass correction ``max(0, f_n - xi)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .kernels import KernelSpec

__all__ = [
    "EstimateGrid",
    "BandwidthRule",
    "make_grid",
    "kde_evaluate",
    "bandwidth",
    "default_rule",
    "ghu_correct",
    "trapezoid",
]

BANDWIDTH_RULES = ("nrd", "sinc_log", "order_rate", "fixed")

# raw mass below this is treated as lost off-grid
MASS_DEFICIT_TOL = 1e-6
XI_TOL = 1e-10


def trapezoid(values, xs) -> float:
    return float(np.trapezoid(values, xs))


@dataclass(frozen=True, eq=False)
class EstimateGrid:
    """Equispaced evaluation grid with raw and (optionally) corrected values."""

    xs: np.ndarray
    raw: Optional[np.ndarray] = None
    corrected: Optional[np.ndarray] = None
    xi: Optional[float] = None
    mass_warning: bool = False

    @property
    def lo(self) -> float:
        return float(self.xs[0])

    @property
    def hi(self) -> float:
        return float(self.xs[-1])

    @property
    def m(self) -> int:
        return int(self.xs.size)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["x", "raw"] + (["corrected"] if self.corrected is not None else [])
        w.writerow(cols)
        for i, x in enumerate(self.xs):
            row = [x, self.raw[i]] + ([self.corrected[i]] if self.corrected is not None else [])
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def make_grid(lo: float = -5.0, hi: float = 5.0, m: int = 1001) -> EstimateGrid:
    if not lo < hi:
        raise ValueError(f"grid needs lo < hi, got {lo}, {hi}")
    if m < 2:
        raise ValueError("grid needs at least two points")
    return EstimateGrid(xs=np.linspace(lo, hi, m))


def kde_evaluate(
    data: Sequence[float], kernel: KernelSpec, h: float, grid: EstimateGrid
) -> EstimateGrid:
    """``f_n(x) = (1/(n h)) sum_k K((x - X_k)/h)`` at every grid point."""
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise ValueError("cannot estimate a density from an empty sample")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    u = (grid.xs[:, None] - data[None, :]) / h
    raw = kernel(u).sum(axis=1) / (data.size * h)
    return replace(grid, raw=raw, corrected=None, xi=None, mass_warning=False)


@dataclass(frozen=True)
class BandwidthRule:
    """One of ``nrd``, ``sinc_log``, ``order_rate`` or ``fixed`` (needs ``fixed_h``)."""

    rule: str
    fixed_h: Optional[float] = None

    def __post_init__(self):
        if self.rule not in BANDWIDTH_RULES:
            raise ValueError(f"unknown bandwidth rule {self.rule!r}")
        if self.rule == "fixed" and not (self.fixed_h is not None and self.fixed_h > 0):
            raise ValueError("fixed bandwidth needs a positive fixed_h")


def default_rule(kernel: KernelSpec) -> BandwidthRule:
    """The rule used for each family in the simulation study."""
    if kernel.family == "gaussian":
        return BandwidthRule("nrd")
    if kernel.family == "sinc":
        return BandwidthRule("sinc_log")
    return BandwidthRule("order_rate")


def bandwidth(rule: BandwidthRule, data: Sequence[float], kernel: KernelSpec) -> float:
    """Bandwidth for ``data`` under ``rule``.

    ``nrd`` matches R's ``bw.nrd``: ``1.06 min(sd, IQR/1.34) n^(-1/5)`` with the
    sample sd and type-7 quartiles. When the IQR is zero the sd alone is used.
    """
    data = np.asarray(data, dtype=float).ravel()
    n = data.size
    if n < 1:
        raise ValueError("empty sample")
    if rule.rule == "fixed":
        return float(rule.fixed_h)
    if rule.rule == "sinc_log":
        return 1.0 / math.sqrt(math.log(n + 1.0))
    if rule.rule == "order_rate":
        p = kernel.order
        if p is None:
            raise ValueError(f"order_rate needs a finite-order kernel, got {kernel.label}")
        return float(n ** (-1.0 / (2 * p + 1)))
    if n < 2:
        raise ValueError("nrd bandwidth needs at least two observations")
    sd = float(np.std(data, ddof=1))
    q25, q75 = np.quantile(data, [0.25, 0.75])
    iqr_scale = (q75 - q25) / 1.34
    if sd == 0 and iqr_scale == 0:
        raise ValueError("degenerate sample: zero sd and zero IQR")
    scale = min(sd, iqr_scale) if iqr_scale > 0 else sd
    return 1.06 * scale * n ** (-0.2)


def _mass(raw, xs, xi):
    return trapezoid(np.maximum(0.0, raw - xi), xs)


def ghu_correct(grid: EstimateGrid) -> EstimateGrid:
    """Replace ``raw`` by ``max(0, raw - xi)`` with unit trapezoid mass.

    The mass ``m(xi)`` is continuous and nonincreasing, so ``xi`` is found by
    bisection: on ``[0, max(raw)]`` when the clipped raw mass is at least one,
    otherwise on ``[-1, 0]`` (mass leaked off the grid). In the latter case
    ``mass_warning`` is set if the deficit exceeds ``MASS_DEFICIT_TOL``.
    """
    if grid.raw is None:
        raise ValueError("grid has no raw estimate")
    raw = np.asarray(grid.raw, dtype=float)
    xs = grid.xs
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw estimate has non-finite values")
    if not np.any(raw > 0):
        raise ValueError("raw estimate is nowhere positive")

    m0 = _mass(raw, xs, 0.0)
    warn = False
    if m0 >= 1.0:
        lo, hi = 0.0, float(raw.max())
    else:
        warn = m0 < 1.0 - MASS_DEFICIT_TOL
        lo, hi = -1.0, 0.0
        while _mass(raw, xs, lo) < 1.0:
            lo *= 2.0
            if lo < -1e6:
                raise ValueError("cannot restore unit mass on this grid")
    # invariant: m(lo) >= 1 >= m(hi)
    xi = lo
    for _ in range(200):
        xi = 0.5 * (lo + hi)
        mid = _mass(raw, xs, xi)
        if abs(mid - 1.0) <= XI_TOL * 0.1:
            break
        if mid > 1.0:
            lo = xi
        else:
            hi = xi
        if hi - lo < 1e-16 * max(1.0, abs(xi)):
            break
    corrected = np.maximum(0.0, raw - xi)
    return replace(grid, corrected=corrected, xi=float(xi), mass_warning=warn)
