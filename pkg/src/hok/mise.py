"""Monte Carlo MISE benchmark and the spectral MISE formula.

The Monte Carlo side follows the simulation protocol: ``reps`` samples per
sample size, an estimate on a fixed grid, the correction for kernels that
are not densities, and the truncated ISE on that grid. The spectral side
integrates the exact finite-sample MISE of the *uncorrected* estimator over
all of ``R`` and serves as an independent check of the Monte Carlo path.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .density import (
    BandwidthRule,
    bandwidth,
    default_rule,
    ghu_correct,
    kde_evaluate,
    make_grid,
)
from .kernels import KernelSpec, g_deriv_2q_at_zero, g_squared_integral
from .targets import TargetDistribution

__all__ = [
    "BenchConfig",
    "BenchRow",
    "BenchReport",
    "ise",
    "mc_mise",
    "mise_spectral",
    "asymptotic_mise_constant",
    "replication_rng",
    "table2_kernels",
    "CSV_HEADER",
]

CSV_HEADER = ("distribution", "kernel", "n", "mise", "se", "reps", "seed")
QUAD_TOL = 1e-10


def ise(est, truth, xs) -> float:
    """Trapezoid ``int (est - truth)^2`` over the grid ``xs``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape or est.shape != np.shape(xs):
        raise ValueError(f"shape mismatch: {est.shape}, {truth.shape}, {np.shape(xs)}")
    return float(np.trapezoid((est - truth) ** 2, xs))


def table2_kernels(order: int = 2) -> list[tuple[KernelSpec, BandwidthRule]]:
    """Gaussian, sinc, g1 and tsinc with their default bandwidth rules."""
    q = order // 2
    ks = [KernelSpec.gaussian(), KernelSpec.sinc(), KernelSpec.g1(q), KernelSpec.tsinc(q)]
    return [(k, default_rule(k)) for k in ks]


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark: a target, kernels with bandwidth rules, and protocol settings.

    ``correct=None`` applies the correction to every kernel except the
    Gaussian; ``True``/``False`` force it on or off for all.
    """

    dist: TargetDistribution
    kernels: Sequence[tuple[KernelSpec, BandwidthRule]] = field(default_factory=table2_kernels)
    ns: Sequence[int] = (50, 250, 500)
    reps: int = 100
    grid: tuple[float, float, int] = (-5.0, 5.0, 1001)
    seed: int = 20240101
    correct: Optional[bool] = None

    def __post_init__(self):
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if len(self.ns) == 0 or any(int(n) != n or n < 1 for n in self.ns):
            raise ValueError("ns must be a nonempty list of positive integers")
        if self.grid[2] < 3 or not self.grid[0] < self.grid[1]:
            raise ValueError("grid needs lo < hi and at least 3 points")
        if len(self.kernels) == 0:
            raise ValueError("no kernels configured")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def corrects(self, kernel: KernelSpec) -> bool:
        if self.correct is None:
            return kernel.family != "gaussian"
        return bool(self.correct)

    def fingerprint(self) -> str:
        payload = {
            "dist": self.dist.describe(),
            "kernels": [[k.label, r.rule, r.fixed_h] for k, r in self.kernels],
            "ns": [int(n) for n in self.ns],
            "reps": int(self.reps),
            "grid": [float(self.grid[0]), float(self.grid[1]), int(self.grid[2])],
            "seed": int(self.seed),
            "correct": [self.corrects(k) for k, _ in self.kernels],
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class BenchRow:
    dist: str
    kernel: str
    n: int
    mise: float
    se: float
    reps: int
    seed: int
    ise: np.ndarray = field(repr=False)
    ise_raw: Optional[np.ndarray] = field(default=None, repr=False)
    corrected: bool = False


@dataclass(frozen=True, eq=False)
class BenchReport:
    rows: list[BenchRow]
    fingerprint: str

    def cell(self, kernel: str, n: int) -> BenchRow:
        for row in self.rows:
            if row.kernel == kernel and row.n == n:
                return row
        raise KeyError((kernel, n))

    def kernels(self) -> list[str]:
        return list(dict.fromkeys(r.kernel for r in self.rows))

    def ns(self) -> list[int]:
        return list(dict.fromkeys(r.n for r in self.rows))

    def winner(self, n: int) -> str:
        cells = [r for r in self.rows if r.n == n]
        return min(cells, key=lambda r: r.mise).kernel

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(
                [r.dist, r.kernel, r.n, format(r.mise, ".17g"), format(r.se, ".17g"), r.reps, r.seed]
            )
        return buf.getvalue()

    def to_table(self) -> str:
        """Aligned text table, one line per ``n``; ``*`` marks the row minimum."""
        kernels = self.kernels()
        dist = self.rows[0].dist if self.rows else ""
        header = ["distribution", "n"] + kernels
        lines = []
        for n in self.ns():
            best = self.winner(n)
            cells = [dist, str(n)]
            for k in kernels:
                r = self.cell(k, n)
                mark = "*" if k == best else " "
                cells.append(f"{r.mise:.6g} ({r.se:.6g}){mark}")
            lines.append(cells)
        widths = [max(len(h), *(len(c[i]) for c in lines)) for i, h in enumerate(header)]
        fmt = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        out = [fmt(header), fmt(["-" * w for w in widths])]
        out += [fmt(c) for c in lines]
        return "\n".join(out) + "\n"


def replication_rng(seed: int, n: int, rep: int) -> np.random.Generator:
    """Independent stream per ``(n, replication)``; shared by all kernels."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(rep)]))


def _replicate(config: BenchConfig, grid, truth, n: int, rep: int):
    data = config.dist.sample(replication_rng(config.seed, n, rep), n)
    out = []
    for kernel, rule in config.kernels:
        h = bandwidth(rule, data, kernel)
        est = kde_evaluate(data, kernel, h, grid)
        raw_ise = ise(est.raw, truth, grid.xs)
        if config.corrects(kernel):
            est = ghu_correct(est)
            out.append((ise(est.corrected, truth, grid.xs), raw_ise))
        else:
            out.append((raw_ise, None))
    return out


def mc_mise(config: BenchConfig, workers: int = 1) -> BenchReport:
    """Monte Carlo MISE for every (kernel, n) cell of ``config``.

    Replications run on ``workers`` threads; results are reduced in
    replication order, so the report does not depend on ``workers``.
    """
    grid = make_grid(*config.grid)
    truth = config.dist.pdf(grid.xs)
    tasks = [(n, rep) for n in config.ns for rep in range(config.reps)]

    def run(task):
        n, rep = task
        try:
            return _replicate(config, grid, truth, n, rep)
        except Exception as exc:  # noqa: BLE001 - rewrapped with the cell
            raise RuntimeError(
                f"replication failed: dist={config.dist.describe()} n={n} rep={rep}: {exc}"
            ) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    rows = []
    dist_name = config.dist.name
    for ki, (kernel, _) in enumerate(config.kernels):
        for n in config.ns:
            cell = [res[ki] for (tn, _), res in zip(tasks, results) if tn == n]
            vals = np.array([c[0] for c in cell])
            raw = np.array([c[1] for c in cell]) if config.corrects(kernel) else None
            rows.append(
                BenchRow(
                    dist=dist_name,
                    kernel=kernel.label,
                    n=int(n),
                    mise=float(vals.mean()),
                    se=float(vals.std(ddof=1) / math.sqrt(vals.size)),
                    reps=int(config.reps),
                    seed=int(config.seed),
                    ise=vals,
                    ise_raw=raw,
                    corrected=config.corrects(kernel),
                )
            )
    return BenchReport(rows=rows, fingerprint=config.fingerprint())


# ---------------------------------------------------------------------------
# spectral side
# ---------------------------------------------------------------------------


def _quad(f, a, b, points=None):
    if b <= a:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b] or None
    val, _ = integrate.quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500, points=points)
    return val


def _g_squared(kernel: KernelSpec, G) -> float:
    if kernel.family == "tsinc":
        return g_squared_integral(kernel.coefficients)
    return 2.0 * _quad(lambda t: float(G(t)) ** 2, 0.0, 0.5)


def mise_spectral(kernel: KernelSpec, dist: TargetDistribution, h: float, n: int) -> float:
    """Exact MISE of the uncorrected estimator from the Fourier side:

    ``(1/(n h)) int G^2 + int (G(h t) - 1)^2 |phi|^2 - (1/n) int G(h t)^2 |phi|^2``.

    ``G`` must be compactly supported on ``[-1/2, 1/2]``; the bias integral
    is split at ``|t| = 1/(2h)``, beyond which it reduces to ``int |phi|^2``.
    """
    if not h > 0 or n < 1:
        raise ValueError("need h > 0 and n >= 1")
    try:
        G = kernel.spectral_density()
    except ValueError as exc:
        raise ValueError(f"mise_spectral needs a compact spectral density: {exc}") from None
    if not dist.closed_form_charfn:
        raise ValueError(f"{dist.name} has no closed-form characteristic function")

    cut = 0.5 / h
    top = min(cut, dist.cf_support)
    kinks = [dist.cf_support] if math.isfinite(dist.cf_support) else None
    phi2 = lambda t: float(dist.charfn_sq(t))
    Gh = lambda t: float(G(h * t))

    var_term = _g_squared(kernel, G) / (n * h)
    bias_in = 2.0 * _quad(lambda t: (Gh(t) - 1.0) ** 2 * phi2(t), 0.0, top, kinks)
    if math.isfinite(dist.cf_support):
        bias_out = 2.0 * _quad(phi2, cut, dist.cf_support)
    else:
        bias_out = 2.0 * integrate.quad(phi2, cut, math.inf, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500)[0]
    cross = 2.0 * _quad(lambda t: Gh(t) ** 2 * phi2(t), 0.0, top, kinks) / n
    return var_term + bias_in + bias_out - cross


def _t_moment(dist: TargetDistribution, power: int) -> float:
    """``int t^power |phi(t)|^2 dt``, refusing integrals that keep growing."""
    f = lambda t: t**power * float(dist.charfn_sq(t))
    if math.isfinite(dist.cf_support):
        return 2.0 * _quad(f, 0.0, dist.cf_support)
    upper = 8.0
    total = _quad(f, 0.0, upper)
    prev_inc = None
    growing = 0
    for _ in range(24):
        inc = _quad(f, upper, 2 * upper)
        total += inc
        upper *= 2
        if inc <= 1e-14 * max(abs(total), 1e-300):
            return 2.0 * total
        if prev_inc is not None and inc >= 0.9 * prev_inc:
            growing += 1
            if growing >= 3:
                break
        else:
            growing = 0
        prev_inc = inc
    raise ValueError(
        f"int t^{power} |phi|^2 dt diverges for {dist.describe()} (tail not decaying)"
    )


def asymptotic_mise_constant(kernel: KernelSpec, dist: TargetDistribution) -> float:
    """Limit of ``n^(2p/(2p+1)) MISE`` at ``h = n^(-1/(2p+1))`` for a tsinc kernel:

    ``int G^2 + (G^{(p)}(0) / p!)^2 int t^(2p) |phi|^2``.

    The derivative is taken in the ``exp(2 pi i t u)`` convention, so the
    constant carries the ``(2 pi)^p`` factors. Diagnostic only.
    """
    if kernel.family != "tsinc":
        raise ValueError("asymptotic constant is implemented for tsinc kernels only")
    p = kernel.order
    coeffs = kernel.coefficients
    deriv = g_deriv_2q_at_zero(coeffs)
    moment = _t_moment(dist, 2 * p)
    return g_squared_integral(coeffs) + (deriv / math.factorial(p)) ** 2 * moment
