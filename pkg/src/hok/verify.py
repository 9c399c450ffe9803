"""Oracle checks run by ``hok verify``.

Each check compares a production path against an independent route and
reports the tolerance and the observed error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from . import kernels as kc
from .density import BandwidthRule
from .mise import BenchConfig, mc_mise, mise_spectral
from .quadrature import damped_moment
from .targets import Gamma, LpSymmetric, Normal

__all__ = ["Check", "run_checks", "CHECKS"]


@dataclass(frozen=True)
class Check:
    name: str
    tol: float
    observed: float

    @property
    def passed(self) -> bool:
        return bool(self.observed <= self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: tol={self.tol:.3g} observed={self.observed:.3g}"


def check_closed_form_vs_solver(perturb: float = 0.0) -> list[Check]:
    worst = 0.0
    for q in range(1, 9):
        for alpha in (0.0, 0.3, kc.optimal_alpha(q)[0]):
            a = kc.tsinc_coefficients(q, alpha).coeffs
            b = kc.tsinc_coefficients_bruteforce(q, alpha).coeffs
            scale = np.where(b == 0.0, 1.0, np.abs(b))
            worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    return [Check("closed-form coefficients vs Vandermonde solve (q<=8)", 1e-8, worst)]


def order_condition_errors(c: kc.CoefficientVector) -> tuple[float, float, float]:
    """(mass error, worst scaled even-moment error, relative top-moment error)."""
    q, alpha = c.q, c.alpha
    j, k = c.full()
    mass = abs(math.fsum(k) - 1.0)
    worst = 0.0
    for r in range(1, q):
        terms = (j.astype(float) ** (2 * r)) * k
        worst = max(worst, abs(math.fsum(terms)) / np.max(np.abs(terms)))
    target = (1.0 - alpha) * math.factorial(q) ** 2 * (-1.0) ** (q + 1)
    top = abs(c.moment(2 * q) - target) / abs(target)
    return mass, worst, top


def check_order_conditions(perturb: float = 0.0) -> list[Check]:
    mass = worst = top = 0.0
    for q in range(1, 9):
        for alpha in (0.0, 0.3, kc.optimal_alpha(q)[0]):
            c = kc.tsinc_coefficients(q, alpha)
            if perturb:
                k = c.coeffs.copy()
                k[-1] += perturb
                c = kc.CoefficientVector(q=q, alpha=alpha, coeffs=k)
            m, w, t = order_condition_errors(c)
            mass, worst, top = max(mass, m), max(worst, w), max(top, t)
    return [
        Check("tsinc unit mass sum K(j) = 1", 1e-12, mass),
        Check("tsinc vanishing even moments (scaled)", 1e-9, worst),
        Check("tsinc top moment = (1-a)(q!)^2(-1)^(q+1) (relative)", 1e-9, top),
    ]


def check_alternating_identity(perturb: float = 0.0) -> list[Check]:
    out = []
    for q in range(1, 11):
        err = abs(kc.lemma2_identity_check(q) - (-1) ** (q + 1))
        out.append(Check(f"identity sum_k 1/prod(j^2/k^2-1) = (-1)^(q+1), q={q}", 1e-9, err))
    return out


def check_g1_table(perturb: float = 0.0) -> list[Check]:
    exact = {1: Fraction(2, 3), 2: Fraction(8, 15), 3: Fraction(16, 35), 4: Fraction(128, 315)}
    k0 = max(abs(kc.eval_g1(q, 0.0) - float(exact[q])) for q in exact)
    rng = np.random.default_rng(20231)
    us = rng.uniform(-10, 10, 50)
    worst = 0.0
    for q in exact:
        ref = kc.eval_quadrature_kernel(kc.g1_density(q), us)
        worst = max(worst, float(np.max(np.abs(kc.eval_g1(q, us) - ref))))
    return [
        Check("g1 K(0) equals tabulated 2/3, 8/15, 16/35, 128/315", 0.0, k0),
        Check("g1 closed form vs adaptive-Simpson transform (50 points)", 1e-8, worst),
    ]


def _g1_true_moment(q: int, j: int) -> float:
    # int u^j K = (-1)^(j/2) G^{(j)}(0) / (2 pi)^j for even j; G = (1 - 4t^2)^q
    if j % 2:
        return 0.0
    r = j // 2
    if r > q:
        return 0.0
    coef = math.comb(q, r) * (-4) ** r * math.factorial(j)
    return (-1) ** r * coef / (2 * math.pi) ** j


def check_g1_moments(perturb: float = 0.0) -> list[Check]:
    mass = odd = even = 0.0
    for q in range(1, 5):
        f = lambda u, q=q: kc.eval_g1(q, u)
        mass = max(mass, abs(damped_moment(f, 0) - 1.0))
        for j in range(1, 2 * q + 1):
            m = damped_moment(f, j)
            if j % 2:
                odd = max(odd, abs(m))
            else:
                even = max(even, abs(m - _g1_true_moment(q, j)))
    return [
        Check("g1 int K = 1 (damped quadrature)", 1e-6, mass),
        Check("g1 odd moments vanish", 1e-5, odd),
        Check("g1 even moments equal (-1)^r G^(2r)(0)/(2pi)^(2r)", 1e-5, even),
    ]


def check_alpha_optimality(perturb: float = 0.0) -> list[Check]:
    ident = misplaced = 0.0
    grid = np.linspace(-1, 1, 101)
    for q in range(1, 7):
        a_star, C = kc.optimal_alpha(q)
        ident = max(ident, abs(kc.g_squared_integral(kc.tsinc_coefficients(q, a_star)) - C / (1 + C)))
        # alpha = 1 is excluded: no kernel exists there
        vals = [kc.g_squared_integral(kc.tsinc_coefficients(q, a)) if a != 1 else np.inf for a in grid]
        best = grid[int(np.argmin(vals))]
        nearest = grid[int(np.argmin(np.abs(grid - a_star)))]
        misplaced = max(misplaced, abs(best - nearest))
    return [
        Check("int G^2 at optimal alpha = C/(1+C)", 1e-12, ident),
        Check("grid minimiser of int G^2 is nearest optimal alpha", 0.0, misplaced),
    ]


def _fd_derivative(c: kc.CoefficientVector) -> float:
    k = [mpmath.mpf(float(x)) for x in c.coeffs]
    two_pi = 2 * mpmath.pi

    def G(t):
        return k[0] + 2 * mpmath.fsum(k[j] * mpmath.cos(two_pi * j * t) for j in range(1, c.q + 1))

    with mpmath.workdps(60):
        return float(mpmath.diff(G, 0, 2 * c.q))


def check_g_derivative(perturb: float = 0.0) -> list[Check]:
    worst = 0.0
    for q in range(1, 7):
        c = kc.tsinc_coefficients(q, 0.3)
        exact = kc.g_deriv_2q_at_zero(c)
        worst = max(worst, abs(exact - _fd_derivative(c)) / abs(exact))
    return [Check("G^(2q)(0) vs high-precision finite differences (relative)", 1e-4, worst)]


def check_samplers(perturb: float = 0.0) -> list[Check]:
    n = 100_000
    rng = np.random.default_rng(99)
    out = []
    x = Normal(0.0, 0.1).sample(rng, n)
    out.append(Check("normal sample mean (in SE units)", 4.0, abs(x.mean()) / math.sqrt(0.1 / n)))
    g = Gamma(2.0, 2.0).sample(rng, n)
    out.append(Check("gamma(2,2) sample mean (in SE units)", 4.0, abs(g.mean() - 1.0) / math.sqrt(0.5 / n)))
    y2 = LpSymmetric(3.0).sample(rng, n) ** 2
    se = y2.std(ddof=1) / math.sqrt(n)
    out.append(Check("l3 sample E X^2 = 1/Gamma(1/3) (in SE units)", 4.0, abs(y2.mean() - 1 / math.gamma(1 / 3)) / se))
    return out


def check_spectral_vs_mc(perturb: float = 0.0) -> list[Check]:
    n = 100
    h = n ** -0.2
    kern = kc.KernelSpec.tsinc(1)
    dist = Normal(0.0, 0.1)
    spectral = mise_spectral(kern, dist, h, n)
    cfg = BenchConfig(
        dist=dist,
        kernels=[(kern, BandwidthRule("fixed", h))],
        ns=(n,),
        reps=500,
        seed=4242,
        correct=False,
    )
    row = mc_mise(cfg).rows[0]
    return [Check("spectral MISE vs Monte Carlo (in MC SE units)", 3.0, abs(spectral - row.mise) / row.se)]


CHECKS: list[Callable[..., list[Check]]] = [
    check_closed_form_vs_solver,
    check_order_conditions,
    check_alternating_identity,
    check_g1_table,
    check_g1_moments,
    check_alpha_optimality,
    check_g_derivative,
    check_samplers,
    check_spectral_vs_mc,
]


def run_checks(perturb: float = 0.0, quick: bool = False) -> list[Check]:
    """Run every check; ``quick`` skips the Monte Carlo comparison."""
    results = []
    for fn in CHECKS:
        if quick and fn is check_spectral_vs_mc:
            continue
        results.extend(fn(perturb=perturb))
    return results
