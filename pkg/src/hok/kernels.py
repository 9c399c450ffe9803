"""Higher-order kernels built from band-limited spectral densities.

Conventions
-----------
A kernel ``K`` and its spectral density ``G`` are related by

    K(u) = int G(t) exp(-2 pi i u t) dt,    G(t) = int K(u) exp(2 pi i t u) du,

so ``G(0) = int K = 1`` and the moment conditions of a kernel of order ``p``
are the vanishing of ``G^{(j)}(0)`` for ``0 < j < p``.

Families
--------
gaussian
    Standard normal density (order 2).
sinc
    ``sin(u) / (pi u)``; its spectrum is the indicator of ``|t| <= 1/(2 pi)``.
g1
    Fourier transform of ``(1 - 4 t^2)^q`` on ``[-1/2, 1/2]`` in closed form
    (``q = 1..4``). Note that ``G''(0) = -8 q`` for every ``q``, so the moment
    order of these kernels is 2; ``q`` only sets the smoothness of the
    spectrum edge.
tsinc
    Truncated Shannon expansion ``sum_{|j|<=q} K(j) sinc(pi (u - j))`` whose
    nodes solve the even-moment system; order ``2 q``.
quadratureG
    Any even spectral density on ``[-1/2, 1/2]``, transformed by adaptive
    quadrature (slow; intended as an oracle and for ``G2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .quadrature import adaptive_simpson

__all__ = [
    "CoefficientVector",
    "SpectralDensity",
    "KernelSpec",
    "FAMILIES",
    "sinc",
    "sinc_pi",
    "tsinc_coefficients",
    "tsinc_coefficients_bruteforce",
    "lemma2_identity_check",
    "optimal_alpha",
    "g_squared_integral",
    "eval_tsinc",
    "eval_g1",
    "eval_quadrature_kernel",
    "g_deriv_2q_at_zero",
    "g1_density",
    "g2_density",
    "tsinc_density",
    "make_kernel",
]

FAMILIES = ("gaussian", "sinc", "g1", "tsinc", "quadratureG")

_SINC_SERIES_CUTOFF = 1e-6
_G1_SERIES_CUTOFF = 4.0
_G1_SERIES_TERMS = 24


# ---------------------------------------------------------------------------
# sinc helpers
# ---------------------------------------------------------------------------


def sinc(x):
    """Unnormalised sinc ``sin(x)/x`` with ``sinc(0) = 1``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out[()] if out.ndim == 0 else out


def _sinpi(x):
    # exact zeros at the integers
    x = np.asarray(x, dtype=float)
    n = np.rint(x)
    r = x - n
    sign = np.where(np.fmod(n, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(np.pi * r)


def sinc_pi(x):
    """``sinc(pi x) = sin(pi x) / (pi x)``, exactly zero at nonzero integers."""
    x = np.asarray(x, dtype=float)
    px = np.pi * x
    small = np.abs(px) < _SINC_SERIES_CUTOFF
    safe = np.where(small, 1.0, px)
    p2 = px * px
    out = np.where(small, 1.0 - p2 / 6.0 + p2 * p2 / 120.0, _sinpi(x) / safe)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# truncated-sinc coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Node values ``k[j] = K(j) = K(-j)`` for ``j = 0..q`` of a tsinc kernel."""

    q: int
    alpha: float
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        if arr.shape != (self.q + 1,):
            raise ValueError(f"expected {self.q + 1} coefficients, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def order(self) -> int:
        return 2 * self.q

    def full(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``-q..q`` and the matching symmetric values."""
        j = np.arange(-self.q, self.q + 1)
        return j, self.coeffs[np.abs(j)]

    def moment(self, power: int) -> float:
        """``sum_{j=-q..q} j**power K(j)``."""
        j, k = self.full()
        return math.fsum((j.astype(float) ** power) * k)


def _check_q_alpha(q, alpha):
    if int(q) != q or q < 1:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    if alpha == 1:
        raise ValueError("degenerate kernel: alpha = 1 violates the top-moment condition")


def _node_weight(q: int, j: int) -> Fraction:
    # (q!/j)^2 / prod_{l != j} (l^2 - j^2), exactly
    den = j * j
    for l in range(1, q + 1):
        if l != j:
            den *= l * l - j * j
    return Fraction(math.factorial(q) ** 2, den)


def tsinc_coefficients(q: int, alpha: float) -> CoefficientVector:
    """Closed-form solution of the truncated moment system.

    ``K(0) = alpha`` and, for ``j = 1..q``,
    ``K(j) = (1 - alpha)/2 * (q!/j)^2 / prod_{l != j} (l^2 - j^2)``.

    The rational parts are formed exactly, so the only rounding is the final
    product with ``(1 - alpha) / 2``.
    """
    _check_q_alpha(q, alpha)
    q = int(q)
    half = (1.0 - alpha) / 2.0
    k = [float(alpha)] + [half * float(_node_weight(q, j)) for j in range(1, q + 1)]
    return CoefficientVector(q=q, alpha=float(alpha), coeffs=np.array(k))


def tsinc_coefficients_bruteforce(q: int, alpha: float) -> CoefficientVector:
    """Solve the ``q x q`` Vandermonde system in nodes ``j^2`` by LU elimination.

    Oracle for :func:`tsinc_coefficients`; the system is badly conditioned,
    so this is only trusted for ``q <= 8`` or so.
    """
    _check_q_alpha(q, alpha)
    q = int(q)
    nodes = np.arange(1, q + 1, dtype=float) ** 2
    A = np.vander(nodes, q, increasing=True).T
    b = np.zeros(q)
    b[0] = (1.0 - alpha) / 2.0
    x = np.linalg.solve(A, b)
    resid = np.max(np.abs(A @ x - b))
    if resid > 1e-6 * np.max(np.abs(b)):
        raise np.linalg.LinAlgError(f"Vandermonde solve residual {resid:.3g} too large")
    return CoefficientVector(q=q, alpha=float(alpha), coeffs=np.concatenate([[alpha], x]))


def lemma2_identity_check(q: int) -> float:
    """Floating-point value of ``sum_k 1 / prod_{j != k} (j^2/k^2 - 1)``.

    Should equal ``(-1)**(q+1)``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    terms = []
    for k in range(1, q + 1):
        prod = 1.0
        for j in range(1, q + 1):
            if j != k:
                prod *= (j * j) / (k * k) - 1.0
        terms.append(1.0 / prod)
    return math.fsum(terms)


def _c_constant(q: int) -> Fraction:
    return Fraction(1, 2) * sum(_node_weight(q, l) ** 2 for l in range(1, q + 1))


def optimal_alpha(q: int) -> tuple[float, float]:
    """Return ``(alpha_star, C)`` minimising ``int G^2 = alpha^2 + (1-alpha)^2 C``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    c = _c_constant(int(q))
    return float(c / (1 + c)), float(c)


def g_squared_integral(coeffs: CoefficientVector) -> float:
    """``int G(t)^2 dt = K(0)^2 + 2 sum_{j>=1} K(j)^2`` by Plancherel."""
    k = coeffs.coeffs
    return math.fsum([k[0] ** 2] + list(2.0 * k[1:] ** 2))


def eval_tsinc(coeffs: CoefficientVector, u):
    """Evaluate ``sum_{|j|<=q} K(j) sinc(pi (u - j))``.

    Away from the nodes this uses ``sin(pi (u - j)) = (-1)^j sin(pi u)``, so a
    single sine is needed per point. Terms are paired as ``1/(u-j) + 1/(u+j)``
    so the result is exactly even in ``u``; within ``1e-3`` of a node the
    direct sum is used and at integer ``u = m`` it returns ``K(m)``.
    """
    u = np.asarray(u, dtype=float)
    k = coeffs.coeffs
    q = coeffs.q
    near = np.abs(u - np.rint(u)) < 1e-3
    near &= np.abs(u) < q + 0.5

    uf = np.where(near, 0.5, u)
    acc = k[0] / uf
    for j in range(1, q + 1):
        sign = -1.0 if j % 2 else 1.0
        acc = acc + (sign * k[j]) * (1.0 / (uf - j) + 1.0 / (uf + j))
    out = _sinpi(uf) / np.pi * acc

    if np.any(near):
        un = u[near]
        direct = k[0] * sinc_pi(un)
        for j in range(1, q + 1):
            direct = direct + k[j] * (sinc_pi(un - j) + sinc_pi(un + j))
        out = np.where(near, 0.0, out)
        out[near] = direct
    return out[()] if out.ndim == 0 else out


def g_deriv_2q_at_zero(coeffs: CoefficientVector) -> float:
    """``G^{(2q)}(0)`` for ``G(t) = sum_j K(j) exp(-2 pi i j t)``."""
    q = coeffs.q
    return (-1.0) ** q * (2.0 * math.pi) ** (2 * q) * coeffs.moment(2 * q)


# ---------------------------------------------------------------------------
# G1 closed forms (v = 2 pi u)
# ---------------------------------------------------------------------------


def _g1_table(q: int, v, s, c):
    if q == 1:
        return (16 * s - 8 * v * c) / v**3
    if q == 2:
        return (-384 * v * c + 768 * s - 64 * v**2 * s) / v**5
    if q == 3:
        return (92160 * s - 46080 * v * c + 768 * v**3 * c - 9216 * v**2 * s) / v**7
    return (
        20643840 * s
        - 10321920 * v * c
        + 245760 * v**3 * c
        - 2211840 * v**2 * s
        + 12288 * v**4 * s
    ) / v**9


def _g1_moment(q: int, m: int) -> Fraction:
    # int_{-1/2}^{1/2} t^{2m} (1 - 4 t^2)^q dt
    total = Fraction(0)
    for i in range(q + 1):
        e = 2 * m + 2 * i + 1
        total += math.comb(q, i) * Fraction(-4) ** i * Fraction(2, 2**e * e)
    return total


_G1_SERIES = {
    q: np.array(
        [
            float((-1) ** m * _g1_moment(q, m) / math.factorial(2 * m))
            for m in range(_G1_SERIES_TERMS)
        ]
    )
    for q in range(1, 5)
}

G1_K0 = {q: _g1_moment(q, 0) for q in range(1, 5)}


def eval_g1(q: int, u):
    """Kernel with spectral density ``(1 - 4 t^2)^q`` on ``[-1/2, 1/2]``.

    Uses the tabulated closed forms at ``v = 2 pi u``; for ``|v| < 4`` the
    closed forms cancel badly and a power series in ``v^2`` is used instead.
    """
    if q not in (1, 2, 3, 4):
        raise ValueError(f"no closed form for g1 with q={q}; use the quadrature family")
    u = np.asarray(u, dtype=float)
    v = 2.0 * np.pi * np.abs(u)
    small = v < _G1_SERIES_CUTOFF
    out = np.empty_like(v)
    vb = v[~small]
    out[~small] = _g1_table(q, vb, np.sin(vb / 2), np.cos(vb / 2))
    v2 = v[small] ** 2
    series = np.zeros_like(v2)
    for coef in _G1_SERIES[q][::-1]:
        series = series * v2 + coef
    out[small] = series
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# spectral densities and the quadrature route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDensity:
    """Even function on ``[-1/2, 1/2]`` with ``G(0) = 1``.

    ``func`` is evaluated only inside the support; ``__call__`` zeroes the
    outside. ``deriv_order_q`` is ``q`` such that ``G^{(2q)}(0)`` is the first
    nonvanishing derivative beyond ``G(0)``.
    """

    name: str
    form: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv_order_q: int
    support: tuple[float, float] = (-0.5, 0.5)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) <= self.support[1]
        out = np.where(inside, self.func(np.where(inside, t, 0.0)), 0.0)
        return out[()] if out.ndim == 0 else out


def g1_density(q: int) -> SpectralDensity:
    """``(1 - 4 t^2)^q``; first nonzero derivative is the second for all ``q``."""
    return SpectralDensity(
        name=f"G1(q={q})",
        form="polynomial-on-support",
        func=lambda t: (1.0 - 4.0 * t * t) ** q,
        deriv_order_q=1,
    )


def g2_density(q: int) -> SpectralDensity:
    """``1 - (2 t)^{2q}``; order ``2q``."""
    return SpectralDensity(
        name=f"G2(q={q})",
        form="polynomial-on-support",
        func=lambda t: 1.0 - (2.0 * t) ** (2 * q),
        deriv_order_q=q,
    )


def tsinc_density(coeffs: CoefficientVector) -> SpectralDensity:
    """``alpha + 2 sum_j K(j) cos(2 pi j t)`` on the support."""
    k = coeffs.coeffs
    q = coeffs.q

    def func(t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, k[0])
        for j in range(1, q + 1):
            out = out + 2.0 * k[j] * np.cos(2.0 * np.pi * j * t)
        return out

    return SpectralDensity(
        name=f"tsinc(q={q},alpha={coeffs.alpha:.6g})",
        form="trig-polynomial-from-coefficients",
        func=func,
        deriv_order_q=q,
    )


def eval_quadrature_kernel(g: SpectralDensity, u, tol: float = 1e-10):
    """``2 int_0^{1/2} G(t) cos(2 pi u t) dt`` by adaptive Simpson."""
    half = g.support[1]

    def one(x):
        x = float(x)
        return 2.0 * adaptive_simpson(
            lambda t: float(g.func(t)) * math.cos(2.0 * math.pi * x * t), 0.0, half, tol / 2
        )

    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        return one(u)
    return np.array([one(x) for x in u.ravel()]).reshape(u.shape)


# ---------------------------------------------------------------------------
# kernel specification
# ---------------------------------------------------------------------------


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """A kernel identified by family, ``q`` (order ``p = 2q``) and ``alpha``.

    ``alpha`` only applies to ``tsinc`` and defaults to the value minimising
    ``int G^2``. ``density`` is required for ``quadratureG``.
    """

    family: str
    q: int = 1
    alpha: Optional[float] = None
    density: Optional[SpectralDensity] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.family in ("g1", "tsinc", "quadratureG") and (int(self.q) != self.q or self.q < 1):
            raise ValueError("q must be a positive integer")
        if self.family == "g1" and self.q not in (1, 2, 3, 4):
            raise ValueError("g1 closed forms exist for orders 2, 4, 6, 8 only")
        if self.family == "tsinc":
            if self.alpha is None:
                object.__setattr__(self, "alpha", optimal_alpha(self.q)[0])
            elif self.alpha == 1:
                raise ValueError("alpha=1 degenerates the kernel (top-moment condition violated)")
        if self.family == "quadratureG":
            if self.density is None:
                raise ValueError("quadratureG needs a spectral density")
            object.__setattr__(self, "q", self.density.deriv_order_q)

    @classmethod
    def gaussian(cls) -> "KernelSpec":
        return cls("gaussian")

    @classmethod
    def sinc(cls) -> "KernelSpec":
        return cls("sinc")

    @classmethod
    def g1(cls, q: int = 1) -> "KernelSpec":
        return cls("g1", q=q)

    @classmethod
    def tsinc(cls, q: int = 1, alpha: Optional[float] = None) -> "KernelSpec":
        return cls("tsinc", q=q, alpha=alpha)

    @classmethod
    def quadrature(cls, density: SpectralDensity) -> "KernelSpec":
        return cls("quadratureG", density=density)

    @property
    def order(self) -> Optional[int]:
        """Nominal order ``p``; ``None`` for the (infinite-order) sinc kernel."""
        if self.family == "gaussian":
            return 2
        if self.family == "sinc":
            return None
        return 2 * self.q

    @property
    def label(self) -> str:
        if self.family in ("gaussian", "sinc"):
            return self.family
        if self.family == "quadratureG":
            return self.density.name
        if self.family == "tsinc" and self.alpha != optimal_alpha(self.q)[0]:
            return f"tsinc(p={self.order};alpha={self.alpha:.6g})"
        return f"{self.family}(p={self.order})"

    @cached_property
    def coefficients(self) -> CoefficientVector:
        if self.family != "tsinc":
            raise AttributeError(f"{self.family} kernels have no node coefficients")
        return tsinc_coefficients(self.q, self.alpha)

    def spectral_density(self) -> SpectralDensity:
        """The compactly supported spectral density, where there is one."""
        if self.family == "tsinc":
            return tsinc_density(self.coefficients)
        if self.family == "g1":
            return g1_density(self.q)
        if self.family == "quadratureG":
            return self.density
        raise ValueError(f"{self.family} kernel has no spectral density on [-1/2, 1/2]")

    def __call__(self, u):
        if self.family == "gaussian":
            u = np.asarray(u, dtype=float)
            return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
        if self.family == "sinc":
            return sinc(u) / np.pi
        if self.family == "g1":
            return eval_g1(self.q, u)
        if self.family == "tsinc":
            return eval_tsinc(self.coefficients, u)
        return eval_quadrature_kernel(self.density, u)


def make_kernel(family: str, order: int = 2, alpha: Optional[float] = None) -> KernelSpec:
    """Build a kernel from a CLI-style family name and even order ``p``.

    ``g2`` is accepted as shorthand for the quadrature family with
    ``G(t) = 1 - (2t)^p``.
    """
    if family in ("g1", "tsinc", "g2", "quadratureG"):
        if order < 2 or order % 2:
            raise ValueError(f"order must be even and >= 2, got {order}")
    q = order // 2
    if family == "g2":
        return KernelSpec.quadrature(g2_density(q))
    if family == "quadratureG":
        raise ValueError("quadratureG needs an explicit density; use 'g2' or the API")
    if family == "tsinc":
        return KernelSpec.tsinc(q, alpha)
    if family == "g1":
        return KernelSpec.g1(q)
    return KernelSpec(family)
