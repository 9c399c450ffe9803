"""Target densities for the simulation study, with samplers.

Characteristic functions use ``phi(t) = int f(u) exp(2 pi i t u) du``.
All samplers draw only uniforms from the supplied ``numpy.random.Generator``
so that a stream is fully determined by its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "TargetDistribution",
    "Normal",
    "Gamma",
    "LpSymmetric",
    "FVP",
    "get_distribution",
    "DISTRIBUTIONS",
    "normal_polar",
    "gamma_marsaglia_tsang",
    "fvp_rejection",
    "RejectionError",
]

MAX_PROPOSALS = 1000


class RejectionError(RuntimeError):
    """A rejection sampler used more proposals per draw than allowed."""


# ---------------------------------------------------------------------------
# variate generators
# ---------------------------------------------------------------------------


def normal_polar(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normal variates by Marsaglia's polar method."""
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        m = need // 2 + 1
        m += m // 3 + 4  # acceptance is pi/4
        u = 2.0 * rng.random(m) - 1.0
        v = 2.0 * rng.random(m) - 1.0
        s = u * u + v * v
        ok = (s > 0.0) & (s < 1.0)
        u, v, s = u[ok], v[ok], s[ok]
        f = np.sqrt(-2.0 * np.log(s) / s)
        z = np.concatenate([u * f, v * f])[:need]
        out[filled : filled + z.size] = z
        filled += z.size
    return out


def gamma_marsaglia_tsang(rng: np.random.Generator, shape: float, n: int) -> np.ndarray:
    """Gamma(shape, 1) variates by Marsaglia and Tsang's squeeze method.

    Shapes below one use the boost ``G(a) = G(a + 1) U^{1/a}``.
    """
    if shape <= 0:
        raise ValueError("shape must be positive")
    if shape < 1.0:
        g = gamma_marsaglia_tsang(rng, shape + 1.0, n)
        return g * rng.random(n) ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    filled = 0
    rounds = 0
    while filled < n:
        rounds += 1
        if rounds > MAX_PROPOSALS:
            raise RejectionError("Marsaglia-Tsang exceeded the proposal budget")
        need = n - filled
        m = need + need // 10 + 4
        x = normal_polar(rng, m)
        u = rng.random(m)
        v = (1.0 + c * x) ** 3
        pos = v > 0.0
        logv = np.log(np.where(pos, v, 1.0))
        x2 = x * x
        accept = pos & (
            (u < 1.0 - 0.0331 * x2 * x2) | (np.log(u) < 0.5 * x2 + d * (1.0 - v + logv))
        )
        draws = (d * v[accept])[:need]
        out[filled : filled + draws.size] = draws
        filled += draws.size
    return out


def fvp_rejection(rng: np.random.Generator, n: int) -> tuple[np.ndarray, float]:
    """Draws from ``(2/pi) (sin(x/2)/x)^2`` and the observed acceptance rate.

    The envelope is proportional to ``min(1/4, 1/x^2)``: uniform on
    ``[-2, 2]`` with half the mass and Pareto tails ``|x| = 2/U`` with the
    other half. The theoretical acceptance rate is ``pi/4``.
    """
    out = np.empty(n)
    filled = 0
    proposed = 0
    accepted = 0
    rounds = 0
    while filled < n:
        rounds += 1
        if rounds > MAX_PROPOSALS:
            raise RejectionError(f"FVP sampler needed more than {MAX_PROPOSALS} proposals per draw")
        need = n - filled
        m = int(need * 1.35) + 8
        proposed += m
        pick = rng.random(m)
        body = 4.0 * rng.random(m) - 2.0
        tail_u = 1.0 - rng.random(m)  # in (0, 1]
        tail = np.where(rng.random(m) < 0.5, -1.0, 1.0) * 2.0 / tail_u
        x = np.where(pick < 0.5, body, tail)
        half = 0.5 * x
        ratio = np.where(np.abs(x) < 1e-8, 1.0, np.sin(half) / half) ** 2 / 4.0
        env = np.minimum(0.25, 1.0 / np.maximum(x * x, 1e-300))
        accept = rng.random(m) * env <= ratio
        accepted += int(accept.sum())
        draws = x[accept][:need]
        out[filled : filled + draws.size] = draws
        filled += draws.size
    return out, accepted / proposed


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetDistribution:
    """Base class; subclasses supply ``pdf``, ``cdf``, ``charfn`` and ``sample``."""

    name = "base"
    closed_form_charfn = True
    # half-width of the support of phi
    cf_support = math.inf

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def charfn(self, t):
        raise NotImplementedError

    def charfn_sq(self, t):
        """``|phi(t)|^2``."""
        return np.abs(self.charfn(t)) ** 2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return dict(self.__dict__)

    def describe(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.name}({inner})"


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n!r}")


@dataclass(frozen=True)
class Normal(TargetDistribution):
    """``N(mu, var)``; the second parameter is the variance."""

    mu: float = 0.0
    var: float = 0.1
    name = "normal"

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("variance must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mu) ** 2 / self.var) / math.sqrt(2 * math.pi * self.var)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * special.erfc(-(x - self.mu) / math.sqrt(2 * self.var))

    def charfn(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(2j * np.pi * self.mu * t - 2 * np.pi**2 * self.var * t * t)

    def charfn_sq(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-4 * np.pi**2 * self.var * t * t)

    def sample(self, rng, n):
        _check_n(n)
        return self.mu + math.sqrt(self.var) * normal_polar(rng, n)


@dataclass(frozen=True)
class Gamma(TargetDistribution):
    """Gamma with ``shape`` and ``rate``."""

    shape: float = 2.0
    rate: float = 2.0
    name = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        pos = x > 0
        xp = np.where(pos, x, 1.0)
        logf = (
            self.shape * math.log(self.rate)
            + (self.shape - 1) * np.log(xp)
            - self.rate * xp
            - special.gammaln(self.shape)
        )
        return np.where(pos, np.exp(logf), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return special.gammainc(self.shape, self.rate * np.maximum(x, 0.0))

    def charfn(self, t):
        t = np.asarray(t, dtype=float)
        return (1.0 - 2j * np.pi * t / self.rate) ** (-self.shape)

    def charfn_sq(self, t):
        t = np.asarray(t, dtype=float)
        return (1.0 + (2 * np.pi * t / self.rate) ** 2) ** (-self.shape)

    def sample(self, rng, n):
        _check_n(n)
        return gamma_marsaglia_tsang(rng, self.shape, n) / self.rate


@dataclass(frozen=True)
class LpSymmetric(TargetDistribution):
    """Density ``exp(-|x|^p) / (2 Gamma(1 + 1/p))``."""

    p: float = 3.0
    name = "lp_symmetric"
    closed_form_charfn = False

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("p must be positive")

    @property
    def norm_const(self) -> float:
        return 1.0 / (2.0 * math.gamma(1.0 + 1.0 / self.p))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.norm_const * np.exp(-np.abs(x) ** self.p)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 + 0.5 * np.sign(x) * special.gammainc(1.0 / self.p, np.abs(x) ** self.p)

    def _charfn_scalar(self, t: float) -> float:
        # beyond this the integrand is below exp(-700)
        upper = 700.0 ** (1.0 / self.p)
        if t == 0:
            return 1.0
        f = lambda x: self.norm_const * math.exp(-(x**self.p))
        val, _ = integrate.quad(
            f, 0.0, upper, weight="cos", wvar=2 * math.pi * abs(t), epsabs=1e-13, limit=200
        )
        return 2.0 * val

    def charfn(self, t):
        t = np.asarray(t, dtype=float)
        out = np.vectorize(self._charfn_scalar, otypes=[float])(t)
        return out[()] if out.ndim == 0 else out

    def sample(self, rng, n):
        _check_n(n)
        g = gamma_marsaglia_tsang(rng, 1.0 / self.p, n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * g ** (1.0 / self.p)


@dataclass(frozen=True)
class FVP(TargetDistribution):
    """Fejer-de la Vallee Poussin density ``(2/pi) (sin(x/2)/x)^2``.

    Heavy tailed (no mean); ``phi(t) = (1 - 2 pi |t|)_+``.
    """

    name = "fvp"
    cf_support = 1.0 / (2.0 * math.pi)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < 1e-6
        xs = np.where(small, 1.0, x)
        body = (np.sin(xs / 2) / xs) ** 2
        lim = 0.25 - x * x / 48.0
        return (2.0 / np.pi) * np.where(small, lim, body)

    def cdf(self, x):
        # F(x) = 1/2 + (Si(x) - (1 - cos x)/x) / pi
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < 1e-6
        xs = np.where(small, 1.0, x)
        si, _ = special.sici(xs)
        body = si - (1.0 - np.cos(xs)) / xs
        return 0.5 + np.where(small, x / 2.0, body) / np.pi

    def charfn(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, 1.0 - 2 * np.pi * np.abs(t)) + 0j

    def charfn_sq(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(0.0, 1.0 - 2 * np.pi * np.abs(t)) ** 2

    def sample(self, rng, n):
        _check_n(n)
        return fvp_rejection(rng, n)[0]


DISTRIBUTIONS = {
    "normal": Normal,
    "gamma": Gamma,
    "lp_symmetric": LpSymmetric,
    "lp": LpSymmetric,
    "fvp": FVP,
}


def get_distribution(name: str, **params) -> TargetDistribution:
    """Look up a target by name; ``params`` go to the constructor."""
    try:
        cls = DISTRIBUTIONS[name]
    except KeyError:
        raise ValueError(f"unknown distribution {name!r}; choose from {sorted(DISTRIBUTIONS)}")
    return cls(**params)
