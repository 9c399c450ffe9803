"""Higher-order kernels for density estimation.

Trigonometric-sinc kernels ``K(u) = sum_j K(j) sinc(pi (u - j))`` with
coefficients in closed form, the g1 family, kernel density estimates with the
``max(0, f_n - xi)`` correction, target distributions and a Monte Carlo /
spectral MISE laboratory.
"""

from .kernels import (
    FAMILIES,
    CoefficientVector,
    KernelSpec,
    SpectralDensity,
    eval_g1,
    eval_quadrature_kernel,
    eval_tsinc,
    g1_density,
    g2_density,
    g_deriv_2q_at_zero,
    g_squared_integral,
    make_kernel,
    optimal_alpha,
    tsinc_coefficients,
    tsinc_coefficients_bruteforce,
)
from .density import BandwidthRule, EstimateGrid, bandwidth, ghu_correct, kde_evaluate, make_grid
from .targets import FVP, Gamma, LpSymmetric, Normal, TargetDistribution, get_distribution
from .mise import BenchConfig, BenchReport, asymptotic_mise_constant, ise, mc_mise, mise_spectral

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "CoefficientVector",
    "KernelSpec",
    "SpectralDensity",
    "eval_g1",
    "eval_quadrature_kernel",
    "eval_tsinc",
    "g1_density",
    "g2_density",
    "g_deriv_2q_at_zero",
    "g_squared_integral",
    "make_kernel",
    "optimal_alpha",
    "tsinc_coefficients",
    "tsinc_coefficients_bruteforce",
    "BandwidthRule",
    "EstimateGrid",
    "bandwidth",
    "ghu_correct",
    "kde_evaluate",
    "make_grid",
    "FVP",
    "Gamma",
    "LpSymmetric",
    "Normal",
    "TargetDistribution",
    "get_distribution",
    "BenchConfig",
    "BenchReport",
    "asymptotic_mise_constant",
    "ise",
    "mc_mise",
    "mise_spectral",
]
