"""Command-line interface: ``hok {kernel-info,kernel-eval,estimate,bench,verify}``.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels as kc
from .density import BandwidthRule, bandwidth, default_rule, ghu_correct, kde_evaluate, make_grid
from .mise import BenchConfig, mc_mise
from .targets import get_distribution

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2

CONFIG_KEYS = {"grid_lo": float, "grid_hi": float, "grid_m": int, "reps": int, "seed": int, "workers": int}
DEFAULTS = {"grid_lo": -5.0, "grid_hi": 5.0, "grid_m": 1001, "reps": 100, "seed": 20240101, "workers": 1}


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _t(x: float) -> str:
    return format(float(x), ".6g")


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}")
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}: line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(f"{path}: line {lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value.strip("\"'"))
        except ValueError:
            raise InputError(f"{path}: line {lineno}: bad value for {key}: {value!r}")
    return out


def parse_grid(text: str) -> tuple[float, float, int]:
    """``lo:hi:count``; ``lo == hi`` is allowed only with ``count == 1``."""
    try:
        lo_s, hi_s, m_s = text.split(":")
        lo, hi, m = float(lo_s), float(hi_s), int(m_s)
    except ValueError:
        raise InputError(f"grid must look like lo:hi:count, got {text!r}")
    if m < 1:
        raise InputError("grid count must be >= 1")
    if m == 1:
        if lo != hi:
            raise InputError("a one-point grid needs lo == hi")
    elif not lo < hi:
        raise InputError("grid needs lo < hi")
    return lo, hi, m


def read_sample(path: str) -> np.ndarray:
    """One float per line; blank lines and ``#`` comments are skipped."""
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}")
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise InputError(f"{path}: line {lineno}: not a number: {line!r}")
        if not math.isfinite(v):
            raise InputError(f"{path}: line {lineno}: non-finite value")
        vals.append(v)
    if not vals:
        raise InputError(f"{path}: no data values")
    return np.array(vals)


def _kernel(args) -> kc.KernelSpec:
    if args.order < 2 or args.order % 2:
        raise InputError(f"order must be even and >= 2, got {args.order}")
    if args.family == "tsinc" and args.alpha == 1:
        raise InputError("alpha=1 degenerates the kernel (top-moment condition violated)")
    try:
        return kc.make_kernel(args.family, args.order, args.alpha)
    except ValueError as exc:
        raise InputError(str(exc))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_kernel_info(args, cfg) -> int:
    k = _kernel(args)
    out = sys.stdout
    out.write(f"family: {args.family}\norder: {args.order}\n")
    if k.family == "tsinc":
        c = k.coefficients
        a_star, C = kc.optimal_alpha(k.q)
        out.write(f"alpha: {_g(k.alpha)}\n")
        for j, v in enumerate(c.coeffs):
            out.write(f"K({j}): {_g(v)}\n")
        out.write(f"C: {_g(C)}\n")
        out.write(f"optimal_alpha: {_g(a_star)}\n")
        out.write(f"int_G2: {_g(kc.g_squared_integral(c))}\n")
        out.write(f"sum_j2qK: {_g(c.moment(2 * k.q))}\n")
        out.write(f"G_2q_at_0: {_g(kc.g_deriv_2q_at_zero(c))}\n")
        out.write(f"alpha_is_optimal: {'yes' if math.isclose(k.alpha, a_star, rel_tol=1e-12) else 'no'}\n")
    elif k.family == "g1":
        k0 = kc.G1_K0[k.q]
        out.write(f"K(0): {k0} = {_g(float(k0))}\n")
        out.write("moment_order: 2 (G''(0) = -8q is nonzero for every q)\n")
    elif k.family == "quadratureG":
        out.write(f"density: {k.density.name}\n")
        out.write(f"K(0): {_g(kc.eval_quadrature_kernel(k.density, 0.0))}\n")
    elif k.family == "gaussian":
        out.write(f"K(0): {_g(1 / math.sqrt(2 * math.pi))}\n")
    else:
        out.write(f"K(0): {_g(1 / math.pi)}\n")
    return EXIT_OK


def cmd_kernel_eval(args, cfg) -> int:
    k = _kernel(args)
    lo, hi, m = parse_grid(args.grid) if args.grid else (cfg["grid_lo"], cfg["grid_hi"], cfg["grid_m"])
    us = np.linspace(lo, hi, m)
    vals = np.atleast_1d(k(us))
    lines = ["u,K"] + [f"{_g(u)},{_g(v)}" for u, v in zip(us, vals)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_estimate(args, cfg) -> int:
    data = read_sample(args.input)
    k = _kernel(args)
    lo, hi, m = parse_grid(args.grid) if args.grid else (cfg["grid_lo"], cfg["grid_hi"], cfg["grid_m"])
    if m < 2:
        raise InputError("estimate needs a grid of at least two points")
    if args.bandwidth == "auto":
        rule = default_rule(k)
    else:
        try:
            h = float(args.bandwidth)
        except ValueError:
            raise InputError(f"bandwidth must be 'auto' or a positive number, got {args.bandwidth!r}")
        if not h > 0:
            raise InputError("bandwidth must be positive")
        rule = BandwidthRule("fixed", h)
    try:
        h = bandwidth(rule, data, k)
        est = kde_evaluate(data, k, h, make_grid(lo, hi, m))
        if args.correct:
            est = ghu_correct(est)
    except ValueError as exc:
        raise InputError(str(exc))
    if est.mass_warning:
        sys.stderr.write(f"warning: estimate mass on grid below one; xi = {est.xi:.6g}\n")
    _emit(est.to_csv(), args.out)
    return EXIT_OK


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        vals = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"{what} must be comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise InputError(f"{what} must be positive integers")
    return vals


def _parse_params(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"distribution parameter must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"bad value in {item!r}")
    return out


def cmd_bench(args, cfg) -> int:
    try:
        dist = get_distribution(args.distribution, **_parse_params(args.dist_param))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc))
    ns = _parse_ints(args.n, "--n")
    families = [s.strip() for s in args.kernels.split(",") if s.strip()]
    kernels = []
    for fam in families:
        if fam not in ("gaussian", "sinc", "g1", "tsinc", "g2"):
            raise InputError(f"unknown kernel {fam!r}")
        args.family = fam
        k = _kernel(args)
        kernels.append((k, default_rule(k)))
    lo, hi, m = parse_grid(args.grid) if args.grid else (cfg["grid_lo"], cfg["grid_hi"], cfg["grid_m"])
    reps = args.reps if args.reps is not None else cfg["reps"]
    seed = args.seed if args.seed is not None else cfg["seed"]
    workers = args.workers if args.workers is not None else cfg["workers"]
    correct = {"auto": None, "on": True, "off": False}[args.correct]
    try:
        config = BenchConfig(
            dist=dist, kernels=kernels, ns=ns, reps=reps, grid=(lo, hi, m), seed=seed, correct=correct
        )
    except ValueError as exc:
        raise InputError(str(exc))
    report = mc_mise(config, workers=workers)
    if args.out:
        Path(args.out).write_text(report.to_csv(), encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(report.to_csv() + "\n")
    sys.stdout.write(report.to_table())
    sys.stdout.write(f"config fingerprint: {report.fingerprint}\n")
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    from .verify import run_checks

    results = run_checks(perturb=args.perturb, quick=args.quick)
    for c in results:
        sys.stdout.write(c.line() + "\n")
    failed = sum(not c.passed for c in results)
    sys.stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_kernel_flags(p, families=("gaussian", "sinc", "g1", "g2", "tsinc"), family_required=True):
    if family_required:
        p.add_argument("--family", required=True, choices=families)
    p.add_argument("--order", type=int, default=2, help="even kernel order p (q = p/2)")
    p.add_argument("--alpha", type=float, default=None, help="K(0) for tsinc; default optimal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hok", description="Higher-order kernel laboratory.")
    parser.add_argument("--config", help="key = value file (grid_lo, grid_hi, grid_m, reps, seed, workers)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-info", help="coefficients and optimality summary")
    _add_kernel_flags(p)
    p.set_defaults(func=cmd_kernel_info)

    p = sub.add_parser("kernel-eval", help="tabulate K(u) as CSV")
    _add_kernel_flags(p)
    p.add_argument("--grid", help="lo:hi:count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel_eval)

    p = sub.add_parser("estimate", help="density estimate of a sample file")
    p.add_argument("input", help="one value per line ('-' for stdin)")
    _add_kernel_flags(p)
    p.add_argument("--bandwidth", default="auto", help="'auto' or a positive number")
    p.add_argument("--grid", help="lo:hi:count")
    p.add_argument("--correct", action="store_true", help="apply max(0, f - xi) renormalisation")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="Monte Carlo MISE benchmark")
    p.add_argument("--distribution", required=True, choices=["normal", "gamma", "lp_symmetric", "lp", "fvp"])
    p.add_argument("--dist-param", action="append", help="e.g. var=0.1, shape=2, rate=2, p=3")
    p.add_argument("--n", default="50,250,500")
    p.add_argument("--reps", type=int)
    p.add_argument("--kernels", default="gaussian,sinc,g1,tsinc")
    _add_kernel_flags(p, family_required=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", help="lo:hi:count")
    p.add_argument("--correct", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV path; table still goes to stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the oracle checks")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.add_argument("--quick", action="store_true", help="skip the Monte Carlo comparison")
    p.set_defaults(func=cmd_verify)
    return parser


def _join_grid(argv: list[str]) -> list[str]:
    # "--grid -1:1:3" would otherwise be read as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--grid={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_join_grid(argv))
    try:
        cfg = dict(DEFAULTS)
        if args.config:
            cfg.update(read_config(args.config))
        return args.func(args, cfg)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
