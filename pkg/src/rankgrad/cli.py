"""Command-line interface.

Subcommands: ``gini``, ``rgx``, ``cvm``, ``whiten``, ``safe-eval``,
``shapley``, ``spearman`` and ``synth``. The shared flags ``--seed``, ``--p``,
``--folds``, ``--perturb-scale`` and ``--config`` are accepted before or
after the subcommand; explicit flags override values from ``--config``.
Each package error class exits with its own non-zero code.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .data import CATEGORICAL, SynthSpec, ingest_csv, synth_generate, write_csv
from .divergences import cvm_p, empirical_cdf, energy_cvm_factor, verify_cvm_wasserstein, wasserstein_1d
from .errors import ConfigError, InputError, RankGradError
from .explain import rank_features, run_shapley_pipeline, spearman
from .rank_core import gini, pietra
from .report import emit_safe_report, emit_shapley_report, safe_table, shapley_table
from .rgx import rgx_p, s_inf, s_p, wrgx_p
from .safe_eval import run_safe_eval
from .whitening import fit_whitening, multivariate_gini

__all__ = ["main", "build_parser"]


def _numbers(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"cannot parse number list {text!r}: {exc}") from None


def _names(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def _shared_flags() -> argparse.ArgumentParser:
    sh = argparse.ArgumentParser(add_help=False)
    g = sh.add_argument_group("shared options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    g.add_argument("--p", type=float, default=argparse.SUPPRESS, help="metric order p (default 1)")
    g.add_argument("--folds", type=int, default=argparse.SUPPRESS, help="cross-validation folds")
    g.add_argument("--perturb-scale", type=float, default=argparse.SUPPRESS,
                   help="robustness noise scale relative to the prediction sd")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    return sh


def _vector_source(p: argparse.ArgumentParser, name: str, help_: str) -> None:
    p.add_argument(f"--{name}", help=f"{help_} as a comma/space separated list")
    p.add_argument(f"--{name}-col", help=f"column of --data holding {help_}")


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog="rankgrad", parents=[shared],
                                     description="Rank graduation metrics and SAFE model evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gini", parents=[shared], help="Gini, Pietra and S_p of a positive vector")
    _vector_source(p, "y", "the response")
    p.add_argument("--data", help="CSV file")

    p = sub.add_parser("rgx", parents=[shared], help="RGX_p (or WRGX_p) between a response and scores")
    _vector_source(p, "y", "the response")
    _vector_source(p, "z", "the scores")
    p.add_argument("--data", help="CSV file")
    p.add_argument("--weighted", action="store_true", help="report WRGX_p instead of RGX_p")

    p = sub.add_parser("cvm", parents=[shared],
                       help="Cramer-von Mises divergence of two samples and its Wasserstein form")
    _vector_source(p, "x", "the first sample")
    _vector_source(p, "y", "the second sample")
    p.add_argument("--data", help="CSV file")

    p = sub.add_parser("whiten", parents=[shared], help="fit a correlation whitening on columns")
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--columns", required=True, help="comma-separated response columns")
    p.add_argument("--scheme", choices=["zca-cor", "cholesky"], default="zca-cor")
    p.add_argument("--out", help="write the fitted transform as JSON here")

    for name, help_ in (("safe-eval", "cross-validated RGA / RGR / RGE"),
                        ("shapley", "cross-validated Monte Carlo Shapley importances")):
        p = sub.add_parser(name, parents=[shared], help=help_)
        p.add_argument("--data", required=True, help="CSV file")
        p.add_argument("--targets", help="comma-separated target columns")
        p.add_argument("--features", help="comma-separated feature columns (default: all others)")
        p.add_argument("--categorical", help="comma-separated columns to read as categorical")
        p.add_argument("--models", help="comma-separated subset of ols,mlp")
        p.add_argument("--multivariate", action="store_true", default=None,
                       help="evaluate all targets jointly after whitening")
        p.add_argument("--scheme", choices=["zca-cor", "cholesky"])
        p.add_argument("--whiten-on", choices=["train", "full"])
        p.add_argument("--hidden", type=int, help="MLP hidden units")
        p.add_argument("--max-iter", type=int, help="MLP iterations")
        p.add_argument("--m", type=int, dest="shapley_m", help="Shapley permutations per row")
        p.add_argument("--out", dest="output_dir", help="output directory for report files")

    p = sub.add_parser("spearman", parents=[shared], help="Spearman rho of two rankings")
    p.add_argument("--a", required=True, help="first ranking (or importances with --importances)")
    p.add_argument("--b", required=True, help="second ranking (or importances with --importances)")
    p.add_argument("--importances", action="store_true",
                   help="inputs are importance scores; rank them in descending order first")

    p = sub.add_parser("synth", parents=[shared], help="write a synthetic dataset as CSV")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--n-features", type=int, default=5)
    p.add_argument("--correlation", type=float, default=0.3)
    p.add_argument("--link", choices=["linear", "exp", "nonlinear", "noise"], default="linear")
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--n-targets", type=int, default=1)
    p.add_argument("--irrelevant", default="", help="comma-separated 1-based feature numbers")
    p.add_argument("--sector-levels", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: standard output)")
    return parser


def _vector(args, name: str) -> np.ndarray:
    literal = getattr(args, name)
    col = getattr(args, f"{name}_col")
    if (literal is None) == (col is None):
        raise InputError(f"give exactly one of --{name} or --{name}-col")
    if literal is not None:
        return _numbers(literal)
    if not args.data:
        raise InputError(f"--{name}-col needs --data")
    return ingest_csv(args.data).matrix([col])[:, 0]


def _p(args) -> float:
    return getattr(args, "p", 1.0)


def _cmd_gini(args) -> str:
    y = _vector(args, "y")
    p = _p(args)
    return (f"gini    {gini(y):.12g}\npietra  {pietra(y):.12g}\n"
            f"s_p     {s_p(y, p):.12g}  (p={p:g})\ns_inf   {s_inf(y):.12g}\n")


def _cmd_rgx(args) -> str:
    y, z = _vector(args, "y"), _vector(args, "z")
    p = _p(args)
    res = (wrgx_p if args.weighted else rgx_p)(y, z, p)
    name = "wrgx" if args.weighted else "rgx"
    return (f"{name}_p     {res.value:.12g}  (p={p:g})\n"
            f"numerator   {res.numerator:.12g}\ndenominator {res.denominator:.12g}\n")


def _cmd_cvm(args) -> str:
    x, y = empirical_cdf(_vector(args, "x")), empirical_cdf(_vector(args, "y"))
    p = getattr(args, "p", 2.0)
    chk = verify_cvm_wasserstein(x, y, p)
    fac = energy_cvm_factor(x, y)
    return (f"cvm_p             {cvm_p(x, y, p):.12g}  (p={p:g})\n"
            f"cvm_p^(1/p)       {chk.cvm_root:.12g}\n"
            f"W_p(U, C)         {chk.wasserstein:.12g}\n"
            f"W_p(x, y)         {wasserstein_1d(x, y, max(p, 1.0)):.12g}\n"
            f"energy(U, C)      {fac['energy']:.12g}\n"
            f"energy / cvm_2    {fac['ratio_xy']:.12g}\n")


def _cmd_whiten(args) -> str:
    Y = ingest_csv(args.data).matrix(_names(args.columns))
    t = fit_whitening(Y, args.scheme)
    mg = multivariate_gini(Y, t)
    if args.out:
        mg.transform.save(args.out)
    lines = [f"scheme            {t.scheme.value}",
             "lambdas           " + " ".join(f"{v:.6f}" for v in t.lambdas),
             "whitened means    " + " ".join(f"{v:.6f}" for v in t.whitened_means),
             "coordinate gini   " + " ".join(f"{v:.6f}" for v in mg.components),
             f"multivariate gini {mg.value:.6f}"]
    return "\n".join(lines) + "\n"


_FLAG_FIELDS = ("seed", "p", "folds", "perturb_scale")


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if hasattr(args, "config") else RunConfig()
    overrides = {k: getattr(args, k) for k in _FLAG_FIELDS if hasattr(args, k)}
    overrides.update(
        targets=_names(args.targets), features=_names(args.features), models=_names(args.models),
        multivariate=args.multivariate, scheme=args.scheme, whiten_on=args.whiten_on,
        hidden=args.hidden, max_iter=args.max_iter, shapley_m=args.shapley_m,
        output_dir=args.output_dir,
    )
    cfg = cfg.updated(**overrides)
    if not cfg.targets:
        raise ConfigError("no target columns: pass --targets or set 'targets' in the config")
    return cfg


def _load(args):
    schema = {c: CATEGORICAL for c in _names(args.categorical) or []}
    return ingest_csv(args.data, schema)


def _cmd_safe_eval(args) -> str:
    cfg = _run_config(args)
    report = run_safe_eval(_load(args), cfg)
    if cfg.output_dir:
        emit_safe_report(report, cfg.output_dir)
    return safe_table(report)


def _cmd_shapley(args) -> str:
    cfg = _run_config(args)
    report = run_shapley_pipeline(_load(args), cfg)
    if cfg.output_dir:
        emit_shapley_report(report, cfg.output_dir)
    return shapley_table(report)


def _cmd_spearman(args) -> str:
    a, b = _numbers(args.a), _numbers(args.b)
    if args.importances:
        a, b = rank_features(a), rank_features(b)
    return f"{spearman(a, b):.12g}\n"


def _cmd_synth(args) -> str:
    irr = tuple(int(t) - 1 for t in _names(args.irrelevant) or [])
    spec = SynthSpec(args.n, args.n_features, args.correlation, args.link, args.noise_sd,
                     args.n_targets, irr, args.sector_levels)
    text = write_csv(synth_generate(spec, getattr(args, "seed", 0)), args.out)
    return "" if args.out else text


_COMMANDS = {
    "gini": _cmd_gini,
    "rgx": _cmd_rgx,
    "cvm": _cmd_cvm,
    "whiten": _cmd_whiten,
    "safe-eval": _cmd_safe_eval,
    "shapley": _cmd_shapley,
    "spearman": _cmd_spearman,
    "synth": _cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = _COMMANDS[args.command](args)
    except RankGradError as exc:
        print(f"rankgrad: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
