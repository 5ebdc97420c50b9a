"""Command-line front end.

``drift-spectra run <config-file>`` executes a job described by a config
file; the direct subcommands mirror the job kinds with flags.  Exit codes:
0 success, 1 configuration error, 2 numeric failure (non-convergence,
indefinite mass, unconverged reference), 3 check failure (an asserted
identity or inequality violated beyond tolerance).  Every failure prints
a one-line diagnostic on stderr.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from . import experiments as xp
from .config import (CONVENTIONS, KINDS, SOLVERS, JobConfig, build_config,
                     load_config)
from .eigensolve import SolveOptions
from .errors import (AssemblyError, CheckFailure, ConfigError, DriftSpectraError,
                     EvalDomainError, ExprSyntaxError, MeshError, SolverError)
from .mesh import IntervalDomain, ThinDomainSpec
from .reports import SpectrumTable, report_document, write_csv, write_json
from .weights import WeightSpec


def _weight(cfg: JobConfig) -> WeightSpec | None:
    try:
        if cfg.phi is not None:
            return WeightSpec.from_phi(cfg.phi)
        if cfg.f is not None:
            return WeightSpec.from_f(cfg.f)
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad weight expression: {exc}") from exc
    return None


def _dispatch(cfg: JobConfig):
    """Run the job; returns (report, index_base_or_None, failure_message)."""
    domain = IntervalDomain(*cfg.domain)
    opts = SolveOptions(solver=cfg.solver, tol=cfg.tol, seed=cfg.seed)
    weight = _weight(cfg)
    kind = cfg.kind

    if kind in ("drift", "dirichlet", "thin"):
        if kind == "thin":
            spec = ThinDomainSpec(domain, weight, cfg.epsilon[0])
            result = xp.thin_spectrum(spec, cfg.nx, cfg.nt, cfg.num_eigs, opts)
            base = 0
        else:
            bc = "neumann" if kind == "drift" else "dirichlet"
            result = xp.drift_spectrum(domain, weight, bc, cfg.n,
                                       cfg.num_eigs, opts)
            base = 0 if bc == "neumann" else 1
        return SpectrumTable(result=result, index_base=base), None

    if kind == "converge":
        report = xp.convergence_study(domain, weight, cfg.epsilon, cfg.nx,
                                      cfg.nt, cfg.num_eigs, cfg.n, opts)
        return report, None

    if kind == "corollary1":
        report = xp.corollary1_harness(domain, cfg.n, cfg.epsilon, cfg.nx,
                                       cfg.nt, cfg.num_eigs, opts)
        return report, None

    if kind == "prop2":
        report = xp.prop2_check(domain, cfg.n, cfg.num_eigs,
                                tolerance=cfg.check_tol, opts=opts)
        if not report.passed:
            return report, "gap identity mismatch beyond tolerance"
        return report, None

    if kind == "gapcheck":
        report = xp.gap_check(domain, weight, cfg.n_pairs, cfg.n,
                              convention=cfg.convention, opts=opts)
        if not report.condition_satisfied:
            return report, "condition not satisfied"
        if not report.bound_satisfied:
            return report, "gap bound violated"
        return report, None

    if kind == "residual":
        report = xp.eigenfunction_residual(domain, weight, cfg.epsilon,
                                           cfg.nx, cfg.nt, cfg.num_eigs, opts)
        if not (report.residual_decreasing and report.distance_decreasing):
            return report, "residual trend not decreasing"
        return report, None

    if kind == "prop4":
        report = xp.prop4_trials(domain, weight, cfg.n, cfg.num_eigs,
                                 trials=cfg.trials, seed=cfg.seed, opts=opts)
        if not (report.all_hold and report.equality_ok):
            return report, "trial-sum inequality violated"
        return report, None

    raise ConfigError(f"unhandled job kind {kind!r}")


def run_job(cfg: JobConfig) -> int:
    """Execute a validated job, write requested outputs, return exit code."""
    report, failure = _dispatch(cfg)
    if cfg.csv_path:
        write_csv(report, cfg.csv_path)
    if cfg.json_path:
        doc = report_document(report, cfg.kind, cfg.echo(), __version__)
        if failure:
            doc["failure"] = failure
        write_json(doc, cfg.json_path)
    if failure:
        print(f"drift-spectra: {cfg.kind}: {failure}", file=sys.stderr)
        return 3
    return 0


def _add_common(sub: argparse.ArgumentParser, *, eps: str | None = None):
    sub.add_argument("--domain", nargs=2, type=float, required=True,
                     metavar=("A", "B"), help="interval endpoints")
    sub.add_argument("--phi", help="weight exponent expression")
    sub.add_argument("--f", help="weight density expression")
    if eps == "one":
        sub.add_argument("--eps", nargs=1, type=float, help="collapse thickness")
    elif eps == "list":
        sub.add_argument("--eps", nargs="+", type=float,
                         help="descending geometric thickness list")
    sub.add_argument("--nx", type=int, help="base elements of the thin grid")
    sub.add_argument("--nt", type=int, help="transverse layers of the thin grid")
    sub.add_argument("--n", type=int, help="1-d mesh elements")
    sub.add_argument("--k", type=int, help="eigenpair count / highest mode index")
    sub.add_argument("--tol", type=float, help="solver residual tolerance")
    sub.add_argument("--solver", choices=SOLVERS)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--convention", choices=CONVENTIONS)
    sub.add_argument("--n-pairs", type=int, dest="n_pairs",
                     help="pair-grid resolution for gapcheck")
    sub.add_argument("--trials", type=int, help="random trial count for prop4")
    sub.add_argument("--check-tol", type=float, dest="check_tol",
                     help="identity tolerance for prop2")
    sub.add_argument("--csv", help="CSV output path")
    sub.add_argument("--json", help="JSON output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drift-spectra",
        description="Drift-Laplacian and collapsing thin-domain spectra")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run a job from a config file")
    run.add_argument("config", help="path to the config file")

    eps_mode = {"thin": "one", "converge": "list", "corollary1": "list",
                "residual": "list"}
    helps = {
        "drift": "Neumann drift spectrum on the weighted interval",
        "dirichlet": "Dirichlet spectrum on the weighted interval",
        "thin": "Neumann spectrum of the thin domain",
        "converge": "collapse-order study against the 1-d reference",
        "corollary1": "thin-domain limits against Dirichlet gaps",
        "prop2": "Dirichlet gaps vs the squared-ground-state drift spectrum",
        "gapcheck": "pairwise modulus condition and the 3 pi^2/d^2 bound",
        "residual": "transverse structure of a thin eigenfunction",
        "prop4": "random-trial partial-sum inequality",
    }
    for kind in KINDS:
        sub = subs.add_parser(kind, help=helps[kind])
        _add_common(sub, eps=eps_mode.get(kind))
    return parser


def _config_from_args(args) -> JobConfig:
    problem = {"kind": args.command, "domain": list(args.domain)}
    mapping = {"phi": "phi", "f": "f", "nx": "nx", "nt": "nt", "n": "n",
               "k": "num_eigs", "tol": "tol", "solver": "solver",
               "seed": "seed", "convention": "convention",
               "n_pairs": "n_pairs", "trials": "trials",
               "check_tol": "check_tol"}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            problem[key] = value
    eps = getattr(args, "eps", None)
    if eps is not None:
        problem["epsilon"] = list(eps) if len(eps) > 1 else eps[0]
    output = {}
    if args.csv:
        output["csv"] = args.csv
    if args.json:
        output["json"] = args.json
    return build_config(problem, output)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for usage problems;
        # usage problems are configuration errors under our contract
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 1
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        else:
            cfg = _config_from_args(args)
        return run_job(cfg)
    except ConfigError as exc:
        print(f"drift-spectra: config error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, AssemblyError, MeshError, EvalDomainError) as exc:
        print(f"drift-spectra: numeric failure: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"drift-spectra: check failure: {exc}", file=sys.stderr)
        return 3
    except DriftSpectraError as exc:
        print(f"drift-spectra: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
