"""Command-line entry point: ``hardybound <mode> [--config FILE] [flags]``.

Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 selftest failure.
The thread count of the BLAS/OpenMP pools is read from ``HARDYBOUND_THREADS``
(default 1, which keeps every reduction order fixed).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import nonlocal_core as nc
from .certificates import certify_lower_bound, default_trials, upper_bound_rayleigh, verify_weak_supersolution
from .config import MODES, RunConfig, parse_config, parse_tokens
from .driver import refinement_study
from .errors import ConfigError, HardyBoundError, OutputError
from .geometry import geometry_report
from .nonlocal_core import build_grid
from .report import (
    BRACKET_COLUMNS,
    GEOMETRY_COLUMNS,
    ResultRecord,
    bracket_rows,
    emit_results,
    geometry_rows,
    read_witness,
    write_witness,
)
from .selftest import run_selftest
from .solver import DIVERGED, minimize_F_lambda

__all__ = ["main", "run", "NumericalFailure"]

log = logging.getLogger("hardybound")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3
THREADS_ENV = "HARDYBOUND_THREADS"
CERTIFY_MARGIN = 1e-6

# flag name -> config key
_FLAGS = {
    "s": float, "p": float, "n": int, "levels": str, "intervals": str, "rectangle": str,
    "alpha": float, "lambda": float, "witness": str, "ball_center": str, "ball_radius": float,
    "max_iters": int, "grad_tol": float, "step_initial": float, "step_shrink": float,
    "armijo": float, "memory": int, "lambda_min": float, "lambda_max": float,
    "max_bisections": int, "rel_gap_target": float, "output": str, "seed": int,
}
_STRUCTURED = {"levels", "intervals", "rectangle", "ball_center"}


class NumericalFailure(HardyBoundError):
    """The run completed but could not produce the requested certificate or bracket."""

    def __init__(self, message: str, record: ResultRecord | None = None):
        super().__init__(message)
        self.record = record


def _estimate(cfg: RunConfig) -> ResultRecord:
    rows, estimates = [], []
    for level, n in enumerate(cfg.levels):
        g = build_grid(cfg.domain, cfg.params, n)
        upper = upper_bound_rayleigh(default_trials(g), cfg.params)
        rows.append([level, g.n, g.spacing, None, upper.value, None, None])
        estimates.append({"n": g.n, "h": g.spacing, "lambda_hi": upper.value, "trial_index": upper.index})
    return ResultRecord("estimate", cfg.to_dict(), {"estimates": estimates}, BRACKET_COLUMNS, rows)


def _certify(cfg: RunConfig) -> ResultRecord:
    params, lam = cfg.params, cfg.lam
    g = build_grid(cfg.domain, params, cfg.n)
    if cfg.witness is not None:
        u = read_witness(cfg.witness, g)
        source = cfg.witness
    else:
        # a minimizer is stationary only to grad_tol; solving slightly above
        # lambda leaves a margin that absorbs that error
        for solve_lam in (lam * (1 + CERTIFY_MARGIN), lam):
            res = minimize_F_lambda(params, cfg.solver.with_lambda(solve_lam), g)
            if res.status != DIVERGED:
                break
        else:
            raise NumericalFailure(
                f"the energy is unbounded below at lambda={lam}: no supersolution exists there"
            )
        u = abs(res.minimizer)
        source = f"minimizer at lambda={solve_lam!r} ({res.status}, {res.iterations} iterations)"
    if not (u.values > 0).all():
        raise NumericalFailure("the witness is not strictly positive on every node")
    cert = certify_lower_bound(u, params)
    check = verify_weak_supersolution(u, lam, params)
    quotient = nc.hardy_quotient(u, params)
    result = {
        "lambda_lo": cert.lambda_lo,
        "lambda_hi": quotient,
        "gap": quotient - cert.lambda_lo,
        "n": g.n,
        "h": g.spacing,
        "s": params.s,
        "p": params.p,
        "domain": cfg.domain.to_dict(),
        "residuals": {"supersolution": cert.supersolution_residual, "picone": cert.picone_violation},
        "worst_node": cert.worst_node,
    }
    checks = {
        "lambda": lam,
        "supersolution_at_lambda": check.passed,
        "min_residual": check.minimum,
        "tolerance": check.tol,
        "worst_node": check.worst_node,
        "witness": source,
    }
    row = [0, g.n, g.spacing, cert.lambda_lo, quotient, quotient - cert.lambda_lo, check.minimum]
    record = ResultRecord("certify", cfg.to_dict(), result, BRACKET_COLUMNS, [row], checks=checks, witness=u)
    if not check.passed:
        raise NumericalFailure(
            f"witness is not a supersolution at lambda={lam} (min residual {check.minimum:.3g})", record
        )
    return record


def _bisect(cfg: RunConfig) -> ResultRecord:
    table = refinement_study(cfg.domain, cfg.params, cfg.bisect)
    checks = {
        "status": [b.status for b in table.brackets],
        "midpoint_differences": table.midpoint_differences,
    }
    record = ResultRecord("bisect", cfg.to_dict(), {"brackets": [b.to_dict() for b in table.brackets]},
                          BRACKET_COLUMNS, bracket_rows(table.brackets), checks=checks,
                          witness=table.brackets[-1].certificate.witness)
    if any(b.status == "inconclusive" for b in table.brackets):
        raise NumericalFailure("no probe was decisive; loosen the solver tolerances", record)
    return record


def _geometry(cfg: RunConfig) -> ResultRecord:
    rep = geometry_report(cfg.domain, cfg.alpha)
    return ResultRecord("geometry", cfg.to_dict(), rep.to_dict(), GEOMETRY_COLUMNS, geometry_rows(rep))


def _selftest(cfg: RunConfig) -> ResultRecord:
    results = run_selftest(cfg.seed)
    suites = {r.name: {"passed": r.passed, "detail": r.detail} for r in results}
    rows = [[r.name, "pass" if r.passed else "fail"] for r in results]
    record = ResultRecord("selftest", cfg.to_dict(), {"suites": suites}, ("suite", "verdict"), rows)
    if not all(r.passed for r in results):
        raise NumericalFailure("selftest failed: " + ", ".join(r.name for r in results if not r.passed), record)
    return record


RUNNERS = {"estimate": _estimate, "certify": _certify, "bisect": _bisect, "geometry": _geometry,
           "selftest": _selftest}


def run(cfg: RunConfig) -> ResultRecord:
    """Execute one configured run and return its record (wall time included)."""
    start = time.perf_counter()
    try:
        record = RUNNERS[cfg.mode](cfg)
    except NumericalFailure as exc:
        if exc.record is not None:
            exc.record.wall_time = time.perf_counter() - start
        raise
    record.wall_time = time.perf_counter() - start
    return record


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardybound", description="Certified bounds on discrete fractional Hardy constants.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", type=Path, help="TOML file (or whitespace-separated key=value tokens)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")
        sp.add_argument("-v", "--verbose", action="store_true")
        for key, kind in _FLAGS.items():
            dest = key.replace("_", "-")
            sp.add_argument(f"--{dest}", dest=key, type=kind, default=None,
                            help="TOML array, e.g. [[0,1],[2,4]]" if key in _STRUCTURED else None)
    return parser


def _overrides(args) -> dict:
    out = {}
    for key in _FLAGS:
        value = getattr(args, key)
        if value is None:
            continue
        out[key] = parse_tokens([f"{key}={value}"])[key] if key in _STRUCTURED else value
    out.update(parse_tokens(args.set))
    out["mode"] = args.mode
    return out


def _summary(record: ResultRecord) -> str:
    lines = [f"mode: {record.mode}"]
    if record.columns and record.rows:
        lines.append("  ".join(f"{c:>12}" for c in record.columns))
        for row in record.rows:
            lines.append("  ".join(f"{'' if v is None else f'{v:.6g}' if isinstance(v, float) else v:>12}" for v in row))
    return "\n".join(lines)


def _finish(record: ResultRecord, cfg: RunConfig) -> None:
    if cfg.output is None:
        if cfg.mode != "selftest":
            sys.stdout.write(record.to_json())
        return
    paths = emit_results(record, cfg.output)
    if record.witness is not None:
        stem = paths["json"].with_suffix("")
        paths["witness"] = write_witness(record.witness, stem.with_name(stem.name + ".witness.csv"))
    print(_summary(record))
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = int(os.environ.get(THREADS_ENV, "1"))
        if threads < 1:
            raise ValueError
    except ValueError:
        print(f"error: {THREADS_ENV} must be a positive integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        text = args.config.read_text() if args.config is not None else ""
        cfg = parse_config(text, _overrides(args))
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    with threadpool_limits(limits=threads):
        try:
            record = run(cfg)
        except NumericalFailure as exc:
            if exc.record is not None:
                _finish(exc.record, cfg)
            print(f"failure: {exc}", file=sys.stderr)
            return EXIT_SELFTEST if cfg.mode == "selftest" else EXIT_NUMERICAL
        except OutputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except HardyBoundError as exc:
            # invalid combinations detected during the run (ball outside the domain, bad witness, ...)
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except FloatingPointError as exc:
            print(f"failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
    try:
        _finish(record, cfg)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
