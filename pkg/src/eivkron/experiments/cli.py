"""Command-line entry point: ``eivkron {simulate,fit,check,study}``.

Exit codes: 0 success, 1 usage error, 2 invalid config or input, 3 the
study reported assertion-violation findings.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..conditions import (ConditionCertificate, ConditionKind, Status, check_lower_re, check_upper_re,
                          lq_sensitivity, re_constant, sparse_eig)
from ..errors import EivkronError, InvalidConfig
from ..estimators import gram_from_data, solve_conic, solve_lasso
from ..rng import RngStream
from ..simulate import draw_instance, read_matrix_csv, read_vector_csv, write_bundle
from .config import _parse_text, load_config
from .studies import resolve_threads, run_study, trial_stream

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_FINDINGS = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _read_table(path) -> dict[str, Any]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {p}: {exc}") from exc
    fmt = "json" if p.suffix.lower() == ".json" or text.lstrip().startswith("{") else "toml"
    doc = _parse_text(text, fmt)
    if not isinstance(doc, dict):
        raise InvalidConfig(f"{p}: config root must be a table/object")
    return doc


def _section(doc: dict, name: str) -> dict[str, Any]:
    """``doc[name]`` if present, else the flat top level."""
    sec = doc.get(name, doc)
    if not isinstance(sec, dict):
        raise InvalidConfig(f"section [{name}] must be a table")
    return sec


def _number(sec: dict, key: str, default=None, *, positive=False, nonneg=False, where=""):
    v = sec.get(key, default)
    if v is None:
        raise InvalidConfig(f"field '{where}{key}': required")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise InvalidConfig(f"field '{where}{key}': must be a number, got {v!r}")
    if positive and not v > 0:
        raise InvalidConfig(f"field '{where}{key}': must be > 0")
    if nonneg and v < 0:
        raise InvalidConfig(f"field '{where}{key}': must be >= 0")
    return v


# --- subcommands ----------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = load_config(args.config).with_overrides(seed=args.seed)
    cells = cfg.cells()
    if not 0 <= args.cell < len(cells):
        raise InvalidConfig(f"--cell {args.cell}: config has {len(cells)} cell(s)")
    cell = cells[args.cell]
    st = trial_stream(cfg, cell.index, args.trial)
    inst = draw_instance(cell.A, cell.B, cell.d, cell.scheme, float(cell["beta_magnitude"]) if cell.d else 0.0,
                         float(cell["M_eps"]), cell.dist, st)
    inst.meta.update(trace_A=cell.A.trace, tau_B=cell.tau_B, cell=cell.index, trial=args.trial)
    for p in write_bundle(inst, args.out):
        print(p)
    return EXIT_OK


def _cmd_fit(args) -> int:
    X = read_matrix_csv(args.X)
    y = read_vector_csv(args.y)
    doc = _read_table(args.config)
    sec = _section(doc, "fit")
    w = "fit." if "fit" in doc else ""
    trace_A = args.trace_A if args.trace_A is not None else _number(sec, "trace_A", positive=True, where=w)
    gp = gram_from_data(X, y, float(trace_A))
    tol = float(_number(sec, "tol", 1e-7, positive=True, where=w))
    if args.estimator == "lasso":
        lam = _number(sec, "lambda", positive=True, where=w)
        if "radius" in sec:
            radius = _number(sec, "radius", nonneg=True, where=w)
        else:
            radius = _number(sec, "b0", positive=True, where=w) * np.sqrt(_number(sec, "d", nonneg=True, where=w))
        res = solve_lasso(gp, float(lam), float(radius), tol=tol)
    else:
        lam = _number(sec, "conic_lambda", 1.0, positive=True, where=w)
        mu = _number(sec, "mu", positive=True, where=w)
        tau = _number(sec, "tau", nonneg=True, where=w)
        res = solve_conic(gp, float(lam), float(mu), float(tau), tol=tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "beta_hat.csv", res.beta_hat.reshape(-1, 1), delimiter=",", fmt="%.17g")
    doc_out = dict(res.to_dict(), estimator=args.estimator, tau_B_hat=gp.tau_B_hat, version=__version__)
    (out / "result.json").write_text(json.dumps(doc_out, indent=2, sort_keys=True) + "\n")
    print(out / "beta_hat.csv")
    print(out / "result.json")
    return EXIT_OK


def _check(M: np.ndarray, sec: dict) -> ConditionCertificate:
    try:
        kind = ConditionKind(sec.get("kind"))
    except ValueError:
        raise InvalidConfig(f"field 'kind': expected one of {[k.value for k in ConditionKind]}, "
                            f"got {sec.get('kind')!r}") from None
    if kind is ConditionKind.LOWER_RE:
        return check_lower_re(M, _number(sec, "alpha", positive=True), _number(sec, "tau", nonneg=True))
    if kind is ConditionKind.UPPER_RE:
        return check_upper_re(M, _number(sec, "alpha_bar", positive=True), _number(sec, "tau", nonneg=True))
    if kind is ConditionKind.SPARSE_EIG:
        d = int(_number(sec, "d", positive=True))
        r = sparse_eig(M, d, mode=sec.get("mode", "quadratic"), budget=int(sec.get("budget", 10**5)))
        status = Status.VERIFIED_EXACT if r.exact else Status.VERIFIED_SAMPLED
        return ConditionCertificate(kind, status, {"d": d, "mode": sec.get("mode", "quadratic"),
                                                   "rho_min": r.rho_min, "rho_max": r.rho_max},
                                    n_samples=r.n_supports,
                                    detail={"argmin": list(r.argmin), "argmax": list(r.argmax)})
    if kind is ConditionKind.RE:
        s0 = int(_number(sec, "s0", positive=True))
        k0 = float(_number(sec, "k0", positive=True))
        est = re_constant(M, s0, k0, seed=int(sec.get("seed", 0)))
        return ConditionCertificate(kind, est.status, {"s0": s0, "k0": k0, "K_est": est.K_est, "inv_K": est.inv_K},
                                    witness=est.witness, n_samples=est.n_supports,
                                    detail=dict(est.detail, exhaustive_supports=est.exhaustive_supports))
    return lq_sensitivity(M, int(_number(sec, "d0", positive=True)), float(_number(sec, "k0", positive=True)),
                          float(_number(sec, "q", 1.0, positive=True)), int(sec.get("n_samples", 2000)),
                          stream=RngStream(int(sec.get("seed", 0))))


def _cmd_check(args) -> int:
    M = read_matrix_csv(args.matrix)
    doc = _read_table(args.config)
    cert = _check(M, _section(doc, "condition"))
    text = cert.to_json(indent=2) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_study(args) -> int:
    cfg = load_config(args.config).with_overrides(seed=args.seed, quick=args.quick)
    report = run_study(cfg, resolve_threads(args.threads))
    for p in report.write(args.out, cfg.output.get("prefix") or cfg.kind):
        print(p)
    for f in report.findings:
        print(f"FINDING: {f}", file=sys.stderr)
    return EXIT_FINDINGS if report.findings else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eivkron", description="Errors-in-variables sparse regression toolkit.")
    p.add_argument("--version", action="version", version=f"eivkron {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="draw one instance and write an X/y/beta CSV bundle")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--cell", type=int, default=0)
    s.add_argument("--trial", type=int, default=0)

    s = sub.add_parser("fit", help="fit an estimator to X.csv / y.csv")
    s.add_argument("--X", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--estimator", choices=("lasso", "conic"), default="lasso")
    s.add_argument("--config", required=True)
    s.add_argument("--trace-A", dest="trace_A", type=float)
    s.add_argument("--out", default=".")

    s = sub.add_parser("check", help="run a condition check on a matrix CSV")
    s.add_argument("--matrix", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out")

    s = sub.add_parser("study", help="run a Monte Carlo study")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default="out")
    s.add_argument("--quick", action="store_true", help="quarter the trial counts")
    s.add_argument("--threads", type=int, default=1)
    return p


_COMMANDS = {"simulate": _cmd_simulate, "fit": _cmd_fit, "check": _cmd_check, "study": _cmd_study}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        print(parser.format_help(), file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "config", None) and not Path(args.config).exists():
        print(f"eivkron: error: config not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except InvalidConfig as exc:
        print(f"eivkron: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EivkronError, ValueError, OSError) as exc:
        print(f"eivkron: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli_main())
