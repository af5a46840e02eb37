"""Per-trial rows, aggregate statistics and their serialization.

Trial rows are written as CSV with a fixed column order (``cell``, ``trial``,
``seed_path``, the grid parameters, then the study's measurements) and floats
printed by ``repr`` so a reload reproduces every value bit for bit. Aggregates
are a pure function of the rows and go to JSON; provenance holds a config
hash and the package version, never a timestamp.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

QUANTILES = (0.05, 0.5, 0.95)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _parse(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    slope_stderr: float
    r2: float
    n: int

    def to_dict(self) -> dict[str, float]:
        return {"slope": self.slope, "intercept": self.intercept, "slope_stderr": self.slope_stderr,
                "r2": self.r2, "n": self.n}


def fit_linear(x, y) -> LogLogFit:
    """Ordinary least squares ``y = a + b x`` with the slope's standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two points to fit")
    X = np.column_stack([np.ones(n), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    sxx = float(np.sum((x - x.mean()) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    se = math.sqrt(float(resid @ resid) / (n - 2) / sxx) if n > 2 and sxx > 0 else 0.0
    return LogLogFit(float(coef[1]), float(coef[0]), se, r2, n)


def fit_loglog(x, y) -> LogLogFit:
    """Slope of ``log y`` against ``log x``."""
    return fit_linear(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))


def summarize(values) -> dict[str, float]:
    v = np.asarray([x for x in values if x is not None], dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"n": 0}
    q = np.quantile(v, QUANTILES)
    return {"n": int(v.size), "mean": float(v.mean()), "median": float(q[1]),
            "q05": float(q[0]), "q50": float(q[1]), "q95": float(q[2])}


def sign_test_pvalue(diffs) -> tuple[float, int, int]:
    """One-sided sign test of ``P(diff < 0) > 1/2``; ties are dropped.

    Returns ``(p_value, n_negative, n_nonzero)``.
    """
    from scipy.stats import binomtest

    d = np.asarray(diffs, dtype=float)
    d = d[np.isfinite(d) & (d != 0)]
    k = int(np.sum(d < 0))
    if d.size == 0:
        return 1.0, 0, 0
    return float(binomtest(k, d.size, 0.5, alternative="greater").pvalue), k, int(d.size)


@dataclass(eq=False)
class ExperimentReport:
    study: str
    columns: list[str]
    rows: list[dict[str, Any]]
    aggregates: dict[str, Any]
    provenance: dict[str, Any]
    findings: list[str] = field(default_factory=list)
    collapse: list[tuple[float, float]] | None = None

    # --- CSV ---------------------------------------------------------------------
    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def aggregate_json(self) -> str:
        doc = {"study": self.study, "aggregates": self.aggregates, "provenance": self.provenance,
               "findings": self.findings}
        return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir, prefix: str | None = None) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        prefix = prefix or self.study
        paths = [out / f"{prefix}_trials.csv", out / f"{prefix}_aggregate.json"]
        paths[0].write_text(self.trials_csv())
        paths[1].write_text(self.aggregate_json())
        if self.collapse is not None:
            p = out / f"{prefix}_collapse.dat"
            lines = ["# x y"] + [f"{x!r} {y!r}" for x, y in self.collapse]
            p.write_text("\n".join(lines) + "\n")
            paths.append(p)
        return paths


def read_trials_csv(path_or_text) -> tuple[list[str], list[dict[str, Any]]]:
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text()
    rd = csv.reader(io.StringIO(text))
    cols = next(rd)
    rows = [{c: _parse(v) for c, v in zip(cols, line)} for line in rd]
    return cols, rows


def _clean(obj):
    """JSON-safe copy: non-finite floats become None, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def group_rows(rows: list[dict[str, Any]]) -> dict[int, list[dict[str, Any]]]:
    out: dict[int, list[dict[str, Any]]] = {}
    for r in rows:
        out.setdefault(int(r["cell"]), []).append(r)
    return dict(sorted(out.items()))


