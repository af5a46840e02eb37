"""Study configuration: parsing, validation and grid expansion.

A config is a TOML or JSON document with the sections

``[study]``
    ``kind`` (one of :data:`STUDY_KINDS`), ``trials`` and ``seed``.
``[model]``
    Defaults for every cell: ``A`` and ``B`` covariance specs
    (``{family, rho, first_row, matrix, scale}``), ``normalize_A`` (trace of
    ``A`` set to ``m``, default true), ``tau_B`` (rescales ``B`` so that
    ``tr(B)/f == tau_B``), ``f``, ``m``, ``d``, ``M_eps``, ``distribution``,
    ``K``, ``beta_scheme``, ``beta_magnitude``.
``[grid]``
    Lists of values for any model scalar (``A_rho`` and ``B_rho`` set the
    ``rho`` of ``A``/``B``); cells are the cartesian product in the order
    given. ``cells = [{...}, ...]`` adds explicit, non-cartesian settings.
``[penalties]``
    ``mode`` or ``modes``, ``conic_lambda``, ``b0_rule``, ``pilot_trials``,
    ``lambda_quantile``, ``conic_quantile``.
``[constants]``
    ``C``, ``C0``, ``C6``.
``[options]``
    Study-specific knobs.
``[output]``
    ``prefix`` and ``collapse`` (write a ``.dat`` collapse table).
"""
from __future__ import annotations

import copy
import hashlib
import itertools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..covariance import CovarianceModel, build_covariance, from_spec, normalize_trace
from ..errors import EivkronError, InvalidConfig
from ..simulate import BetaScheme, EntryDistribution

STUDY_KINDS = ("trace", "noise_event", "rate", "theorem_main", "psd", "sparse_eig", "re_transfer")
SECTIONS = ("study", "model", "grid", "penalties", "constants", "options", "output")
PENALTY_MODES = ("baseline", "oracle", "empirical")

MODEL_DEFAULTS: dict[str, Any] = {
    "A": {"family": "identity"},
    "B": {"family": "identity"},
    "normalize_A": True,
    "tau_B": None,
    "f": 200,
    "m": 50,
    "d": 4,
    "M_eps": 0.5,
    "distribution": "gaussian",
    "K": 1.0,
    "beta_scheme": "unit_equal",
    "beta_magnitude": 1.0,
}
PENALTY_DEFAULTS: dict[str, Any] = {
    "mode": "empirical",
    "modes": None,
    "conic_lambda": 1.0,
    "b0_rule": "truth",
    "pilot_trials": 200,
    "lambda_quantile": 0.95,
    "conic_quantile": 0.99,
}
CONSTANT_DEFAULTS: dict[str, Any] = {"C": 1.0, "C0": 1.0, "C6": None}
_SCALAR_GRID_KEYS = set(MODEL_DEFAULTS) - {"A", "B"} | {"A_rho", "B_rho"}
# study-specific grid parameters (support size zeta, sparsity k, ...)
_STUDY_GRID_KEYS = {"zeta", "k", "b0"}


@dataclass(frozen=True, eq=False)
class Cell:
    """One fully specified simulation setting."""

    index: int
    values: dict[str, Any]
    A: CovarianceModel
    B: CovarianceModel
    dist: EntryDistribution
    scheme: BetaScheme

    def __getitem__(self, key):
        return self.values[key]

    @property
    def f(self) -> int:
        return int(self.values["f"])

    @property
    def m(self) -> int:
        return int(self.values["m"])

    @property
    def d(self) -> int:
        return int(self.values["d"])

    @property
    def tau_B(self) -> float:
        return self.B.trace / self.f


@dataclass(eq=False)
class StudyConfig:
    kind: str
    trials: int
    seed: int
    model: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    penalties: dict[str, Any] = field(default_factory=dict)
    constants: dict[str, Any] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)
    output: dict[str, Any] = field(default_factory=dict)

    # --- construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "StudyConfig":
        if not isinstance(raw, dict):
            raise InvalidConfig("config root must be a table/object")
        unknown = set(raw) - set(SECTIONS)
        if unknown:
            raise InvalidConfig(f"unknown section(s): {', '.join(sorted(unknown))}")
        for sec in SECTIONS:
            if sec in raw and not isinstance(raw[sec], dict):
                raise InvalidConfig(f"section [{sec}] must be a table")
        study = raw.get("study", {})
        kind = study.get("kind")
        if kind not in STUDY_KINDS:
            raise InvalidConfig(f"field 'study.kind': expected one of {STUDY_KINDS}, got {kind!r}")
        trials = study.get("trials")
        if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
            raise InvalidConfig(f"field 'study.trials': must be a positive integer, got {trials!r}")
        seed = study.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise InvalidConfig(f"field 'study.seed': must be a non-negative integer, got {seed!r}")
        extra = set(study) - {"kind", "trials", "seed"}
        if extra:
            raise InvalidConfig(f"unknown field(s) in [study]: {', '.join(sorted(extra))}")

        model = dict(copy.deepcopy(MODEL_DEFAULTS), **copy.deepcopy(raw.get("model", {})))
        bad = set(model) - set(MODEL_DEFAULTS)
        if bad:
            raise InvalidConfig(f"unknown field(s) in [model]: {', '.join(sorted(bad))}")
        penalties = dict(PENALTY_DEFAULTS, **raw.get("penalties", {}))
        bad = set(penalties) - set(PENALTY_DEFAULTS)
        if bad:
            raise InvalidConfig(f"unknown field(s) in [penalties]: {', '.join(sorted(bad))}")
        constants = dict(CONSTANT_DEFAULTS, **raw.get("constants", {}))
        bad = set(constants) - set(CONSTANT_DEFAULTS)
        if bad:
            raise InvalidConfig(f"unknown field(s) in [constants]: {', '.join(sorted(bad))}")
        cfg = cls(kind, trials, seed, model, copy.deepcopy(raw.get("grid", {})), penalties, constants,
                  copy.deepcopy(raw.get("options", {})), dict({"prefix": kind, "collapse": False},
                                                              **raw.get("output", {})))
        cfg._validate()
        return cfg

    def _validate(self) -> None:
        for key, val in self.grid.items():
            if key == "cells":
                if not isinstance(val, list) or not val or not all(isinstance(c, dict) for c in val):
                    raise InvalidConfig("field 'grid.cells': must be a non-empty list of tables")
                for c in val:
                    bad = set(c) - _SCALAR_GRID_KEYS - _STUDY_GRID_KEYS
                    if bad:
                        raise InvalidConfig(f"field 'grid.cells': unknown key(s) {sorted(bad)}")
                continue
            if key not in _SCALAR_GRID_KEYS | _STUDY_GRID_KEYS:
                raise InvalidConfig(f"field 'grid.{key}': not a grid parameter")
            if not isinstance(val, list) or not val:
                raise InvalidConfig(f"field 'grid.{key}': must be a non-empty list")
        modes = self.modes
        for mode in modes:
            if mode not in PENALTY_MODES:
                raise InvalidConfig(f"field 'penalties.mode': unknown mode {mode!r}")
        for key in ("conic_lambda", "lambda_quantile", "conic_quantile"):
            v = self.penalties[key]
            if not isinstance(v, (int, float)) or not v > 0:
                raise InvalidConfig(f"field 'penalties.{key}': must be a positive number")
        pt = self.penalties["pilot_trials"]
        if not isinstance(pt, int) or pt < 1:
            raise InvalidConfig("field 'penalties.pilot_trials': must be a positive integer")
        for key in ("C", "C0"):
            v = self.constants[key]
            if not isinstance(v, (int, float)) or not v > 0:
                raise InvalidConfig(f"field 'constants.{key}': must be a positive number")
        try:
            self.cells()
        except InvalidConfig:
            raise
        except (EivkronError, KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"[model]/[grid]: cannot build a cell: {exc}") from exc

    # --- derived values -----------------------------------------------------------
    @property
    def modes(self) -> list[str]:
        m = self.penalties.get("modes")
        return list(m) if m else [self.penalties["mode"]]

    def with_overrides(self, seed: int | None = None, quick: bool = False) -> "StudyConfig":
        out = copy.deepcopy(self)
        if seed is not None:
            if seed < 0:
                raise InvalidConfig("field 'seed': must be non-negative")
            out.seed = int(seed)
        if quick:
            out.trials = max(1, out.trials // 4)
            out.penalties["pilot_trials"] = max(1, out.penalties["pilot_trials"] // 4)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"study": {"kind": self.kind, "trials": self.trials, "seed": self.seed},
                "model": self.model, "grid": self.grid, "penalties": self.penalties,
                "constants": self.constants, "options": self.options, "output": self.output}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def grid_keys(self) -> list[str]:
        keys = [k for k in self.grid if k != "cells"]
        for c in self.grid.get("cells", []):
            for k in c:
                if k not in keys:
                    keys.append(k)
        return keys

    def cell_values(self) -> list[dict[str, Any]]:
        cart = [k for k in self.grid if k != "cells"]
        explicit = self.grid.get("cells") or [{}]
        out = []
        for base in explicit:
            for combo in itertools.product(*(self.grid[k] for k in cart)):
                out.append(dict(base, **dict(zip(cart, combo))))
        return out

    def cells(self) -> list[Cell]:
        return [self._build_cell(i, v) for i, v in enumerate(self.cell_values())]

    def _build_cell(self, index: int, overrides: dict[str, Any]) -> Cell:
        vals = {k: v for k, v in self.model.items() if k not in ("A", "B")}
        vals.update({k: v for k, v in overrides.items() if k not in ("A_rho", "B_rho")})
        for key in ("f", "m", "d"):
            v = vals[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if key == "d" else 1):
                raise InvalidConfig(f"field '{key}': must be an integer >= {0 if key == 'd' else 1}, got {v!r}")
        if vals["d"] > vals["m"]:
            raise InvalidConfig(f"cell {index}: d={vals['d']} exceeds m={vals['m']}")
        if float(vals["M_eps"]) < 0:
            raise InvalidConfig("field 'M_eps': must be >= 0")
        A_spec = dict(self.model["A"])
        B_spec = dict(self.model["B"])
        if "A_rho" in overrides:
            A_spec["rho"] = overrides["A_rho"]
        if "B_rho" in overrides:
            B_spec["rho"] = overrides["B_rho"]
        m, f = vals["m"], vals["f"]
        A = from_spec(A_spec, m)
        if vals.get("normalize_A", True):
            A = normalize_trace(A, float(m))
        tau_B = vals.get("tau_B")
        if tau_B is not None:
            if float(tau_B) < 0:
                raise InvalidConfig("field 'tau_B': must be >= 0")
            if float(tau_B) == 0:
                rest = {k: v for k, v in B_spec.items() if k not in ("family", "scale", "normalize_trace")}
                B = build_covariance(B_spec.get("family", "identity"), f, **rest, scale=0.0)
            else:
                B = normalize_trace(from_spec(B_spec, f), float(tau_B) * f)
        else:
            B = from_spec(B_spec, f)
        vals["tau_B"] = B.trace / f
        try:
            dist = EntryDistribution.parse({"kind": vals["distribution"], "K": vals["K"]})
            scheme = BetaScheme(vals["beta_scheme"])
        except ValueError as exc:
            raise InvalidConfig(f"cell {index}: {exc}") from exc
        for k in ("A_rho", "B_rho"):
            if k in overrides:
                vals[k] = overrides[k]
        return Cell(index, vals, A, B, dist, scheme)


def _parse_text(text: str, fmt: str) -> dict[str, Any]:
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfig(f"TOML parse error: {exc}") from exc


def load_config(path) -> StudyConfig:
    """Read a TOML (``.toml``) or JSON (anything else starting with ``{``) config."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {p}: {exc}") from exc
    fmt = "json" if p.suffix.lower() == ".json" or text.lstrip().startswith("{") else "toml"
    return StudyConfig.from_dict(_parse_text(text, fmt))


def loads_config(text: str, fmt: str = "toml") -> StudyConfig:
    return StudyConfig.from_dict(_parse_text(text, fmt))


def default_config_path(name: str) -> Path:
    """Path of a bundled default config, e.g. ``default_config_path("rate")``."""
    from importlib.resources import files

    p = Path(str(files("eivkron") / "configs" / f"{name}.toml"))
    if not p.is_file():
        raise InvalidConfig(f"no bundled config named {name!r}")
    return p
