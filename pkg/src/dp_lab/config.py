"""Experiment specifications: parsing, validation and config files.

A config file is either JSON (an object) or flat ``key = value`` text::

    # comments and blank lines are ignored
    command = verify-hgamma
    k = 1
    base = 0.5*uniform(0,1) + 0.5*atom(0.2)
    gamma_grid = 2, 1, 0.5

Keys are :class:`ExperimentSpec` field names (``-`` and ``_`` are
interchangeable).  Values use the same syntax as the command-line flags.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
import secrets
from dataclasses import dataclass
from pathlib import Path

from .discreteness import DEFAULT_GAMMA_GRID, DEFAULT_TRUNC_LADDER
from .harness import FunctionSpec
from .measure import BaseMeasure, ContinuousSpec, Location

COMMANDS = ("sample-sticks", "sample-urn", "verify-hgamma", "verify-lemma", "atom-density",
            "certificate")
FORMATS = ("csv", "json")

BASE_SHORTHANDS = {
    "uniform": "uniform(0,1)",
    "normal": "normal(0,1)",
    "atomic": "atom(0.2)",
    "mixed": "0.5*uniform(0,1)+0.5*atom(0.2)",
}
DEFAULT_FUNCTIONS = ("constant:1", "power:1", "set:0:0.5", "indicator:0:0.5:0.25:0.75")


class SpecError(ValueError):
    """An invalid experiment specification; ``field`` names the culprit."""

    def __init__(self, field: str | None, message: str, line: int | None = None):
        self.field = field
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)

    def to_dict(self) -> dict:
        d = {"error": str(self)}
        if self.field is not None:
            d["field"] = self.field
        if self.line is not None:
            d["line"] = self.line
        return d


_TERM = re.compile(r"^(?:(?P<w>[^*]+)\*)?\s*(?P<kind>uniform|normal|atom)\s*\((?P<args>[^)]*)\)$")


def parse_base(text: str) -> BaseMeasure:
    """Parse a base-measure expression such as ``0.5*uniform(0,1)+0.5*atom(0.2)``.

    Shorthands: ``uniform``, ``normal``, ``atomic`` (``atom(0.2)``) and ``mixed``.
    Atoms get origin ids ``0, 1, ...`` in order of appearance.
    """
    src = BASE_SHORTHANDS.get(text.strip(), text)
    terms = [t.strip() for t in src.replace(" ", "").split("+") if t.strip()]
    if not terms:
        raise ValueError("empty base measure")
    cont, cw, atoms = None, 0.0, []
    for t in terms:
        m = _TERM.match(t)
        if not m:
            raise ValueError(f"cannot parse base term {t!r}")
        w = float(m["w"]) if m["w"] else (1.0 if len(terms) == 1 else None)
        if w is None:
            raise ValueError(f"term {t!r} needs an explicit weight")
        args = [float(a) for a in m["args"].split(",") if a]
        if m["kind"] == "atom":
            if len(args) != 1:
                raise ValueError(f"atom takes one location, got {t!r}")
            atoms.append((Location(args[0], len(atoms)), w))
        else:
            if cont is not None:
                raise ValueError("at most one continuous term is supported")
            if len(args) != 2:
                raise ValueError(f"{m['kind']} takes two parameters, got {t!r}")
            cont, cw = ContinuousSpec(m["kind"], tuple(args)), w
    return BaseMeasure(cw, cont or ContinuousSpec(), tuple(atoms))


def parse_function(text: str) -> FunctionSpec:
    """``constant:c``, ``power:gamma``, ``set:lo:hi`` or ``indicator:alo:ahi:blo:bhi``."""
    name, *args = text.strip().split(":")
    try:
        vals = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"bad function arguments in {text!r}") from None
    shapes = {"constant": 1, "power": 1, "set": 2, "indicator": 4}
    if name not in shapes or len(vals) != shapes[name]:
        raise ValueError(f"cannot parse function {text!r}")
    if name == "constant":
        return FunctionSpec.constant(vals[0])
    if name == "power":
        return FunctionSpec.atom_mass_power(vals[0])
    if name == "set":
        return FunctionSpec.set_mass(vals)
    return FunctionSpec.set_mass_indicator(vals[:2], vals[2:])


def _floats(value) -> tuple[float, ...]:
    if isinstance(value, str):
        value = [v for v in re.split(r"[,\s]+", value.strip()) if v]
    return tuple(float(v) for v in value)


def _intervals(value) -> tuple[tuple[float, float], ...]:
    if isinstance(value, str):
        value = [v.split(":") for v in re.split(r"[,\s]+", value.strip()) if v]
    out = tuple(tuple(float(x) for x in iv) for iv in value)
    if any(len(iv) != 2 for iv in out):
        raise ValueError("intervals are lo:hi pairs")
    return out


def _integer(value) -> int:
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            value = float(value)  # accept 1e4
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"{value!r} is not an integer")
    return int(value)


def _functions(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = DEFAULT_FUNCTIONS if value.strip() == "all" else value.split(";")
    out = tuple(v.strip() for v in value if v.strip())
    for f in out:
        parse_function(f)
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a run depends on; a run is a pure function of this record."""

    command: str
    k: float = 1.0
    base: str = "uniform"
    gamma: float = 1.0
    gamma_grid: tuple[float, ...] = DEFAULT_GAMMA_GRID
    reps: int = 10_000
    trunc_eps: float = 1e-10
    seed: int | None = None
    output: str | None = None
    format: str = "json"
    n: int = 10
    functions: tuple[str, ...] = DEFAULT_FUNCTIONS
    intervals: tuple[tuple[float, float], ...] = ((0.4, 0.6),)
    ladder: tuple[float, ...] = DEFAULT_TRUNC_LADDER

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = [list(v) if isinstance(v, tuple) else v for v in val]
        return d

    def with_seed(self) -> ExperimentSpec:
        """Fill a missing seed from system entropy (recorded by the manifest)."""
        if self.seed is not None:
            return self
        return dataclasses.replace(self, seed=secrets.randbits(64))

    def base_measure(self) -> BaseMeasure:
        return parse_base(self.base)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentSpec)}
_CONVERT = {
    "command": str, "k": float, "base": str, "gamma": float, "gamma_grid": _floats,
    "reps": _integer, "trunc_eps": float, "seed": _integer, "output": str, "format": str,
    "n": _integer,
    "functions": _functions, "intervals": _intervals, "ladder": _floats,
}


def convert_value(key: str, value, line: int | None = None):
    if key in ("seed", "output") and value is None:
        return None
    try:
        return _CONVERT[key](value)
    except (TypeError, ValueError) as exc:
        raise SpecError(key, f"invalid value for {key}: {exc}", line) from None


def _normalize_key(key: str, line: int | None = None) -> str:
    name = key.strip().replace("-", "_")
    if name not in _FIELDS:
        raise SpecError(key.strip(), f"unknown key {key.strip()!r}", line)
    return name


def parse_config_text(text: str) -> dict:
    """Parse config text (JSON object or ``key = value`` lines) into typed fields."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(None, f"JSON parse error: {exc.msg}", exc.lineno) from None
        if not isinstance(raw, dict):
            raise SpecError(None, "JSON config must be an object")
        return {_normalize_key(k): convert_value(_normalize_key(k), v) for k, v in raw.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise SpecError(None, f"expected 'key = value', got {body!r}", lineno)
        key, value = body.split("=", 1)
        name = _normalize_key(key, lineno)
        if name in out:
            raise SpecError(name, f"duplicate key {name!r}", lineno)
        out[name] = convert_value(name, value.strip(), lineno)
    return out


def validate(spec: ExperimentSpec) -> ExperimentSpec:
    """Range-check every field; raises :class:`SpecError` naming the field."""
    def need(ok, name, msg):
        if not ok:
            raise SpecError(name, f"{name}: {msg}")

    need(spec.command in COMMANDS, "command", f"must be one of {', '.join(COMMANDS)}")
    need(spec.k > 0 and math.isfinite(spec.k), "k", "must be a finite positive real")
    try:
        spec.base_measure()
    except ValueError as exc:
        raise SpecError("base", f"base: {exc}") from None
    need(spec.gamma >= 0 and math.isfinite(spec.gamma), "gamma", "must be finite and >= 0")
    grid = spec.gamma_grid
    need(len(grid) > 0 and all(g > 0 and math.isfinite(g) for g in grid), "gamma_grid",
         "must be non-empty and strictly positive")
    need(all(b < a for a, b in zip(grid, grid[1:])), "gamma_grid", "must be strictly decreasing")
    need(spec.reps >= 2, "reps", "must be >= 2")
    need(0 < spec.trunc_eps < 1, "trunc_eps", "must lie in (0, 1)")
    need(spec.seed is None or 0 <= spec.seed < 2**64, "seed", "must be a 64-bit unsigned integer")
    need(spec.format in FORMATS, "format", "must be csv or json")
    need(spec.n >= 1, "n", "must be >= 1")
    need(len(spec.functions) > 0, "functions", "must name at least one function")
    need(len(spec.intervals) > 0 and all(lo < hi for lo, hi in spec.intervals), "intervals",
         "must be non-empty lo:hi pairs with lo < hi")
    need(all(0 < e < 1 for e in spec.ladder), "ladder", "entries must lie in (0, 1)")
    return spec


def build_spec(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentSpec:
    """Merge defaults, file values and flag overrides (flags win), then validate."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "command" not in values:
        raise SpecError("command", "command is required")
    return validate(ExperimentSpec(**values))


def config_load(path, overrides: dict | None = None) -> ExperimentSpec:
    """Load a config file and apply flag overrides on top of it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(None, f"cannot read config {path}: {exc.strerror}") from None
    return build_spec(parse_config_text(text), overrides)
