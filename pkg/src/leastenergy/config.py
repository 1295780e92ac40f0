"""Run configuration: an INI-style file with sections.

    [problem]    N, p, nonlinearity, optional m
    [params]     keyword parameters of the nonlinearity (e.g. q, r)
    [grid]       L, n
    [solver]     any SolverConfig field; center is a comma list
    [verify]     threshold overrides by verdict name, plus directions
    [oracle]     u0_lo, u0_hi, dr, r_max, tol
    [output]     dir, format (json | csv | both)

Every error is a ConfigError carrying the 1-based line it refers to.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, LeastEnergyError
from .field import Grid
from .functionals import ProblemSpec
from .nonlinearity import make
from .solver import SolverConfig
from .verify import DEFAULT_THRESHOLDS

FORMATS = ("json", "csv", "both")
SECTIONS = ("problem", "params", "grid", "solver", "verify", "oracle", "output")
ORACLE_DEFAULTS = {"u0_lo": 1.01, "u0_hi": 10.0, "dr": 1e-3, "r_max": 30.0, "tol": 1e-15}


@dataclass
class RunConfig:
    problem: ProblemSpec
    grid: Grid
    solver: SolverConfig
    thresholds: dict = field(default_factory=dict)
    directions: int = 3
    oracle: dict = field(default_factory=lambda: dict(ORACLE_DEFAULTS))
    output_dir: Path = Path("out")
    format: str = "csv"
    source: str | None = None

    def with_overrides(self, seed: int | None = None, out: str | None = None,
                       threads: int | None = None) -> "RunConfig":
        solver = self.solver
        if seed is not None:
            solver = dataclasses.replace(solver, seed=seed)
        if threads is not None:
            solver = dataclasses.replace(solver, workers=threads)
        return dataclasses.replace(self, solver=solver,
                                   output_dir=Path(out) if out is not None else self.output_dir)

    def to_dict(self) -> dict:
        """Normalized, JSON-ready view (used in result artifacts)."""
        nl = self.problem.nonlinearity
        solver = dataclasses.asdict(self.solver)
        solver["center"] = None if self.solver.center is None else list(self.solver.center)
        return {
            "problem": {"N": self.problem.N, "p": self.problem.p, "m": nl.m,
                        "nonlinearity": nl.name, "params": dict(nl.params)},
            "grid": {"L": self.grid.half_extent, "n": self.grid.cells},
            "solver": solver,
            "verify": {"thresholds": dict(sorted(self.thresholds.items())),
                       "directions": self.directions},
            "format": self.format,
        }


class _Lines:
    """Map (section, key) to the line where it is defined."""

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = None
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line[0] in "#;":
                continue
            m = re.match(r"\[([^\]]+)\]", line)
            if m:
                current = m.group(1).strip().lower()
                self.sections.setdefault(current, no)
                continue
            m = re.match(r"([^=:]+)[=:]", line)
            if m and current is not None:
                self.keys.setdefault((current, m.group(1).strip().lower()), no)

    def of(self, section: str, key: str | None = None) -> int | None:
        if key is None:
            return self.sections.get(section)
        return self.keys.get((section, key), self.sections.get(section))


def _parser_error(exc: configparser.Error) -> ConfigError:
    line = getattr(exc, "lineno", None)
    if line is None and isinstance(exc, configparser.ParsingError) and exc.errors:
        line = exc.errors[0][0]
    msg = getattr(exc, "message", str(exc)).splitlines()[0]
    return ConfigError(msg, line)


def _number(sec, key, lines, kind=float):
    raw = sec[key]
    try:
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if kind is bool:
            return {"true": True, "yes": True, "1": True, "on": True,
                    "false": False, "no": False, "0": False, "off": False}[raw.strip().lower()]
        return float(raw)
    except (ValueError, KeyError):
        raise ConfigError(f"{key} = {raw!r} is not a valid {kind.__name__}",
                          lines.of(sec.name, key)) from None


_SOLVER_TYPES = {f.name: f.type for f in dataclasses.fields(SolverConfig)}


def _solver_value(sec, key, lines):
    t = _SOLVER_TYPES[key]
    if t == "int":
        return _number(sec, key, lines, int)
    if t == "float":
        return _number(sec, key, lines, float)
    if t == "bool":
        return _number(sec, key, lines, bool)
    if key == "center":
        try:
            return tuple(float(x) for x in sec[key].split(","))
        except ValueError:
            raise ConfigError(f"center must be a comma-separated list of numbers",
                              lines.of("solver", key)) from None
    raw = sec[key].strip()
    return None if raw.lower() == "none" else raw


def _unknown_keys(sec, allowed, lines):
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{sec.name}]; allowed: {sorted(allowed)}",
                              lines.of(sec.name, key))


def parse_config(text: str, source: str | None = None) -> RunConfig:
    lines = _Lines(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise _parser_error(exc) from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]; allowed: {list(SECTIONS)}", lines.of(name))
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section", 1)

    prob = cp["problem"]
    _unknown_keys(prob, {"n", "p", "m", "nonlinearity"}, lines)
    for key in ("n", "p", "nonlinearity"):
        if key not in prob:
            raise ConfigError(f"[problem] needs key {key!r}", lines.of("problem"))
    N = _number(prob, "n", lines, int)
    p = _number(prob, "p", lines, float)
    if N < 2:
        raise ConfigError(f"N must be >= 2, got {N}", lines.of("problem", "n"))
    if not 1 < p <= N:
        raise ConfigError(f"exponent must satisfy 1 < p <= N, got p={p:g}, N={N}",
                          lines.of("problem", "p"))
    params = {}
    if cp.has_section("params"):
        for key in cp["params"]:
            params[key] = _number(cp["params"], key, lines, float)
    try:
        nl = make(prob["nonlinearity"].strip(), **params)
    except TypeError as exc:
        raise ConfigError(f"bad nonlinearity parameters: {exc}", lines.of("params")) from None
    except LeastEnergyError as exc:
        raise ConfigError(str(exc), lines.of("problem", "nonlinearity")) from None
    if "m" in prob:
        m = _number(prob, "m", lines, int)
        if m != nl.m:
            raise ConfigError(f"m = {m} but {nl.name} has {nl.m} components", lines.of("problem", "m"))
    spec = ProblemSpec(N, p, nl)

    L, n = 8.0, 64
    if cp.has_section("grid"):
        g = cp["grid"]
        _unknown_keys(g, {"l", "n"}, lines)
        if "l" in g:
            L = _number(g, "l", lines, float)
        if "n" in g:
            n = _number(g, "n", lines, int)
    try:
        grid = Grid(N, L, n)
    except LeastEnergyError as exc:
        key = "n" if "cells" in str(exc) else "l"
        raise ConfigError(str(exc), lines.of("grid", key)) from None

    kwargs = {}
    if cp.has_section("solver"):
        s = cp["solver"]
        _unknown_keys(s, set(_SOLVER_TYPES), lines)
        for key in s:
            kwargs[key] = _solver_value(s, key, lines)
    try:
        solver = SolverConfig(**kwargs)
    except LeastEnergyError as exc:
        bad = next((k for k in kwargs if k in str(exc)), None)
        raise ConfigError(str(exc), lines.of("solver", bad) if bad else lines.of("solver")) from None

    thresholds, directions = {}, 3
    if cp.has_section("verify"):
        v = cp["verify"]
        _unknown_keys(v, set(DEFAULT_THRESHOLDS) | {"directions"}, lines)
        for key in v:
            if key == "directions":
                directions = _number(v, key, lines, int)
                if directions < 1:
                    raise ConfigError("directions must be positive", lines.of("verify", key))
            else:
                thresholds[key] = _number(v, key, lines, float)
                if thresholds[key] < 0:
                    raise ConfigError(f"threshold {key} must be nonnegative", lines.of("verify", key))

    oracle = dict(ORACLE_DEFAULTS)
    if cp.has_section("oracle"):
        o = cp["oracle"]
        _unknown_keys(o, set(ORACLE_DEFAULTS), lines)
        for key in o:
            oracle[key] = _number(o, key, lines, float)
            if not oracle[key] > 0:
                raise ConfigError(f"{key} must be positive", lines.of("oracle", key))

    out_dir, fmt = Path("out"), "csv"
    if cp.has_section("output"):
        o = cp["output"]
        _unknown_keys(o, {"dir", "format"}, lines)
        if "dir" in o:
            out_dir = Path(o["dir"].strip())
        if "format" in o:
            fmt = o["format"].strip().lower()
            if fmt not in FORMATS:
                raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}",
                                  lines.of("output", "format"))
    return RunConfig(spec, grid, solver, thresholds, directions, oracle, out_dir, fmt, source)


def load_config(path) -> RunConfig:
    """Read and validate a config file. I/O errors propagate as OSError."""
    path = Path(path)
    return parse_config(path.read_text(), str(path))


__all__ = ["RunConfig", "parse_config", "load_config", "FORMATS"]
