"""Run configuration: a line-oriented ``key = value`` format with
``[section]`` headers and ``#`` comments.

Every parse or validation error carries the offending line number so the
command line front end can report ``file:line: message``.
"""

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import TorusMFError


class ConfigError(TorusMFError):
    def __init__(self, message, line=None, path=None):
        self.message = message
        self.line = line
        self.path = path
        super().__init__(self.render())

    def render(self):
        where = str(self.path) if self.path else "<config>"
        if self.line is not None:
            where += f":{self.line}"
        return f"{where}: {self.message}"


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    return int(text.strip())


def _parse_float(text):
    return float(text.strip())


def _parse_opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _parse_floats(text):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("expected a list of numbers")
    return [float(p) for p in parts]


def _parse_poles(text):
    text = text.strip()
    if not text:
        return []
    try:
        value = ast.literal_eval(f"[{text}]")
    except (ValueError, SyntaxError):
        raise ValueError(f"poles must look like (x, y, c), (x, y, c): {text!r}") from None
    poles = []
    for p in value:
        if not (isinstance(p, tuple) and len(p) == 3
                and all(isinstance(v, (int, float)) for v in p)):
            raise ValueError(f"each pole must be a triple (x, y, c), got {p!r}")
        poles.append(tuple(float(v) for v in p))
    return poles


def _parse_kind(allowed):
    def parse(text):
        t = text.strip()
        head, _, arg = t.partition(":")
        if head not in allowed:
            raise ValueError(f"kind must be one of {', '.join(allowed)}; got {t!r}")
        if head == "cosine":
            float(arg)
        if head == "file" and not arg:
            raise ValueError("file: needs a path")
        return t
    return parse


SCHEMA = {
    "": {"seed": _parse_int},
    "grid": {"n_side": _parse_int},
    "form": {"kind": _parse_kind(("lebesgue", "cosine", "file"))},
    "measure": {"kind": _parse_kind(("lebesgue", "klt", "file")), "poles": _parse_poles},
    "solver": {"beta": _parse_float, "tol_residual": _parse_float,
               "tol_gap": _parse_float, "max_iter": _parse_int,
               "damping": _parse_opt_float, "method": str.strip,
               "allow_noncoercive": _parse_bool},
    "sweep": {"betas": _parse_floats},
    "output": {"dir": str.strip, "heatmaps": _parse_bool, "timing": _parse_bool},
}


@dataclass
class RunConfig:
    n_side: int = 64
    form_kind: str = "lebesgue"
    measure_kind: str = "lebesgue"
    poles: list = field(default_factory=list)
    beta: float = 1.0
    tol_residual: float = 1e-9
    tol_gap: float = 1e-8
    max_iter: int = 5000
    damping: Optional[float] = None
    method: str = "fixed_point"
    allow_noncoercive: bool = False
    betas: list = field(default_factory=lambda: [1.0, 4.0, 16.0, 64.0, 256.0])
    out_dir: str = "out"
    heatmaps: bool = True
    timing: bool = False
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd, repr=False)
    lines: dict = field(default_factory=dict, repr=False)

    _KEYMAP = {
        ("grid", "n_side"): "n_side", ("form", "kind"): "form_kind",
        ("measure", "kind"): "measure_kind", ("measure", "poles"): "poles",
        ("solver", "beta"): "beta", ("solver", "tol_residual"): "tol_residual",
        ("solver", "tol_gap"): "tol_gap", ("solver", "max_iter"): "max_iter",
        ("solver", "damping"): "damping", ("solver", "method"): "method",
        ("solver", "allow_noncoercive"): "allow_noncoercive",
        ("sweep", "betas"): "betas", ("output", "dir"): "out_dir",
        ("output", "heatmaps"): "heatmaps", ("output", "timing"): "timing",
        ("", "seed"): "seed",
    }

    def echo(self):
        """Config as nested sections (the form written to JSON summaries)."""
        out = {}
        for (section, key), attr in self._KEYMAP.items():
            value = getattr(self, attr)
            if section:
                out.setdefault(section, {})[key] = value
            else:
                out[key] = value
        return out

    def resolve(self, rel):
        """Paths in the config are relative to the config file."""
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p


def parse_config(text, path=None):
    """Parse config text into a validated RunConfig."""
    cfg = RunConfig()
    if path is not None:
        cfg.base_dir = Path(path).resolve().parent
    section = ""
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno, path)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, path)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA[section]:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}", lineno, path)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        seen.add((section, key))
        try:
            parsed = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno, path) from None
        setattr(cfg, RunConfig._KEYMAP[(section, key)], parsed)
        cfg.lines[(section, key)] = lineno
    validate(cfg, path)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    except UnicodeDecodeError:
        raise ConfigError("config is not valid UTF-8", None, path) from None
    return parse_config(text, path)


def validate(cfg, path=None):
    def fail(msg, section, key):
        raise ConfigError(msg, cfg.lines.get((section, key)), path)

    if cfg.n_side < 4 or cfg.n_side % 2:
        fail(f"n_side must be even and >= 4, got {cfg.n_side}", "grid", "n_side")
    if not (cfg.tol_residual > 0):
        fail("tol_residual must be positive", "solver", "tol_residual")
    if not (cfg.tol_gap > 0):
        fail("tol_gap must be positive", "solver", "tol_gap")
    if cfg.max_iter < 1:
        fail("max_iter must be >= 1", "solver", "max_iter")
    if cfg.damping is not None and not 0 < cfg.damping <= 1:
        fail("damping must lie in (0, 1]", "solver", "damping")
    if cfg.method not in ("fixed_point", "newton"):
        fail("method must be fixed_point or newton", "solver", "method")
    if not np.isfinite(cfg.beta):
        fail("beta must be finite", "solver", "beta")
    b = cfg.betas
    if any(x <= 0 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
        fail("betas must be positive and strictly increasing", "sweep", "betas")
    for x, y, c in cfg.poles:
        if not c < 1:
            fail(f"pole exponent c = {c} violates c < 1", "measure", "poles")
        if not (0 <= x < 1 and 0 <= y < 1):
            fail(f"pole center ({x}, {y}) outside [0,1)^2", "measure", "poles")
    if cfg.measure_kind == "klt" and not cfg.poles:
        fail("measure kind klt needs poles", "measure", "kind")
    for section, kind in (("form", cfg.form_kind), ("measure", cfg.measure_kind)):
        if kind.startswith("file:"):
            p = cfg.resolve(kind[5:])
            if not p.is_file():
                fail(f"file not found: {p}", section, "kind")


def read_field(path, n_side):
    """Load an n x n grid field from ``.npy`` or whitespace text."""
    path = Path(path)
    arr = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, ndmin=2)
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (n_side, n_side):
        raise ValueError(f"{path} holds shape {arr.shape}, expected ({n_side}, {n_side})")
    return arr
