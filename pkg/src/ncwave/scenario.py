"""Scenario files: a small TOML schema describing one soliton run."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .darboux import CONSTRUCTIONS, MODES, ScenarioError, SolitonScenario
from .lax import ModelParams

SCHEMA_VERSION = 1
MAX_SOLITONS = 3


class ScenarioFormatError(ValueError):
    """The scenario text cannot be parsed or fails validation."""


@dataclass(frozen=True)
class Grid:
    x_min: float = -10.0
    x_max: float = 10.0
    nx: int = 401
    t_min: float = -2.0
    t_max: float = 2.0
    nt: int = 401

    def axes(self):
        return np.linspace(self.x_min, self.x_max, self.nx), np.linspace(self.t_min, self.t_max, self.nt)


@dataclass(frozen=True)
class MiSettings:
    c: float = 1.0
    k_max: float = 3.0
    samples: int = 601


@dataclass(frozen=True)
class ScenarioFile:
    params: ModelParams
    lambdas: tuple
    Q: np.ndarray
    c1: float = 1.0
    mode: str = "commutative"
    construction: str = "shifted"
    grid: Grid = field(default_factory=Grid)
    outputs: dict = field(default_factory=lambda: {"fields": True, "residuals": True, "mi": False})
    mi: MiSettings = field(default_factory=MiSettings)
    note: str = ""

    def soliton_scenario(self) -> SolitonScenario:
        return SolitonScenario(self.lambdas, self.Q, self.params, self.c1, self.mode, self.construction)

    def with_params(self, params: ModelParams) -> "ScenarioFile":
        return replace(self, params=params)


_FIELD_RE = re.compile(r"\(at line (\d+), column (\d+)\)")


def _need(table: dict, key: str, where: str, kind=float):
    if key not in table:
        raise ScenarioFormatError(f"{where}: missing field '{key}'")
    return _coerce(table[key], f"{where}.{key}", kind)


def _coerce(value, where: str, kind):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioFormatError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioFormatError(f"{where}: expected true or false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioFormatError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioFormatError(f"{where}: must be finite")
    return value


def _number_list(value, where: str) -> list[float]:
    if not isinstance(value, list):
        raise ScenarioFormatError(f"{where}: expected an array of numbers")
    return [_coerce(v, f"{where}[{i}]", float) for i, v in enumerate(value)]


def parse_scenario(text: str) -> ScenarioFile:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        m = _FIELD_RE.search(str(err))
        if m:
            where = f"line {m.group(1)}, column {m.group(2)}"
        else:
            where = f"end of input (line {len(text.splitlines()) or 1})"
        raise ScenarioFormatError(f"syntax error at {where}: {err}") from None

    if data.get("schema") != SCHEMA_VERSION:
        raise ScenarioFormatError(f"schema: expected 'schema = {SCHEMA_VERSION}', got {data.get('schema')!r}")
    known = {"schema", "mode", "construction", "c1", "Q", "Q_imag", "note",
             "model", "solitons", "grid", "outputs", "mi"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioFormatError(f"unknown top-level field(s): {', '.join(unknown)}")

    model = data.get("model")
    if not isinstance(model, dict):
        raise ScenarioFormatError("model: missing [model] section")
    params = ModelParams(_need(model, "alpha1", "model"), _need(model, "alpha2", "model"),
                         _need(model, "gamma", "model"))

    mode = _coerce(data.get("mode", "commutative"), "mode", str)
    if mode not in MODES:
        raise ScenarioFormatError(f"mode: expected one of {MODES}, got {mode!r}")
    construction = _coerce(data.get("construction", "shifted"), "construction", str)
    if construction not in CONSTRUCTIONS:
        raise ScenarioFormatError(f"construction: expected one of {CONSTRUCTIONS}, got {construction!r}")

    sol = data.get("solitons")
    if not isinstance(sol, list) or not sol:
        raise ScenarioFormatError("solitons: need at least one [[solitons]] entry")
    if len(sol) > MAX_SOLITONS:
        raise ScenarioFormatError(f"solitons: at most {MAX_SOLITONS} supported, got {len(sol)}")
    lambdas = []
    for i, s in enumerate(sol):
        if not isinstance(s, dict):
            raise ScenarioFormatError(f"solitons[{i}]: expected a table")
        lambdas.append(complex(_need(s, "lambda_re", f"solitons[{i}]"), _need(s, "lambda_im", f"solitons[{i}]")))

    b = 1 if mode == "commutative" else 2
    size = 2 * len(lambdas) * b
    q_re = _number_list(data.get("Q", []), "Q")
    q_im = _number_list(data.get("Q_imag", [0.0] * len(q_re)), "Q_imag")
    if len(q_re) != size * size:
        raise ScenarioFormatError(f"Q: expected {size * size} entries for n={len(lambdas)} in {mode} mode, got {len(q_re)}")
    if len(q_im) != len(q_re):
        raise ScenarioFormatError(f"Q_imag: expected {len(q_re)} entries, got {len(q_im)}")
    Q = (np.array(q_re) + 1j * np.array(q_im)).reshape(size, size)

    c1 = _coerce(data.get("c1", 1.0), "c1", float)

    g = data.get("grid", {})
    if not isinstance(g, dict):
        raise ScenarioFormatError("grid: expected a table")
    grid = Grid(_need(g, "xMin", "grid"), _need(g, "xMax", "grid"), _need(g, "nx", "grid", int),
                _need(g, "tMin", "grid"), _need(g, "tMax", "grid"), _need(g, "nt", "grid", int))
    if grid.nx < 2 or grid.nt < 1:
        raise ScenarioFormatError("grid: need nx >= 2 and nt >= 1")
    if grid.x_max <= grid.x_min or (grid.nt > 1 and grid.t_max <= grid.t_min):
        raise ScenarioFormatError("grid: need xMax > xMin and tMax > tMin")

    o = data.get("outputs", {})
    if not isinstance(o, dict):
        raise ScenarioFormatError("outputs: expected a table")
    outputs = {key: _coerce(o.get(key, default), f"outputs.{key}", bool)
               for key, default in (("fields", True), ("residuals", True), ("mi", False))}
    if outputs["residuals"] and (grid.nx < 9 or grid.nt < 9):
        raise ScenarioFormatError("grid: residuals need nx >= 9 and nt >= 9")

    m = data.get("mi", {})
    if not isinstance(m, dict):
        raise ScenarioFormatError("mi: expected a table")
    mi = MiSettings(_coerce(m.get("c", 1.0), "mi.c", float), _coerce(m.get("k_max", 3.0), "mi.k_max", float),
                    _coerce(m.get("samples", 601), "mi.samples", int))

    note = _coerce(data.get("note", ""), "note", str)
    sf = ScenarioFile(params, tuple(lambdas), Q, c1, mode, construction, grid, outputs, mi, note)
    try:
        sf.soliton_scenario()
    except ScenarioError as err:
        raise ScenarioFormatError(f"Q: {err}") from None
    return sf


def _num(v: float) -> str:
    v = float(v) + 0.0  # folds -0.0 into 0.0
    if v == int(v) and abs(v) < 1e15:
        return f"{v:.1f}"
    return repr(v)


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\t": "\\t", "\n": "\\n", "\f": "\\f", "\r": "\\r"}


def _string(s: str) -> str:
    """TOML basic string; control characters become escapes."""
    out = []
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def format_scenario(sf: ScenarioFile) -> str:
    lines = [f"schema = {SCHEMA_VERSION}"]
    if sf.note:
        lines.append(f"note = {_string(sf.note)}")
    lines += [f'mode = "{sf.mode}"', f'construction = "{sf.construction}"', f"c1 = {_num(sf.c1)}"]
    q = np.asarray(sf.Q).ravel()
    lines.append("Q = [" + ", ".join(_num(v) for v in q.real) + "]")
    if np.any(q.imag != 0):
        lines.append("Q_imag = [" + ", ".join(_num(v) for v in q.imag) + "]")
    p = sf.params
    lines += ["", "[model]", f"alpha1 = {_num(p.alpha1)}", f"alpha2 = {_num(p.alpha2)}", f"gamma = {_num(p.gamma)}"]
    for lam in sf.lambdas:
        lines += ["", "[[solitons]]", f"lambda_re = {_num(lam.real)}", f"lambda_im = {_num(lam.imag)}"]
    g = sf.grid
    lines += ["", "[grid]", f"xMin = {_num(g.x_min)}", f"xMax = {_num(g.x_max)}", f"nx = {g.nx}",
              f"tMin = {_num(g.t_min)}", f"tMax = {_num(g.t_max)}", f"nt = {g.nt}"]
    lines += ["", "[outputs]"] + [f"{k} = {'true' if sf.outputs[k] else 'false'}" for k in ("fields", "residuals", "mi")]
    lines += ["", "[mi]", f"c = {_num(sf.mi.c)}", f"k_max = {_num(sf.mi.k_max)}", f"samples = {sf.mi.samples}"]
    return "\n".join(lines) + "\n"


def load_scenario(path) -> ScenarioFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioFormatError(f"cannot read scenario {path}: {err.strerror}") from None
    return parse_scenario(text)


def preset_names() -> list[str]:
    root = resources.files("ncwave") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_preset(name: str) -> ScenarioFile:
    root = resources.files("ncwave") / "presets"
    entry = root / f"{name}.toml"
    if not entry.is_file():
        raise ScenarioFormatError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_scenario(entry.read_text(encoding="utf-8"))


def preset_path(name: str) -> Path:
    return Path(str(resources.files("ncwave") / "presets" / f"{name}.toml"))
