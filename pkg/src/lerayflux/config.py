"""Run configuration: TOML file, schema validation and ``--set`` overrides.

Every error names the offending key and, when it came from the file, the
line it sits on.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .diagnostics import FORMS
from .errors import ConfigError
from .grid import Grid
from .model import IC_KINDS, VARIANTS, ICSpec, ModelParams


def _num(lo=None, hi=None, lo_open=False, integer=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return "must be a number"
        if integer and not isinstance(v, int):
            return "must be an integer"
        if isinstance(v, float) and math.isnan(v):
            return "must not be NaN"
        if lo is not None and (v <= lo if lo_open else v < lo):
            return f"must be {'>' if lo_open else '>='} {lo}"
        if hi is not None and v > hi:
            return f"must be <= {hi}"
        return None
    return check


def _choice(options):
    def check(v):
        return None if v in options else f"must be one of {list(options)}"
    return check


def _list(item, length=None, allow_empty=True):
    def check(v):
        if not isinstance(v, list):
            return "must be a list"
        if not allow_empty and not v:
            return "must not be empty"
        if length is not None and v and len(v) != length:
            return f"must have {length} entries"
        for x in v:
            msg = item(x)
            if msg:
                return f"entries {msg}"
        return None
    return check


def _odd_points(v):
    msg = _num(3, integer=True)(v)
    if msg:
        return msg
    return None if v % 2 else "must be odd"


def _even_n(v):
    msg = _num(8, integer=True)(v)
    if msg:
        return msg
    return None if v % 2 == 0 else "must be even"


def _string(v):
    return None if isinstance(v, str) else "must be a string"


def _boolean(v):
    return None if isinstance(v, bool) else "must be true or false"


def _q(v):
    return _num(1)(v)


POS = _num(0, lo_open=True)
NONNEG = _num(0)

SCHEMA = {
    "grid": {
        "dim": (3, _choice((1, 3))),
        "n": (32, _even_n),
    },
    "model": {
        "alpha": (0.25, NONNEG),
        "nu": (0.0, NONNEG),
        "diff_d": (0.0, NONNEG),
        "K": (0.0, NONNEG),
        "A": (1.0, POS),
        "theta_i": (1.0, POS),
        "theta_bar": (0.0, NONNEG),
        "variant": ("inviscid", _choice(VARIANTS)),
    },
    "time": {
        "dt": (2e-3, NONNEG),
        "t_end": (1.0, POS),
        "cfl_safety": (0.5, _num(0, 1, lo_open=True)),
    },
    "ic": {
        "kind": ("taylor_green", _choice(IC_KINDS)),
        "amplitude": (1.0, NONNEG),
        "z_amplitude": (0.5, NONNEG),
        "seed": (0, _num(0, integer=True)),
        "slope": (5.0 / 3.0, _num()),
        "kmin": (1.0, POS),
    },
    "output": {
        "series_every": (1, _num(0, integer=True)),
        "snapshot_every": (0, _num(0, integer=True)),
        "out_dir": ("out", _string),
        "plots": (True, _boolean),
    },
    "flux": {
        "kappas": ([1.0, 2.0, 3.0, 4.0, 6.0, 8.0], _list(POS, allow_empty=False)),
        "pad": (2, _num(2, integer=True)),
        "fit_range": ([], _list(POS, length=2)),
    },
    "defect": {
        "eps_list": ([0.4, 0.2, 0.1, 0.05], _list(_num(0, math.pi, lo_open=True), allow_empty=False)),
        "form": ("both", _choice(FORMS)),
        "quadrature_points": (17, _odd_points),
        "tolerance": (1e-2, POS),
        "pad": (2, _num(2, integer=True)),
    },
    "besov": {
        "s": (1.0 / 3.0, _num()),
        "p": (3.0, _num(1)),
        "q": (math.inf, _q),
        "xi_list": ([], _list(_num(0, math.pi, lo_open=True))),
        "fit_window": ([], _list(POS, length=2)),
        "mode": ("spectral", _choice(("spectral", "grid"))),
    },
    "increments": {
        "xi_list": ([0.05, 0.1, 0.2, 0.4, 0.8], _list(_num(0, math.pi, lo_open=True), allow_empty=False)),
        "mode": ("spectral", _choice(("spectral", "grid"))),
    },
    "sweep": {
        "alpha_list": ([0.5, 0.25, 0.125], _list(NONNEG)),
    },
    "balance": {
        "t_center": (0.25, POS),
        "dt_levels": (2, _num(1, integer=True)),
        "eps_list": ([0.2, 0.1], _list(_num(0, math.pi, lo_open=True), allow_empty=False)),
        "chi_center": ([math.pi, math.pi, math.pi], _list(_num())),
        "chi_radius": (2.0, POS),
        "form": ("algebraic", _choice(("algebraic", "increment"))),
        "pad": (2, _num(2, integer=True)),
    },
    "burgers": {
        "sigma": (1.0, POS),
        "n": (4096, _even_n),
        "eps_list": ([0.4, 0.2, 0.1, 0.05], _list(_num(0, math.pi, lo_open=True), allow_empty=False)),
        "points": (17, _odd_points),
    },
}


def defaults() -> dict:
    return {sec: {k: copy.deepcopy(v[0]) for k, v in keys.items()} for sec, keys in SCHEMA.items()}


def _find_line(text: str, section: str, key: str | None) -> int | None:
    """Line number of ``key`` inside ``[section]`` (or of the header)."""
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return no
        if key is not None and current is None and re.match(rf"^{re.escape(section)}\.{re.escape(key)}\s*=", line):
            return no
    return None


def _tomli_line(exc) -> int | None:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def _coerce(section, key, value):
    # TOML integers are acceptable wherever a float is expected
    default = SCHEMA[section][key][0]
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(default, list) and isinstance(value, list):
        return [float(x) if isinstance(x, int) and not isinstance(x, bool) else x for x in value]
    return value


def _validate(values: dict, text: str = "", origin: dict | None = None) -> None:
    origin = origin or {}
    for section, keys in values.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section, line=_find_line(text, section, None))
        if not isinstance(keys, dict):
            raise ConfigError(f"[{section}] must be a table", key=section, line=_find_line(text, section, None))
        for key, val in keys.items():
            name = f"{section}.{key}"
            line = origin.get(name, _find_line(text, section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", key=name, line=line)
            msg = SCHEMA[section][key][1](val)
            if msg:
                raise ConfigError(f"{name} {msg}, got {val!r}", key=name, line=line)


@dataclass
class RunConfig:
    values: dict
    source: str | None = None
    overrides: list = field(default_factory=list)
    explicit: frozenset = frozenset()  # "section.key" names set by the file or overrides

    def __getitem__(self, section):
        return self.values[section]

    @property
    def grid(self) -> Grid:
        return Grid(self["grid"]["dim"], self["grid"]["n"])

    @property
    def params(self) -> ModelParams:
        m = self["model"]
        return ModelParams(alpha=m["alpha"], nu=m["nu"], diff_d=m["diff_d"], K=m["K"],
                           A=m["A"], theta_i=m["theta_i"], theta_bar=m["theta_bar"])

    @property
    def ic(self) -> ICSpec:
        c = self["ic"]
        return ICSpec(amplitude=c["amplitude"], z_amplitude=c["z_amplitude"], seed=c["seed"],
                      slope=c["slope"], kmin=c["kmin"])

    def canonical(self) -> str:
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"), default=str)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_values(self, **sections) -> "RunConfig":
        vals = copy.deepcopy(self.values)
        for sec, upd in sections.items():
            vals[sec].update(upd)
        _validate(vals)
        return RunConfig(vals, self.source, list(self.overrides), self.explicit)

    def check_consistency(self) -> None:
        g = self["grid"]
        kind = self["ic"]["kind"]
        if (kind == "burgers_shock") != (g["dim"] == 1):
            raise ConfigError(f"ic.kind '{kind}' is incompatible with grid.dim={g['dim']}", key="ic.kind")
        if self["output"]["snapshot_every"] and not self["output"]["out_dir"]:
            raise ConfigError("output.out_dir must be set when snapshots are written", key="output.out_dir")


def parse_value(text: str):
    """Interpret an override value as a TOML literal, else as a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(values: dict, overrides) -> dict:
    origin = {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form section.key=value", key=item)
        name, raw = item.split("=", 1)
        name = name.strip()
        if "." not in name:
            raise ConfigError(f"override key '{name}' must be section.key", key=name)
        section, key = name.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key '{name}'", key=name)
        values.setdefault(section, {})[key] = _coerce(section, key, parse_value(raw.strip()))
        origin[name] = None
    return origin


def load_config(path=None, overrides=None, text: str | None = None) -> RunConfig:
    """Defaults, then the TOML file (or ``text``), then ``section.key=value`` overrides."""
    source = None
    if text is None and path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}", key=str(path)) from exc
    text = text or ""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", line=_tomli_line(exc)) from exc
    _validate(raw, text)
    values = defaults()
    for section, keys in raw.items():
        for key, val in keys.items():
            values[section][key] = _coerce(section, key, val)
    origin = apply_overrides(values, overrides)
    _validate(values, text, origin)
    explicit = {f"{sec}.{key}" for sec, keys in raw.items() for key in keys} | set(origin)
    cfg = RunConfig(values, source, list(overrides or []), frozenset(explicit))
    cfg.check_consistency()
    return cfg
