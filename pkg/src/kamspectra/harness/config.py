"""Run configuration: TOML (primary) or JSON files, KAMSPECTRA_* environment overrides, CLI flags."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from ..bloch import TruncationParams
from ..lattice import ModelParams
from ..potential import build_potential

SCHEMA_VERSION = 1
ENV_PREFIX = "KAMSPECTRA_"

# fields that do not influence numeric results and are left out of the config hash
_NON_SEMANTIC = ("out", "threads", "telemetry")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # model
    l: int = 2
    b1: float = math.pi
    b2: float = math.pi
    eta: float = 2.5
    delta: float = 0.1
    s1: float = 0.25
    # potential
    recipe: list = field(default_factory=lambda: [{"kind": "cosine", "amplitude": 0.25}])
    R_max: int = 3
    relaxed_decay: list | None = field(default_factory=lambda: [1.0, 1e-6, 1e-9])
    # spectral grid
    k: float = 10.0
    k_grid: list = field(default_factory=list)
    lambda_grid: list = field(default_factory=list)
    phi_window: list | None = None
    phis: list = field(default_factory=list)
    # truncation
    c_rho: float = 1.5
    R: int = 4
    Q: int = 64
    max_dim: int = 4000
    # run
    levels: int = 1
    mode: str = "desk"
    eps_band: float | None = None
    grid: int = 2048
    seed: int = 0
    threads: int = 1
    max_components: int = 0  # 0: all components
    out: str = "out"
    telemetry: bool = False

    def __post_init__(self):
        self.validate()

    # -- validation -----------------------------------------------------------
    def validate(self):
        errs = []
        if self.mode not in ("strict", "desk"):
            errs.append(f"mode: expected 'strict' or 'desk', got {self.mode!r}")
        if int(self.levels) != self.levels or self.levels < 1:
            errs.append(f"levels: must be a positive integer, got {self.levels!r}")
        if not self.k > 1:
            errs.append(f"k: must exceed 1, got {self.k!r}")
        if any(not float(v) > 1 for v in self.k_grid):
            errs.append("k_grid: every k must exceed 1")
        if any(not float(v) > 0 for v in self.lambda_grid):
            errs.append("lambda_grid: every lambda must be positive")
        if self.grid < 8:
            errs.append(f"grid: must be >= 8, got {self.grid}")
        if self.threads < 1:
            errs.append(f"threads: must be >= 1, got {self.threads}")
        if self.phi_window is not None and (len(self.phi_window) != 2
                                            or not self.phi_window[0] < self.phi_window[1]):
            errs.append(f"phi_window: expected [lo, hi] with lo < hi, got {self.phi_window!r}")
        if self.R_max < self.levels:
            errs.append(f"R_max: needs at least one block per level ({self.R_max} < {self.levels})")
        try:
            self.model_params()
        except ValueError as exc:
            errs.append(f"model: {exc}")
        try:
            self.truncation()
        except ValueError as exc:
            errs.append(f"truncation: {exc}")
        if errs:
            raise ConfigError("; ".join(errs))

    # -- derived objects -----------------------------------------------------
    def model_params(self):
        return ModelParams(int(self.l), float(self.b1), float(self.b2), float(self.eta),
                           float(self.delta), float(self.s1))

    def truncation(self):
        return TruncationParams(c_rho=float(self.c_rho), R=int(self.R), Q=int(self.Q),
                                max_dim=int(self.max_dim))

    def potential(self):
        return build_potential(self.model_params(), self.recipe, int(self.R_max),
                               relaxed_decay=self.relaxed_decay, seed=int(self.seed))

    def ks(self):
        return [float(v) for v in self.k_grid] if self.k_grid else [float(self.k)]

    # -- serialization ---------------------------------------------------------
    def to_dict(self):
        return dataclasses.asdict(self)

    def semantic_dict(self):
        d = self.to_dict()
        for key in _NON_SEMANTIC:
            d.pop(key, None)
        return d

    def hash(self):
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"),
                          ensure_ascii=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_SECTIONS = ("model", "potential", "spectral", "truncation", "run")


def _flatten(data):
    """Accept either flat keys or the [model]/[potential]/... section layout."""
    flat = {}
    for key, val in data.items():
        if key in _SECTIONS and isinstance(val, dict):
            for k2, v2 in val.items():
                flat[k2] = v2
        else:
            flat[key] = val
    if "b" in flat:
        b = flat.pop("b")
        flat["b1"], flat["b2"] = float(b[0]), float(b[1])
    return flat


def load_file(path):
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        data = json.loads(raw.decode("utf-8"))
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return _flatten(data)


def _coerce(name, text):
    """Environment values: JSON literals where possible, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    names = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for key, val in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name == "pure_python":
            continue
        match = next((n for n in names if n.lower() == name), None)
        if match is None:
            raise ConfigError(f"{key}: unknown configuration field {name!r}")
        out[match] = _coerce(match, val)
    return out


def build_config(path=None, overrides=None, environ=None):
    """Defaults < config file < KAMSPECTRA_* environment < explicit overrides (CLI flags)."""
    data = {}
    if path is not None:
        data.update(load_file(path))
    data.update(env_overrides(environ))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown configuration fields: {', '.join(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
