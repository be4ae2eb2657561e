"""
Run configuration
=================

A run is described by one JSON or TOML document.  Layers are merged in this
order, later ones winning: built-in preset, config file, ``STICKY_TCE_*``
environment variables, command-line flags.

Top-level keys: ``seed``, ``mesh_n``, ``horizon``, ``ensemble_size``, ``z``,
``gamma`` and the tables ``triplet`` (``drift_b``, ``sigma``,
``small_jump_intensity_flag``, optional ``jumps`` with ``rate``, ``law`` and
law parameters), ``euler`` (``reference_n``, ``meshes``,
``window_factor``), ``martingale`` (``t_grid``, ``defect``, ``c1``,
``width``, ``quadrature_mesh``, ``jump_truncation``, ``delta``),
``occupation`` (``coarsening``) and ``sweep`` (``gammas``).  ``scenario``
selects a named study for ``euler-converge`` (only ``"no-solution"``).
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigurationError
from .levy import CompoundPoisson, Exponential, FixedSizes, LevyTriplet, Pareto, SimConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

ENV_PREFIX = "STICKY_TCE_"

_BASE = {
    "seed": 0,
    "mesh_n": 4096,
    "horizon": 1.0,
    "ensemble_size": 100,
    "z": 0.0,
    "gamma": 1.0,
    "triplet": {"drift_b": 0.0, "sigma": 1.0},
    "euler": {"reference_n": 16384, "meshes": [64, 128, 256, 512, 1024, 2048],
              "window_factor": 10.0},
    "martingale": {"t_grid": [0.25, 0.5, 1.0], "defect": 0.0, "c1": 0.25, "width": 1.0,
                   "quadrature_mesh": 1e-3, "jump_truncation": 50.0},
    "occupation": {"coarsening": [1, 4, 16]},
    "sweep": {"gammas": [0.5, 1.0, 2.0, 4.0]},
}

PRESETS = {
    "brownian-sticky": _BASE,
    "no-solution": {**_BASE, "scenario": "no-solution",
                    "triplet": {"drift_b": -1.0, "sigma": 0.0},
                    "euler": {"meshes": [4, 16, 64, 256]}},
    "gamma-sweep": {**_BASE, "ensemble_size": 1000},
}


def merge(base: dict, over: dict) -> dict:
    """Recursive dict merge; tables merge, everything else is replaced."""
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_document(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {p}: {exc}") from exc


def env_overrides(environ=None) -> dict:
    """``STICKY_TCE_MESH_N=1024`` sets ``mesh_n``; ``__`` descends into tables.

    Values are parsed as JSON when possible (numbers, lists, booleans), else
    kept as strings.
    """
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        parts = key[len(ENV_PREFIX):].lower().split("__")
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def resolve(preset: str | None = None, path=None, environ=None, overrides=None) -> dict:
    if preset is not None and preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    doc = copy.deepcopy(PRESETS[preset or "brownian-sticky"])
    if path is not None:
        doc = merge(doc, load_document(path))
    doc = merge(doc, env_overrides(environ))
    return merge(doc, overrides or {})


def config_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON form; stable under key reordering."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"missing {where}.{key}" if where else f"missing {key}")
    return table[key]


def build_triplet(doc: dict) -> LevyTriplet:
    t = doc.get("triplet")
    if not isinstance(t, dict):
        raise ConfigurationError("missing [triplet] table")
    jumps = None
    j = t.get("jumps")
    try:
        if j:
            law = str(_need(j, "law", "triplet.jumps")).lower()
            if law == "exponential":
                jl = Exponential(float(_need(j, "mean", "triplet.jumps")))
            elif law == "pareto":
                jl = Pareto(float(_need(j, "alpha", "triplet.jumps")),
                            float(_need(j, "scale", "triplet.jumps")))
            elif law == "fixed":
                jl = FixedSizes(tuple(_need(j, "sizes", "triplet.jumps")),
                                tuple(_need(j, "probabilities", "triplet.jumps")))
            else:
                raise ConfigurationError(f"unknown jump law {law!r}")
            jumps = CompoundPoisson(float(_need(j, "rate", "triplet.jumps")), jl)
        return LevyTriplet(float(t.get("drift_b", 0.0)), float(t.get("sigma", 0.0)), jumps,
                           bool(t.get("small_jump_intensity_flag", False)))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad triplet: {exc}") from exc


def build_sim_config(doc: dict, mesh_n: int | None = None) -> SimConfig:
    try:
        return SimConfig(int(_need(doc, "seed", "")),
                         int(mesh_n if mesh_n is not None else _need(doc, "mesh_n", "")),
                         float(_need(doc, "horizon", "")), int(doc.get("ensemble_size", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad simulation settings: {exc}") from exc


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    artifact_paths: list = field(default_factory=list)
    tool_version: str = __version__
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str))
