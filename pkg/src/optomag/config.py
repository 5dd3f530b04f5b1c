"""Experiment configuration: TOML documents, validation and bundled presets.

A configuration has a top-level ``scheme`` plus five tables::

    scheme = "conversion"          # hofstadter | modulated_link | conversion | ab_ring | ladder

    [lattice]  rows, cols
    [physics]  J, J_vertical, j_eff, g, g0beta, Omega, omega_step, Omega0, delta, K, kappa, Gamma
    [flux]     value | fraction | start, stop, steps, endpoint | phase_file
    [probe]    site = [row, col] | "center", detuning | detuning_start/stop/steps,
               omega_min, omega_max, omega_steps, sectors
    [run]      out, M, threads

All rates are in units of the mechanical frequency.  ``flux.fraction`` is a
flux in units of 2 pi.  Unknown keys are rejected and every problem found
is reported at once.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

SCHEMES = ("hofstadter", "modulated_link", "conversion", "ab_ring", "ladder")

_NUM = (int, float)
_SCHEMA = {
    "lattice": {"rows": int, "cols": int},
    "physics": {
        "J": _NUM,
        "J_vertical": _NUM,
        "j_eff": _NUM,
        "g": _NUM,
        "g0beta": _NUM,
        "Omega": _NUM,
        "omega_step": _NUM,
        "Omega0": _NUM,
        "delta": _NUM,
        "K": _NUM,
        "kappa": _NUM,
        "Gamma": _NUM,
    },
    "flux": {
        "value": _NUM,
        "fraction": _NUM,
        "start": _NUM,
        "stop": _NUM,
        "steps": int,
        "endpoint": bool,
        "phase_file": str,
    },
    "probe": {
        "site": (list, str),
        "detuning": _NUM,
        "detuning_start": _NUM,
        "detuning_stop": _NUM,
        "detuning_steps": int,
        "omega_min": _NUM,
        "omega_max": _NUM,
        "omega_steps": int,
        "sectors": list,
    },
    "run": {"out": str, "M": int, "threads": int},
}

# physics keys each scheme needs
_REQUIRED = {
    "hofstadter": ("j_eff", "kappa"),
    "modulated_link": ("J", "g0beta", "Omega", "omega_step", "kappa"),
    "conversion": ("J", "g", "delta", "kappa", "Gamma"),
    "ab_ring": ("J", "g", "delta", "kappa", "Gamma"),
    "ladder": ("J", "K", "g", "delta", "kappa", "Gamma"),
}
_POSITIVE = ("Omega", "Omega0", "kappa", "Gamma")
_NONNEGATIVE = ("J", "J_vertical", "j_eff", "g", "g0beta", "K", "omega_step")
_DEFAULTS = {"physics": {"Omega0": 1.0}, "run": {"out": "out", "M": 8, "threads": 0}, "probe": {"site": "center"}}


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    lattice: dict
    physics: dict
    flux: dict
    probe: dict
    run: dict
    source: dict = field(default_factory=dict, repr=False)

    def fluxes(self) -> list[float]:
        """Flux values to run, in radians (a single value or a sweep)."""
        f = self.flux
        if "steps" in f:
            n = f["steps"]
            endpoint = f.get("endpoint", False)
            start, stop = f.get("start", 0.0), f.get("stop", 2 * math.pi)
            div = (n - 1) if endpoint and n > 1 else n
            return [start + (stop - start) * k / div for k in range(n)]
        if "fraction" in f:
            return [2 * math.pi * f["fraction"]]
        return [f.get("value", 0.0)]

    def detunings(self) -> list[float]:
        p = self.probe
        if "detuning_steps" in p:
            n = p["detuning_steps"]
            a, b = p["detuning_start"], p["detuning_stop"]
            return [a + (b - a) * k / max(n - 1, 1) for k in range(n)]
        return [p["detuning"]]

    def omega_grid(self):
        import numpy as np

        p = self.probe
        return np.linspace(p["omega_min"], p["omega_max"], p["omega_steps"])

    def digest(self) -> str:
        blob = json.dumps(self.source, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _check_type(value, expected) -> bool:
    if expected is _NUM:
        return isinstance(value, _NUM) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def validate(doc: dict) -> ExperimentConfig:
    problems: list[tuple[str, str]] = []
    doc = copy.deepcopy(doc)
    scheme = doc.pop("scheme", None)
    if scheme is None:
        problems.append(("scheme", f"missing required key (one of {', '.join(SCHEMES)})"))
    elif scheme not in SCHEMES:
        problems.append(("scheme", f"unknown scheme {scheme!r}"))
    tables = {}
    for name, value in doc.items():
        if name not in _SCHEMA:
            problems.append((name, "unknown key"))
        elif not isinstance(value, dict):
            problems.append((name, "must be a table"))
        else:
            tables[name] = value
    for name, schema in _SCHEMA.items():
        table = tables.setdefault(name, {})
        for key, value in table.items():
            if key not in schema:
                problems.append((f"{name}.{key}", "unknown key"))
            elif not _check_type(value, schema[key]):
                problems.append((f"{name}.{key}", f"wrong type {type(value).__name__}"))
        for key, value in _DEFAULTS.get(name, {}).items():
            table.setdefault(key, value)

    lat, phys, flux, probe, run = (tables[k] for k in ("lattice", "physics", "flux", "probe", "run"))
    if scheme != "ab_ring":
        for key in ("rows", "cols"):
            if key not in lat:
                problems.append((f"lattice.{key}", "missing required key"))
            elif _check_type(lat[key], int) and lat[key] < 1:
                problems.append((f"lattice.{key}", "must be >= 1"))
    needed = _REQUIRED.get(scheme, ("kappa",))
    for key in needed:
        if key not in phys:
            problems.append((f"physics.{key}", "missing required key"))
    for key in _POSITIVE:
        if key in phys and _check_type(phys[key], _NUM) and not phys[key] > 0:
            problems.append((f"physics.{key}", "rate must be > 0"))
    for key in _NONNEGATIVE:
        if key in phys and _check_type(phys[key], _NUM) and phys[key] < 0:
            problems.append((f"physics.{key}", "must be >= 0"))
    modes = [k for k in ("value", "fraction", "phase_file") if k in flux] + (["sweep"] if "steps" in flux else [])
    if len(modes) > 1:
        problems.append(("flux", f"give only one of value, fraction, sweep or phase_file (got {', '.join(modes)})"))
    if "steps" in flux and _check_type(flux["steps"], int) and flux["steps"] < 1:
        problems.append(("flux.steps", "must be >= 1"))
    for key in ("detuning_steps", "omega_steps"):
        if key in probe and _check_type(probe[key], int) and probe[key] < 1:
            problems.append((f"probe.{key}", "must be >= 1"))
    if "detuning_steps" in probe:
        for key in ("detuning_start", "detuning_stop"):
            if key not in probe:
                problems.append((f"probe.{key}", "required with detuning_steps"))
    if "omega_steps" in probe:
        for key in ("omega_min", "omega_max"):
            if key not in probe:
                problems.append((f"probe.{key}", "required with omega_steps"))
    site = probe.get("site")
    if isinstance(site, str) and site != "center":
        problems.append(("probe.site", "must be [row, col] or \"center\""))
    if isinstance(site, list) and (len(site) != 2 or not all(_check_type(v, _NUM) for v in site)):
        problems.append(("probe.site", "must be a [row, col] pair"))
    if "sectors" in probe and not all(_check_type(v, int) for v in probe["sectors"]):
        problems.append(("probe.sectors", "must be a list of integers"))
    if _check_type(run.get("M"), int) and run["M"] < 1:
        problems.append(("run.M", "must be >= 1"))
    if _check_type(run.get("threads"), int) and run["threads"] < 0:
        problems.append(("run.threads", "must be >= 0 (0 = all cores)"))
    if problems:
        raise ConfigError(problems)
    source = {"scheme": scheme, **{k: tables[k] for k in _SCHEMA}}
    return ExperimentConfig(scheme, lat, phys, flux, probe, run, source)


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([("<document>", f"not valid TOML: {exc}")]) from exc
    return validate(doc)


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


_FIG2_SWEEP = {"start": 0.0, "stop": 2 * math.pi, "steps": 64}
_FIG3_PHYS = {"J": 0.13, "g": 0.2, "delta": 0.3, "kappa": 0.01, "Gamma": 0.001, "Omega0": 1.0}

PRESETS = {
    "fig2": {
        "scheme": "modulated_link",
        "lattice": {"rows": 12, "cols": 12},
        "physics": {"J": 0.3, "J_vertical": 0.108, "g0beta": 0.3, "Omega": 1.0, "omega_step": 0.5, "kappa": 0.01},
        "flux": dict(_FIG2_SWEEP),
        "probe": {"site": "center", "omega_min": -0.5, "omega_max": 0.5, "omega_steps": 1001},
        "run": {"M": 8},
    },
    "fig2a": {
        "scheme": "hofstadter",
        "lattice": {"rows": 10, "cols": 10},
        "physics": {"j_eff": 0.108, "kappa": 0.01},
        "flux": dict(_FIG2_SWEEP),
        "probe": {"site": "center", "omega_min": -0.5, "omega_max": 0.5, "omega_steps": 1001},
    },
    "fig2b": {
        "scheme": "modulated_link",
        "lattice": {"rows": 12, "cols": 12},
        "physics": {"J": 0.3, "J_vertical": 0.108, "g0beta": 0.3, "Omega": 1.0, "omega_step": 0.5, "kappa": 0.01},
        "flux": {"fraction": 0.125},
        "probe": {"site": "center", "omega_min": -1.5, "omega_max": 1.5, "omega_steps": 3001, "sectors": [-1, 0, 1]},
        "run": {"M": 8},
    },
    "fig3a": {
        "scheme": "conversion",
        "lattice": {"rows": 22, "cols": 22},
        "physics": dict(_FIG3_PHYS),
        "flux": {"fraction": 0.125},
        "probe": {"site": [10, 10], "detuning": 1.278},
    },
    "fig3b": {
        "scheme": "conversion",
        "lattice": {"rows": 22, "cols": 22},
        "physics": dict(_FIG3_PHYS),
        "flux": {"fraction": 0.125},
        "probe": {"site": [21, 10], "detuning": 1.26},
    },
    "fig3d": {
        "scheme": "ab_ring",
        "physics": {"J": 0.001, "g": 0.01, "delta": 0.1, "kappa": 0.01, "Gamma": 0.001, "Omega0": 1.0},
        "flux": {"start": 0.0, "stop": 4 * math.pi, "steps": 128, "endpoint": True},
        "probe": {"detuning": 1.103},
    },
    "ladder": {
        "scheme": "ladder",
        "lattice": {"rows": 2, "cols": 41},
        "physics": {"J": 0.05, "K": 0.05, "g": 0.01, "delta": 0.0, "kappa": 0.01, "Gamma": 0.01, "Omega0": 1.0},
        "flux": {"start": -math.pi, "stop": math.pi, "steps": 121, "endpoint": True},
        "probe": {"site": [0, 20], "detuning": 1.05},
    },
}


def preset(name: str, override: dict | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError([("preset", f"unknown preset {name!r} (have {', '.join(sorted(PRESETS))})")])
    return validate(merge(PRESETS[name], override or {}))
