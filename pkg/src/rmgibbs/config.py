"""Flat INI-style experiment configuration: parsing, validation, hashing."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import reservoir
from .ensemble import SystemSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]

MAX_COMPOSITE_DIM = 8192  # dense eigensolver cap on N * n


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _parse_number(token: str) -> complex:
    token = token.strip().replace(" ", "")
    try:
        return float(token)
    except ValueError:
        try:
            return complex(token)
        except ValueError as exc:
            raise ConfigError(f"cannot parse number {token!r}") from exc


def _parse_matrix(text: str, n: int, name: str) -> np.ndarray:
    entries = [_parse_number(tok) for tok in text.split(",") if tok.strip()]
    if len(entries) != n * n:
        raise ConfigError(
            f"{name} needs {n * n} comma-separated entries, got {len(entries)}")
    return np.array(entries, dtype=complex).reshape(n, n)


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text: str) -> list[int]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        val = float(tok)
        if val != int(val):
            raise ConfigError(f"expected integer, got {tok!r}")
        out.append(int(val))
    return out


def _parse_grid(text: str, name: str) -> np.ndarray:
    vals = _parse_floats(text)
    if len(vals) != 3 or vals[2] != int(vals[2]) or int(vals[2]) < 2:
        raise ConfigError(f"{name} must be 'start, stop, count>=2'")
    return np.linspace(vals[0], vals[1], int(vals[2]))


@dataclass
class ExperimentConfig:
    """Validated configuration with every resolved value recorded."""

    system: SystemSpec | None
    model: reservoir.ReservoirModel | None
    run: dict
    out_dir: str
    formats: tuple
    seed: int
    resolved: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        text = "\n".join(f"{k} = {self.resolved[k]}"
                         for k in sorted(self.resolved))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def stamp(self) -> dict:
        from . import __version__
        return {"config_hash": self.config_hash, "seed": self.seed,
                "version": __version__}


def _build_system(sec, resolved) -> SystemSpec | None:
    if sec is None:
        return None
    try:
        n = int(sec.get("n", ""))
    except ValueError as exc:
        raise ConfigError("system.n must be an integer") from exc
    if n < 1:
        raise ConfigError("system.n must be >= 1")
    if "h_s" not in sec or "sigma_s" not in sec:
        raise ConfigError("system section needs H_S and Sigma_S")
    h_s = _parse_matrix(sec["h_s"], n, "H_S")
    sigma = _parse_matrix(sec["sigma_s"], n, "Sigma_S")
    resolved["system.n"] = str(n)
    resolved["system.h_s"] = sec["h_s"].strip()
    resolved["system.sigma_s"] = sec["sigma_s"].strip()
    try:
        return SystemSpec(h_s=h_s, sigma_s=sigma)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_model(sec, resolved) -> reservoir.ReservoirModel | None:
    if sec is None:
        return None
    family = sec.get("family", "").strip().lower()
    if family not in ("gaussian", "exponential", "lattice", "tabulated"):
        raise ConfigError(f"unknown reservoir family {family!r}")
    try:
        j = int(sec.get("j", "1"))
    except ValueError as exc:
        raise ConfigError("reservoir.J must be an integer") from exc
    resolved["reservoir.family"] = family
    resolved["reservoir.j"] = str(j)
    try:
        if family == "gaussian":
            e0 = float(sec.get("epsilon0", "0.0"))
            a = float(sec.get("a", "1.0"))
            resolved["reservoir.epsilon0"] = repr(e0)
            resolved["reservoir.a"] = repr(a)
            return reservoir.gaussian(e0, a, J=j)
        if family == "exponential":
            e0 = float(sec.get("epsilon0", "1.0"))
            resolved["reservoir.epsilon0"] = repr(e0)
            return reservoir.exponential(e0, J=j)
        if family == "lattice":
            e0 = float(sec.get("epsilon0", "1.0"))
            d = int(sec.get("d", "1"))
            resolved["reservoir.epsilon0"] = repr(e0)
            resolved["reservoir.d"] = str(d)
            return reservoir.lattice(d, e0, J=j)
        path = sec.get("file", "").strip()
        if not path:
            raise ConfigError("tabulated reservoir needs a 'file' entry")
        normalize = sec.get("normalize", "true").strip().lower() in ("1", "true", "yes")
        resolved["reservoir.file"] = path
        resolved["reservoir.normalize"] = str(normalize).lower()
        try:
            return reservoir.load_tabulated(path, J=j, normalize=normalize)
        except OSError as exc:
            raise ConfigError(f"cannot read tabulated density: {exc}") from exc
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


_RUN_SCHEMAS = {
    "reservoir-info": {
        "epsilon_grid": ("grid", None),
        "t0": ("float", 1.0),
        "a_candidates": ("floats", [2.0, 1.75, 1.5, 1.25]),
    },
    "solve": {
        "e_grid": ("grid", "required"),
        "tol": ("float", 1e-10),
        "mode": ("choice:chained,independent", "chained"),
        "route": ("choice:auto,fourier,extrapolation", "auto"),
    },
    "mc": {
        "n_list": ("ints", "required"),
        "m": ("int", 16),
        "z": ("complex", 1 + 1j),
        "window_center": ("float_or_auto", "auto"),
        "window_delta": ("float_or_auto", "auto"),
    },
    "gibbs-scan": {
        "j_list": ("ints", "required"),
        "epsilon": ("float", None),
        "beta": ("float", None),
        "tol": ("float", 1e-9),
    },
    "crosscheck": {
        "n_levels": ("int", "required"),
        "m": ("int", 16),
        "window_center": ("float", 0.0),
        "window_delta": ("float", 0.5),
        "deltas": ("floats", [0.02, 0.01, 0.005]),
        "npts": ("int", 33),
        "threshold": ("float", 0.02),
        "tol": ("float", 1e-9),
    },
}


def _coerce(kind: str, raw: str, key: str):
    if kind == "float":
        return float(raw)
    if kind == "int":
        val = float(raw)
        if val != int(val):
            raise ConfigError(f"run.{key} must be an integer")
        return int(val)
    if kind == "ints":
        return _parse_ints(raw)
    if kind == "floats":
        return _parse_floats(raw)
    if kind == "grid":
        return _parse_grid(raw, f"run.{key}")
    if kind == "complex":
        return _parse_number(raw)
    if kind == "float_or_auto":
        raw = raw.strip().lower()
        return "auto" if raw == "auto" else float(raw)
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split(",")
        raw = raw.strip().lower()
        if raw not in options:
            raise ConfigError(f"run.{key} must be one of {options}")
        return raw
    raise AssertionError(kind)


def _build_run(command: str, sec, resolved) -> dict:
    schema = _RUN_SCHEMAS[command]
    sec = sec or {}
    known = set(schema) | {"seed"}
    for key in sec:
        if key.lower() not in known:
            raise ConfigError(f"unknown run option {key!r} for {command}")
    run = {}
    for key, (kind, default) in schema.items():
        if key in sec:
            try:
                run[key] = _coerce(kind, sec[key], key)
            except ValueError as exc:
                raise ConfigError(f"bad run.{key}: {exc}") from exc
        elif default == "required":
            raise ConfigError(f"run.{key} is required for {command}")
        else:
            run[key] = default
        if run[key] is not None:
            if isinstance(run[key], np.ndarray):
                resolved[f"run.{key}"] = sec.get(key, "").strip()
            else:
                resolved[f"run.{key}"] = str(run[key])
    return run


def load_config(path: str, command: str, seed_override: int | None = None,
                out_override: str | None = None) -> ExperimentConfig:
    """Parse and validate a config file for the given command."""
    if command not in _RUN_SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    sections = {name.lower(): dict(parser[name]) for name in parser.sections()}
    resolved: dict = {"command": command}

    needs_system = command in ("solve", "mc", "gibbs-scan", "crosscheck")
    system = _build_system(sections.get("system"), resolved)
    if needs_system and system is None:
        raise ConfigError(f"{command} requires a [system] section")

    model = _build_model(sections.get("reservoir"), resolved)
    if model is None:
        raise ConfigError(f"{command} requires a [reservoir] section")

    run = _build_run(command, sections.get("run"), resolved)

    out_sec = sections.get("output", {})
    out_dir = out_override or out_sec.get("directory", "out")
    formats = tuple(tok.strip().lower()
                    for tok in out_sec.get("formats", "csv, json, svg").split(",")
                    if tok.strip())
    for fmt in formats:
        if fmt not in ("csv", "json", "svg"):
            raise ConfigError(f"unknown output format {fmt!r}")
    resolved["output.directory"] = out_dir
    resolved["output.formats"] = ",".join(formats)

    if seed_override is not None:
        seed = int(seed_override)
    else:
        raw_seed = (sections.get("run") or {}).get("seed", "0")
        try:
            seed = int(raw_seed)
        except ValueError as exc:
            raise ConfigError("run.seed must be an integer") from exc
    resolved["run.seed"] = str(seed)

    cfg = ExperimentConfig(system=system, model=model, run=run,
                           out_dir=out_dir, formats=formats, seed=seed,
                           resolved=resolved)
    _validate_dimensions(command, cfg)
    return cfg


def _validate_dimensions(command: str, cfg: ExperimentConfig):
    if command == "mc":
        for n_value in cfg.run["n_list"]:
            if n_value * cfg.system.n > MAX_COMPOSITE_DIM:
                raise ConfigError(
                    f"N * n = {n_value * cfg.system.n} exceeds the dense "
                    f"eigensolver cap {MAX_COMPOSITE_DIM}")
        if cfg.run["m"] < 8:
            raise ConfigError("run.m must be at least 8 realizations")
    if command == "crosscheck":
        if cfg.run["n_levels"] * cfg.system.n > MAX_COMPOSITE_DIM:
            raise ConfigError(
                f"N * n = {cfg.run['n_levels'] * cfg.system.n} exceeds the "
                f"dense eigensolver cap {MAX_COMPOSITE_DIM}")
    if command == "gibbs-scan":
        if (cfg.run["epsilon"] is None) == (cfg.run["beta"] is None):
            raise ConfigError(
                "gibbs-scan needs exactly one of run.epsilon or run.beta")
