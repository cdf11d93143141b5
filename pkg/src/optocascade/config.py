"""Flat key/value run configuration with ``[params] [source] [solver] [output]`` sections.

Every key is unique across sections, so command-line overrides can be given
as bare ``key=value`` pairs (``section.key=value`` is accepted as well).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .model import InvalidParameterError, SimParams
from .moments import SourceSpec
from .oracle import TruncationSpec
from .scenarios import DEFAULT_SAMPLES, DEFAULT_T_END, Scenario, preset

MODES = ("moments", "oracle", "both")
METHODS = ("adaptive", "fixed")


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _complex(text: str) -> complex:
    return complex(text.strip().replace(" ", "").replace("i", "j"))


SCHEMA = {
    "params": {
        "kappa": float, "gamma": float, "mu": float, "nbar": float, "omega_m": float,
        "delta": float, "g": float, "rwa": _bool, "nbar_init": float,
    },
    "source": {"kind": str, "n": int, "beta": _complex},
    "solver": {
        "mode": str, "method": str, "rtol": float, "atol": float, "step": float,
        "t_end": float, "samples": int, "n_a_max": int, "n_b_max": int, "n_c_max": int, "t_relax": float,
    },
    "output": {"name": str, "description": str, "csv": str, "plot": str, "dir": str},
}
KEY_SECTION = {key: section for section, keys in SCHEMA.items() for key in keys}


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    mode: str = "moments"
    method: str = "adaptive"
    rtol: float = 1e-9
    atol: float = 1e-12
    step: float = 1e-3
    trunc: TruncationSpec = TruncationSpec(5, 5, 1)
    t_relax: float = 80.0
    output: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0 and self.step > 0):
            raise ConfigError("tolerances and step must be positive")
        if self.t_relax < 0:
            raise ConfigError("t_relax must be non-negative")


def _flatten(cfg: RunConfig) -> dict[str, object]:
    s = cfg.scenario
    p = s.params
    flat = {k: getattr(p, k) for k in ("kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g", "rwa")}
    flat.update(nbar_init=s.nbar_init, kind=s.source.kind, n=s.source.n, beta=s.source.beta)
    flat.update(mode=cfg.mode, method=cfg.method, rtol=cfg.rtol, atol=cfg.atol, step=cfg.step,
                t_end=s.t_end, samples=s.samples, n_a_max=cfg.trunc.n_a_max, n_b_max=cfg.trunc.n_b_max,
                n_c_max=cfg.trunc.n_c_max, t_relax=cfg.t_relax, name=s.name,
                description=s.description)
    flat.update(cfg.output)
    return flat


def _build(flat: dict[str, object]) -> RunConfig:
    try:
        params = SimParams(**{k: flat[k] for k in ("kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g", "rwa")})
        kind = flat["kind"]
        source = SourceSpec.fock(flat["n"]) if kind == "fock" else (
            SourceSpec.coherent(flat["beta"]) if kind == "coherent" else SourceSpec(kind=kind))
        scenario = Scenario(name=flat["name"], params=params, source=source, nbar_init=flat["nbar_init"],
                            t_end=flat["t_end"], samples=flat["samples"], description=flat["description"])
        trunc = TruncationSpec(flat["n_a_max"], flat["n_b_max"], flat["n_c_max"])
        output = {k: flat[k] for k in ("csv", "plot", "dir") if k in flat}
        return RunConfig(scenario=scenario, mode=flat["mode"], method=flat["method"], rtol=flat["rtol"],
                         atol=flat["atol"], step=flat["step"], trunc=trunc, t_relax=flat["t_relax"], output=output)
    except ConfigError:
        raise
    except (InvalidParameterError, ValueError, RuntimeError) as exc:
        raise ConfigError(str(exc)) from exc


def default_config(scenario: Scenario | None = None) -> RunConfig:
    if scenario is None:
        scenario = Scenario(name="custom", params=SimParams(), t_end=DEFAULT_T_END, samples=DEFAULT_SAMPLES)
    return RunConfig(scenario=scenario)


def from_preset(name: str) -> RunConfig:
    try:
        return default_config(preset(name))
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


def _parse_value(key: str, text: str):
    section = KEY_SECTION[key]
    try:
        return SCHEMA[section][key](text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None


def apply_overrides(cfg: RunConfig, pairs: dict[str, str]) -> RunConfig:
    """Return ``cfg`` with textual ``key -> value`` overrides applied.

    Setting ``nbar`` without ``nbar_init`` moves the initial occupation along.
    """
    flat = _flatten(cfg)
    for raw_key, text in pairs.items():
        section, _, key = raw_key.rpartition(".")
        if key not in KEY_SECTION or (section and KEY_SECTION[key] != section):
            raise ConfigError(f"unknown key {raw_key!r}")
        flat[key] = _parse_value(key, text)
    if "nbar" in {k.rpartition(".")[2] for k in pairs} and "nbar_init" not in {k.rpartition(".")[2] for k in pairs}:
        flat["nbar_init"] = flat["nbar"]
    return _build(flat)


def parse_overrides(items) -> dict[str, str]:
    pairs = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        pairs[key.strip()] = value.strip()
    return pairs


def loads(text: str, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    pairs = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            pairs[f"{section}.{key}"] = value
    return apply_overrides(base or default_config(), pairs)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return repr(value).strip("()")
    return str(value)


def dumps(cfg: RunConfig) -> str:
    flat = _flatten(cfg)
    out = io.StringIO()
    for section, keys in SCHEMA.items():
        out.write(f"[{section}]\n")
        for key in keys:
            if key in flat:
                out.write(f"{key} = {_format(flat[key])}\n")
        out.write("\n")
    return out.getvalue()


def scenario_to_text(s: Scenario) -> str:
    return dumps(default_config(s))


def scenario_from_text(text: str) -> Scenario:
    return loads(text).scenario

