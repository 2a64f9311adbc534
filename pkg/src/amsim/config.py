"""Run-configuration loading: INI files, typed defaults, and CLI overrides.

A configuration is a plain two-level dictionary ``{section: {key: value}}``
with a fixed schema.  Files are standard INI (``configparser``); overrides
come as ``section.key=value`` strings and take precedence over the file.
Unknown sections or keys and unparseable values raise :class:`ConfigError`
with the offending key in the message.
"""

from __future__ import annotations

import configparser
import copy

import numpy as np

from .dynamics import GRID_NOISE, StepperConfig
from .errors import AmsimError, ConfigError
from .model import KIND_CHAIN, KIND_GRID, ModelParams, double_well
from .rare_event import AmsConfig


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text):
    values = [float(v) for v in text.replace(",", " ").split()]
    if not values:
        raise ValueError("empty list")
    return values


def _parse_truncation(text):
    t = text.strip()
    return GRID_NOISE if t == GRID_NOISE else int(t)


#: schema: section -> key -> (parser, default)
SCHEMA = {
    "model": {
        "kind": (str, KIND_CHAIN),
        "n": (int, 1),
        "gamma": (float, 1.0),
        "epsilon": (float, 0.05),
        "dt": (float, 0.01),
    },
    "stepper": {
        "scheme": (str, "strang"),
        "noise_truncation": (_parse_truncation, GRID_NOISE),
        "shared_noise": (_parse_bool, True),
        "reaction_substep": (_parse_bool, True),
    },
    "ams": {
        "n_rep": (int, 100),
        "k_rep": (int, 1),
        "z_a": (float, -0.99),
        "z_b": (float, 0.99),
        "x0": (float, -0.8),
        "max_iterations": (int, 100_000_000),
        "max_steps_per_run": (int, 100_000_000),
    },
    "experiment": {
        "name": (str, "run"),
        "n_mc": (int, 1),
        "seed": (int, 0),
    },
    "direct_mc": {
        "n_samples": (int, 100_000),
    },
    "sweep": {
        "epsilons": (_parse_float_list, [0.3, 0.1, 0.07, 0.05]),
    },
    "trajectories": {
        "max_exported": (int, 50),
        "crossing_level": (float, 0.0),
    },
    "bifurcation": {
        "kappas": (_parse_float_list, [0.2, 0.4, 0.6]),
    },
}


def default_config() -> dict:
    return {sec: {k: copy.copy(d) for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def _assign(config: dict, section: str, key: str, text: str, origin: str) -> None:
    if section not in SCHEMA:
        raise ConfigError(f"unknown section ({origin})", key=section)
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key ({origin})", key=f"{section}.{key}")
    parser, _ = SCHEMA[section][key]
    try:
        config[section][key] = parser(text)
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r}: {exc} ({origin})", key=f"{section}.{key}")


def load_config(path=None, overrides=(), seed=None) -> dict:
    """Resolve defaults, an optional INI file, and ``section.key=value`` overrides."""
    config = default_config()
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", key=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file: {exc}", key=str(path))
        for section in parser.sections():
            for key, text in parser.items(section):
                _assign(config, section, key, text, f"file {path}")
    for item in overrides:
        target, sep, text = item.partition("=")
        section, dot, key = target.partition(".")
        if not sep or not dot:
            raise ConfigError("overrides must look like section.key=value", key=item)
        _assign(config, section.strip(), key.strip(), text, "command line")
    if seed is not None:
        config["experiment"]["seed"] = int(seed)
    return config


def build_model(config: dict) -> ModelParams:
    m = config["model"]
    try:
        return ModelParams(
            kind=m["kind"], n=m["n"], gamma=m["gamma"], epsilon=m["epsilon"],
            dt=m["dt"], potential=double_well())
    except AmsimError as exc:
        raise ConfigError(str(exc), key="model")


def build_stepper(config: dict) -> StepperConfig:
    s = config["stepper"]
    try:
        return StepperConfig(
            params=build_model(config), scheme=s["scheme"],
            noise_truncation=s["noise_truncation"], shared_noise=s["shared_noise"],
            reaction_substep=s["reaction_substep"])
    except AmsimError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="stepper")


def build_ams(config: dict, master_seed: int) -> AmsConfig:
    a = config["ams"]
    stepper = build_stepper(config)
    x0 = np.full(stepper.params.n, a["x0"])
    try:
        return AmsConfig(
            n_rep=a["n_rep"], k_rep=a["k_rep"], z_a=a["z_a"], z_b=a["z_b"],
            x0=x0, stepper=stepper, master_seed=master_seed,
            max_iterations=a["max_iterations"],
            max_steps_per_run=a["max_steps_per_run"])
    except AmsimError as exc:
        raise ConfigError(str(exc), key="ams")
