"""Experiment configuration and the flat ``key = value`` config file format.

Example::

    # uplink rate sweep over transmit power
    scenario = uplink
    M = 4
    N = 64
    a_values = 2
    power_sweep_dbm = 0, 5, 10, 15, 20, 25, 30
    trials = 500
    base_seed = 2024
    schemes = rdars_opt, rdars_rand_index, rdars_rand_phase, das, passive_ris

Lists are comma-separated; ``#`` starts a comment. Every key is optional
and defaults to the values of :class:`ExperimentConfig`.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

from rdars.channel import LINKS, FadingParams, Geometry, db_to_linear
from rdars.errors import ConfigError
from rdars.optimize import OptimizerOptions

SCENARIOS = ("uplink", "isac")
SCHEMES = ("rdars_opt", "rdars_rand_index", "rdars_rand_phase", "das", "passive_ris")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "uplink"
    M: int = 4
    N: int = 64
    a_values: Tuple[int, ...] = (2,)
    power_sweep_dbm: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    gamma_th_db: Optional[float] = None
    trials: int = 500
    base_seed: int = 2024
    schemes: Tuple[str, ...] = SCHEMES
    noise_power_dbm: float = -90.0
    alpha_db: float = -10.0
    geometry: Geometry = field(default_factory=Geometry)
    fading: FadingParams = field(default_factory=FadingParams)
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.M < 1 or self.N < 1:
            raise ConfigError("M, N: must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if not self.a_values:
            raise ConfigError("a_values: must not be empty")
        for a in self.a_values:
            if not 0 <= a <= self.N:
                raise ConfigError(f"a_values: {a} is outside [0, N={self.N}]")
        if not self.schemes:
            raise ConfigError("schemes: must not be empty")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"schemes: unknown scheme {s!r}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes: duplicate entries")
        if not self.power_sweep_dbm:
            raise ConfigError("power_sweep_dbm: must not be empty")
        if self.scenario == "isac":
            if self.gamma_th_db is None:
                raise ConfigError("gamma_th_db: required for the isac scenario")
            if self.geometry.target_position is None:
                raise ConfigError("target_position: required for the isac scenario")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigError("base_seed: must be an unsigned 64-bit integer")

    @property
    def noise_power(self) -> float:
        return db_to_linear(self.noise_power_dbm - 30.0)

    @property
    def alpha(self) -> complex:
        return complex(db_to_linear(self.alpha_db) ** 0.5)

    @property
    def gamma_th(self) -> float:
        """QoS threshold in linear scale; ``-inf`` dB maps to 0."""
        if self.gamma_th_db is None:
            return 0.0
        return db_to_linear(self.gamma_th_db)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def canonical_text(self) -> str:
        """Stable text rendering of every setting; hashed into the run manifest."""
        return "\n".join(f"{k} = {v}" for k, v in sorted(to_mapping(self).items())) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


# -- parsing ------------------------------------------------------------------

def _int(key, v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {v!r}") from None


def _float(key, v):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {v!r}") from None


def _list(key, v, conv):
    items = [x.strip() for x in v.split(",") if x.strip()]
    return tuple(conv(key, x) for x in items)


def _vec3(key, v):
    out = _list(key, v, _float)
    if len(out) != 3:
        raise ConfigError(f"{key}: expected 3 comma-separated coordinates, got {v!r}")
    return out


def _str(key, v):
    return v.strip()


_TOP = {
    "scenario": _str,
    "M": _int,
    "N": _int,
    "a_values": lambda k, v: _list(k, v, _int),
    "power_sweep_dbm": lambda k, v: _list(k, v, _float),
    "gamma_th_db": lambda k, v: None if v.strip().lower() in ("", "none") else _float(k, v),
    "trials": _int,
    "base_seed": _int,
    "schemes": lambda k, v: _list(k, v, _str),
    "noise_power_dbm": _float,
    "alpha_db": _float,
}
_GEOMETRY = {f"{n}_position": n for n in ("bs", "rdars", "user", "target")}
_OPTIMIZER = {
    "max_iterations": _int,
    "convergence_tol": _float,
    "n_random_starts": _int,
    "mode_search": _str,
    "greedy_max_swaps": _int,
    "exhaustive_cap": _int,
    "optimizer_seed": _int,
}


def parse_config_text(text: str) -> Dict[str, str]:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"{key}: given more than once")
        raw[key] = value
    return raw


def from_mapping(raw: Dict[str, str]) -> ExperimentConfig:
    top, geo, fade, opt = {}, {}, {}, {}
    exponents = dict(FadingParams().exponent_per_link)
    k_factors = dict(FadingParams().rician_k_per_link)
    for key, value in raw.items():
        if key in _TOP:
            top[key] = _TOP[key](key, value)
        elif key in _GEOMETRY:
            geo[key] = None if value.strip().lower() == "none" else _vec3(key, value)
        elif key == "pathloss_ref_gain_db":
            fade["pathloss_ref_gain"] = db_to_linear(_float(key, value))
        elif key in ("pathloss_ref_distance", "element_spacing"):
            fade[key] = _float(key, value)
        elif key.startswith("exponent_") and key[len("exponent_"):] in LINKS:
            exponents[key[len("exponent_"):]] = _float(key, value)
        elif key.startswith("k_factor_") and key[len("k_factor_"):] in LINKS:
            k_factors[key[len("k_factor_"):]] = _float(key, value)
        elif key in _OPTIMIZER:
            name = "seed" if key == "optimizer_seed" else key
            opt[name] = _OPTIMIZER[key](key, value)
        else:
            raise ConfigError(f"{key}: unknown config key")
    try:
        return ExperimentConfig(
            geometry=Geometry(**geo),
            fading=FadingParams(exponent_per_link=exponents, rician_k_per_link=k_factors, **fade),
            optimizer=OptimizerOptions(**opt),
            **top,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return from_mapping(parse_config_text(text))


def to_mapping(config: ExperimentConfig) -> Dict[str, str]:
    """Inverse of :func:`from_mapping`, as strings."""
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return ", ".join(fmt(x) for x in v)
        return repr(v) if isinstance(v, float) else str(v)

    out = {f.name: fmt(getattr(config, f.name)) for f in fields(config)
           if f.name not in ("geometry", "fading", "optimizer")}
    for key in _GEOMETRY:
        out[key] = fmt(getattr(config.geometry, key))
    fd = config.fading
    out["pathloss_ref_gain_db"] = fmt(10 * math.log10(fd.pathloss_ref_gain))
    out["pathloss_ref_distance"] = fmt(fd.pathloss_ref_distance)
    out["element_spacing"] = fmt(fd.element_spacing)
    for link in LINKS:
        out[f"exponent_{link}"] = fmt(fd.exponent(link))
        out[f"k_factor_{link}"] = fmt(fd.k_factor(link))
    for key in _OPTIMIZER:
        name = "seed" if key == "optimizer_seed" else key
        out[key] = fmt(getattr(config.optimizer, name))
    return out
