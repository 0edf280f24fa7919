"""Flat ``key = value`` run configuration.

Units are part of every key name (``_mhz`` for ordinary frequencies, ``_khz``
for Larmor frequencies, ``_mg`` for fields). Unknown keys are rejected so a
misspelt unit does not silently fall back to a default.

Example::

    model = eight
    b_field_mg = 39
    detuning_start_mhz = -50
    detuning_stop_mhz = 30
    detuning_points = 201
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .atom import (
    TWO_PI,
    EightLevelParams,
    FourLevelParams,
    MagneticField,
    field_for_larmor,
    larmor_splitting,
    mhz_to_angular,
    polarization_from_name,
)
from .fitting import GAMMA_DP_MHZ, GAMMA_SP_MHZ, PARAM_NAMES

MODEL_ALIASES = {
    "four": "four",
    "four-level": "four",
    "4": "four",
    "eight": "eight",
    "eight-level": "eight",
    "8": "eight",
}


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _strings(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    model: str = "eight"
    # drive and field; the 4-level model uses the *_ir_* keys for its single laser
    rabi_ir_mhz: float = float(np.sqrt(2.27) * GAMMA_DP_MHZ)
    detuning_ir_mhz: float = 0.0
    rabi_uv_mhz: float = float(np.sqrt(1.19) * GAMMA_SP_MHZ)
    detuning_uv_mhz: float = -14.7
    b_field_mg: float = None
    larmor_khz: float = None
    gamma_sp_mhz: float = GAMMA_SP_MHZ
    gamma_dp_mhz: float = GAMMA_DP_MHZ
    polarization_uv: str = "perp"
    polarization_ir: str = "perp"
    g_s: float = 2.0
    g_p: float = 2.0 / 3.0
    g_d: float = 0.8
    # scans
    power_start_mhz2: float = None
    power_stop_mhz2: float = None
    power_points: int = 150
    power_spacing: str = "log"
    detuning_start_mhz: float = -50.0
    detuning_stop_mhz: float = 30.0
    detuning_points: int = 201
    detuning_spacing: str = "linear"
    larmor_list_khz: tuple = (5.0, 10.0, 20.0, 30.0, 40.0, 50.0)
    # fitting and synthetic data
    scale: float = 1.0
    background: float = 0.0
    fit_free: tuple = PARAM_NAMES
    fit_max_iter: int = 200
    noise: float = 0.01
    show_populations: bool = False
    out: str = None

    _DEFAULT_B_MG = 39.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        model = MODEL_ALIASES.get(str(self.model).strip().lower())
        if model is None:
            raise ConfigError(f"model must be four or eight, got {self.model!r}")
        self.model = model
        if self.b_field_mg is not None and self.larmor_khz is not None:
            raise ConfigError("give either b_field_mg or larmor_khz, not both")
        if self.b_field_mg is not None and self.b_field_mg < 0:
            raise ConfigError("b_field_mg must be >= 0")
        for name in ("rabi_ir_mhz", "rabi_uv_mhz", "gamma_sp_mhz", "gamma_dp_mhz", "noise"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.model == "eight" and not (self.gamma_sp_mhz > 0 and self.gamma_dp_mhz > 0):
            raise ConfigError("the eight-level model needs gamma_sp_mhz > 0 and gamma_dp_mhz > 0")
        if self.model == "four" and self.gamma_sp_mhz + self.gamma_dp_mhz <= 0:
            raise ConfigError("the four-level model needs a positive total decay rate")
        for name in ("power_spacing", "detuning_spacing"):
            if getattr(self, name) not in ("linear", "log"):
                raise ConfigError(f"{name} must be linear or log")
        for name in ("power_points", "detuning_points", "fit_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        bad = set(self.fit_free) - set(PARAM_NAMES)
        if bad:
            raise ConfigError(f"unknown fit parameters {sorted(bad)}; choose from {list(PARAM_NAMES)}")
        for name in ("polarization_uv", "polarization_ir"):
            try:
                polarization_from_name(getattr(self, name))
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from None

    # -- derived quantities ---------------------------------------------------

    @property
    def field_mg(self):
        if self.b_field_mg is not None:
            return self.b_field_mg
        if self.larmor_khz is not None:
            return field_for_larmor(abs(self.larmor_khz) * 1e3, self.g_d)
        return self._DEFAULT_B_MG

    @property
    def zeeman_rad(self):
        """D-state (4-level: ground) Zeeman splitting in rad/s."""
        if self.larmor_khz is not None:
            return TWO_PI * self.larmor_khz * 1e3
        return larmor_splitting(self.field_mg, self.g_d)

    def four_level(self):
        return FourLevelParams.from_total(
            omega=mhz_to_angular(self.rabi_ir_mhz),
            delta_laser=mhz_to_angular(self.detuning_ir_mhz),
            delta_zeeman=self.zeeman_rad,
            gamma_t=mhz_to_angular(self.gamma_sp_mhz + self.gamma_dp_mhz),
            gamma_s=mhz_to_angular(self.gamma_sp_mhz),
        )

    def eight_level(self):
        return EightLevelParams(
            rabi_uv=mhz_to_angular(self.rabi_uv_mhz),
            rabi_ir=mhz_to_angular(self.rabi_ir_mhz),
            detuning_uv=mhz_to_angular(self.detuning_uv_mhz),
            detuning_ir=mhz_to_angular(self.detuning_ir_mhz),
            b_field=MagneticField(self.field_mg),
            gamma_sp=mhz_to_angular(self.gamma_sp_mhz),
            gamma_dp=mhz_to_angular(self.gamma_dp_mhz),
            polarization_uv=polarization_from_name(self.polarization_uv),
            polarization_ir=polarization_from_name(self.polarization_ir),
            g_s=self.g_s,
            g_p=self.g_p,
            g_d=self.g_d,
        )

    def params(self):
        return self.four_level() if self.model == "four" else self.eight_level()

    def fit_initial(self):
        return {
            "b_field_mg": self.field_mg,
            "rabi_uv_mhz": self.rabi_uv_mhz,
            "rabi_ir_mhz": self.rabi_ir_mhz,
            "detuning_uv_mhz": self.detuning_uv_mhz,
            "scale": self.scale,
            "background": self.background,
        }

    def template(self):
        return replace(self.eight_level(), rabi_uv=0.0, rabi_ir=0.0, detuning_uv=0.0, detuning_ir=0.0)

    def detuning_grid_mhz(self):
        return _grid(self.detuning_start_mhz, self.detuning_stop_mhz, self.detuning_points, self.detuning_spacing)

    def power_grid_mhz2(self, centre_mhz2):
        start = self.power_start_mhz2 if self.power_start_mhz2 is not None else centre_mhz2 / 30
        stop = self.power_stop_mhz2 if self.power_stop_mhz2 is not None else centre_mhz2 * 30
        return _grid(start, stop, self.power_points, self.power_spacing)


def _grid(start, stop, points, spacing):
    if points > 1 and not stop > start:
        raise ConfigError(f"grid stop ({stop}) must exceed start ({start})")
    if spacing == "log":
        if start <= 0:
            raise ConfigError("log-spaced grids need a positive start")
        return np.geomspace(start, stop, points)
    return np.linspace(start, stop, points)


_TYPES = {
    "model": str,
    "polarization_uv": str,
    "polarization_ir": str,
    "power_spacing": str,
    "detuning_spacing": str,
    "out": str,
    "power_points": int,
    "detuning_points": int,
    "fit_max_iter": int,
    "show_populations": _bool,
    "larmor_list_khz": _floats,
    "fit_free": _strings,
}


def config_keys():
    return [f.name for f in fields(RunConfig)]


def parse_config(text, source="<config>"):
    """Parse configuration text; raises :class:`ConfigError` with a line number."""
    values = {}
    keys = set(config_keys())
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in keys:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        conv = _TYPES.get(key, float)
        try:
            values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, str(path))
