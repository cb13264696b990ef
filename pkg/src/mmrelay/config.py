"""Scenario configuration: TOML schema, built-in presets, derived quantities.

A scenario file is TOML with the sections below.  Units are part of every
key name.  A file may start from a preset with a top-level ``preset = "uma"``
and override individual keys.

.. code-block:: toml

    preset = "uma"

    [obstacles]
    coverage_ratio = 0.3
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .analytic import CoverageInputs
from .errors import InvalidParameter
from .geometry import LosModel, ObstacleLaw, thinning_factor
from .radio import (
    AntennaPattern,
    derive_pattern,
    gain_mixture,
    named_path_loss,
    normalized_noise,
    PathLossModel,
)

DERIVE = "derive"


class ConfigError(InvalidParameter):
    """Invalid or incomplete scenario configuration."""


# field name -> TOML section
SECTIONS = {
    "name": None,
    "bs_intensity_per_m2": "network",
    "relays_per_cell": "network",
    "multiplexing_factor": "network",
    "isd_m": "network",
    "obstacle_shape": "obstacles",
    "coverage_ratio": "obstacles",
    "obstacle_intensity_per_m2": "obstacles",
    "radius_min_m": "obstacles",
    "radius_max_m": "obstacles",
    "height_min_m": "obstacles",
    "height_max_m": "obstacles",
    "eta_cellular": "obstacles",
    "eta_d2d": "obstacles",
    "bs_height_m": "antennas",
    "ue_height_m": "antennas",
    "bs_elements_per_side": "antennas",
    "ue_elements_per_side": "antennas",
    "bs_tx_power_dbm": "power",
    "ue_tx_power_dbm": "power",
    "noise_density_dbm_per_hz": "power",
    "ue_noise_figure_db": "power",
    "mmwave_carrier_ghz": "mmwave",
    "mmwave_bandwidth_hz": "mmwave",
    "mmwave_path_loss": "mmwave",
    "microwave_carrier_ghz": "microwave",
    "microwave_bandwidth_hz": "microwave",
    "microwave_path_loss_los": "microwave",
    "microwave_path_loss_nlos": "microwave",
    "tau_max_db": "analysis",
    "fading_mu": "analysis",
}

# TOML key inside its section (section prefix dropped where redundant)
_KEY_ALIASES = {
    "mmwave_carrier_ghz": "carrier_ghz",
    "mmwave_bandwidth_hz": "bandwidth_hz",
    "mmwave_path_loss": "path_loss",
    "microwave_carrier_ghz": "carrier_ghz",
    "microwave_bandwidth_hz": "bandwidth_hz",
    "microwave_path_loss_los": "path_loss_los",
    "microwave_path_loss_nlos": "path_loss_nlos",
    "obstacle_shape": "shape",
    "obstacle_intensity_per_m2": "intensity_per_m2",
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    bs_intensity_per_m2: float
    relays_per_cell: float
    radius_min_m: float
    radius_max_m: float
    height_min_m: float
    height_max_m: float
    eta_cellular: Union[float, str]
    eta_d2d: Union[float, str]
    bs_height_m: float
    ue_height_m: float
    bs_tx_power_dbm: float
    ue_tx_power_dbm: float
    noise_density_dbm_per_hz: float
    ue_noise_figure_db: float
    mmwave_path_loss: str
    microwave_path_loss_los: str
    microwave_path_loss_nlos: str
    coverage_ratio: Optional[float] = None
    obstacle_intensity_per_m2: Optional[float] = None
    obstacle_shape: str = "cylinder"
    multiplexing_factor: float = 1.0
    isd_m: Optional[float] = None
    bs_elements_per_side: int = 8
    ue_elements_per_side: int = 2
    mmwave_carrier_ghz: float = 28.0
    mmwave_bandwidth_hz: float = 100e6
    microwave_carrier_ghz: float = 2.0
    microwave_bandwidth_hz: float = 20e6
    tau_max_db: float = 40.0
    fading_mu: float = 1.0
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        self._validate()

    # -- validation --------------------------------------------------------

    def _validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        need(self.bs_intensity_per_m2 >= 0, "bs_intensity_per_m2", "must be >= 0")
        need(self.relays_per_cell >= 0, "relays_per_cell", "must be >= 0")
        need(0 <= self.multiplexing_factor <= 1, "multiplexing_factor", "must lie in [0, 1]")
        need((self.coverage_ratio is None) != (self.obstacle_intensity_per_m2 is None),
             "coverage_ratio", "set exactly one of coverage_ratio and intensity_per_m2")
        if self.coverage_ratio is not None:
            need(0 <= self.coverage_ratio < 1, "coverage_ratio", "must lie in [0, 1)")
        else:
            need(self.obstacle_intensity_per_m2 >= 0, "obstacle_intensity_per_m2", "must be >= 0")
        need(0 < self.radius_min_m <= self.radius_max_m, "radius_min_m", "need 0 < min <= max")
        need(0 <= self.height_min_m <= self.height_max_m, "height_min_m", "need 0 <= min <= max")
        need(self.obstacle_shape == "cylinder", "obstacle_shape",
             "analytic scenarios use cylindrical obstacles")
        for name in ("eta_cellular", "eta_d2d"):
            v = getattr(self, name)
            need(v == DERIVE or (isinstance(v, (int, float)) and 0 <= v <= 1), name,
                 f"must be a number in [0, 1] or {DERIVE!r}")
        need(self.bs_height_m >= 0 and self.ue_height_m >= 0, "bs_height_m", "heights must be >= 0")
        for name in ("bs_elements_per_side", "ue_elements_per_side"):
            v = getattr(self, name)
            need(isinstance(v, int) and v >= 2, name, "must be an integer >= 2")
        for name in ("mmwave_bandwidth_hz", "microwave_bandwidth_hz", "mmwave_carrier_ghz",
                     "microwave_carrier_ghz", "fading_mu"):
            need(getattr(self, name) > 0, name, "must be positive")
        for name in ("mmwave_path_loss", "microwave_path_loss_los", "microwave_path_loss_nlos"):
            try:
                named_path_loss(getattr(self, name), 1.0)
            except InvalidParameter as exc:
                raise ConfigError(f"{name}: {exc}") from None
        if self.isd_m is not None:
            need(self.isd_m > 0, "isd_m", "must be positive")

    # -- derived quantities ------------------------------------------------

    @property
    def lambda_b(self) -> float:
        return self.bs_intensity_per_m2

    @property
    def lambda_r(self) -> float:
        return self.relays_per_cell * self.bs_intensity_per_m2

    @property
    def tau_max(self) -> float:
        return 10.0 ** (self.tau_max_db / 10.0)

    @property
    def obstacle_law(self) -> ObstacleLaw:
        marks = dict(radius_min=self.radius_min_m, radius_max=self.radius_max_m,
                     height_min=self.height_min_m, height_max=self.height_max_m)
        if self.coverage_ratio is not None:
            return ObstacleLaw.from_coverage_ratio(self.coverage_ratio, **marks)
        return ObstacleLaw(intensity=self.obstacle_intensity_per_m2, **marks)

    @property
    def xi(self) -> float:
        return self.obstacle_law.coverage_ratio

    def _eta(self, value, h_tx, h_rx) -> float:
        if value == DERIVE:
            return thinning_factor(h_tx, h_rx, (self.height_min_m, self.height_max_m))
        return float(value)

    @property
    def eta_cellular_value(self) -> float:
        return self._eta(self.eta_cellular, self.bs_height_m, self.ue_height_m)

    @property
    def eta_d2d_value(self) -> float:
        return self._eta(self.eta_d2d, self.ue_height_m, self.ue_height_m)

    @property
    def los_cellular(self) -> LosModel:
        return LosModel.from_obstacles(self.obstacle_law, self.bs_height_m, self.ue_height_m,
                                       self.eta_cellular_value)

    @property
    def los_d2d(self) -> LosModel:
        return LosModel.from_obstacles(self.obstacle_law, self.ue_height_m, self.ue_height_m,
                                       self.eta_d2d_value)

    @property
    def bs_pattern(self) -> AntennaPattern:
        return derive_pattern(self.bs_elements_per_side)

    @property
    def ue_pattern(self) -> AntennaPattern:
        return derive_pattern(self.ue_elements_per_side)

    def path_loss(self, link: str) -> PathLossModel:
        if link in ("cellular", "d2d-mmwave"):
            return named_path_loss(self.mmwave_path_loss, self.mmwave_carrier_ghz)
        if link == "microwave-los":
            return named_path_loss(self.microwave_path_loss_los, self.microwave_carrier_ghz)
        if link == "microwave-nlos":
            return named_path_loss(self.microwave_path_loss_nlos, self.microwave_carrier_ghz)
        raise InvalidParameter(f"unknown link {link!r}")

    def sigma2(self, link: str) -> float:
        if link == "cellular":
            power, bw = self.bs_tx_power_dbm, self.mmwave_bandwidth_hz
        elif link == "d2d-mmwave":
            power, bw = self.ue_tx_power_dbm, self.mmwave_bandwidth_hz
        elif link == "d2d-microwave":
            power, bw = self.ue_tx_power_dbm, self.microwave_bandwidth_hz
        else:
            raise InvalidParameter(f"unknown link {link!r}")
        return normalized_noise(self.noise_density_dbm_per_hz, bw, self.ue_noise_figure_db, power)

    def d2d_bandwidth(self, band: str) -> float:
        return self.mmwave_bandwidth_hz if band == "mmwave" else self.microwave_bandwidth_hz

    def coverage_inputs(self) -> CoverageInputs:
        return CoverageInputs(
            lambda_b=self.lambda_b,
            lambda_r=self.lambda_r,
            los_cellular=self.los_cellular,
            los_d2d=self.los_d2d,
            mix_cellular=gain_mixture(self.bs_pattern, self.ue_pattern),
            mix_d2d=gain_mixture(self.ue_pattern, self.ue_pattern),
            pl_cellular=self.path_loss("cellular"),
            pl_d2d_mmwave=self.path_loss("d2d-mmwave"),
            pl_microwave_los=self.path_loss("microwave-los"),
            pl_microwave_nlos=self.path_loss("microwave-nlos"),
            sigma2_cellular=self.sigma2("cellular"),
            sigma2_d2d_mmwave=self.sigma2("d2d-mmwave"),
            sigma2_d2d_microwave=self.sigma2("d2d-microwave"),
            rho=self.multiplexing_factor,
            mu=self.fading_mu,
        )

    # -- overrides and serialization --------------------------------------

    def with_coverage_ratio(self, xi: float) -> "ScenarioConfig":
        return dataclasses.replace(self, coverage_ratio=xi, obstacle_intensity_per_m2=None)

    def with_isd(self, isd_m: float) -> "ScenarioConfig":
        """Match the BS intensity to a hexagonal grid of the given ISD."""
        return dataclasses.replace(self, isd_m=isd_m, bs_intensity_per_m2=hex_intensity(isd_m))

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        out: dict = {}
        for f in dataclasses.fields(self):
            if f.name == "warnings":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            section = SECTIONS[f.name]
            key = _KEY_ALIASES.get(f.name, f.name)
            if section is None:
                out[key] = value
            else:
                out.setdefault(section, {})[key] = value
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def hex_intensity(isd_m: float) -> float:
    """Sites per m^2 of an infinite hexagonal grid with the given ISD."""
    return 2.0 / (math.sqrt(3.0) * isd_m**2)


PRESETS = {
    "uma": {
        "name": "uma",
        "network": {"bs_intensity_per_m2": 4.62e-6, "relays_per_cell": 10,
                    "multiplexing_factor": 1.0, "isd_m": 500.0},
        "obstacles": {"shape": "cylinder", "coverage_ratio": 0.2,
                      "radius_min_m": 20.0, "radius_max_m": 30.0,
                      "height_min_m": 5.0, "height_max_m": 25.0,
                      "eta_cellular": 0.5875, "eta_d2d": 1.0},
        "antennas": {"bs_height_m": 25.0, "ue_height_m": 1.5,
                     "bs_elements_per_side": 8, "ue_elements_per_side": 2},
        "power": {"bs_tx_power_dbm": 35.0, "ue_tx_power_dbm": 23.0,
                  "noise_density_dbm_per_hz": -174.0, "ue_noise_figure_db": 9.0},
        "mmwave": {"carrier_ghz": 28.0, "bandwidth_hz": 100e6, "path_loss": "uma-mmwave-los"},
        "microwave": {"carrier_ghz": 2.0, "bandwidth_hz": 20e6,
                      "path_loss_los": "uma-microwave-los", "path_loss_nlos": "uma-microwave-nlos"},
        "analysis": {"tau_max_db": 40.0, "fading_mu": 1.0},
    },
    "ind": {
        "name": "ind",
        "network": {"bs_intensity_per_m2": 2e-3, "relays_per_cell": 3,
                    "multiplexing_factor": 1.0},
        # 15 obstacles per 100 m^2
        "obstacles": {"shape": "cylinder", "intensity_per_m2": 0.15,
                      "radius_min_m": 0.3, "radius_max_m": 0.6,
                      "height_min_m": 1.0, "height_max_m": 2.0,
                      "eta_cellular": 0.5, "eta_d2d": 1.0},
        "antennas": {"bs_height_m": 3.0, "ue_height_m": 1.0,
                     "bs_elements_per_side": 8, "ue_elements_per_side": 2},
        "power": {"bs_tx_power_dbm": 24.0, "ue_tx_power_dbm": 23.0,
                  "noise_density_dbm_per_hz": -174.0, "ue_noise_figure_db": 9.0},
        "mmwave": {"carrier_ghz": 28.0, "bandwidth_hz": 100e6, "path_loss": "ind-mmwave-los"},
        "microwave": {"carrier_ghz": 2.0, "bandwidth_hz": 20e6,
                      "path_loss_los": "ind-microwave-los", "path_loss_nlos": "ind-microwave-nlos"},
        "analysis": {"tau_max_db": 40.0, "fading_mu": 1.0},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    # an explicit intensity replaces an inherited ratio and vice versa
    obs, over_obs = out.get("obstacles", {}), over.get("obstacles", {})
    if "coverage_ratio" in over_obs:
        obs.pop("intensity_per_m2", None)
    elif "intensity_per_m2" in over_obs:
        obs.pop("coverage_ratio", None)
    return out


def from_dict(data: dict) -> ScenarioConfig:
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        data = _merge(PRESETS[preset], data)

    reverse = {}
    for fname, section in SECTIONS.items():
        reverse[(section, _KEY_ALIASES.get(fname, fname))] = fname

    kwargs, unknown = {}, []
    for key, value in data.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                fname = reverse.get((key, sub))
                if fname is None:
                    unknown.append(f"{key}.{sub}")
                else:
                    kwargs[fname] = v
        else:
            fname = reverse.get((None, key))
            if fname is None:
                unknown.append(key)
            else:
                kwargs[fname] = value
    kwargs.setdefault("name", preset or "custom")
    required = [f.name for f in dataclasses.fields(ScenarioConfig)
                if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING]
    for name in required:
        if name not in kwargs:
            section = SECTIONS[name]
            where = f"{section}.{_KEY_ALIASES.get(name, name)}" if section else name
            raise ConfigError(f"{where}: missing required field")
    for name in ("bs_elements_per_side", "ue_elements_per_side"):
        if isinstance(kwargs.get(name), float) and kwargs[name].is_integer():
            kwargs[name] = int(kwargs[name])
    kwargs["warnings"] = tuple(f"unknown key ignored: {k}" for k in unknown)
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def preset(name: str) -> ScenarioConfig:
    return from_dict({"preset": name})


def loads(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return from_dict(data)


def load_config(path) -> ScenarioConfig:
    return loads(Path(path).read_text())
