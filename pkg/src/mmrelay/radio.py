"""Sectored antenna arrays, path loss, and link-level power.

Everything is linear SI internally; the dB helpers exist for configuration
and reporting only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameter


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0) if np.ndim(x) else 10.0 ** (x / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x) if np.ndim(x) else 10.0 * math.log10(x)


def dbm2watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class AntennaPattern:
    """Sectored (flat-top) beam: main-lobe gain inside ``beamwidth``."""

    beamwidth: float
    main_gain: float
    side_gain: float
    elements: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.beamwidth <= 2 * math.pi:
            raise InvalidParameter(f"beamwidth must lie in (0, 2pi], got {self.beamwidth}")
        if not self.main_gain >= self.side_gain > 0:
            raise InvalidParameter("need main_gain >= side_gain > 0")

    @classmethod
    def isotropic(cls) -> "AntennaPattern":
        return cls(2 * math.pi, 1.0, 1.0)

    @property
    def main_lobe_fraction(self) -> float:
        return self.beamwidth / (2 * math.pi)


def derive_pattern(n: int) -> AntennaPattern:
    """Pattern of an ``n x n`` half-wavelength uniform planar array."""
    if int(n) != n or n < 2:
        raise InvalidParameter(f"array needs at least 2 elements per side, got {n}")
    n = int(n)
    return AntennaPattern(
        beamwidth=1.732 / n,
        main_gain=float(n * n),
        side_gain=1.0 / math.sin(3 * math.pi / (2 * n)) ** 2,
        elements=n,
    )


@dataclass(frozen=True)
class GainMixture:
    """Discrete law of the product gain seen from a random-boresight interferer.

    Order: (tx main, rx main), (tx main, rx side), (tx side, rx main),
    (tx side, rx side).
    """

    gains: tuple
    probs: tuple
    tx: Optional[AntennaPattern] = None
    rx: Optional[AntennaPattern] = None

    def __post_init__(self):
        if len(self.gains) != 4 or len(self.probs) != 4:
            raise InvalidParameter("a gain mixture has exactly four outcomes")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1) > 1e-12:
            raise InvalidParameter("mixture probabilities must be >= 0 and sum to 1")

    @property
    def boresight_gain(self) -> float:
        return self.gains[0]

    @property
    def tx_main_fraction(self) -> float:
        return self.tx.main_lobe_fraction if self.tx is not None else self.probs[0] + self.probs[1]

    @property
    def rx_beamwidth(self) -> float:
        return self.rx.beamwidth if self.rx is not None else 2 * math.pi * (self.probs[0] + self.probs[2])


def gain_mixture(tx: AntennaPattern, rx: AntennaPattern) -> GainMixture:
    pt, pr = tx.main_lobe_fraction, rx.main_lobe_fraction
    gains = (
        tx.main_gain * rx.main_gain,
        tx.main_gain * rx.side_gain,
        tx.side_gain * rx.main_gain,
        tx.side_gain * rx.side_gain,
    )
    probs = (pt * pr, pt * (1 - pr), (1 - pt) * pr, (1 - pt) * (1 - pr))
    return GainMixture(gains, probs, tx, rx)


def sample_interferer_gain(mix: GainMixture, rng: np.random.Generator, size=None):
    """Draw interferer gains by sampling both boresights uniformly."""
    idx = rng.choice(4, size=size, p=np.asarray(mix.probs))
    return np.asarray(mix.gains)[idx] if size is not None else mix.gains[int(idx)]


@dataclass(frozen=True)
class PathLossModel:
    """``PL(dB) = a1 log10(d) + a2 + a3 log10(fc) + x`` with d in m, fc in GHz."""

    a1: float
    a2: float
    a3: float
    x: float = 0.0
    carrier_ghz: float = 28.0
    tag: str = "los"

    def __post_init__(self):
        if not self.a1 > 0:
            raise InvalidParameter("path loss slope must be positive")
        if not self.carrier_ghz > 0:
            raise InvalidParameter("carrier frequency must be positive")

    @property
    def exponent(self) -> float:
        return self.a1 / 10.0

    @property
    def intercept(self) -> float:
        return 10.0 ** ((self.a2 + self.x) / 10.0) * self.carrier_ghz ** (self.a3 / 10.0)

    def db(self, d):
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0):
            raise InvalidParameter("distance must be positive")
        out = self.a1 * np.log10(d) + self.a2 + self.a3 * math.log10(self.carrier_ghz) + self.x
        return out if out.ndim else float(out)


def path_loss_linear(model: PathLossModel, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise InvalidParameter("distance must be positive")
    out = model.intercept * d**model.exponent
    return out if out.ndim else float(out)


_LOG15 = math.log10(1.5)

# name -> (a1, a2, a3); Ind microwave formulas are in log10(d / 1000)
PATH_LOSS_FORMULAS = {
    "uma-mmwave-los": (20.0, 32.4, 20.0),
    "ind-mmwave-los": (17.3, 32.4, 20.0),
    "uma-microwave-los": (22.7, 27.0, 20.0),
    "uma-microwave-nlos": (44.9 - 6.55 * _LOG15, 14.78 + 5.83 * _LOG15, 34.97),
    "ind-microwave-los": (16.9, 89.5 - 3 * 16.9, 0.0),
    "ind-microwave-nlos": (43.3, 147.4 - 3 * 43.3, 0.0),
}


def named_path_loss(name: str, carrier_ghz: float) -> PathLossModel:
    try:
        a1, a2, a3 = PATH_LOSS_FORMULAS[name]
    except KeyError:
        raise InvalidParameter(
            f"unknown path loss model {name!r}; choose from {sorted(PATH_LOSS_FORMULAS)}"
        ) from None
    return PathLossModel(a1, a2, a3, 0.0, carrier_ghz, "nlos" if name.endswith("nlos") else "los")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float
    sigma2: float
    bandwidth_hz: float
    band: str = "mmwave"
    tx_pattern: Optional[AntennaPattern] = None
    rx_pattern: Optional[AntennaPattern] = None

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidParameter("normalized noise must be positive")
        if not self.bandwidth_hz > 0:
            raise InvalidParameter("bandwidth must be positive")
        if self.band not in ("mmwave", "microwave"):
            raise InvalidParameter(f"unknown band {self.band!r}")

    @property
    def tx_power_w(self) -> float:
        return dbm2watt(self.tx_power_dbm)


def rx_power_mmwave(budget: LinkBudget, gain, model: PathLossModel, d, blocked=False):
    """Received power in W; blocked mmWave links carry nothing."""
    p = budget.tx_power_w * np.asarray(gain, dtype=float) / path_loss_linear(model, d)
    p = np.where(blocked, 0.0, p)
    return p if p.ndim else float(p)


def rx_power_microwave(budget: LinkBudget, h, model: PathLossModel, d):
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise InvalidParameter("fading power must be >= 0")
    p = budget.tx_power_w * h / path_loss_linear(model, d)
    return p if np.ndim(p) else float(p)


def normalized_noise(noise_density_dbm_hz: float, bandwidth_hz: float,
                     noise_figure_db: float, tx_power_dbm: float) -> float:
    """Noise power over transmit power (linear)."""
    if not bandwidth_hz > 0:
        raise InvalidParameter("bandwidth must be positive")
    return 10.0 ** ((noise_density_dbm_hz + 10 * math.log10(bandwidth_hz) + noise_figure_db - tx_power_dbm) / 10.0)
