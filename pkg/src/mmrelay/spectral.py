"""Downlink spectral efficiency under threshold-based relay mode selection.

All SE integrals share the cap ``tau_max``.  ``CoverageTable`` tabulates a
coverage function once on a log-spaced threshold grid and integrates
``p(t) / (1 + t)`` with one additive rule, so that the conditional SEs
recombine into the unconditional one to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import UndefinedConditional
from .analytic import coverage_overall

LN2 = math.log(2.0)
TAU_MAX = 1e4

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class CoverageTable:
    """Coverage ``p(t)`` tabulated in ``u = ln t`` with a cumulative SE integral.

    Below the first knot ``p`` is taken as constant; coverage curves flatten
    out as ``t -> 0`` so the error there is negligible.
    """

    def __init__(self, coverage: Callable[[float], float], tau_max: float = TAU_MAX,
                 db_min: float = -60.0, step_db: float = 0.25):
        self.tau_max = tau_max
        db_max = 10 * math.log10(tau_max)
        n = int(math.ceil((db_max - db_min) / step_db)) + 1
        db = np.linspace(db_min, db_max, n)
        self.u = db * math.log(10) / 10
        self.values = np.array([coverage(10 ** (x / 10)) for x in db])
        self._interp = PchipInterpolator(self.u, self.values)
        seg = np.array([self._segment(a, b) for a, b in zip(self.u[:-1], self.u[1:])])
        t0 = math.exp(self.u[0])
        head = self.values[0] * math.log1p(t0)
        self._cum = np.concatenate(([head], head + np.cumsum(seg)))

    @classmethod
    def constant(cls, value: float, tau_max: float = TAU_MAX) -> "CoverageTable":
        return cls(lambda t: value, tau_max)

    def _segment(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        u = mid + half * _GL_X
        w = 1.0 / (1.0 + np.exp(-u))  # t / (1 + t)
        return float(half * np.sum(_GL_W * np.clip(self._interp(u), 0.0, 1.0) * w))

    def __call__(self, t: float) -> float:
        if t <= 0:
            return float(self.values[0])
        u = math.log(t)
        if u <= self.u[0]:
            return float(self.values[0])
        u = min(u, self.u[-1])
        return float(np.clip(self._interp(u), 0.0, 1.0))

    def integral(self, t: float) -> float:
        """``int_0^t p(x) / (1 + x) dx`` for ``0 <= t <= tau_max``."""
        if t <= 0:
            return 0.0
        t = min(t, self.tau_max)
        u = math.log(t)
        if u <= self.u[0]:
            return float(self.values[0]) * math.log1p(t)
        i = min(int(np.searchsorted(self.u, u, side="right")) - 1, len(self.u) - 2)
        return float(self._cum[i]) + self._segment(self.u[i], u)


CoverageLike = Union[CoverageTable, Callable[[float], float]]


def _table(coverage: CoverageLike, tau_max: float) -> CoverageTable:
    if isinstance(coverage, CoverageTable):
        return coverage
    return CoverageTable(coverage, tau_max)


def se_cellular(coverage: CoverageLike, tau_max: float = TAU_MAX) -> float:
    """Average SE (bits/s/Hz) of the direct link."""
    table = _table(coverage, tau_max)
    return table.integral(table.tau_max) / LN2


def se_conditional_above(coverage: CoverageLike, tau: float, tau_max: float = TAU_MAX) -> float:
    """Mean SE over the event SINR > tau."""
    table = _table(coverage, tau_max)
    p = table(tau)
    if p <= 0:
        raise UndefinedConditional(f"coverage is zero at tau={tau}")
    tail = table.integral(table.tau_max) - table.integral(tau)
    return (math.log1p(tau) + tail / p) / LN2


def se_conditional_below(coverage: CoverageLike, tau: float, tau_max: float = TAU_MAX) -> float:
    """Mean SE over the event SINR <= tau."""
    table = _table(coverage, tau_max)
    p = table(tau)
    if p >= 1:
        raise UndefinedConditional(f"coverage is one at tau={tau}")
    return (-p * math.log1p(tau) + table.integral(tau)) / (LN2 * (1 - p))


def se_overall(cell: CoverageLike, d2d: CoverageLike, tau: float, tau_max: float = TAU_MAX) -> float:
    """Average downlink SE with relaying threshold ``tau``."""
    cell = _table(cell, tau_max)
    d2d = _table(d2d, tau_max)
    p_cell = cell(tau)
    p = coverage_overall(p_cell, d2d(tau))
    if p_cell <= 0:
        return p * math.log2(1 + tau) if p > 0 else se_conditional_below(cell, tau)
    above = se_conditional_above(cell, tau)
    if p_cell >= 1:
        return above
    return p * above + (1 - p) * se_conditional_below(cell, tau)


def se_d2d(d2d: CoverageLike, tau: float, tau_max: float = TAU_MAX) -> float:
    """Mean D2D SE over the event SINR > tau."""
    return se_conditional_above(d2d, tau, tau_max)


def uplink_resource(cell: CoverageLike, d2d: CoverageLike, tau: float,
                    w_dl: float = 1.0, tau_max: float = TAU_MAX) -> float:
    """Uplink bandwidth consumed by relay-to-destination transmissions."""
    cell = _table(cell, tau_max)
    d2d = _table(d2d, tau_max)
    p_cell, p_d2d = cell(tau), d2d(tau)
    relayed = (1 - p_cell) * p_cell * p_d2d
    if relayed == 0:
        return 0.0
    gamma_d = se_d2d(d2d, tau)
    if gamma_d <= 0:
        raise UndefinedConditional("D2D SE is zero")
    return se_conditional_above(cell, tau) / gamma_d * relayed * w_dl


@dataclass
class SpectralResult:
    tau: np.ndarray                 # linear thresholds
    gamma: float                    # direct-link SE
    gamma_above: np.ndarray
    gamma_below: np.ndarray
    gamma_relay: np.ndarray         # relay-assisted SE at each threshold
    uplink_fraction: np.ndarray     # uplink resources / uplink bandwidth

    @property
    def tau_db(self) -> np.ndarray:
        return 10 * np.log10(self.tau)

    @property
    def improvement(self) -> np.ndarray:
        return self.gamma_relay / self.gamma - 1.0

    def peak(self):
        """``(tau_db, relative improvement)`` at the best threshold."""
        i = int(np.argmax(self.gamma_relay))
        return float(self.tau_db[i]), float(self.improvement[i])


def spectral_sweep(cell: CoverageLike, d2d: CoverageLike, taus: Sequence[float],
                   w_dl: float, w_ul: float, tau_max: float = TAU_MAX) -> SpectralResult:
    cell = _table(cell, tau_max)
    d2d = _table(d2d, tau_max)
    taus = np.asarray(taus, dtype=float)

    def safe(fn, *args):
        try:
            return fn(*args)
        except UndefinedConditional:
            return math.nan

    above = np.array([safe(se_conditional_above, cell, t) for t in taus])
    below = np.array([safe(se_conditional_below, cell, t) for t in taus])
    overall = np.array([se_overall(cell, d2d, t) for t in taus])
    resource = np.array([safe(uplink_resource, cell, d2d, t, w_dl) for t in taus]) / w_ul
    return SpectralResult(taus, se_cellular(cell), above, below, overall, resource)
