"""Closed-form coverage of relay-assisted mmWave downlinks.

Coverage integrals run over the distance to the serving transmitter and are
evaluated with :func:`~mmrelay.quadrature.integrate_improper`.  mmWave links
use dominant-interferer analysis (an upper bound on coverage); microwave D2D
links are exact under Rayleigh fading and a PPP of uplink interferers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

from .errors import InvalidParameter
from .geometry import LosModel, expected_los_count, los_total_mass
from .quadrature import DEFAULT_TOL, integrate_improper
from .radio import GainMixture, PathLossModel

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CoverageInputs:
    """Every parameter the coverage formulas read.

    ``sigma2_*`` are noise powers normalized by the transmit power of the
    corresponding link.  Interferers on D2D links form a PPP of intensity
    ``rho * lambda_b``.
    """

    lambda_b: float
    lambda_r: float
    los_cellular: LosModel
    los_d2d: LosModel
    mix_cellular: GainMixture
    mix_d2d: GainMixture
    pl_cellular: PathLossModel
    pl_d2d_mmwave: PathLossModel
    pl_microwave_los: PathLossModel
    pl_microwave_nlos: PathLossModel
    sigma2_cellular: float
    sigma2_d2d_mmwave: float
    sigma2_d2d_microwave: float
    rho: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.lambda_b < 0 or self.lambda_r < 0:
            raise InvalidParameter("intensities must be >= 0")
        if not 0 <= self.rho <= 1:
            raise InvalidParameter("multiplexing factor must lie in [0, 1]")
        if not self.mu > 0:
            raise InvalidParameter("fading parameter must be positive")

    def with_bs_intensity(self, lambda_b: float) -> "CoverageInputs":
        return replace(self, lambda_b=lambda_b)


@dataclass(frozen=True)
class MmwaveLink:
    """One mmWave hop as the dominant-interferer analysis sees it."""

    intensity: float          # serving-transmitter PPP
    los: LosModel
    mixture: GainMixture
    path_loss: PathLossModel
    sigma2: float
    interferer_intensity: float
    interferers_beyond_serving: bool  # cellular: interferers lie outside B(o, d0)


def cellular_link(inputs: CoverageInputs) -> MmwaveLink:
    return MmwaveLink(inputs.lambda_b, inputs.los_cellular, inputs.mix_cellular,
                      inputs.pl_cellular, inputs.sigma2_cellular, inputs.lambda_b, True)


def d2d_mmwave_link(inputs: CoverageInputs) -> MmwaveLink:
    return MmwaveLink(inputs.lambda_r, inputs.los_d2d, inputs.mix_d2d,
                      inputs.pl_d2d_mmwave, inputs.sigma2_d2d_mmwave,
                      inputs.rho * inputs.lambda_b, False)


# ---------------------------------------------------------------------------
# interference regions


@dataclass(frozen=True)
class InterferenceRadii:
    """Dominance radii, one per mixture gain (same order as the mixture).

    ``outage`` means noise alone already violates the threshold, in which
    case every radius is infinite.
    """

    radii: tuple
    outage: bool = False

    @property
    def near_rx_main(self):   # rx main lobe, tx side lobe
        return self.radii[2]

    @property
    def far_rx_main(self):    # both main lobes
        return self.radii[0]

    @property
    def near_rx_side(self):   # both side lobes
        return self.radii[3]

    @property
    def far_rx_side(self):    # tx main lobe, rx side lobe
        return self.radii[1]


def interference_radii(tau: float, d0: float, g0: float, mixture: GainMixture,
                       A: float, alpha: float, sigma2: float) -> InterferenceRadii:
    """Distance within which a single interferer of each gain causes outage."""
    if not d0 > 0:
        raise InvalidParameter("serving distance must be positive")
    margin = g0 * d0 ** (-alpha) - tau * A * sigma2
    if margin <= 0:
        return InterferenceRadii((math.inf,) * 4, outage=True)
    return InterferenceRadii(tuple((g * tau / margin) ** (1.0 / alpha) for g in mixture.gains))


def _annulus(lam: float, los: LosModel, a: float, b: float) -> float:
    """``int_a^b p_L(x) lam x dx`` (per radian)."""
    if not b > a:
        return 0.0
    c, beta = los.c, los.beta
    if beta == 0:
        return lam * c * 0.5 * (b * b - a * a)
    ta = (1.0 + beta * a) * math.exp(-beta * a)
    tb = 0.0 if math.isinf(b) else (1.0 + beta * b) * math.exp(-beta * b)
    return lam * c / beta**2 * (ta - tb)


def nir_measure(radii: InterferenceRadii, d0: float, lam: float, los: LosModel,
                mixture: GainMixture, lower: Optional[float] = None) -> float:
    """Mean number of LOS interferers in the near interference region.

    Any LOS interferer there causes outage whatever its boresight.  ``lower``
    is the inner radius: ``d0`` on cellular links (interferers are farther
    than the serving BS) and 0 on D2D links.
    """
    if radii.outage:
        return math.inf
    lo = d0 if lower is None else lower
    phi_rx = mixture.rx_beamwidth
    return (phi_rx * _annulus(lam, los, lo, radii.near_rx_main)
            + (TWO_PI - phi_rx) * _annulus(lam, los, lo, radii.near_rx_side))


def fir_measure(radii: InterferenceRadii, d0: float, lam: float, los: LosModel,
                mixture: GainMixture, lower: Optional[float] = None) -> float:
    """Mean number of dominant LOS interferers in the far interference region.

    Only interferers whose main lobe points at the receiver count there.
    """
    if radii.outage:
        return math.inf
    lo = d0 if lower is None else lower
    phi_rx = mixture.rx_beamwidth
    main = _annulus(lam, los, max(lo, radii.near_rx_main), max(lo, radii.far_rx_main))
    side = _annulus(lam, los, max(lo, radii.near_rx_side), max(lo, radii.far_rx_side))
    return mixture.tx_main_fraction * (phi_rx * main + (TWO_PI - phi_rx) * side)


# ---------------------------------------------------------------------------
# mmWave coverage


def _los_tail(lam: float, los: LosModel):
    """Tail bound for ``2 pi lam c x exp(-Lambda(x) - beta x) g(x)``, ``0 <= g <= 1``."""
    k = TWO_PI * lam * los.c
    if los.beta > 0:
        b = los.beta
        return lambda t: k * math.exp(-b * t) * (t / b + 1.0 / b**2)
    return lambda t: math.exp(-math.pi * lam * los.c * t * t)


def _decay_scale(lam: float, los: LosModel) -> float:
    s = 1.0 / math.sqrt(math.pi * lam * los.c)
    if los.beta > 0:
        s = min(s, 1.0 / los.beta)
    return s


def noise_radius(tau: float, g0: float, pl: PathLossModel, sigma2: float) -> float:
    """Largest serving distance at which SNR still exceeds ``tau``."""
    if tau <= 0:
        return math.inf
    return (g0 / (tau * pl.intercept * sigma2)) ** (1.0 / pl.exponent)


def mmwave_coverage(link: MmwaveLink, tau: float, tol: float = DEFAULT_TOL) -> float:
    """Dominant-interferer coverage of a mmWave hop with nearest-LOS association."""
    if not tau > 0:
        raise InvalidParameter("threshold must be positive (linear)")
    lam = link.intensity
    if lam == 0:
        return 0.0
    los, mix, pl = link.los, link.mixture, link.path_loss
    g0 = mix.boresight_gain
    A, alpha = pl.intercept, pl.exponent
    sigma2 = link.sigma2
    lam_i = link.interferer_intensity
    lower_is_d0 = link.interferers_beyond_serving
    r_max = noise_radius(tau, g0, pl, sigma2)

    def integrand(x):
        if x <= 0 or x >= r_max:
            return 0.0
        radii = interference_radii(tau, x, g0, mix, A, alpha, sigma2)
        if radii.outage:
            return 0.0
        lo = x if lower_is_d0 else 0.0
        expo = 0.0
        if lam_i > 0:
            expo = (nir_measure(radii, x, lam_i, los, mix, lo)
                    + fir_measure(radii, x, lam_i, los, mix, lo))
        expo += expected_los_count(x, lam, los) + los.beta * x
        return TWO_PI * lam * los.c * x * math.exp(-expo)

    # radii cross the serving distance where g_k tau = g0 - tau A sigma2 x^alpha
    kinks = []
    for g in mix.gains:
        num = g0 - g * tau
        if num > 0 and sigma2 > 0:
            kinks.append((num / (tau * A * sigma2)) ** (1.0 / alpha))
    res = integrate_improper(integrand, tol=tol, scale=_decay_scale(lam, los),
                             tail_bound=_los_tail(lam, los), upper=r_max, points=kinks)
    return min(1.0, max(0.0, res.value))


def coverage_mmwave_cellular(inputs: CoverageInputs, tau: float, tol: float = DEFAULT_TOL) -> float:
    return mmwave_coverage(cellular_link(inputs), tau, tol)


def coverage_mmwave_d2d(inputs: CoverageInputs, tau: float, tol: float = DEFAULT_TOL) -> float:
    return mmwave_coverage(d2d_mmwave_link(inputs), tau, tol)


def coverage_noise_limited(inputs: CoverageInputs, tau: float, link: str = "cellular") -> float:
    """Coverage when interference is ignored: P(a LOS transmitter within the SNR radius)."""
    spec = cellular_link(inputs) if link == "cellular" else d2d_mmwave_link(inputs)
    if not tau > 0:
        raise InvalidParameter("threshold must be positive (linear)")
    r = noise_radius(tau, spec.mixture.boresight_gain, spec.path_loss, spec.sigma2)
    if math.isinf(r):
        return los_total_mass(spec.intensity, spec.los)
    return -math.expm1(-expected_los_count(r, spec.intensity, spec.los))


# ---------------------------------------------------------------------------
# microwave D2D


def laplace_interference(s: float, density: float, alpha: float, mu: float = 1.0) -> float:
    """Laplace transform of ``sum h_i d_i^-alpha`` over a PPP, ``h_i ~ Exp(mu)``."""
    if not alpha > 2:
        raise InvalidParameter(f"path loss exponent must exceed 2, got {alpha}")
    if s < 0:
        raise InvalidParameter("Laplace argument must be >= 0")
    if s == 0 or density == 0:
        return 1.0
    k = (TWO_PI / alpha) / math.sin(TWO_PI / alpha)
    return math.exp(-math.pi * density * (s / mu) ** (2.0 / alpha) * k)


def _ratio_exponent(inputs: CoverageInputs):
    pl_l, pl_n = inputs.pl_microwave_los, inputs.pl_microwave_nlos
    a_tilde = (pl_l.intercept / pl_n.intercept) ** (1.0 / pl_n.exponent)
    return a_tilde, pl_l.exponent / pl_n.exponent


def association_probs_microwave(inputs: CoverageInputs, tol: float = DEFAULT_TOL):
    """``(S_L, S_N)``: chance the smallest-path-loss relay is LOS / NLOS."""
    return _association_probs(inputs.lambda_r, inputs.los_d2d, inputs.pl_microwave_los,
                              inputs.pl_microwave_nlos, tol)


@lru_cache(maxsize=64)
def _association_probs(lam, los, pl_l, pl_n, tol):
    if not lam > 0:
        raise InvalidParameter("candidate relay intensity must be positive")
    a_tilde = (pl_l.intercept / pl_n.intercept) ** (1.0 / pl_n.exponent)
    ratio = pl_l.exponent / pl_n.exponent

    def integrand(x):
        if x <= 0:
            return 0.0
        y = a_tilde * x**ratio
        expo = (expected_los_count(x, lam, los) + los.beta * x
                + math.pi * lam * y * y - expected_los_count(y, lam, los))
        return TWO_PI * lam * los.c * x * math.exp(-expo)

    s_l = integrate_improper(integrand, tol=tol, scale=_decay_scale(lam, los),
                             tail_bound=_los_tail(lam, los)).value
    s_l = min(1.0, max(0.0, s_l))
    return s_l, 1.0 - s_l


def _nlos_tail(lam: float, los: LosModel):
    q = 1.0 - los.c
    if q <= 0:
        return lambda t: 0.0
    return lambda t: math.exp(-math.pi * lam * q * t * t) / q


def coverage_microwave_nlos(inputs: CoverageInputs, tau: float, tol: float = DEFAULT_TOL) -> float:
    """Coverage averaged over the nearest-NLOS relay distance."""
    lam, los = inputs.lambda_r, inputs.los_d2d
    pl_n = inputs.pl_microwave_nlos
    an, alpha_n = pl_n.intercept, pl_n.exponent
    mu, sigma2 = inputs.mu, inputs.sigma2_d2d_microwave
    dens = inputs.rho * inputs.lambda_b
    if lam == 0:
        return 0.0

    def integrand(x):
        if x <= 0:
            return 0.0
        xa = x**alpha_n
        pdf_exp = expected_los_count(x, lam, los) - math.pi * lam * x * x
        nlos = 1.0 - los.c * math.exp(-los.beta * x)
        # interference is sum h_i A_N^-1 d_i^-alpha_N
        lt = laplace_interference(mu * tau * xa, dens, alpha_n, mu) if dens > 0 else 1.0
        return TWO_PI * lam * x * nlos * math.exp(pdf_exp - mu * tau * sigma2 * an * xa) * lt

    res = integrate_improper(integrand, tol=tol, scale=1.0 / math.sqrt(math.pi * lam),
                             tail_bound=_nlos_tail(lam, los))
    return min(1.0, max(0.0, res.value))


def coverage_microwave_los(inputs: CoverageInputs, tau: float, tol: float = DEFAULT_TOL) -> float:
    """Coverage averaged over the nearest-LOS relay distance."""
    lam, los = inputs.lambda_r, inputs.los_d2d
    pl_l, pl_n = inputs.pl_microwave_los, inputs.pl_microwave_nlos
    al, alpha_l = pl_l.intercept, pl_l.exponent
    an, alpha_n = pl_n.intercept, pl_n.exponent
    mu, sigma2 = inputs.mu, inputs.sigma2_d2d_microwave
    dens = inputs.rho * inputs.lambda_b
    if lam == 0:
        return 0.0

    def integrand(x):
        if x <= 0:
            return 0.0
        s = mu * tau * al * x**alpha_l
        expo = expected_los_count(x, lam, los) + los.beta * x + s * sigma2
        lt = laplace_interference(s / an, dens, alpha_n, mu) if dens > 0 else 1.0
        return TWO_PI * lam * los.c * x * math.exp(-expo) * lt

    res = integrate_improper(integrand, tol=tol, scale=_decay_scale(lam, los),
                             tail_bound=_los_tail(lam, los))
    return min(1.0, max(0.0, res.value))


def coverage_microwave_d2d(inputs: CoverageInputs, tau: float, tol: float = DEFAULT_TOL) -> float:
    if not tau > 0:
        raise InvalidParameter("threshold must be positive (linear)")
    if inputs.lambda_r == 0:
        return 0.0
    s_l, s_n = association_probs_microwave(inputs, tol)
    p = s_n * coverage_microwave_nlos(inputs, tau, tol) + s_l * coverage_microwave_los(inputs, tau, tol)
    return min(1.0, max(0.0, p))


def coverage_d2d(inputs: CoverageInputs, tau: float, band: str, tol: float = DEFAULT_TOL) -> float:
    if band == "mmwave":
        return coverage_mmwave_d2d(inputs, tau, tol)
    if band == "microwave":
        return coverage_microwave_d2d(inputs, tau, tol)
    raise InvalidParameter(f"unknown D2D band {band!r}")


# ---------------------------------------------------------------------------


def coverage_overall(p_cell: float, p_d2d: float) -> float:
    """Direct success, or both relay hops succeed (hops independent)."""
    for name, p in (("cellular", p_cell), ("D2D", p_d2d)):
        if not 0 <= p <= 1:
            raise InvalidParameter(f"{name} coverage must lie in [0, 1], got {p}")
    return p_cell + (1 - p_cell) * p_cell * p_d2d
