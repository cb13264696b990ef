"""Monte-Carlo system-level simulator.

The typical destination UE sits at the origin.  Each drop realizes the BS
layout, candidate relays, uplink interferers (a PPP of intensity
``rho * lambda_b``), blockage, beam boresights and microwave fading, and
yields one SINR per link.  Coverage at any threshold is the fraction of
drops whose SINR exceeds it, so all thresholds share the same drops.

Randomness is counter-based: drop ``k`` of seed ``s`` owns a Philox stream
keyed on ``(s, k)``, and each entity class (BSs, relays, interferers,
obstacles, fading) gets its own child stream.  Results therefore do not
depend on how drops are split across workers.

Blockage defaults to ``"bernoulli"``: each link is LOS independently with
probability ``p_L(d)``, which is the law the analytic results assume.  The
``"explicit"`` mode instead samples an obstacle field and traces every link
through it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .config import ScenarioConfig
from .errors import InvalidParameter
from .geometry import (
    Disc,
    ObstacleField,
    ObstacleLaw,
    _disc_blocks,
    is_los,
    load_footprints,
    los_probability,
    LosModel,
    sample_obstacles,
    sample_ppp,
)
from .radio import AntennaPattern, PathLossModel

Z99 = float(stats.norm.ppf(0.995))
LOS_CUTOFF = 1e-4
NN_MULTIPLE = 5.0
MICROWAVE_TAIL = 1e-3

LAYOUTS = ("ppp", "hex-grid", "ind-grid", "imported-footprints")
LINKS = ("cellular", "mmwave_d2d", "microwave_d2d")


# ---------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class Layout:
    """BS placement rule.

    ``hex-grid`` is a 19-site two-ring layout with the UE uniform in the
    center cell; ``ind-grid`` is 12 BSs on a 120 m x 50 m floor (20 m x 25 m
    cells) with the UE uniform on the floor; ``imported-footprints`` keeps
    PPP BSs but blocks links with the polygons of ``footprints``.
    """

    tag: str = "ppp"
    isd_m: Optional[float] = None
    footprints: Optional[str] = None

    def __post_init__(self):
        if self.tag not in LAYOUTS:
            raise InvalidParameter(f"unknown layout {self.tag!r}; choose from {LAYOUTS}")
        if self.tag == "hex-grid" and not (self.isd_m is not None and self.isd_m > 0):
            raise InvalidParameter("hex-grid layout needs a positive ISD")
        if self.tag == "imported-footprints" and not self.footprints:
            raise InvalidParameter("imported-footprints layout needs a footprint file")


def hex_sites(isd: float) -> np.ndarray:
    """The 19 sites of a two-ring hexagonal layout centered at the origin."""
    sites = []
    for q in range(-2, 3):
        for r in range(-2, 3):
            if abs(q + r) <= 2:
                sites.append((isd * (q + 0.5 * r), isd * r * math.sqrt(3) / 2))
    return np.array(sites)


def _sample_hex_cell(isd: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the hexagonal cell of the origin site."""
    normals = np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2], [-0.5, math.sqrt(3) / 2]])
    r = isd / math.sqrt(3)
    while True:
        p = rng.uniform(-r, r, 2)
        if np.all(np.abs(normals @ p) <= isd / 2):
            return p


IND_FLOOR = (120.0, 50.0)


def ind_sites() -> np.ndarray:
    xs = np.arange(10.0, 120.0, 20.0)
    ys = np.array([12.5, 37.5])
    return np.array([(x, y) for y in ys for x in xs])


# ---------------------------------------------------------------------------
# windows


def _nn_radius(lam: float) -> float:
    return NN_MULTIPLE * 0.5 / math.sqrt(lam) if lam > 0 else 0.0


def _los_radius(los: LosModel) -> float:
    if los.beta == 0:
        return 0.0
    return max(0.0, math.log(los.c / LOS_CUTOFF) / los.beta)


@dataclass(frozen=True)
class Windows:
    """Disc radii (m) for each entity class."""

    bs: float
    relay: float
    interferer: float

    def scaled(self, k: float) -> "Windows":
        return Windows(self.bs * k, self.relay * k, self.interferer * k)


def window_radii(config: ScenarioConfig) -> Windows:
    """Truncation radii for the PPP entity sets.

    A radius covers both ``p_L(R) < 1e-4`` for blocked links and five mean
    nearest-neighbor distances.  Microwave interference is never blocked,
    so its radius also bounds the mean interference from beyond it to
    ``1e-3`` of the interference from a typical nearest interferer.  Without
    obstacles the LOS rule is void and twenty nearest-neighbor distances are
    used instead.
    """
    lam_b, lam_r = config.lambda_b, config.lambda_r
    lam_i = config.multiplexing_factor * lam_b
    los_c, los_d = config.los_cellular, config.los_d2d

    def radius(lam, los):
        if lam <= 0:
            return 1.0
        if los.beta == 0:
            return 4 * _nn_radius(lam)
        return max(_los_radius(los), _nn_radius(lam))

    r_int = radius(lam_i, los_d)
    if lam_i > 0:
        alpha = config.path_loss("microwave-nlos").exponent
        r1 = 1.0 / math.sqrt(math.pi * lam_i)
        # 2 pi lam r1^a R^(2-a) / (a-2) <= tail
        r_tail = (2 * math.pi * lam_i * r1**alpha / ((alpha - 2) * MICROWAVE_TAIL)) ** (1 / (alpha - 2))
        r_int = max(r_int, r_tail)
    return Windows(radius(lam_b, los_c), radius(lam_r, los_d), r_int)


# ---------------------------------------------------------------------------
# realizations


@dataclass
class NetworkRealization:
    """One drop, in coordinates centered on the typical UE.

    ``*_los`` flags are for the link to the UE at the origin (cellular law
    for BSs, D2D law for relays and interferers).  Boresights are angles in
    radians; fading entries are unit-mean exponential powers.
    """

    config: ScenarioConfig
    bs: np.ndarray
    bs_los: np.ndarray
    bs_boresight: np.ndarray
    relays: np.ndarray
    relay_los: np.ndarray
    interferers: np.ndarray
    interferer_los: np.ndarray
    interferer_boresight: np.ndarray
    relay_fading: np.ndarray
    interferer_fading: np.ndarray
    obstacles: Optional[ObstacleField] = None
    heights: dict = field(default_factory=dict)

    @property
    def bs_dist(self) -> np.ndarray:
        return np.hypot(self.bs[:, 0], self.bs[:, 1])

    @property
    def relay_dist(self) -> np.ndarray:
        return np.hypot(self.relays[:, 0], self.relays[:, 1])

    @property
    def interferer_dist(self) -> np.ndarray:
        return np.hypot(self.interferers[:, 0], self.interferers[:, 1])


def _empty2():
    return np.empty((0, 2))


def _bernoulli_los(rng, dist, los: LosModel) -> np.ndarray:
    return rng.random(len(dist)) < los_probability(dist, los)


def _explicit_los(points, h_tx, h_rx, field: ObstacleField) -> np.ndarray:
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    rx = (0.0, 0.0, h_rx)
    if field.radii is not None:
        origin = np.zeros(2)
        return np.array([
            not np.any(_disc_blocks(p, origin, h_tx, h_rx, field.centers, field.radii, field.heights))
            for p in points
        ])
    return np.array([is_los((p[0], p[1], h_tx), rx, field) for p in points])


def drop_network(config: ScenarioConfig, layout: Layout, rng: np.random.Generator, *,
                 blockage: str = "bernoulli", windows: Optional[Windows] = None,
                 links: Sequence[str] = LINKS,
                 footprint_field: Optional[ObstacleField] = None) -> NetworkRealization:
    """Sample one network realization around the typical UE.

    ``rng`` must own a seed sequence (e.g. ``Generator(Philox(seed_seq))``);
    one child stream is spawned per entity class.
    """
    if blockage not in ("bernoulli", "explicit"):
        raise InvalidParameter(f"unknown blockage mode {blockage!r}")
    win = windows or window_radii(config)
    for name, r in (("bs", win.bs), ("relay", win.relay), ("interferer", win.interferer)):
        if not r > 0:
            raise InvalidParameter(f"{name} window radius must be positive")
    g_ue, g_bs, g_relay, g_int, g_obs, g_fade = rng.spawn(6)
    want_cell = "cellular" in links
    want_d2d = any(k in links for k in ("mmwave_d2d", "microwave_d2d"))
    h_bs, h_ue = config.bs_height_m, config.ue_height_m
    explicit = blockage == "explicit" or layout.tag == "imported-footprints"

    # BSs relative to the UE
    if not want_cell:
        bs = _empty2()
    elif layout.tag == "hex-grid":
        bs = hex_sites(layout.isd_m) - _sample_hex_cell(layout.isd_m, g_ue)
    elif layout.tag == "ind-grid":
        ue = np.array([g_ue.uniform(0, IND_FLOOR[0]), g_ue.uniform(0, IND_FLOOR[1])])
        bs = ind_sites() - ue
    else:
        bs = sample_ppp(config.lambda_b, Disc(win.bs), g_bs).points
    relays = sample_ppp(config.lambda_r, Disc(win.relay), g_relay).points if want_d2d else _empty2()
    lam_i = config.multiplexing_factor * config.lambda_b
    interferers = sample_ppp(lam_i, Disc(win.interferer), g_int).points if want_d2d else _empty2()

    obstacles = None
    if explicit:
        if layout.tag == "imported-footprints":
            obstacles = footprint_field if footprint_field is not None else load_footprints(layout.footprints)
        else:
            reach = config.obstacle_law.reach
            r_obs = max(win.bs if want_cell else 0.0, win.relay, win.interferer) + reach
            obstacles = sample_obstacles(config.obstacle_law, Disc(r_obs), g_obs)
        bs_los = _explicit_los(bs, h_bs, h_ue, obstacles)
        relay_los = _explicit_los(relays, h_ue, h_ue, obstacles)
        int_los = _explicit_los(interferers, h_ue, h_ue, obstacles)
    else:
        bs_los = _bernoulli_los(g_bs, np.hypot(bs[:, 0], bs[:, 1]), config.los_cellular)
        relay_los = _bernoulli_los(g_relay, np.hypot(relays[:, 0], relays[:, 1]), config.los_d2d)
        int_los = _bernoulli_los(g_int, np.hypot(interferers[:, 0], interferers[:, 1]), config.los_d2d)

    mu = config.fading_mu
    return NetworkRealization(
        config=config,
        bs=bs,
        bs_los=bs_los,
        bs_boresight=g_bs.uniform(-np.pi, np.pi, len(bs)),
        relays=relays,
        relay_los=relay_los,
        interferers=interferers,
        interferer_los=int_los,
        interferer_boresight=g_int.uniform(-np.pi, np.pi, len(interferers)),
        relay_fading=g_fade.exponential(1.0 / mu, len(relays)),
        interferer_fading=g_fade.exponential(1.0 / mu, len(interferers)),
        obstacles=obstacles,
        heights={"bs": h_bs, "ue": h_ue},
    )


# ---------------------------------------------------------------------------
# association and SINR


def _nearest(dist: np.ndarray, mask: np.ndarray) -> Optional[int]:
    if not np.any(mask):
        return None
    idx = np.flatnonzero(mask)
    return int(idx[np.argmin(dist[idx])])


def _microwave_path_loss(real: NetworkRealization) -> np.ndarray:
    cfg = real.config
    pl_l, pl_n = cfg.path_loss("microwave-los"), cfg.path_loss("microwave-nlos")
    d = real.relay_dist
    return np.where(real.relay_los,
                    pl_l.intercept * d**pl_l.exponent,
                    pl_n.intercept * d**pl_n.exponent)


def associate(real: NetworkRealization, link: str) -> Optional[int]:
    """Index of the serving transmitter, or ``None`` if there is none."""
    if link == "cellular":
        return _nearest(real.bs_dist, real.bs_los)
    if link == "mmwave_d2d":
        return _nearest(real.relay_dist, real.relay_los)
    if link == "microwave_d2d":
        if len(real.relays) == 0:
            return None
        return int(np.argmin(_microwave_path_loss(real)))
    raise InvalidParameter(f"unknown link {link!r}; choose from {LINKS}")


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _beam_gains(pos: np.ndarray, boresight: np.ndarray, serving_angle: float,
                tx: AntennaPattern, rx: AntennaPattern) -> np.ndarray:
    """Gains of interferers at ``pos`` toward a receiver at the origin."""
    to_rx = np.arctan2(-pos[:, 1], -pos[:, 0])
    tx_main = np.abs(_wrap(boresight - to_rx)) <= tx.beamwidth / 2
    from_rx = np.arctan2(pos[:, 1], pos[:, 0])
    rx_main = np.abs(_wrap(from_rx - serving_angle)) <= rx.beamwidth / 2
    return (np.where(tx_main, tx.main_gain, tx.side_gain)
            * np.where(rx_main, rx.main_gain, rx.side_gain))


def _mmwave_sinr(pos, dist, los, boresight, serving, pl: PathLossModel, sigma2,
                 tx: AntennaPattern, rx: AntennaPattern, interference=True) -> float:
    if serving is None:
        return 0.0
    alpha = pl.exponent
    signal = tx.main_gain * rx.main_gain * dist[serving] ** (-alpha)
    denom = pl.intercept * sigma2
    if interference:
        mask = los.copy()
        mask[serving] = False
        if np.any(mask):
            ang = math.atan2(pos[serving, 1], pos[serving, 0])
            g = _beam_gains(pos[mask], boresight[mask], ang, tx, rx)
            denom += float(np.sum(g * dist[mask] ** (-alpha)))
    return signal / denom


def sinr_downlink(real: NetworkRealization, config: Optional[ScenarioConfig] = None,
                  interference: bool = True) -> float:
    """Direct-link SINR with every LOS BS interfering; 0 if no LOS BS exists."""
    cfg = config or real.config
    serving = associate(real, "cellular")
    return _mmwave_sinr(real.bs, real.bs_dist, real.bs_los, real.bs_boresight, serving,
                        cfg.path_loss("cellular"), cfg.sigma2("cellular"),
                        cfg.bs_pattern, cfg.ue_pattern, interference)


def sinr_d2d(real: NetworkRealization, config: Optional[ScenarioConfig] = None,
             band: str = "mmwave") -> float:
    """Relay-to-destination SINR with uplink interferers; 0 if no relay is associated."""
    cfg = config or real.config
    if band == "mmwave":
        serving = associate(real, "mmwave_d2d")
        if serving is None:
            return 0.0
        pl = cfg.path_loss("d2d-mmwave")
        alpha = pl.exponent
        ue = cfg.ue_pattern
        signal = ue.main_gain**2 * real.relay_dist[serving] ** (-alpha)
        denom = pl.intercept * cfg.sigma2("d2d-mmwave")
        mask = real.interferer_los
        if np.any(mask):
            ang = math.atan2(real.relays[serving, 1], real.relays[serving, 0])
            g = _beam_gains(real.interferers[mask], real.interferer_boresight[mask], ang, ue, ue)
            denom += float(np.sum(g * real.interferer_dist[mask] ** (-alpha)))
        return signal / denom
    if band == "microwave":
        serving = associate(real, "microwave_d2d")
        if serving is None:
            return 0.0
        signal = real.relay_fading[serving] / _microwave_path_loss(real)[serving]
        pl_n = cfg.path_loss("microwave-nlos")
        interference = float(np.sum(real.interferer_fading * real.interferer_dist ** (-pl_n.exponent)))
        return signal / (cfg.sigma2("d2d-microwave") + interference / pl_n.intercept)
    raise InvalidParameter(f"unknown D2D band {band!r}")


# ---------------------------------------------------------------------------
# drop streams


def drop_rng(seed: int, drop: int, hop: int = 0) -> np.random.Generator:
    """Counter-based stream for one drop (``hop=1`` for the BS-to-relay hop)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, drop, hop])))


CURVES = ("cell", "noise-limited", "d2d-mm", "d2d-uw", "overall")


@dataclass(frozen=True)
class _Job:
    config: ScenarioConfig
    layout: Layout
    curve: str
    band: str
    seed: int
    blockage: str
    windows: Windows


def _drop_sinr(job: _Job, drop: int, footprint_field=None) -> float:
    cfg, curve = job.config, job.curve
    kw = dict(blockage=job.blockage, windows=job.windows, footprint_field=footprint_field)
    if curve in ("cell", "noise-limited"):
        real = drop_network(cfg, job.layout, drop_rng(job.seed, drop), links=("cellular",), **kw)
        return sinr_downlink(real, interference=curve == "cell")
    if curve in ("d2d-mm", "d2d-uw"):
        band = "mmwave" if curve == "d2d-mm" else "microwave"
        link = "mmwave_d2d" if band == "mmwave" else "microwave_d2d"
        real = drop_network(cfg, job.layout, drop_rng(job.seed, drop), links=(link,), **kw)
        return sinr_d2d(real, band=band)
    if curve == "overall":
        real = drop_network(cfg, job.layout, drop_rng(job.seed, drop), **kw)
        direct = sinr_downlink(real)
        hop_real = drop_network(cfg, job.layout, drop_rng(job.seed, drop, hop=1),
                                links=("cellular",), **kw)
        hop1 = sinr_downlink(hop_real)
        return max(direct, min(hop1, sinr_d2d(real, band=job.band)))
    raise InvalidParameter(f"unknown curve {curve!r}; choose from {CURVES}")


def _run_chunk(job: _Job, drops: range) -> np.ndarray:
    field = None
    if job.layout.tag == "imported-footprints":
        field = load_footprints(job.layout.footprints)
    return np.array([_drop_sinr(job, k, field) for k in drops])


def sample_sinr(config: ScenarioConfig, layout: Layout, curve: str, n_drops: int, seed: int,
                band: str = "microwave", blockage: str = "bernoulli", workers: int = 1,
                window_scale: float = 1.0) -> np.ndarray:
    """Per-drop SINR (linear) of the requested curve; 0 marks no serving node.

    For ``overall`` the value is the effective two-hop SINR
    ``max(direct, min(hop1, d2d))``, so ``overall > tau`` is exactly the
    event "direct success, or both relay hops succeed".  ``band`` selects
    the D2D band of ``overall``.
    """
    if n_drops < 1:
        raise InvalidParameter("n_drops must be >= 1")
    if curve not in CURVES:
        raise InvalidParameter(f"unknown curve {curve!r}; choose from {CURVES}")
    if band not in ("mmwave", "microwave"):
        raise InvalidParameter(f"unknown D2D band {band!r}")
    job = _Job(config, layout, curve, band, int(seed), blockage,
               window_radii(config).scaled(window_scale))
    if workers <= 1 or n_drops < 2 * workers:
        return _run_chunk(job, range(n_drops))
    bounds = np.linspace(0, n_drops, workers + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [job] * len(chunks), chunks))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# estimators


def wilson_interval(successes, n: int, z: float = Z99):
    """Wilson score interval; returns ``(center, half_width)``."""
    successes = np.asarray(successes, dtype=float)
    p = successes / n
    z2 = z * z
    denom = 1 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z / denom * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return center, half


@dataclass
class CoverageCurve:
    x: np.ndarray
    estimate: np.ndarray
    ci_halfwidth: np.ndarray
    n_drops: int
    seed: int
    config_digest: str
    axis: str = "tau"

    @property
    def lower(self) -> np.ndarray:
        return np.clip(self.estimate - self.ci_halfwidth, 0.0, 1.0)

    @property
    def upper(self) -> np.ndarray:
        return np.clip(self.estimate + self.ci_halfwidth, 0.0, 1.0)


def coverage_from_samples(samples: np.ndarray, taus) -> tuple:
    """Coverage fractions and Wilson 99% half-widths on a threshold grid."""
    taus = np.asarray(taus, dtype=float)
    n = len(samples)
    ordered = np.sort(samples)
    hits = n - np.searchsorted(ordered, taus, side="right")
    _, half = wilson_interval(hits, n)
    return hits / n, half


def estimate_coverage(config: ScenarioConfig, layout: Layout, grid, n_drops: int, seed: int,
                      curve: str = "cell", band: str = "microwave", blockage: str = "bernoulli",
                      workers: int = 1, window_scale: float = 1.0) -> CoverageCurve:
    """MC coverage on a linear threshold grid with Wilson 99% intervals."""
    samples = sample_sinr(config, layout, curve, n_drops, seed, band, blockage, workers, window_scale)
    est, half = coverage_from_samples(samples, grid)
    return CoverageCurve(np.asarray(grid, dtype=float), est, half, n_drops, int(seed), config.digest())


def conditional_se(samples: np.ndarray, tau: float, tau_max: float) -> float:
    """Mean of ``log2(1 + min(SINR, tau_max))`` over drops with SINR > tau."""
    sel = samples[samples > tau]
    if len(sel) == 0:
        return math.nan
    return math.fsum(np.log2(1 + np.minimum(sel, tau_max))) / len(sel)


# ---------------------------------------------------------------------------
# distance and association oracles


def nearest_distances(config: ScenarioConfig, kind: str, n_drops: int, seed: int,
                      layout: Layout = Layout()) -> np.ndarray:
    """Per-drop distance to the nearest LOS BS, LOS relay, or NLOS relay.

    Drops with no qualifying node are omitted, so the sample is conditioned
    on existence.
    """
    links = {"los-bs": ("cellular",), "los-relay": ("mmwave_d2d",), "nlos-relay": ("mmwave_d2d",)}
    if kind not in links:
        raise InvalidParameter(f"unknown distance kind {kind!r}; choose from {sorted(links)}")
    win = window_radii(config)
    out = []
    for k in range(n_drops):
        real = drop_network(config, layout, drop_rng(seed, k), links=links[kind], windows=win)
        if kind == "los-bs":
            d, mask = real.bs_dist, real.bs_los
        else:
            d = real.relay_dist
            mask = real.relay_los if kind == "los-relay" else ~real.relay_los
        if np.any(mask):
            out.append(d[mask].min())
    return np.array(out)


def association_frequencies(config: ScenarioConfig, n_drops: int, seed: int) -> tuple:
    """Fractions of drops whose microwave relay is LOS / NLOS."""
    win = window_radii(config)
    n_los = n = 0
    for k in range(n_drops):
        real = drop_network(config, Layout(), drop_rng(seed, k), links=("microwave_d2d",), windows=win)
        idx = associate(real, "microwave_d2d")
        if idx is None:
            continue
        n += 1
        n_los += bool(real.relay_los[idx])
    if n == 0:
        return math.nan, math.nan
    return n_los / n, 1 - n_los / n


# ---------------------------------------------------------------------------
# empirical LOS probability


def _rect_blocks(d, h0, h1, centers, lengths, widths, angles, heights):
    """Blockage of the segment (0,0)-(d,0) by rotated rectangles."""
    c, s = np.cos(angles), np.sin(angles)
    hl, hw = 0.5 * lengths, 0.5 * widths
    # corners, shape (n, 4, 2)
    lx = np.stack([-hl, hl, hl, -hl], axis=1)
    ly = np.stack([-hw, -hw, hw, hw], axis=1)
    xs = centers[:, :1] + lx * c[:, None] - ly * s[:, None]
    ys = centers[:, 1:] + lx * s[:, None] + ly * c[:, None]
    x2, y2 = np.roll(xs, -1, axis=1), np.roll(ys, -1, axis=1)
    crosses = (ys > 0) != (y2 > 0)
    dy = np.where(crosses, y2 - ys, 1.0)
    xc = np.where(crosses, xs + (0 - ys) * (x2 - xs) / dy, np.nan)
    spans = np.any(crosses, axis=1)
    with np.errstate(invalid="ignore"):
        xa = np.nanmin(np.where(spans[:, None], xc, 0.0), axis=1)
        xb = np.nanmax(np.where(spans[:, None], xc, 0.0), axis=1)
    lo = np.maximum(xa, 0.0)
    hi = np.minimum(xb, d)
    hit = spans & (lo <= hi)
    if d > 0:
        line_min = np.minimum(h0 + lo / d * (h1 - h0), h0 + hi / d * (h1 - h0))
    else:
        line_min = np.full(len(hit), min(h0, h1))
    return hit & (heights >= line_min)


def _law_los_fraction(law: ObstacleLaw, d: float, n_pairs: int, h0: float, h1: float,
                      rng: np.random.Generator) -> float:
    """LOS fraction of ``n_pairs`` independent segments of length ``d``.

    Each pair sees its own obstacle PPP, sampled only where an obstacle can
    touch the segment: its bounding box grown by the obstacle reach.
    """
    if law.intensity == 0:
        return 1.0
    reach = law.reach
    w, h = d + 2 * reach, 2 * reach
    counts = rng.poisson(law.intensity * w * h, n_pairs)
    total = int(counts.sum())
    if total == 0:
        return 1.0
    owner = np.repeat(np.arange(n_pairs), counts)
    centers = np.column_stack((rng.uniform(-reach, d + reach, total), rng.uniform(-reach, reach, total)))
    heights = rng.uniform(law.height_min, law.height_max, total)
    if law.shape == "cylinder":
        radii = rng.uniform(law.radius_min, law.radius_max, total)
        blocked = _disc_blocks(np.zeros(2), np.array([d, 0.0]), h0, h1, centers, radii, heights)
    else:
        lengths = rng.uniform(law.length_min, law.length_max, total)
        widths = rng.uniform(law.width_min, law.width_max, total)
        angles = rng.uniform(0.0, np.pi, total)
        blocked = _rect_blocks(d, h0, h1, centers, lengths, widths, angles, heights)
    any_block = np.bincount(owner, weights=blocked.astype(float), minlength=n_pairs) > 0
    return 1.0 - float(np.mean(any_block))


def _footprint_los_fraction(field: ObstacleField, d: float, n_pairs: int, h0: float, h1: float,
                            rng: np.random.Generator) -> float:
    """LOS fraction of random length-``d`` segments inside the footprint extent."""
    allpts = np.vstack(field.polygons)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    n_los = 0
    for _ in range(n_pairs):
        p0 = rng.uniform(lo, hi)
        theta = rng.uniform(0, 2 * np.pi)
        p1 = p0 + d * np.array([math.cos(theta), math.sin(theta)])
        n_los += is_los((p0[0], p0[1], h0), (p1[0], p1[1], h1), field)
    return n_los / n_pairs


@dataclass
class LosCurve:
    distances: np.ndarray
    los_fraction: np.ndarray
    n_pairs: int
    seed: int

    @property
    def standard_error(self) -> np.ndarray:
        p = self.los_fraction
        return np.sqrt(p * (1 - p) / self.n_pairs)


def empirical_los_curve(source, distances, n_pairs: int, seed: int,
                        h_tx: float = 1.5, h_rx: float = 1.5) -> LosCurve:
    """Fraction of node pairs at each distance whose link is unobstructed.

    ``source`` is an :class:`ObstacleLaw` (pairs see independent obstacle
    draws), an :class:`ObstacleField`, or a path to a footprint file.
    """
    if n_pairs < 1:
        raise InvalidParameter("n_pairs must be >= 1")
    distances = np.asarray(distances, dtype=float)
    if np.any(distances < 0):
        raise InvalidParameter("distances must be >= 0")
    if not isinstance(source, (ObstacleLaw, ObstacleField)):
        source = load_footprints(source)
    out = []
    for i, d in enumerate(distances):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), i])))
        if isinstance(source, ObstacleLaw):
            out.append(_law_los_fraction(source, float(d), n_pairs, h_tx, h_rx, rng))
        elif len(source) == 0:
            out.append(1.0)
        else:
            out.append(_footprint_los_fraction(source, float(d), n_pairs, h_tx, h_rx, rng))
    return LosCurve(distances, np.array(out), n_pairs, int(seed))
