"""Point processes, obstacle fields, and line-of-sight laws.

Distances are in meters and intensities in points per square meter.  The
analytic laws assume cylindrical obstacles whose centers form a homogeneous
PPP; the blockage tests below work on any realized field, which is how the
analytic laws are checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import InputFormatError, InvalidParameter

# ---------------------------------------------------------------------------
# sampling windows


@dataclass(frozen=True)
class Disc:
    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidParameter(f"disc radius must be positive and finite, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(n))
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        return np.column_stack((self.center[0] + r * np.cos(theta), self.center[1] + r * np.sin(theta)))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        d2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
        return d2 <= self.radius**2 * (1 + 1e-12)


@dataclass(frozen=True)
class Rect:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidParameter("rectangle window must have positive width and height")
        if not all(math.isfinite(v) for v in (self.xmin, self.xmax, self.ymin, self.ymax)):
            raise InvalidParameter("rectangle window must be finite")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.column_stack(
            (rng.uniform(self.xmin, self.xmax, n), rng.uniform(self.ymin, self.ymax, n))
        )

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return (
            (pts[:, 0] >= self.xmin) & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin) & (pts[:, 1] <= self.ymax)
        )


Window = Union[Disc, Rect]


@dataclass
class PointSet:
    points: np.ndarray
    intensity: float
    window: Window

    def __len__(self):
        return len(self.points)


def sample_ppp(intensity: float, window: Window, rng: np.random.Generator) -> PointSet:
    """Homogeneous PPP of the given intensity restricted to ``window``."""
    if not (intensity >= 0 and math.isfinite(intensity)):
        raise InvalidParameter(f"intensity must be finite and >= 0, got {intensity}")
    n = rng.poisson(intensity * window.area) if intensity > 0 else 0
    return PointSet(window.sample_uniform(n, rng), intensity, window)


# ---------------------------------------------------------------------------
# obstacles


@dataclass(frozen=True)
class ObstacleLaw:
    """Marked PPP law of obstacles.

    Cylinders use ``radius_min``/``radius_max``; rectangles use the length
    and width ranges and a uniformly random orientation.  All marks are
    uniform on their ranges.
    """

    intensity: float
    radius_min: float = 0.0
    radius_max: float = 0.0
    height_min: float = 0.0
    height_max: float = math.inf
    shape: str = "cylinder"
    length_min: float = 0.0
    length_max: float = 0.0
    width_min: float = 0.0
    width_max: float = 0.0

    def __post_init__(self):
        if not (self.intensity >= 0 and math.isfinite(self.intensity)):
            raise InvalidParameter("obstacle intensity must be finite and >= 0")
        if not 0 <= self.height_min <= self.height_max:
            raise InvalidParameter("need 0 <= height_min <= height_max")
        if self.shape == "cylinder":
            if not 0 <= self.radius_min <= self.radius_max:
                raise InvalidParameter("need 0 <= radius_min <= radius_max")
            if self.intensity > 0 and self.radius_max <= 0:
                raise InvalidParameter("cylinder radius must be positive")
        elif self.shape == "rectangle":
            if not (0 < self.length_min <= self.length_max and 0 < self.width_min <= self.width_max):
                raise InvalidParameter("rectangle length/width laws must be positive ranges")
        else:
            raise InvalidParameter(f"unknown obstacle shape {self.shape!r}")

    @property
    def mean_radius(self) -> float:
        return 0.5 * (self.radius_min + self.radius_max)

    @property
    def mean_radius_sq(self) -> float:
        a, b = self.radius_min, self.radius_max
        return (a * a + a * b + b * b) / 3.0

    @property
    def mean_area(self) -> float:
        if self.shape == "cylinder":
            return math.pi * self.mean_radius_sq
        return 0.25 * (self.length_min + self.length_max) * (self.width_min + self.width_max)

    @property
    def coverage_ratio(self) -> float:
        """Mean obstacle footprint area per unit ground area (overlaps counted twice)."""
        return self.intensity * self.mean_area

    @property
    def reach(self) -> float:
        """Largest distance from an obstacle center to its boundary."""
        if self.shape == "cylinder":
            return self.radius_max
        return 0.5 * math.hypot(self.length_max, self.width_max)

    @classmethod
    def from_coverage_ratio(cls, xi: float, **marks) -> "ObstacleLaw":
        if not 0 <= xi < 1:
            raise InvalidParameter(f"coverage ratio must lie in [0, 1), got {xi}")
        probe = cls(intensity=0.0, **marks)
        if xi == 0:
            return probe
        return cls(intensity=xi / probe.mean_area, **marks)


@dataclass
class ObstacleField:
    """Realized obstacles.

    ``radii`` is set for cylinders; ``polygons`` (a list of ``(k, 2)`` vertex
    arrays) for rectangles and imported footprints.
    """

    centers: np.ndarray
    heights: np.ndarray
    radii: Optional[np.ndarray] = None
    polygons: Optional[list] = None

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        self.heights = np.asarray(self.heights, dtype=float).reshape(-1)
        if self.radii is not None:
            self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
            if np.any(self.radii <= 0):
                raise InvalidParameter("obstacle radii must be positive")
        if np.any(self.heights <= 0):
            raise InvalidParameter("obstacle heights must be positive")

    def __len__(self):
        return len(self.centers)

    @classmethod
    def empty(cls) -> "ObstacleField":
        return cls(np.empty((0, 2)), np.empty(0), radii=np.empty(0))


def _rectangle(center, length, width, angle):
    c, s = math.cos(angle), math.sin(angle)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(center)


def sample_obstacles(law: ObstacleLaw, window: Window, rng: np.random.Generator) -> ObstacleField:
    pts = sample_ppp(law.intensity, window, rng).points
    n = len(pts)
    # a zero-height obstacle blocks nothing; keep heights strictly positive
    heights = rng.uniform(law.height_min, law.height_max, n) if n else np.empty(0)
    heights = np.maximum(heights, 1e-9)
    if law.shape == "cylinder":
        radii = rng.uniform(law.radius_min, law.radius_max, n)
        return ObstacleField(pts, heights, radii=np.maximum(radii, 1e-9))
    lengths = rng.uniform(law.length_min, law.length_max, n)
    widths = rng.uniform(law.width_min, law.width_max, n)
    angles = rng.uniform(0.0, np.pi, n)
    polys = [_rectangle(pts[i], lengths[i], widths[i], angles[i]) for i in range(n)]
    return ObstacleField(pts, heights, polygons=polys)


# ---------------------------------------------------------------------------
# blockage tests


def _disc_blocks(p0, p1, h0, h1, centers, radii, heights):
    """Per-obstacle blockage flags of segment p0->p1 by cylinders."""
    d = p1 - p0
    a = float(d @ d)
    rel = p0 - centers
    k = np.einsum("ij,ij->i", rel, rel) - radii**2
    inside0 = k < 0
    inside1 = np.einsum("ij,ij->i", p1 - centers, p1 - centers) < radii**2
    if a == 0.0:
        return inside0 | inside1
    b = rel @ d
    disc = b * b - a * k
    hit = disc >= 0
    root = np.sqrt(np.where(hit, disc, 0.0))
    lo = np.maximum((-b - root) / a, 0.0)
    hi = np.minimum((-b + root) / a, 1.0)
    hit &= lo <= hi
    line_min = np.minimum(h0 + lo * (h1 - h0), h0 + hi * (h1 - h0))
    return inside0 | inside1 | (hit & (heights >= line_min))


def _point_in_polygon(pt, poly) -> bool:
    x, y = pt
    xs, ys = poly[:, 0], poly[:, 1]
    xj, yj = np.roll(xs, 1), np.roll(ys, 1)
    crosses = ((ys > y) != (yj > y)) & (x < (xj - xs) * (y - ys) / np.where(yj == ys, 1e-300, yj - ys) + xs)
    return bool(np.count_nonzero(crosses) % 2)


def _polygon_blocks(p0, p1, h0, h1, poly, height) -> bool:
    if _point_in_polygon(p0, poly) or _point_in_polygon(p1, poly):
        return True
    d = p1 - p0
    q0 = poly
    e = np.roll(poly, -1, axis=0) - poly
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    w = q0 - p0
    ok = np.abs(denom) > 1e-15
    den = np.where(ok, denom, 1.0)
    s = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / den
    u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / den
    cross = ok & (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
    if not np.any(cross):
        return False
    line = h0 + s[cross] * (h1 - h0)
    return bool(height >= line.min())


def is_los(tx, rx, field: ObstacleField) -> bool:
    """Whether the 3D segment between ``tx`` and ``rx`` is unobstructed.

    ``tx`` and ``rx`` are ``(x, y, height)``.  An endpoint inside a footprint
    is always blocked; otherwise an obstacle blocks when its height reaches
    the lowest point of the segment over the stretch it covers.
    """
    if len(field) == 0:
        return True
    p0 = np.asarray(tx[:2], dtype=float)
    p1 = np.asarray(rx[:2], dtype=float)
    h0, h1 = float(tx[2]), float(rx[2])
    if field.radii is not None:
        return not bool(np.any(_disc_blocks(p0, p1, h0, h1, field.centers, field.radii, field.heights)))
    lo = np.minimum(p0, p1)
    hi = np.maximum(p0, p1)
    for poly, h in zip(field.polygons, field.heights):
        if np.any(poly.max(axis=0) < lo) or np.any(poly.min(axis=0) > hi):
            continue
        if _polygon_blocks(p0, p1, h0, h1, poly, h):
            return False
    return True


# ---------------------------------------------------------------------------
# analytic LOS law


def _uniform_cdf_integral(h, h_min, h_max):
    """Antiderivative of the uniform height CDF, zero below ``h_min``."""
    if h <= h_min:
        return 0.0
    width = h_max - h_min
    if h >= h_max:
        return h - h_min - 0.5 * width
    return (h - h_min) ** 2 / (2.0 * width)


def thinning_factor(h_tx: float, h_rx: float, height_law) -> float:
    """Fraction of obstacles tall enough to cut the Tx-Rx line.

    ``height_law`` is either a ``(h_min, h_max)`` pair for a uniform law
    (``h_min == h_max`` is a point mass) or any object with a ``cdf`` method
    (e.g. a frozen scipy distribution).
    """
    if h_tx < 0 or h_rx < 0:
        raise InvalidParameter("antenna heights must be >= 0")
    if hasattr(height_law, "cdf"):
        val, _ = integrate.quad(lambda s: height_law.cdf(s * h_rx + (1 - s) * h_tx), 0.0, 1.0,
                                epsabs=1e-13, epsrel=1e-12)
        return min(1.0, max(0.0, 1.0 - val))
    h_min, h_max = height_law
    if not 0 <= h_min <= h_max:
        raise InvalidParameter("height law needs 0 <= h_min <= h_max")
    # the line height is linear along the link, so the mean CDF is a difference quotient
    lo, hi = sorted((h_tx, h_rx))
    if lo >= h_max:
        return 0.0
    if hi < h_min:
        return 1.0
    if h_min == h_max:
        if hi == lo:
            val = 1.0 if lo >= h_min else 0.0
        else:
            val = max(hi - h_min, 0.0) - max(lo - h_min, 0.0)
            val /= hi - lo
    elif hi == lo:
        val = min(1.0, max(0.0, (lo - h_min) / (h_max - h_min)))
    else:
        val = (_uniform_cdf_integral(hi, h_min, h_max)
               - _uniform_cdf_integral(lo, h_min, h_max)) / (hi - lo)
    return min(1.0, max(0.0, 1.0 - val))


@dataclass(frozen=True)
class LosModel:
    """``p_L(d) = c exp(-beta d)``."""

    c: float = 1.0
    beta: float = 0.0
    eta: float = 1.0
    h_tx: Optional[float] = None
    h_rx: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise InvalidParameter(f"LOS constant c must lie in (0, 1], got {self.c}")
        if not self.beta >= 0:
            raise InvalidParameter("beta must be >= 0")
        if not 0 <= self.eta <= 1:
            raise InvalidParameter("thinning factor must lie in [0, 1]")

    @classmethod
    def from_obstacles(cls, law: ObstacleLaw, h_tx: float, h_rx: float,
                       eta: Optional[float] = None) -> "LosModel":
        if eta is None:
            eta = thinning_factor(h_tx, h_rx, (law.height_min, law.height_max))
        if law.shape != "cylinder":
            raise InvalidParameter("the analytic LOS law assumes cylindrical obstacles")
        c = math.exp(-eta * law.intensity * math.pi * law.mean_radius_sq)
        beta = 2.0 * eta * law.intensity * law.mean_radius
        return cls(c=c, beta=beta, eta=eta, h_tx=h_tx, h_rx=h_rx)


def los_probability(d, model: LosModel):
    return model.c * np.exp(-model.beta * np.asarray(d, dtype=float))


def _one_minus_1px_emx(x):
    """``1 - (1 + x) exp(-x)`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    out = np.empty_like(x)
    xs = x[small]
    # sum_{k>=2} (-1)^k (k-1) x^k / k!
    term = np.zeros_like(xs)
    fact = 1.0
    for k in range(2, 14):
        fact *= k
        term += (-1) ** k * (k - 1) * xs**k / fact
    out[small] = term
    xl = x[~small]
    out[~small] = -np.expm1(-xl) - xl * np.exp(-xl)
    return out


def _expected_los_count_scalar(d: float, lam: float, c: float, beta: float) -> float:
    if beta == 0:
        return math.pi * lam * c * d * d
    x = beta * d
    if x < 0.1:
        term, fact = 0.0, 1.0
        for k in range(2, 14):
            fact *= k
            term += (1 if k % 2 == 0 else -1) * (k - 1) * x**k / fact
        core = term
    else:
        core = -math.expm1(-x) - x * math.exp(-x)
    return 2 * math.pi * lam * c / (beta * beta) * core


def expected_los_count(d, lam: float, model: LosModel):
    """Mean number of LOS points of an intensity-``lam`` PPP inside B(o, d)."""
    if np.ndim(d) == 0:
        return _expected_los_count_scalar(float(d), lam, model.c, model.beta)
    d = np.asarray(d, dtype=float)
    if model.beta == 0:
        out = math.pi * lam * model.c * d**2
    else:
        out = 2 * math.pi * lam * model.c / model.beta**2 * _one_minus_1px_emx(model.beta * d)
    return out if out.ndim else float(out)


def los_total_mass(lam: float, model: LosModel) -> float:
    """Probability that at least one LOS point exists (``inf`` radius)."""
    if lam == 0:
        return 0.0
    if model.beta == 0:
        return 1.0
    return -math.expm1(-2 * math.pi * lam * model.c / model.beta**2)


def pdf_nearest_los(d, lam: float, model: LosModel):
    d = np.asarray(d, dtype=float)
    lam_d = expected_los_count(d, lam, model)
    out = 2 * math.pi * lam * d * model.c * np.exp(-lam_d - model.beta * d)
    return out if out.ndim else float(out)


def cdf_nearest_los(d, lam: float, model: LosModel):
    out = -np.expm1(-np.asarray(expected_los_count(d, lam, model)))
    return out if np.ndim(out) else float(out)


def pdf_nearest_nlos(d, lam: float, model: LosModel):
    d = np.asarray(d, dtype=float)
    lam_d = expected_los_count(d, lam, model)
    nlos = 1.0 - model.c * np.exp(-model.beta * d)
    out = 2 * math.pi * lam * d * nlos * np.exp(lam_d - math.pi * lam * d**2)
    return out if out.ndim else float(out)


def cdf_nearest_nlos(d, lam: float, model: LosModel):
    d = np.asarray(d, dtype=float)
    out = -np.expm1(-(math.pi * lam * d**2 - np.asarray(expected_los_count(d, lam, model))))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# footprint files


def load_footprints(path, default_height: float = math.inf) -> ObstacleField:
    """Read polygons: ``n x1 y1 ... xn yn [height]`` per line.

    Commas and whitespace both separate tokens; blank lines and ``#``
    comments are skipped.
    """
    path = Path(path)
    polys, heights = [], []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].replace(",", " ").strip()
            if not line:
                continue
            tokens = line.split()
            try:
                n = int(tokens[0])
                vals = [float(t) for t in tokens[1:]]
            except ValueError as exc:
                raise InputFormatError(f"non-numeric token ({exc})", line=lineno) from None
            if n < 3:
                raise InputFormatError(f"polygon needs at least 3 vertices, got {n}", line=lineno)
            if len(vals) not in (2 * n, 2 * n + 1):
                raise InputFormatError(
                    f"expected {2 * n} coordinates (plus optional height), got {len(vals)}", line=lineno
                )
            poly = np.asarray(vals[: 2 * n]).reshape(n, 2)
            h = vals[2 * n] if len(vals) == 2 * n + 1 else default_height
            if not h > 0:
                raise InputFormatError("height must be positive", line=lineno)
            polys.append(poly)
            heights.append(h)
    centers = np.array([p.mean(axis=0) for p in polys]).reshape(-1, 2)
    return ObstacleField(centers, np.array(heights, dtype=float), polygons=polys)


def write_footprints(path, polygons: Sequence[np.ndarray], heights: Optional[Sequence[float]] = None):
    with Path(path).open("w") as fh:
        for i, poly in enumerate(polygons):
            coords = " ".join(f"{x:.6f} {y:.6f}" for x, y in np.asarray(poly))
            tail = f" {heights[i]:.6f}" if heights is not None else ""
            fh.write(f"{len(poly)} {coords}{tail}\n")


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
