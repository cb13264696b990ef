"""Improper integrals over [0, inf) with certified tail truncation.

The integrands met in coverage analysis decay at least like ``x exp(-beta x)``
or like a Gaussian, so the half line is covered with geometrically growing
panels; each panel is handed to QUADPACK and the sweep stops once an analytic
bound on the remaining tail is negligible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from scipy import integrate

from .errors import NumericalFailure

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int

    def __float__(self):
        return self.value


def integrate_improper(
    f: Callable[[float], float],
    tol: float = DEFAULT_TOL,
    scale: float = 1.0,
    tail_bound: Optional[Callable[[float], float]] = None,
    upper: float = math.inf,
    points: Iterable[float] = (),
    atol: float = 1e-14,
    max_panels: int = 80,
) -> QuadResult:
    """Integrate ``f`` over ``[0, upper)``.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    tol : float
        Relative tolerance on the result.
    scale : float
        Width of the first panel; later panels double in width.  Should be
        of the order of the integrand's decay length.
    tail_bound : callable, optional
        ``tail_bound(T)`` must bound ``int_T^inf |f|``.  When given, the
        sweep stops as soon as the bound drops below ``tol`` times the
        running value.  Without it, two consecutive negligible panels end
        the sweep.
    upper : float
        Hard upper limit (the integrand is taken as zero beyond it).
    points : iterable of float
        Known kinks or discontinuities of ``f``.
    """
    if not (tol > 0 and scale > 0):
        raise ValueError("tol and scale must be positive")
    if upper <= 0:
        return QuadResult(0.0, 0.0, 0)
    points = sorted(p for p in points if 0 < p < upper and math.isfinite(p))

    total = 0.0
    err = 0.0
    quiet = 0
    a, width = 0.0, scale
    for panel in range(1, max_panels + 1):
        b = min(a + width, upper)
        inner = [p for p in points if a < p < b]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, est = integrate.quad(
                f, a, b, points=inner or None, epsabs=atol * 1e-2,
                epsrel=tol * 1e-2, limit=400,
            )
        total += val
        err += est
        if b >= upper:
            break
        floor = tol * max(abs(total), atol)
        if tail_bound is not None:
            if tail_bound(b) <= floor:
                break
        else:
            quiet = quiet + 1 if abs(val) <= floor else 0
            if quiet >= 2:
                break
        a, width = b, 2.0 * width
    else:
        raise NumericalFailure(
            f"improper integral did not converge in {max_panels} panels",
            achieved=err / max(abs(total), atol),
        )
    if err > max(tol * abs(total), atol):
        raise NumericalFailure(
            f"quadrature error {err:.3g} exceeds tolerance", achieved=err / max(abs(total), atol)
        )
    return QuadResult(total, err, panel)
