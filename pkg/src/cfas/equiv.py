"""Rayleigh-equivalent antenna size for a square 2D region.

Given a Rayleigh square of side ``t_ray`` and a target HSP, find the side of
a Ricean square that reaches the same HSP at the same raw SNR threshold u.
With gain_ratio fixed, the Rayleigh normalized threshold is x0 = 2u and the
Ricean one is x = (kappa + 1) * x0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError
from .hsp import hsp_closed
from .model import ChannelParams, CorrelationModel, Geometry, JAKES

TABLE3_SIDES = (0.5, 1.0, 1.5, 2.0)
TABLE3_KAPPAS = (1.0, 4.0, 7.0)
TABLE3_TARGET = 0.01

# published A_Rice / A_Ray ratios, rows TABLE3_SIDES, columns TABLE3_KAPPAS
REFERENCE_AREA_RATIOS = (
    (6.25, 41.42, 77.44),
    (7.90, 70.39, 131.10),
    (9.65, 100.88, 205.83),
    (11.25, 132.37, 305.03),
)

THRESHOLD_MAPPING = "x = (kappa + 1) * x0 at equal raw threshold u"

_MAX_SIDE_GROWTH = 1e12


@dataclass(frozen=True)
class EquivalenceResult:
    t_rice: float
    area_ratio: float
    x0: float
    x: float
    iterations: int
    physical: bool = True


def _rayleigh_square_hsp(t_ray: float, x0: float, corr: CorrelationModel) -> float:
    return hsp_closed(2, ChannelParams(kappa=0.0), Geometry((t_ray, t_ray)), x0, corr)


def calibrate_threshold(t_ray: float, target_hsp: float, corr: CorrelationModel = JAKES) -> float:
    """Rayleigh normalized threshold x0 at which the square's HSP equals the target."""
    if not (1e-6 < target_hsp < 0.5):
        raise DomainError(f"target HSP must lie in (1e-6, 0.5), got {target_hsp}")
    if not (t_ray >= 0.0) or math.isinf(t_ray):
        raise DomainError(f"t_ray must be finite and >= 0, got {t_ray}")
    f = lambda x0: _rayleigh_square_hsp(t_ray, x0, corr) - target_hsp
    # the 0D root; boundary and area terms are >= 0 there because x0 > 1
    lo = -2.0 * math.log(target_hsp)
    if t_ray == 0.0:
        return lo
    hi = lo + 40.0
    while f(hi) > 0.0:
        hi += 40.0
        if hi > 1e4:
            raise BracketError(f"could not bracket Rayleigh threshold for t_ray={t_ray}")
    return brentq(f, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)


def _bisect(g, lo: float, hi: float) -> tuple[float, int]:
    # g(lo) >= 0 > g(hi); HSP is increasing in T so g decreases
    it = 0
    while it < 400:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi), it


def solve_equivalent_side(
    t_ray: float,
    kappa: float,
    target_hsp: float = TABLE3_TARGET,
    corr: CorrelationModel = JAKES,
) -> EquivalenceResult:
    """Ricean square side matching the Rayleigh square's HSP at equal u.

    Bisection on T over [t_ray, 100 t_ray], growing the upper end tenfold
    until the Ricean HSP exceeds the target. A solution below ``t_ray``
    (area ratio < 1) is returned with ``physical=False`` and a warning.
    """
    if not (kappa >= 0.0):
        raise DomainError(f"kappa must be >= 0, got {kappa}")
    if not (t_ray > 0.0) or math.isinf(t_ray):
        raise DomainError(f"t_ray must be finite and > 0, got {t_ray}")
    x0 = calibrate_threshold(t_ray, target_hsp, corr)
    x = (kappa + 1.0) * x0
    params = ChannelParams(kappa=kappa)

    def g(t: float) -> float:
        # increasing in t -> root of hsp - target, sign flipped for _bisect
        return hsp_closed(2, params, Geometry((t, t)), x, corr) - target_hsp

    physical = True
    if kappa == 0.0:
        return EquivalenceResult(t_ray, 1.0, x0, x, 0, True)
    if g(t_ray) > 0.0:
        physical = False
        if g(0.0) > 0.0:
            raise BracketError(
                f"a single point already exceeds the target HSP (kappa={kappa}, x={x}); no equivalent side"
            )
        lo, hi = 0.0, t_ray
    else:
        lo, hi = t_ray, 100.0 * t_ray
        while g(hi) < 0.0:
            lo, hi = hi, hi * 10.0
            if hi > _MAX_SIDE_GROWTH * t_ray:
                raise BracketError(f"HSP never reaches {target_hsp} for kappa={kappa}, t_ray={t_ray}")
    t_rice, iterations = _bisect(lambda t: g(t), lo, hi)
    if not physical:
        warnings.warn(
            f"equivalent Ricean side {t_rice:.6g} is smaller than the Rayleigh side {t_ray}",
            RuntimeWarning,
            stacklevel=2,
        )
    return EquivalenceResult(
        t_rice=t_rice,
        area_ratio=(t_rice / t_ray) ** 2,
        x0=x0,
        x=x,
        iterations=iterations,
        physical=physical,
    )


def table3(corr: CorrelationModel = JAKES, target_hsp: float = TABLE3_TARGET) -> list[list[EquivalenceResult]]:
    """Equivalence results on the 4 x 3 grid of Rayleigh sides and K-factors."""
    return [[solve_equivalent_side(t, k, target_hsp, corr) for k in TABLE3_KAPPAS] for t in TABLE3_SIDES]


def table3_deviation(results: list[list[EquivalenceResult]]) -> float:
    """Largest relative deviation of computed area ratios from the reference table."""
    worst = 0.0
    for row, ref_row in zip(results, REFERENCE_AREA_RATIOS):
        for res, ref in zip(row, ref_row):
            worst = max(worst, abs(res.area_ratio / ref - 1.0))
    return worst
