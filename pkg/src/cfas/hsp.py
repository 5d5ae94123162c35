"""Closed-form high-SNR probabilities for 0-3 dimensional antenna regions.

The 1D-3D expressions are written out term by term; :mod:`cfas.ecdensity`
assembles the same quantity generically from EC densities and curvatures,
and the tests hold the two paths together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .ecdensity import ec_densities
from .errors import DomainError
from .model import ChannelParams, CorrelationModel, Geometry, JAKES, ThresholdSpec
from .specfun import bessel_ie, marcum_q1

ASYMPTOTIC_HSP_LIMIT = 0.2


def normalize_threshold(u: float, params: ChannelParams) -> ThresholdSpec:
    """Map a raw linear SNR threshold to x = 2(kappa+1) u / gain_ratio."""
    if not (u > 0.0) or math.isinf(u):
        raise DomainError(f"SNR threshold u must be finite and > 0, got {u}")
    return ThresholdSpec(u=u, x=2.0 * (params.kappa + 1.0) * u / params.gain_ratio)


def denormalize_threshold(x: float, params: ChannelParams) -> ThresholdSpec:
    """Inverse of :func:`normalize_threshold`."""
    if not (x > 0.0) or math.isinf(x):
        raise DomainError(f"normalized threshold x must be finite and > 0, got {x}")
    return ThresholdSpec(u=x * params.gain_ratio / (2.0 * (params.kappa + 1.0)), x=x)


def hsp_closed(
    dim: int,
    params: ChannelParams,
    geom: Geometry,
    x: float,
    corr: CorrelationModel = JAKES,
) -> float:
    """EEC approximation of P(sup SNR > u) for a ``dim``-dimensional box.

    ``x`` is the normalized threshold. 0D is exact (a Marcum Q value); 1D-3D
    are the asymptotic high-threshold approximations.
    """
    if not isinstance(geom, Geometry):
        geom = Geometry(tuple(geom))
    if dim not in (0, 1, 2, 3):
        raise DomainError(f"dimension must be 0..3, got {dim}")
    if geom.dim != dim:
        raise DomainError(f"dimension {dim} needs {dim} side lengths, got {geom.dim}")
    if not (x > 0.0) or math.isinf(x):
        raise DomainError(f"normalized threshold x must be finite and > 0, got {x}")

    k = params.kappa
    q = marcum_q1(math.sqrt(2.0 * k), math.sqrt(x))
    if dim == 0:
        return q

    lam2 = corr.lambda2
    z = math.sqrt(2.0 * k * x)
    # e^{-(k+x/2)} I_n(z) = e^{-(k+x/2)+z} ie_n(z)
    env = math.exp(-(k + 0.5 * x) + z)
    i0 = bessel_ie(0, z)
    c = math.sqrt(lam2 / (2.0 * math.pi))
    sx = math.sqrt(x)

    if dim == 1:
        (t1,) = geom.sides
        return q + env * t1 * math.sqrt(lam2 * x / (2.0 * math.pi)) * i0

    i1 = bessel_ie(1, z)
    if dim == 2:
        t1, t2 = geom.sides
        bracket = ((t1 + t2) * sx + t1 * t2 * c * (x - 1.0)) * i0 - t1 * t2 * math.sqrt(
            lam2 * k * x / math.pi
        ) * i1
        return q + env * c * bracket

    i2 = bessel_ie(2, z)
    t1, t2, t3 = geom.sides
    s1 = t1 + t2 + t3
    s2 = t1 * t2 + t1 * t3 + t2 * t3
    s3 = t1 * t2 * t3
    a0 = s1 * sx + c * (s2 * (x - 1.0) + s3 * math.sqrt(lam2 * x / (2.0 * math.pi)) * (x + k - 3.0))
    a1 = math.sqrt(k * lam2 / math.pi) * (s3 * math.sqrt(2.0 * lam2 / math.pi) * (1.0 - x) - s2 * sx)
    a2 = s3 * lam2 * k * sx / (2.0 * math.pi)
    return q + env * c * (a0 * i0 + a1 * i1 + a2 * i2)


def in_asymptotic_regime(dim: int, params: ChannelParams, x: float, hsp: float) -> bool:
    """True when the HSP is small and every EC density up to ``dim`` is positive."""
    if hsp >= ASYMPTOTIC_HSP_LIMIT:
        return False
    return all(rho > 0.0 for rho in ec_densities(2.0 * params.kappa, x, dim))


@dataclass(frozen=True)
class HspRow:
    x: float
    u: float
    hsp: float
    asymptotic: bool


def hsp_sweep(
    dim: int,
    params: ChannelParams,
    geom: Geometry,
    x_grid: Sequence[float],
    corr: CorrelationModel = JAKES,
) -> list[HspRow]:
    """Evaluate :func:`hsp_closed` on a strictly increasing grid of x."""
    xs = [float(v) for v in x_grid]
    for a, b in zip(xs, xs[1:]):
        if not b > a:
            raise DomainError("x grid must be strictly increasing")
    rows = []
    for x in xs:
        p = hsp_closed(dim, params, geom, x, corr)
        rows.append(
            HspRow(
                x=x,
                u=denormalize_threshold(x, params).u,
                hsp=p,
                asymptotic=in_asymptotic_regime(dim, params, x, p),
            )
        )
    return rows
