"""1D high-SNR probability from level crossing rates.

For a line of length T1 the sup-exceedance probability is asymptotically
Q1(sqrt(2k), sqrt(x)) + T1 * LCR(x), where LCR is the upcrossing rate of the
noncentral chi-square process X(t) = |sqrt(2k) a(t) + g(t)|^2 across x.

Writing the envelope derivative given the phase psi relative to the LoS ray
as a Gaussian with mean mu(psi) = w sqrt(2k) sin(psi) (w the LoS spatial
frequency) and variance lambda2, Rice's formula gives

    LCR(x) = sqrt(2 lambda2 x) / pi^(3/2) * exp(-(k + x/2))
             * int_0^{pi/2} cosh(sqrt(2kx) cos psi)
               * (exp(-b^2) + sqrt(pi) b erf(b)) dpsi,
    b = w sqrt(k) sin(psi) / sqrt(lambda2).

For the Jakes kernel b = sqrt(2k) sin(phi) sin(theta) sin(psi). The
``"printed"`` convention evaluates the same integrand with imaginary
arguments, exp(+b^2) - sqrt(pi) b erfi(b), for diagnostics only; it turns
negative for large b and disagrees with simulated upcrossing counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf

from .errors import BracketError, ConvergenceError, DomainError
from .hsp import hsp_closed
from .model import ChannelParams, CorrelationModel, Geometry, JAKES
from .specfun import bessel_ie, erfi, gauss_legendre, marcum_q1

DEFAULT_QUAD_ORDER = 64
QUAD_RTOL = 1e-10
X_BRACKET = (1e-6, 200.0)


@dataclass(frozen=True)
class LcrResult:
    """Upcrossings per wavelength; ``imag_residual`` is the magnitude of any
    imaginary part discarded while evaluating the integrand."""

    rate: float
    imag_residual: float = 0.0


def _los_frequency(params: ChannelParams) -> float:
    # 1D steering phase is 2*pi*t*sin(phi)*sin(theta)
    return 2.0 * math.pi * math.sin(params.phi) * math.sin(params.theta)


def _integral(params: ChannelParams, x: float, corr: CorrelationModel, order: int, convention: str):
    """Scaled integral e^{-z} int_0^{pi/2} cosh(z cos psi) g(psi) dpsi, z = sqrt(2kx)."""
    rule = gauss_legendre(order)
    k = params.kappa
    z = math.sqrt(2.0 * k * x)
    b0 = _los_frequency(params) * math.sqrt(k / corr.lambda2)
    psi = 0.25 * math.pi * (rule.nodes + 1.0)
    cos_p = np.cos(psi)
    # e^{-z} cosh(z cos psi), overflow-free
    ch = 0.5 * (np.exp(z * (cos_p - 1.0)) + np.exp(-z * (cos_p + 1.0)))
    b = b0 * np.sin(psi)
    imag = 0.0
    if convention == "derived":
        g = np.exp(-b * b) + math.sqrt(math.pi) * b * erf(b)
    elif convention == "printed":
        if corr.family != "jakes":
            raise DomainError("the printed integrand is written for the Jakes kernel only")
        # e^{2k s^2} + sqrt(2k pi) j s erf(sqrt(2k) j s), erf(j v) = j erfi(v)
        vals = np.array(
            [complex(math.exp(v * v)) + math.sqrt(math.pi) * (1j * v) * (1j * erfi(v)) for v in b]
        )
        imag = float(np.max(np.abs(vals.imag))) if len(vals) else 0.0
        g = vals.real
    else:
        raise DomainError(f"unknown convention {convention!r}")
    val = 0.25 * math.pi * float(np.dot(rule.weights, ch * g))
    return val, imag, z


def lcr_rate(
    params: ChannelParams,
    x: float,
    quad_order: int = DEFAULT_QUAD_ORDER,
    corr: CorrelationModel = JAKES,
    convention: str = "derived",
) -> LcrResult:
    """Level crossing rate of X(t) across ``x`` for a 1D antenna.

    The psi-integral uses Gauss-Legendre at ``quad_order`` and again at twice
    the order (capped at 256); a relative change above 1e-10 raises
    :class:`ConvergenceError`.
    """
    if not (x > 0.0) or math.isinf(x):
        raise DomainError(f"normalized threshold x must be finite and > 0, got {x}")
    val, imag, z = _integral(params, x, corr, quad_order, convention)
    finer = min(2 * quad_order, 256)
    if finer != quad_order:
        val2, _, _ = _integral(params, x, corr, finer, convention)
        if abs(val2 - val) > QUAD_RTOL * max(abs(val2), 1e-300):
            raise ConvergenceError(
                f"LCR quadrature not converged: order {quad_order} -> {val}, order {finer} -> {val2}"
            )
    k = params.kappa
    pref = math.sqrt(2.0 * corr.lambda2 * x) / math.pi**1.5 * math.exp(-(k + 0.5 * x) + z)
    rate = pref * val
    return LcrResult(rate=rate, imag_residual=pref * imag)


def broadside_rate(params: ChannelParams, x: float, corr: CorrelationModel = JAKES) -> float:
    """Closed-form LCR when the LoS phase is constant along the line (phi = 0):
    sqrt(lambda2 x / (2 pi)) exp(-(k + x/2)) I0(sqrt(2kx))."""
    k = params.kappa
    z = math.sqrt(2.0 * k * x)
    return math.sqrt(corr.lambda2 * x / (2.0 * math.pi)) * math.exp(-(k + 0.5 * x) + z) * bessel_ie(0, z)


def hsp_lcr_1d(
    params: ChannelParams,
    t1: float,
    x: float,
    corr: CorrelationModel = JAKES,
    quad_order: int = DEFAULT_QUAD_ORDER,
    convention: str = "derived",
) -> float:
    """Q1(sqrt(2k), sqrt(x)) + T1 * LCR(x)."""
    if not (t1 >= 0.0) or math.isinf(t1):
        raise DomainError(f"T1 must be finite and >= 0, got {t1}")
    q = marcum_q1(math.sqrt(2.0 * params.kappa), math.sqrt(x))
    if t1 == 0.0:
        return q
    return q + t1 * lcr_rate(params, x, quad_order, corr, convention).rate


@dataclass(frozen=True)
class DiscrepancyRow:
    kappa: float
    phi: float
    x: float
    difference: float
    status: str = "ok"


def solve_lcr_threshold(params: ChannelParams, t1: float, target: float, corr: CorrelationModel = JAKES) -> float:
    """x at which the LCR-method HSP equals ``target``, bracketed in [1e-6, 200]."""
    f = lambda x: hsp_lcr_1d(params, t1, x, corr) - target
    lo, hi = X_BRACKET
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise BracketError(f"no sign change of HSP - {target} on x in [{lo}, {hi}]")
    return brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)


def discrepancy_map(
    kappa_grid: Sequence[float],
    phi_grid: Sequence[float],
    t1: float,
    target_hsp: float,
    theta: float = math.pi / 2,
    corr: CorrelationModel = JAKES,
) -> list[DiscrepancyRow]:
    """LCR-method minus EEC 1D HSP at the threshold where the LCR HSP hits
    ``target_hsp``, for every (kappa, phi) cell.

    A cell whose root cannot be bracketed is reported with NaN values and a
    status string instead of aborting the map.
    """
    if not (0.0 < target_hsp < 0.5):
        raise DomainError(f"target HSP must lie in (0, 0.5), got {target_hsp}")
    rows = []
    for k in kappa_grid:
        for phi in phi_grid:
            params = ChannelParams(kappa=float(k), phi=float(phi), theta=theta)
            try:
                x = solve_lcr_threshold(params, t1, target_hsp, corr)
            except (BracketError, ConvergenceError, ValueError) as exc:
                rows.append(DiscrepancyRow(float(k), float(phi), math.nan, math.nan, f"failed: {exc}"))
                continue
            diff = hsp_lcr_1d(params, t1, x, corr) - hsp_closed(1, params, Geometry((t1,)), x, corr)
            rows.append(DiscrepancyRow(float(k), float(phi), x, diff))
    return rows
