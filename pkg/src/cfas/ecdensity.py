"""Euler characteristic densities of a noncentral chi-square(2) field and
Lipschitz-Killing curvatures of box regions.

The EC density rho_j(lam, x) is available two ways: the infinite triple sum
(:func:`ec_density_series`) and a finite Bessel-function closed form
(:func:`ec_density_closed`). The two are independent code paths and are
checked against each other in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .errors import ConvergenceError, DomainError
from .model import CorrelationModel, Geometry, JAKES
from .specfun import bessel_ie, marcum_q1

MAX_SERIES_TERMS = 10_000


@dataclass(frozen=True)
class EcArgs:
    """Dimension index ``j``, noncentrality ``lam`` and threshold ``x``."""

    j: int
    lam: float
    x: float

    def __post_init__(self):
        if int(self.j) != self.j or not (0 <= self.j <= 3):
            raise DomainError(f"EC density index j must be 0..3, got {self.j}")
        if not (self.lam >= 0.0) or math.isinf(self.lam):
            raise DomainError(f"noncentrality must be finite and >= 0, got {self.lam}")
        if not (self.x > 0.0) or math.isinf(self.x):
            raise DomainError(f"threshold x must be finite and > 0, got {self.x}")


def _inner_sum(j: int, i: int, x: float) -> float:
    # finite (l, m) part of the series for fixed i, indicator applied as written
    fj = math.factorial(j - 1)
    acc = 0.0
    for l in range((j - 1) // 2 + 1):
        for m in range(j - 1 - 2 * l + 1):
            if not (2 >= j - m - 2 * l - 2 * i):
                continue
            r = j - 1 - m - 2 * l
            binom = math.comb(1 + 2 * i, r)
            if binom == 0:
                continue
            sign = -1.0 if (j - 1 + m + l) % 2 else 1.0
            acc += sign * binom * fj * x ** (m + l) / (math.factorial(m) * math.factorial(l) * 2**l)
    return acc


def ec_density_series(j: int, lam: float, x: float, tolerance: float = 1e-16) -> float:
    """EC density rho_j(lam, x) from the infinite series in ``i``.

    ``j = 0`` gives the noncentral chi-square tail Q1(sqrt(lam), sqrt(x)).
    For ``j >= 1`` the sum over ``i`` stops once three consecutive terms are
    each below ``tolerance`` times the running sum.
    """
    args = EcArgs(j, lam, x)
    if not tolerance > 0.0:
        raise DomainError(f"tolerance must be > 0, got {tolerance}")
    if args.j == 0:
        return marcum_q1(math.sqrt(lam), math.sqrt(x))

    pref = math.exp(-0.5 * (lam + x)) / (2.0 * math.pi) ** (0.5 * j)
    coef = x ** (1.0 - 0.5 * j)  # lam^i x^(1+i-j/2) / (4^i (i!)^2)
    q = 0.25 * lam * x
    total = 0.0
    quiet = 0
    for i in range(MAX_SERIES_TERMS):
        if i > 0:
            coef *= q / (i * i)
        term = coef * _inner_sum(j, i, x)
        total += term
        if abs(term) <= tolerance * abs(total):
            quiet += 1
            if quiet >= 3:
                return pref * total
        else:
            quiet = 0
    raise ConvergenceError(
        f"EC density series did not converge in {MAX_SERIES_TERMS} terms (j={j}, lam={lam}, x={x})"
    )


def _s_closed(r: int, y: float, z: float) -> float:
    """(y^(r-1)/r!) d^r/dy^r {y I0(2y)}, scaled by exp(-2y); z = 2y."""
    ie = lambda n: bessel_ie(abs(n), z)  # I_{-n} = I_n
    acc = y**r * ie(r)
    for t in range(r):
        acc += r * math.comb(r - 1, t) * y ** (r - 1) * ie(2 * t - r + 1)
        acc += y**r * math.comb(r, t) * ie(2 * t - r)
    return acc / math.factorial(r)


def ec_density_closed(j: int, lam: float, x: float) -> float:
    """EC density rho_j(lam, x), j = 1..3, as a finite sum of Bessel terms.

    The infinite sum over ``i`` collapses to

        S_r(y) = y^(r-1)/r! * d^r/dy^r {y I0(2y)},   2y = sqrt(lam x),

    with r = j-1-m-2l, and the derivative expands by the Leibniz rule into
    I_{2t-r}(2y) and I_{2t-r+1}(2y) terms.
    """
    args = EcArgs(j, lam, x)
    if args.j == 0:
        raise DomainError("closed form covers j >= 1; use ec_density_series for j = 0")
    z = math.sqrt(lam * x)
    y = 0.5 * z
    # exp(-(lam+x)/2) I(z) = exp(-(lam+x)/2 + z) * ie(z); exponent <= 0 by AM-GM
    scale = math.exp(-0.5 * (lam + x) + z)
    pref = scale * x ** (1.0 - 0.5 * j) * math.factorial(j - 1) / (2.0 * math.pi) ** (0.5 * j)
    acc = 0.0
    for l in range((j - 1) // 2 + 1):
        for m in range(j - 1 - 2 * l + 1):
            r = j - 1 - m - 2 * l
            sign = -1.0 if (j - 1 + m + l) % 2 else 1.0
            acc += sign * x ** (m + l) / (math.factorial(m) * math.factorial(l) * 2**l) * _s_closed(r, y, z)
    return pref * acc


# ----------------------------------------------------------------------------
# Lipschitz-Killing curvatures
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureSet:
    """Curvatures L_0..L_n and the Euclidean intrinsic volumes they scale."""

    values: tuple[float, ...]
    euclidean: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.values) - 1


def curvatures(geometry: Geometry, corr: CorrelationModel = JAKES) -> CurvatureSet:
    """Lipschitz-Killing curvatures of an axis-aligned box.

    The Euclidean intrinsic volumes of a box are the elementary symmetric
    polynomials of its side lengths (1; length sum; pairwise products;
    volume), and L_j = lambda2^(j/2) * L_j^E.
    """
    if not isinstance(geometry, Geometry):
        geometry = Geometry(tuple(geometry))
    sides = geometry.sides
    euclid = [1.0]
    for j in range(1, len(sides) + 1):
        euclid.append(float(sum(math.prod(c) for c in combinations(sides, j))))
    lam2 = corr.lambda2
    values = tuple(lam2 ** (0.5 * j) * e for j, e in enumerate(euclid))
    return CurvatureSet(values=values, euclidean=tuple(euclid))


def eec(lam: float, x: float, curv: CurvatureSet, method: str = "closed") -> float:
    """Expected Euler characteristic sum_j L_j rho_j(lam, x).

    Not clamped to [0, 1]; the value is only a probability approximation at
    high thresholds.
    """
    if method not in ("closed", "series"):
        raise DomainError(f"method must be 'closed' or 'series', got {method!r}")
    total = curv.values[0] * ec_density_series(0, lam, x)
    for j in range(1, len(curv.values)):
        if curv.values[j] == 0.0:
            continue
        rho = ec_density_closed(j, lam, x) if method == "closed" else ec_density_series(j, lam, x)
        total += curv.values[j] * rho
    return total


def ec_densities(lam: float, x: float, dim: int) -> list[float]:
    """rho_0..rho_dim at (lam, x)."""
    return [ec_density_series(0, lam, x)] + [ec_density_closed(j, lam, x) for j in range(1, dim + 1)]
