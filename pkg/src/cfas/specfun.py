"""Special functions and quadrature used by the analytic formulas.

Everything here is scalar, pure and reentrant. Each function has a plain
series oracle in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

MAX_BESSEL_ORDER = 8
ERFI_MAX_ARG = 12.0

_SERIES_CUTOFF = 25.0  # below: power series, above: Hankel expansion
_EPS = 1e-17


# ----------------------------------------------------------------------------
# Modified Bessel functions of the first kind, integer order
# ----------------------------------------------------------------------------


def _check_bessel_args(order, z):
    if int(order) != order or order < 0 or order > MAX_BESSEL_ORDER:
        raise DomainError(f"bessel order must be an integer in [0, {MAX_BESSEL_ORDER}], got {order}")
    if not (z >= 0.0) or math.isinf(z):
        raise DomainError(f"bessel argument must be finite and >= 0, got {z}")


def _bessel_series(n: int, z: float) -> float:
    # I_n(z) = sum_k (z/2)^(2k+n) / (k! (k+n)!), all terms positive
    if z == 0.0:
        return 1.0 if n == 0 else 0.0
    q = 0.25 * z * z
    term = (0.5 * z) ** n / math.factorial(n)
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if term <= _EPS * total and k > 0.5 * z:
            return total
        if k > 10_000:
            raise ConvergenceError(f"bessel series did not converge for z={z}")


def _bessel_hankel_scaled(n: int, z: float) -> float:
    # e^{-z} I_n(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(n) / z^k
    mu = 4.0 * n * n
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if (2 * k - 1) ** 2 > mu and abs(nxt) >= abs(term):
            break  # past the smallest term the expansion diverges
        term = nxt
        total += term
        if abs(term) < _EPS * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * z)


def bessel_ie(order: int, z: float) -> float:
    """Exponentially scaled ``exp(-z) * I_order(z)`` for ``z >= 0``."""
    _check_bessel_args(order, z)
    n = int(order)
    if z <= _SERIES_CUTOFF:
        return math.exp(-z) * _bessel_series(n, z)
    return _bessel_hankel_scaled(n, z)


def bessel_i(order: int, z: float) -> float:
    """Modified Bessel function of the first kind ``I_order(z)``.

    Integer orders 0..8 and real ``z >= 0`` only. Returns ``inf`` once the
    value overflows a double; use :func:`bessel_ie` to stay finite.
    """
    _check_bessel_args(order, z)
    n = int(order)
    if z <= _SERIES_CUTOFF:
        return _bessel_series(n, z)
    if z > 709.0:
        return math.inf
    return math.exp(z) * _bessel_hankel_scaled(n, z)


# ----------------------------------------------------------------------------
# Marcum Q of order 1
# ----------------------------------------------------------------------------


def marcum_q1(a: float, b: float) -> float:
    """First-order Marcum Q function, ``P(chi2_2(a^2) >= b^2)``.

    Evaluated as a Poisson(a^2/2) mixture of central chi-square tails,

        Q1(a, b) = sum_k Pois(k; a^2/2) * P(Pois(b^2/2) <= k),

    truncated once the geometric bound on the remaining Poisson(a^2/2) mass
    drops below 1e-16. All terms are nonnegative, so there is no
    cancellation.
    """
    if not (a >= 0.0 and b >= 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"marcum_q1 needs finite a, b >= 0, got a={a}, b={b}")
    nu = 0.5 * b * b
    mu = 0.5 * a * a
    # compare the squares so subnormal inputs fall into the exact edge cases
    if nu == 0.0:
        return 1.0
    if mu == 0.0:
        return math.exp(-nu)
    log_mu = math.log(mu)
    log_nu = math.log(nu)

    total = 0.0
    cdf = 0.0  # P(Pois(nu) <= k)
    k = 0
    while True:
        cdf += math.exp(-nu + k * log_nu - math.lgamma(k + 1))
        w = math.exp(-mu + k * log_mu - math.lgamma(k + 1))
        total += w * min(cdf, 1.0)
        if k + 2 > mu:
            # remaining mass sum_{m>k} w_m <= w_{k+1} / (1 - mu/(k+2))
            w_next = w * mu / (k + 1)
            if w_next / (1.0 - mu / (k + 2)) < 1e-16:
                break
        k += 1
        if k > 100_000:
            raise ConvergenceError(f"marcum_q1 mixture did not converge for a={a}, b={b}")
    return min(total, 1.0)


# ----------------------------------------------------------------------------
# Imaginary error function
# ----------------------------------------------------------------------------


def erfi(x: float) -> float:
    """Imaginary error function ``-i erf(i x)`` by its Maclaurin series.

    Supported for ``|x| <= 12``; beyond that the series terms overflow the
    range the level-crossing integrand ever needs.
    """
    if math.isnan(x):
        raise DomainError("erfi argument is NaN")
    if abs(x) > ERFI_MAX_ARG:
        raise OverflowError(f"erfi supported for |x| <= {ERFI_MAX_ARG}, got {x}")
    if x == 0.0:
        return 0.0
    ax = abs(x)
    x2 = ax * ax
    term = ax  # x^(2k+1) / k!
    total = ax
    k = 0
    while True:
        k += 1
        term *= x2 / k
        add = term / (2 * k + 1)
        total += add
        if add <= _EPS * total and k > x2:
            break
    val = 2.0 / math.sqrt(math.pi) * total
    return val if x > 0 else -val


# ----------------------------------------------------------------------------
# Gauss-Legendre quadrature
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, f, lo: float, hi: float) -> float:
        """Integrate a vectorized callable over [lo, hi] by affine remap."""
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        return half * float(np.dot(self.weights, f(mid + half * self.nodes)))


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` nodes, 2 <= order <= 256.

    Nodes are the Legendre roots found by Newton iteration from the
    Chebyshev-like initial guess; the rule integrates polynomials of degree
    up to ``2*order - 1`` exactly.
    """
    if int(order) != order or not (2 <= order <= 256):
        raise DomainError(f"quadrature order must be an integer in [2, 256], got {order}")
    n = int(order)
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        step = p1 / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise ConvergenceError(f"Legendre root iteration did not converge for order {n}")
    # recompute the derivative at the converged nodes
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    # ascending order, exact symmetry
    x = x[::-1].copy()
    w = w[::-1].copy()
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(nodes=x, weights=w, order=n)
