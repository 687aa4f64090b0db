"""
Critical-speed mathematics.

The speed curve is v(zeta) = (lambda L(-zeta) - lambda + mu) / zeta for
zeta in (0, alpha]. Its minimum v** (attained at zeta**) is the critical
speed; zeta(v) is the inverse on the decreasing branch (0, zeta**].
Rescaling in mu is built into every formula: v(lambda, mu) = mu v(lambda/mu, 1).
"""

import logging
import math
from typing import Callable, Iterable, List, Tuple

from scipy.optimize import brentq

from .dist import ExponentialMeanOne, JumpLaw
from .errors import NonConvergence, UnboundedSpeed
from .models import CriticalSpeed, SpeedCurvePoint

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

ZETA_TOLERANCE = 1e-10
MAX_BRACKET_STEPS = 200


def _check_rates(lam: float, mu: float) -> None:
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")


def v_of_zeta(law: JumpLaw, lam: float, mu: float, zeta: float) -> float:
    """
    Speed of a front whose right tail decays like exp(-zeta x).

    Args:
        law: jump-size law
        lam: independent-jump rate
        mu: synchronization rate
        zeta: tail decay rate, > 0

    Returns:
        v(zeta), or ``math.inf`` when L(-zeta) diverges.
    """
    _check_rates(lam, mu)
    if not zeta > 0:
        raise ValueError(f"zeta must be > 0, got {zeta}")
    if lam == 0:
        return mu / zeta
    transform = law.laplace(-zeta)
    if math.isinf(transform):
        return math.inf
    return (lam * transform - lam + mu) / zeta


def speed_curve(law: JumpLaw, lam: float, mu: float,
                zetas: Iterable[float]) -> List[SpeedCurvePoint]:
    """Sample v(zeta) on a grid of zeta values."""
    return [SpeedCurvePoint(float(z), v_of_zeta(law, lam, mu, float(z))) for z in zetas]


def exponential_critical(lam: float, mu: float) -> Tuple[float, float]:
    """Closed-form (zeta**, v**) for unit-mean exponential jumps."""
    _check_rates(lam, mu)
    sl, sm = math.sqrt(lam), math.sqrt(mu)
    return sm / (sl + sm), (sl + sm) ** 2


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = ZETA_TOLERANCE) -> Tuple[float, float]:
    """
    Golden-section search.

    Given a function f with a single local minimum in [a, b], returns
    a subinterval [c, d] containing the minimum with d - c <= tol.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, b

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        return a, d
    return c, b


def _bracket_minimum(f: Callable[[float], float], start: float,
                     upper: float) -> Tuple[float, float, bool]:
    """
    Grow a bracket lo < mid < hi with f(mid) below both ends.

    Returns (lo, hi, reached_upper); reached_upper means f kept decreasing
    all the way to ``upper``.
    """
    mid, f_mid = start, f(start)
    lo = mid / 2.0
    f_lo = f(lo)
    steps = 0
    while f_lo < f_mid:
        mid, f_mid = lo, f_lo
        lo = mid / 2.0
        f_lo = f(lo)
        steps += 1
        if steps > MAX_BRACKET_STEPS:
            raise NonConvergence("speed curve keeps decreasing toward zeta = 0")

    hi = min(2.0 * mid, upper)
    f_hi = f(hi)
    steps = 0
    while f_hi < f_mid:
        if hi >= upper:
            return mid, hi, True
        lo, mid, f_mid = mid, hi, f_hi
        hi = min(2.0 * mid, upper)
        f_hi = f(hi)
        steps += 1
        if steps > MAX_BRACKET_STEPS:
            raise NonConvergence("speed curve keeps decreasing for large zeta")
    return lo, hi, False


def _stationarity(law: JumpLaw, lam: float, mu: float) -> Callable[[float], float]:
    # zeta^2 v'(zeta) up to sign: positive left of zeta**, negative right of it
    def g(zeta: float) -> float:
        return lam * zeta * law.laplace_derivative(-zeta) + lam * law.laplace(-zeta) - lam + mu
    return g


def _refine(g: Callable[[float], float], zeta: float, lo: float, hi: float) -> float:
    a, b = lo, hi
    for _ in range(60):
        ga = g(a)
        if math.isfinite(ga) and ga > 0:
            break
        a = 0.5 * (a + zeta)
    else:
        return zeta
    for _ in range(60):
        gb = g(b)
        if math.isfinite(gb) and gb < 0:
            break
        b = 0.5 * (b + zeta)
    else:
        return zeta
    return brentq(g, a, b, xtol=1e-15)


def _numeric_critical(law: JumpLaw, lam: float, mu: float) -> CriticalSpeed:
    alpha = law.tail_exponent
    f = lambda z: v_of_zeta(law, lam, mu, z)
    start = min(alpha, 1.0) / 2.0
    lo, hi, reached_upper = _bracket_minimum(f, start, alpha)

    if reached_upper:
        # convex curve still decreasing at alpha means the minimum sits on the boundary
        eps = 1e-6 * alpha
        if f(alpha - eps) >= f(alpha):
            logger.warning("speed curve minimum at the tail boundary zeta = alpha = %.9g", alpha)
            return CriticalSpeed(alpha, f(alpha), lam, mu, at_tail_boundary=True)

    c, d = golden_section(f, lo, hi)
    zeta = 0.5 * (c + d)
    zeta = _refine(_stationarity(law, lam, mu), zeta, lo, hi)
    return CriticalSpeed(zeta, f(zeta), lam, mu)


def critical(law: JumpLaw, lam: float, mu: float, closed_form: bool = True) -> CriticalSpeed:
    """
    Minimize the speed curve.

    Args:
        law: jump-size law with tail exponent > 0
        lam: independent-jump rate, > 0
        mu: synchronization rate, > 0
        closed_form: use the exponential closed form when it applies

    Returns:
        CriticalSpeed with (zeta**, v**).

    Raises:
        UnboundedSpeed: tail exponent is 0
    """
    _check_rates(lam, mu)
    if not lam > 0:
        raise ValueError("critical speed needs lambda > 0")
    if law.tail_exponent == 0:
        raise UnboundedSpeed("tail exponent is 0: v** is infinite")
    if closed_form and isinstance(law, ExponentialMeanOne):
        zeta, v = exponential_critical(lam, mu)
        return CriticalSpeed(zeta, v, lam, mu)
    return _numeric_critical(law, lam, mu)


def zeta_of_v(law: JumpLaw, lam: float, mu: float, v: float) -> float:
    """
    Tail decay rate of a front moving at speed v >= v**.

    Returns the unique zeta in (0, zeta**] with v(zeta) = v.
    """
    crit = critical(law, lam, mu)
    if v < crit.v_star * (1.0 - 1e-12):
        raise ValueError(f"v={v} is below the critical speed {crit.v_star:.9g}")
    if v <= crit.v_star:
        return crit.zeta_star

    if isinstance(law, ExponentialMeanOne):
        lam_n, v_n = lam / mu, v / mu
        b = 1.0 + v_n - lam_n
        disc = max(b * b - 4.0 * v_n, 0.0)
        return 2.0 / (b + math.sqrt(disc))

    f = lambda z: v_of_zeta(law, lam, mu, z) - v
    lo = crit.zeta_star / 2.0
    for _ in range(MAX_BRACKET_STEPS):
        if f(lo) > 0:
            break
        lo /= 2.0
    else:
        raise NonConvergence("could not bracket zeta(v)")
    return brentq(f, lo, crit.zeta_star, xtol=1e-15)
