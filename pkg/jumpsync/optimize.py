"""
Jump/synchronization trade-off: maximize v** subject to a lambda + b mu = 1.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .dist import ExponentialMeanOne, JumpLaw
from .models import TradeoffResult
from .speed import critical, golden_section

logger = logging.getLogger(__name__)

SWEEP_POINTS = 100
UNIMODAL_TOLERANCE = 1e-6


def _check_budget(a: float, b: float) -> None:
    if not a > 0 or not b > 0:
        raise ValueError(f"budget weights must be > 0, got a={a}, b={b}")


def _speed_on_budget(law: JumpLaw, a: float, b: float, lam: float) -> float:
    return critical(law, lam, (1.0 - a * lam) / b).v_star


def tradeoff_sweep(law: JumpLaw, a: float, b: float,
                   points: int = SWEEP_POINTS) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    v** along the budget line at ``points`` interior values of lambda.

    Returns:
        (lambdas, mus, speeds)
    """
    _check_budget(a, b)
    if points < 3:
        raise ValueError(f"need at least 3 sweep points, got {points}")
    lams = np.linspace(0.0, 1.0 / a, points + 2)[1:-1]
    mus = (1.0 - a * lams) / b
    speeds = np.array([_speed_on_budget(law, a, b, lam) for lam in lams])
    return lams, mus, speeds


def _is_unimodal(values: np.ndarray, tol: float = UNIMODAL_TOLERANCE) -> bool:
    steps = np.diff(values)
    falling = np.nonzero(steps < -tol)[0]
    if len(falling) == 0:
        return True
    return not np.any(steps[falling[0]:] > tol)


def optimize_tradeoff(law: JumpLaw, a: float, b: float, closed_form: bool = True,
                      points: int = SWEEP_POINTS,
                      sweep: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None
                      ) -> TradeoffResult:
    """
    Best split of the budget a lambda + b mu = 1.

    Unit-mean exponential jumps use the closed form
    lambda = 1 / (a + a^2/b), mu = 1 / (b + b^2/a). Other laws are swept on a
    grid and refined by golden-section search around the best grid point; a
    sweep that is not unimodal is logged and flagged on the result. A sweep
    already computed by ``tradeoff_sweep`` can be passed in to skip a second one.

    Raises:
        UnboundedSpeed: the law has tail exponent 0
    """
    _check_budget(a, b)
    if closed_form and isinstance(law, ExponentialMeanOne):
        lam = 1.0 / (a + a * a / b)
        mu = (1.0 - a * lam) / b
        return TradeoffResult(lam, mu, (math.sqrt(lam) + math.sqrt(mu)) ** 2, a, b,
                              closed_form=True)

    if sweep is None:
        sweep = tradeoff_sweep(law, a, b, points)
    lams, _, speeds = sweep
    unimodal = _is_unimodal(speeds)
    if not unimodal:
        logger.warning("v** is not unimodal along the budget line (a=%g, b=%g); "
                       "returning the optimum around the best sweep point", a, b)

    k = int(np.argmax(speeds))
    lo = lams[k - 1] if k > 0 else 0.5 * lams[0]
    hi = lams[k + 1] if k + 1 < len(lams) else 0.5 * (lams[-1] + 1.0 / a)
    c, d = golden_section(lambda lam: -_speed_on_budget(law, a, b, lam), lo, hi)
    lam = 0.5 * (c + d)
    mu = (1.0 - a * lam) / b
    return TradeoffResult(lam, mu, _speed_on_budget(law, a, b, lam), a, b,
                          closed_form=False, unimodal=unimodal)
