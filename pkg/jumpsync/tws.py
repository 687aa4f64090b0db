"""
Traveling-wave shapes for unit-mean exponential jumps.

With mu = 1 a wave phi_x moving at speed v solves the planar system

    phi' = z,    z' = -z + ((1 + lambda - 2 phi) / v) z + phi (1 - phi) / v

whose fixed points are (0, 0) and (1, 0). A wave of the original system is
the trajectory leaving (0, 0) along its unstable direction and ending at
(1, 0). Trajectories are integrated in the phi parameterization
(dz/dphi = z'/z, dx/dphi = 1/z) and classified by how they reach phi = 1.

Rates are normalized as (lambda/mu, 1, v/mu) before any of this; the shape
in x does not change under that time rescaling.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from .errors import NonConvergence, Phi0TooLarge, WindowTooShort
from .models import Classification, EndpointEigen, WaveKind, WaveRecord
from .speed import exponential_critical

logger = logging.getLogger(__name__)

LAUNCH_OFFSET = 1e-6
END_OFFSET = 1e-8
MIN_HIT_SLOPE = 1e-10
DIRECT_HIT_SLOPE = 1e-6  # above this z at the end, the hit is read off directly
DOUBLE_ROOT_TOLERANCE = 1e-12
RTOL = 1e-10
ATOL = (1e-15, 1e-10)

TAIL_WINDOW = (1e-6, 1e-3)
MIN_TAIL_SAMPLES = 50


@dataclass
class WaveSolution:
    """
    A phase-plane trajectory sampled along increasing phi, with its
    x-parameterization. Rates are the caller's (not normalized).
    """
    phi: np.ndarray
    z: np.ndarray
    x: np.ndarray
    classification: Classification
    v: float
    lam: float
    mu: float
    kind: WaveKind = WaveKind.ORIGINAL
    z1: Optional[float] = None  # slope where phi reaches 1 (HitsOneAbove)
    phi_hit: Optional[float] = None  # where z reached 0 (FellToAxis)
    gamma: Optional[float] = None  # left-tail growth rate
    zeta1: Optional[float] = None  # right-tail decay rate
    phi0: Optional[float] = None  # starting level of a left-boundary wave
    x_hit: Optional[float] = None  # x where phi reaches 1 (HitsOneAbove)

    @property
    def is_proper(self) -> bool:
        return self.classification == Classification.PROPER

    def record(self, v_star: float, tail_exponent: Optional[float] = None) -> WaveRecord:
        return WaveRecord(kind=self.kind, classification=self.classification,
                          lambda_=self.lam, mu=self.mu, v=self.v, v_star=v_star,
                          tail_exponent=tail_exponent, z1=self.z1,
                          phi_hit=self.phi_hit, phi0=self.phi0)


def _normalize(lam: float, mu: float, v: float) -> Tuple[float, float]:
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    return lam / mu, v / mu


def phase_rhs(phi: float, z: float, lam: float, v: float) -> Tuple[float, float]:
    """(phi', z') of the wave system with mu = 1."""
    return z, -z + ((1.0 + lam - 2.0 * phi) / v) * z + phi * (1.0 - phi) / v


def _origin_slope(lam: float, v: float) -> float:
    b = v - 1.0 - lam
    return (-b + math.sqrt(b * b + 4.0 * v)) / (2.0 * v)


def origin_eigen(lam: float, v: float) -> float:
    """
    Slope gamma of the unstable direction at (0, 0).

    Requires v > 1 + lambda, which holds for every v >= v*.
    """
    if not v > 1.0 + lam:
        raise ValueError(f"need v > 1 + lambda, got v={v}, lambda={lam}")
    return _origin_slope(lam, v)


def endpoint_eigen(lam: float, v: float) -> EndpointEigen:
    """
    Roots -zeta of v zeta^2 + (1 + v - lambda) zeta + 1 = 0, the
    linearization at (1, 0).
    """
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    b = 1.0 + v - lam
    disc = b * b - 4.0 * v
    if abs(disc) <= DOUBLE_ROOT_TOLERANCE * b * b:
        zeta = b / (2.0 * v)
        return EndpointEigen(zeta, zeta, False)
    if disc < 0:
        sigma = b / (2.0 * v)
        return EndpointEigen(sigma, sigma, True, omega=math.sqrt(-disc) / (2.0 * v))
    root = math.sqrt(disc)
    # the smaller root via the product 1/v keeps precision when b is large
    zeta1 = 2.0 / (b + root) if b > 0 else (b - root) / (2.0 * v)
    zeta2 = (b + root) / (2.0 * v) if b > 0 else 2.0 / (b - root)
    return EndpointEigen(min(zeta1, zeta2), max(zeta1, zeta2), False)


def _classify_near_one(eig: EndpointEigen, nu0: float, z0: float,
                       z_min: float) -> Tuple[Classification, Optional[float], Optional[float]]:
    """
    Continue the linearized flow from (1 - nu0, z0).

    Returns (classification, z1, distance in x to the hit).
    """
    if eig.complex_pair:
        sigma, omega = eig.zeta1, eig.omega
        b = (sigma * nu0 - z0) / omega
        theta = (math.atan2(b, nu0) + math.pi / 2.0) % math.pi
        if theta == 0:
            theta = math.pi
        s = theta / omega
        z1 = -math.exp(-sigma * s) * omega * (b * math.cos(theta) - nu0 * math.sin(theta))
        return Classification.HITS_ONE_ABOVE, z1, s

    if eig.zeta1 == eig.zeta2:
        zeta = eig.zeta1
        b = zeta * nu0 - z0
        if b >= 0:
            return Classification.PROPER, None, None
        s = -nu0 / b
        z1 = -b * math.exp(-zeta * s)
    else:
        gap = eig.zeta2 - eig.zeta1
        b = (z0 - eig.zeta1 * nu0) / gap
        a = nu0 - b
        if a >= 0:
            return Classification.PROPER, None, None
        s = math.log(-b / a) / gap
        z1 = -a * math.exp(-eig.zeta1 * s) * gap
    if z1 >= z_min:
        return Classification.HITS_ONE_ABOVE, z1, s
    return Classification.PROPER, None, None


def _sample_phis(phi_start: float, phi_end: float) -> np.ndarray:
    parts = [np.array([phi_start, phi_end])]
    if phi_start < 1e-2:
        parts.append(np.geomspace(phi_start, 1e-2, 400))
    parts.append(np.linspace(max(phi_start, 1e-2), min(phi_end, 0.99), 2000))
    if phi_end > 0.99:
        parts.append(1.0 - np.geomspace(1e-2, 1.0 - phi_end, 400))
    phis = np.unique(np.concatenate(parts))
    return phis[(phis >= phi_start) & (phis <= phi_end)]


@dataclass
class _Shot:
    classification: Classification
    phi: np.ndarray
    z: np.ndarray
    x: np.ndarray
    z1: Optional[float] = None
    hit_distance: Optional[float] = None
    phi_hit: Optional[float] = None


def _integrate(lam: float, v: float, phi0: float, z0: float,
               delta_end: float, z_min: float) -> _Shot:
    def slope(phi, y):
        z = y[0]
        return [-1.0 + (1.0 + lam - 2.0 * phi) / v + phi * (1.0 - phi) / (v * z), 1.0 / z]

    def touches_axis(phi, y):
        return y[0]
    touches_axis.terminal = True
    touches_axis.direction = -1

    phi_stop = 1.0 - delta_end
    if not phi0 < phi_stop:
        raise ValueError(f"starting phi {phi0} is too close to 1")
    sol = solve_ivp(slope, (phi0, phi_stop), [z0, 0.0], method="RK45",
                    rtol=RTOL, atol=list(ATOL), dense_output=True, events=touches_axis)
    if sol.status == -1:
        raise NonConvergence(f"wave integration failed: {sol.message}")

    phi_end = float(sol.t[-1])
    phis = _sample_phis(phi0, phi_end)
    z, x = sol.sol(phis)
    if sol.status == 1:
        return _Shot(Classification.FELL_TO_AXIS, phis, np.maximum(z, 0.0), x,
                     phi_hit=float(sol.t_events[0][0]))

    z_end = float(sol.y[0, -1])
    if z_end > DIRECT_HIT_SLOPE:
        dz = slope(phi_end, [z_end, 0.0])[0]
        return _Shot(Classification.HITS_ONE_ABOVE, phis, z, x,
                     z1=z_end + delta_end * dz, hit_distance=delta_end / z_end)
    cls, z1, s = _classify_near_one(endpoint_eigen(lam, v), 1.0 - phi_end, z_end, z_min)
    return _Shot(cls, phis, z, x, z1=z1, hit_distance=s)


def shoot(lam: float, v: float, start: Optional[Tuple[float, float]] = None,
          epsilon: float = LAUNCH_OFFSET, delta_end: float = END_OFFSET,
          z_min: float = MIN_HIT_SLOPE) -> WaveSolution:
    """
    Integrate a trajectory of the wave system (mu = 1) and classify it.

    Args:
        lam: normalized jump rate
        v: normalized speed
        start: (phi0, z0), or None to leave (0, 0) along slope gamma from
            (epsilon, gamma epsilon); the launch is repeated from epsilon/10
            and both classifications must agree
        epsilon: launch offset
        delta_end: integration stops at phi = 1 - delta_end
        z_min: smallest slope at phi = 1 that counts as a hit

    Returns:
        WaveSolution with x measured from the starting point.

    Raises:
        NonConvergence: the integration failed or the two launches disagree
    """
    if start is None:
        gamma = _origin_slope(lam, v)
        shot = _integrate(lam, v, epsilon, gamma * epsilon, delta_end, z_min)
        check = _integrate(lam, v, epsilon / 10.0, gamma * epsilon / 10.0, delta_end, z_min)
        if check.classification != shot.classification:
            raise NonConvergence(
                f"launch offset changes the classification: {shot.classification} "
                f"at {epsilon:g}, {check.classification} at {epsilon / 10:g}")
    else:
        phi0, z0 = start
        if not 0 <= phi0 < 1 or not z0 > 0:
            raise ValueError("start needs phi0 in [0, 1) and z0 > 0")
        gamma = None
        shot = _integrate(lam, v, phi0, z0, delta_end, z_min)

    eig = endpoint_eigen(lam, v)
    return WaveSolution(
        phi=shot.phi, z=shot.z, x=shot.x, classification=shot.classification,
        v=v, lam=lam, mu=1.0, z1=shot.z1, phi_hit=shot.phi_hit, gamma=gamma,
        zeta1=None if eig.complex_pair else eig.zeta1,
        x_hit=None if shot.hit_distance is None else float(shot.x[-1] + shot.hit_distance),
    )


def _rescaled(wave: WaveSolution, lam: float, mu: float, v: float,
              kind: WaveKind) -> WaveSolution:
    wave.lam, wave.mu, wave.v, wave.kind = lam, mu, v, kind
    return wave


def tws_original(lam: float, mu: float, v: float) -> Optional[WaveSolution]:
    """
    Wave of the original system at speed v, or None when the trajectory
    from (0, 0) does not end at (1, 0). x is centered at phi = 1/2.
    """
    lam_n, v_n = _normalize(lam, mu, v)
    if not lam_n > 0:
        raise ValueError("the wave system needs lambda > 0; see logistic_tws")
    if not v_n > 1.0 + lam_n:
        return None
    wave = shoot(lam_n, v_n)
    if not wave.is_proper:
        logger.debug("no wave at v=%.9g: trajectory is %s", v, wave.classification)
        return None
    wave.x = wave.x - np.interp(0.5, wave.phi, wave.x)
    return _rescaled(wave, lam, mu, v, WaveKind.ORIGINAL)


def tws_left_boundary(lam: float, mu: float, v: float, phi0: float) -> WaveSolution:
    """
    Wave of the system with a left boundary moving at v > v*.

    The trajectory starts from (phi0, phi0 (1 - phi0 + lambda) / v); x = 0 is
    the boundary.

    Raises:
        Phi0TooLarge: that trajectory does not end at (1, 0)
    """
    lam_n, v_n = _normalize(lam, mu, v)
    _, v_star = exponential_critical(lam_n, 1.0)
    if not v_n > v_star:
        raise ValueError(f"left-boundary waves need v > v* = {v_star * mu:.9g}")
    if not 0 < phi0 < 1:
        raise ValueError(f"phi0 must lie in (0, 1), got {phi0}")
    z0 = phi0 * (1.0 - phi0 + lam_n) / v_n
    wave = shoot(lam_n, v_n, start=(phi0, z0))
    if not wave.is_proper:
        raise Phi0TooLarge(f"phi0={phi0} gives a trajectory that is {wave.classification}")
    wave.phi0 = phi0
    return _rescaled(wave, lam, mu, v, WaveKind.LEFT_BOUNDARY)


def left_boundary_phi0_max(lam: float, mu: float, v: float, tol: float = 1e-6) -> float:
    """Largest phi0 (to within tol) whose left-boundary trajectory is proper, by bisection."""
    lo, hi = 0.0, 1.0 - 1e-6

    def proper(phi0: float) -> bool:
        try:
            tws_left_boundary(lam, mu, v, phi0)
            return True
        except Phi0TooLarge:
            return False

    if proper(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if proper(mid):
            lo = mid
        else:
            hi = mid
    return lo


def tws_right_boundary(lam: float, mu: float, v: float) -> WaveSolution:
    """
    Wave of the system with a right boundary moving at 0 < v < v*.

    The trajectory from (0, 0) reaches phi = 1 at slope z1 > 0; that point is
    appended and placed at x = 0, the boundary.
    """
    lam_n, v_n = _normalize(lam, mu, v)
    _, v_star = exponential_critical(lam_n, 1.0)
    if not v_n < v_star:
        raise ValueError(f"right-boundary waves need v < v* = {v_star * mu:.9g}")
    wave = shoot(lam_n, v_n)
    if wave.classification != Classification.HITS_ONE_ABOVE:
        raise NonConvergence(f"expected a trajectory hitting phi = 1, got {wave.classification}")
    x_hit = wave.x_hit
    wave.phi = np.append(wave.phi, 1.0)
    wave.z = np.append(wave.z, wave.z1)
    wave.x = np.append(wave.x, x_hit) - x_hit
    wave.x_hit = 0.0
    return _rescaled(wave, lam, mu, v, WaveKind.RIGHT_BOUNDARY)


def logistic_tws(v: float, c: float = 0.0, x: Optional[np.ndarray] = None) -> WaveSolution:
    """
    The lambda = 0 wave 1 / (1 + exp(-(x + c) / v)), sampled on ``x``
    (default: 4001 points on [-c - 40 v, -c + 40 v]).
    """
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    if x is None:
        x = np.linspace(-c - 40.0 * v, -c + 40.0 * v, 4001)
    x = np.asarray(x, dtype=float)
    phi = expit((x + c) / v)
    return WaveSolution(phi=phi, z=phi * (1.0 - phi) / v, x=x,
                        classification=Classification.PROPER, v=v, lam=0.0, mu=1.0,
                        kind=WaveKind.LOGISTIC, gamma=1.0 / v, zeta1=1.0 / v)


def tail_exponent_of_shape(wave: WaveSolution, window: Tuple[float, float] = TAIL_WINDOW,
                           min_samples: int = MIN_TAIL_SAMPLES) -> float:
    """Least-squares slope of -log(1 - phi) against x where 1 - phi lies in ``window``."""
    if not wave.is_proper:
        raise ValueError(f"tail exponent needs a proper wave, got {wave.classification}")
    tail = 1.0 - wave.phi
    mask = (tail >= window[0]) & (tail <= window[1])
    if mask.sum() < min_samples:
        raise WindowTooShort(f"{int(mask.sum())} samples in the tail window, need {min_samples}")
    slope, _ = np.polyfit(wave.x[mask], -np.log(tail[mask]), 1)
    return float(slope)


def wave_profile(wave: WaveSolution, x) -> np.ndarray:
    """
    Evaluate a wave at arbitrary x: interpolation inside the sampled range,
    analytic tails outside it.
    """
    x = np.asarray(x, dtype=float)
    out = np.interp(x, wave.x, wave.phi)
    left = x < wave.x[0]
    right = x > wave.x[-1]
    with np.errstate(over="ignore"):
        if wave.kind == WaveKind.LEFT_BOUNDARY:
            # behind the boundary only jumps and synchronizations remove mass
            rate = wave.lam + wave.mu
            c = wave.mu / rate
            tau = (wave.x[0] - x[left]) / wave.v
            out[left] = 1.0 / ((1.0 / wave.phi[0] - c) * np.exp(rate * tau) + c)
        elif wave.gamma is not None:
            out[left] = wave.phi[0] * np.exp(wave.gamma * (x[left] - wave.x[0]))
        else:
            out[left] = 0.0
    if wave.kind == WaveKind.RIGHT_BOUNDARY or wave.zeta1 is None:
        out[right] = 1.0
    else:
        out[right] = 1.0 - (1.0 - wave.phi[-1]) * np.exp(-wave.zeta1 * (x[right] - wave.x[-1]))
    return out
