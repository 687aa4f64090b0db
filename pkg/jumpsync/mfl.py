"""
Mean-field limit dynamics on a uniform grid.

The state is a distribution function f on nodes x_k = x0 + k h. The mass of
cell (x_{k-1}, x_k] is taken uniform over the cell, so the jump flux

    I_k = int_{(-inf, x_k]} (1 - J(x_k - y)) df(y)

is a discrete convolution with weights W(m) = (A((m+1)h) - A(mh)) / h,
A being the integrated tail of the jump law, plus the atom f_0 at x0.
The right-hand side is df/dt = -lambda I - mu f (1 - f), with the boundary
variants applied on top. Time stepping is classical RK4.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

from .dist import ExponentialMeanOne, JumpLaw
from .errors import MassLeak, StabilityViolation
from .io_utils import read_grid_csv
from .models import BoundaryKind, BoundarySpec

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-6
PROJECTION_TOLERANCE = 1e-9
MONOTONE_TOLERANCE = 1e-12


@dataclass
class GridCdf:
    """
    A distribution function sampled on a uniform grid.

    ``x0`` is the absolute coordinate of the first node (window origin plus
    ``offset``); ``offset`` accumulates window shifts.
    """
    x0: float
    h: float
    values: np.ndarray
    offset: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if not self.h > 0:
            raise ValueError(f"grid spacing must be > 0, got {self.h}")
        if self.values.ndim != 1 or len(self.values) < 2:
            raise ValueError("a grid needs at least two nodes")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    @property
    def x_right(self) -> float:
        return self.x0 + self.h * (self.n - 1)

    def copy(self) -> 'GridCdf':
        return GridCdf(self.x0, self.h, self.values.copy(), self.offset, self.time)

    def value_at(self, x) -> np.ndarray:
        """Linear interpolation; 0 left of the grid and 1 right of it."""
        return np.interp(x, self.x, self.values, left=0.0, right=1.0)

    def check(self, mass_tolerance: float = MASS_TOLERANCE) -> None:
        """Raise ValueError unless the values form a valid windowed CDF."""
        v = self.values
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if v.min() < -MONOTONE_TOLERANCE or v.max() > 1 + MONOTONE_TOLERANCE:
            raise ValueError("grid values must lie in [0, 1]")
        if np.any(np.diff(v) < -MONOTONE_TOLERANCE):
            raise ValueError("grid values must be nondecreasing")
        if v[-1] < 1.0 - mass_tolerance:
            raise ValueError("grid does not capture the full mass at its right edge")

    @staticmethod
    def _nodes(x_left: float, x_right: float, h: float) -> np.ndarray:
        if not x_right > x_left:
            raise ValueError("x_right must exceed x_left")
        n = int(round((x_right - x_left) / h)) + 1
        return x_left + h * np.arange(n)

    @classmethod
    def dirac(cls, x_left: float, x_right: float, h: float, at: float = 0.0) -> 'GridCdf':
        """Step at the node nearest ``at``: all mass sits there."""
        x = cls._nodes(x_left, x_right, h)
        k = int(round((at - x_left) / h))
        if not 0 <= k < len(x):
            raise ValueError("step location lies outside the grid")
        values = np.zeros(len(x))
        values[k:] = 1.0
        return cls(x_left, h, values)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray],
                      x_left: float, x_right: float, h: float) -> 'GridCdf':
        x = cls._nodes(x_left, x_right, h)
        return cls(x_left, h, np.asarray(fn(x), dtype=float))

    @classmethod
    def exponential_tail(cls, zeta: float, x_left: float, x_right: float,
                         h: float) -> 'GridCdf':
        """CDF 1 - exp(-zeta x) on x >= 0, zero to the left."""
        if not zeta > 0:
            raise ValueError(f"zeta must be > 0, got {zeta}")
        return cls.from_function(
            lambda x: np.where(x >= 0, -np.expm1(-zeta * np.maximum(x, 0.0)), 0.0),
            x_left, x_right, h)

    @classmethod
    def from_csv(cls, file_path: str, h: Optional[float] = None) -> 'GridCdf':
        """Load an (x, f) CSV and resample it onto a uniform grid."""
        xs, fs = read_grid_csv(file_path)
        return cls.from_samples(xs, fs, h)

    @classmethod
    def from_samples(cls, xs: Sequence[float], fs: Sequence[float],
                     h: Optional[float] = None) -> 'GridCdf':
        """Resample tabulated (x, f) pairs onto a uniform grid."""
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("samples need at least two strictly increasing x values")
        if h is None:
            h = (xs[-1] - xs[0]) / (len(xs) - 1)
        return cls.from_function(lambda x: np.interp(x, xs, fs), xs[0], xs[-1], h)


class TailKernel:
    """Cell-averaged convolution against 1 - J for one (law, h) pair."""

    def __init__(self, law: JumpLaw, h: float):
        self.law = law
        self.h = h
        self.exponential = isinstance(law, ExponentialMeanOne)
        if self.exponential:
            self.w0 = -math.expm1(-h) / h
            self.decay = math.exp(-h)
            self.weights = None
        else:
            m = int(math.ceil(law.support_width / h)) + 1
            nodes = h * np.arange(m + 1)
            self.weights = np.diff(law.integrated_tail(nodes)) / h
        self._atom_cache: Dict[int, np.ndarray] = {}

    def apply(self, increments: np.ndarray) -> np.ndarray:
        """sum_{j <= k} W(k - j) increments_j for every k."""
        if self.exponential:
            return lfilter([self.w0], [1.0, -self.decay], increments)
        return np.convolve(increments, self.weights)[:len(increments)]

    def atom_profile(self, n: int) -> np.ndarray:
        """1 - J(k h) for k = 0..n-1."""
        if n not in self._atom_cache:
            self._atom_cache[n] = np.asarray(self.law.survival(self.h * np.arange(n)), dtype=float)
        return self._atom_cache[n]


def _rhs_values(values: np.ndarray, x0: float, h: float, t: float, kernel: TailKernel,
                lam: float, mu: float, boundary: Optional[BoundarySpec]) -> np.ndarray:
    n = len(values)
    sync = mu * values * (1.0 - values)
    if lam == 0:
        out = -sync
    else:
        inc = np.empty(n)
        inc[0] = 0.0
        inc[1:] = np.diff(values)
        out = None
        if boundary is not None and boundary.kind == BoundaryKind.MOVING_LEFT:
            a = boundary.location(t)
            i = int(np.searchsorted(x0 + h * np.arange(n), a, side="right"))
            if i >= n:
                return -lam * values - sync
            if i > 0:
                f_a = values[i - 1] + (values[i] - values[i - 1]) * (a - (x0 + h * (i - 1))) / h
                inc[:i] = 0.0
                inc[i] = values[i] - f_a
                x = x0 + h * np.arange(n)
                flux = kernel.apply(inc) + f_a * np.asarray(kernel.law.survival(x - a), dtype=float)
                out = -lam * flux - sync
                out[:i] = -lam * values[:i] - sync[:i]
        if out is None:
            flux = kernel.apply(inc) + values[0] * kernel.atom_profile(n)
            out = -lam * flux - sync

    if boundary is not None and boundary.is_right:
        b = boundary.location(t)
        k = int(math.ceil((b - x0) / h - 1e-9))
        out[max(k, 0):] = 0.0
    return out


def rhs(f: GridCdf, law: JumpLaw, lam: float, mu: float,
        boundary: Optional[BoundarySpec] = None, t: Optional[float] = None) -> np.ndarray:
    """
    Time derivative of f at every grid node.

    Args:
        f: current state
        law: jump-size law
        lam: independent-jump rate
        mu: synchronization rate
        boundary: optional boundary
        t: time at which boundary locations are evaluated (default ``f.time``)

    Returns:
        Array of df/dt values, each in [-(lambda + mu), 0] for a valid state.
    """
    _check_rates(lam, mu)
    f.check()
    t = f.time if t is None else t
    return _rhs_values(f.values, f.x0, f.h, t, TailKernel(law, f.h), lam, mu, boundary)


def _check_rates(lam: float, mu: float) -> None:
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not mu >= 0:
        raise ValueError(f"mu must be >= 0, got {mu}")


@dataclass
class RecenterPolicy:
    """Shift the window right once the ``nu`` quantile passes ``trigger`` of it."""
    nu: float = 0.99
    trigger: float = 0.8
    shift_fraction: float = 0.25


@dataclass
class MflTrajectory:
    """Quantile time series, snapshots and final state of one integration."""
    times: np.ndarray
    quantiles: Dict[float, np.ndarray]
    snapshots: List[GridCdf]
    final: GridCdf
    law: JumpLaw
    lam: float
    mu: float
    boundary: Optional[BoundarySpec] = None

    def quantile_series(self, nu: float) -> Tuple[np.ndarray, np.ndarray]:
        if nu not in self.quantiles:
            raise ValueError(f"quantile {nu} was not tracked")
        return self.times, self.quantiles[nu]


def _quantile_values(values: np.ndarray, x0: float, h: float, nu: float) -> float:
    k = int(np.searchsorted(values, nu, side="left"))
    if k == 0:
        return x0
    if k >= len(values):
        return x0 + h * (len(values) - 1)
    lo, hi = values[k - 1], values[k]
    return x0 + h * (k - 1 + (nu - lo) / (hi - lo))


def quantile(f: GridCdf, nu: float) -> float:
    """inf{y : f_y >= nu} in absolute coordinates, interpolating between nodes."""
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    return _quantile_values(f.values, f.x0, f.h, nu)


def integrate(f0: GridCdf, law: JumpLaw, lam: float, mu: float,
              boundary: Optional[BoundarySpec] = None,
              t_end: float = 1.0, dt: float = 0.01,
              recenter: Optional[RecenterPolicy] = None,
              snapshot_times: Optional[Sequence[float]] = None,
              track: Sequence[float] = (0.5,),
              tolerance: float = PROJECTION_TOLERANCE,
              mass_tolerance: float = MASS_TOLERANCE) -> MflTrajectory:
    """
    Integrate the mean-field dynamics from f0 with RK4.

    After every step values are clamped to [0, 1] and made nondecreasing;
    either correction exceeding ``tolerance`` aborts the run.

    Args:
        f0: initial state; its ``time`` is the start time
        law: jump-size law
        lam: independent-jump rate
        mu: synchronization rate
        boundary: optional boundary
        t_end: integration length
        dt: step, with dt (lambda + mu) < 0.5
        recenter: window shifting policy, or None for a fixed window
        snapshot_times: elapsed times at which to keep full snapshots
        track: quantile levels recorded after every step
        tolerance: largest allowed projection change per step
        mass_tolerance: right-edge mass requirement

    Returns:
        MflTrajectory.

    Raises:
        StabilityViolation: projection changed values by more than tolerance
        MassLeak: right-edge value fell below 1 - mass_tolerance
    """
    _check_rates(lam, mu)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if dt * (lam + mu) >= 0.5:
        raise ValueError("step too large: need dt * (lambda + mu) < 0.5")
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    f0.check(mass_tolerance)
    for nu in track:
        if not 0 < nu < 1:
            raise ValueError(f"tracked quantile {nu} outside (0, 1)")

    state = f0.copy()
    kernel = TailKernel(law, state.h)
    h = state.h
    right = boundary is not None and boundary.is_right

    def force_boundary(values: np.ndarray, x0: float, t: float) -> None:
        if right:
            k = int(math.ceil((boundary.location(t) - x0) / h - 1e-9))
            values[max(k, 0):] = 1.0

    force_boundary(state.values, state.x0, state.time)
    steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    step_dt = t_end / steps if steps else dt
    t_start = state.time

    pending = sorted(snapshot_times) if snapshot_times is not None else []
    snapshots: List[GridCdf] = []
    times = [state.time]
    series = {nu: [_quantile_values(state.values, state.x0, h, nu)] for nu in track}

    def take_snapshots(elapsed: float) -> None:
        while pending and pending[0] <= elapsed + 0.5 * step_dt:
            pending.pop(0)
            snapshots.append(state.copy())

    take_snapshots(0.0)

    def F(values: np.ndarray, t: float) -> np.ndarray:
        return _rhs_values(values, state.x0, h, t, kernel, lam, mu, boundary)

    for step in range(steps):
        t = state.time
        v = state.values
        k1 = F(v, t)
        k2 = F(v + 0.5 * step_dt * k1, t + 0.5 * step_dt)
        k3 = F(v + 0.5 * step_dt * k2, t + 0.5 * step_dt)
        k4 = F(v + step_dt * k3, t + step_dt)
        new = v + (step_dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_next = t_start + (step + 1) * step_dt
        force_boundary(new, state.x0, t_next)

        clamped = np.clip(new, 0.0, 1.0)
        projected = np.maximum.accumulate(clamped)
        change = max(float(np.max(np.abs(clamped - new))),
                     float(np.max(projected - clamped)))
        if change > tolerance:
            raise StabilityViolation(
                f"projection changed values by {change:.3g} at t={t_next:.6g}")
        if projected[-1] < 1.0 - mass_tolerance:
            raise MassLeak(
                f"right-edge value {projected[-1]:.9g} at t={t_next:.6g}; widen the grid")

        state.values = projected
        state.time = t_next

        if recenter is not None:
            width = h * (state.n - 1)
            q = _quantile_values(state.values, state.x0, h, recenter.nu)
            if q > state.x0 + recenter.trigger * width:
                shift = max(1, int(state.n * recenter.shift_fraction))
                state.values = np.concatenate(
                    (state.values[shift:], np.full(shift, state.values[-1])))
                state.x0 += shift * h
                state.offset += shift * h
                logger.debug("recentered window by %d nodes at t=%.6g", shift, state.time)

        times.append(state.time)
        for nu in track:
            series[nu].append(_quantile_values(state.values, state.x0, h, nu))
        take_snapshots(state.time - t_start)

    return MflTrajectory(
        times=np.asarray(times),
        quantiles={nu: np.asarray(q) for nu, q in series.items()},
        snapshots=snapshots,
        final=state,
        law=law,
        lam=lam,
        mu=mu,
        boundary=boundary,
    )


def bmfl(law: JumpLaw, lam: float, mu: float, t_end: float, dt: float = 0.01,
         grid: Optional[Tuple[float, float, float]] = None,
         h: float = 0.02, x_left: float = -5.0,
         v_upper: Optional[float] = None, margin: float = 40.0,
         **kwargs) -> MflTrajectory:
    """
    Benchmark mean-field trajectory started from the step at 0.

    Args:
        grid: (x_left, x_right, h); when omitted the window is
            [x_left, v_upper t_end + margin] with spacing h
        v_upper: speed bound for sizing the window (default v**)
        kwargs: passed on to ``integrate``
    """
    if grid is None:
        if v_upper is None:
            from .speed import critical
            v_upper = critical(law, lam, mu).v_star if lam > 0 else 0.0
        grid = (x_left, v_upper * t_end + margin, h)
    f0 = GridCdf.dirac(*grid)
    return integrate(f0, law, lam, mu, t_end=t_end, dt=dt, **kwargs)


def avg_speed(traj: MflTrajectory, nu: float, window: Tuple[float, float]) -> float:
    """(q_nu(t2) - q_nu(t1)) / (t2 - t1) from the tracked quantile series."""
    t1, t2 = window
    times, q = traj.quantile_series(nu)
    if not times[0] - 1e-9 <= t1 < t2 <= times[-1] + 1e-9:
        raise ValueError("window must lie inside the trajectory")
    q1, q2 = np.interp([t1, t2], times, q)
    return float((q2 - q1) / (t2 - t1))


def freeze_transform(f: GridCdf, nu: float) -> GridCdf:
    """nu + (1 - nu) f: a share nu of the mass frozen far to the left."""
    if not 0 <= nu < 1:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")
    out = f.copy()
    out.values = nu + (1.0 - nu) * f.values
    return out


def frozen_lower_bound(f0: GridCdf, law: JumpLaw, lam: float, mu: float, nu: float,
                       t_end: float, dt: float = 0.01,
                       track: Sequence[float] = (0.5,), **kwargs) -> MflTrajectory:
    """
    Trajectory of nu + (1 - nu) g where g is the mean-field dynamics with
    synchronization rate mu (1 - nu) started from f0.

    Tracked levels beta must exceed nu; snapshots are returned transformed.
    """
    if not 0 <= nu < 1:
        raise ValueError(f"nu must lie in [0, 1), got {nu}")
    if any(beta <= nu for beta in track):
        raise ValueError("tracked quantile levels must exceed nu")
    inner = {beta: (beta - nu) / (1.0 - nu) for beta in track}
    traj = integrate(f0, law, lam, mu * (1.0 - nu), t_end=t_end, dt=dt,
                     track=tuple(inner.values()), **kwargs)
    return MflTrajectory(
        times=traj.times,
        quantiles={beta: traj.quantiles[inner[beta]] for beta in track},
        snapshots=[freeze_transform(s, nu) for s in traj.snapshots],
        final=freeze_transform(traj.final, nu),
        law=law,
        lam=lam,
        mu=mu,
        boundary=traj.boundary,
    )


def wave_grid(profile: Callable[[np.ndarray], np.ndarray], x_left: float,
              x_right: float, h: float) -> GridCdf:
    """Sample a wave profile (for example ``tws.wave_profile`` bound to a wave) on a grid."""
    return GridCdf.from_function(profile, x_left, x_right, h)
