"""
Event-driven simulation of the n-particle system.

All n(lambda + mu) event rate is carried by a single exponential clock. At
each event a uniformly chosen particle either makes an independent forward
jump (probability lambda / (lambda + mu)) or picks one of the other n - 1
particles uniformly and moves to it if that particle is ahead.

Random draws are made in numpy blocks and applied by a compiled kernel, so a
run is a deterministic function of its seed.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .dist import JumpLaw
from .jit import njit
from .models import BoundaryKind, BoundarySpec, SpeedEstimate, SpeedStatistic

BLOCK_EVENTS = 1 << 18
BATCHES = 10

# integer boundary codes understood by the kernels
_NO_BOUNDARY = 0
_RIGHT_BOUNDARY = 1
_LEFT_BOUNDARY = 2

SeedLike = Union[int, np.random.SeedSequence, None]


@dataclass
class ParticleState:
    """Locations of n particles; absolute location = location + offset."""
    locations: np.ndarray
    offset: float = 0.0
    time: float = 0.0
    event_count: int = 0

    def __post_init__(self):
        self.locations = np.array(self.locations, dtype=float)
        if self.locations.ndim != 1 or len(self.locations) < 1:
            raise ValueError("a particle state needs at least one particle")

    @property
    def n(self) -> int:
        return len(self.locations)

    def absolute(self) -> np.ndarray:
        return self.locations + self.offset

    def copy(self) -> 'ParticleState':
        return ParticleState(self.locations.copy(), self.offset, self.time, self.event_count)

    def recenter(self, shift: float) -> None:
        """Move the origin right by ``shift`` without changing absolute positions."""
        self.locations -= shift
        self.offset += shift


def initial_state(n: int, kind: str = "zeros", seed: SeedLike = None) -> ParticleState:
    """
    Build a starting configuration.

    Args:
        n: number of particles
        kind: ``"zeros"`` (all at 0) or ``"spread"`` (uniform on [0, 1])
        seed: seed for ``"spread"``

    Returns:
        ParticleState at time 0.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if kind == "zeros":
        return ParticleState(np.zeros(n))
    if kind == "spread":
        rng = np.random.default_rng(seed)
        return ParticleState(np.sort(rng.random(n)))
    raise ValueError(f"unknown initial state: {kind!r}")


def _boundary_code(boundary: Optional[BoundarySpec]) -> Tuple[int, float, float]:
    if boundary is None or boundary.kind == BoundaryKind.NONE:
        return _NO_BOUNDARY, 0.0, 0.0
    if boundary.is_right:
        return _RIGHT_BOUNDARY, boundary.position, boundary.speed
    return _LEFT_BOUNDARY, boundary.position, boundary.speed


def effective_locations(state: ParticleState,
                        boundary: Optional[BoundarySpec] = None) -> np.ndarray:
    """
    Locations as seen by the system.

    With a moving left boundary particles behind A are stored lazily; they
    sit at A until they next jump.
    """
    if boundary is not None and boundary.kind == BoundaryKind.MOVING_LEFT:
        a = boundary.location(state.time) - state.offset
        return np.maximum(state.locations, a)
    return state.locations.copy()


# ---------------- single-event operations ----------------

def independent_jump(state: ParticleState, i: int, z: float,
                     boundary: Optional[BoundarySpec] = None) -> None:
    """Particle i jumps forward by z at the current state time."""
    code, pos, spd = _boundary_code(boundary)
    x = state.locations[i]
    if code == _LEFT_BOUNDARY:
        x = max(x, pos + spd * state.time - state.offset)
    x += z
    if code == _RIGHT_BOUNDARY:
        x = min(x, pos + spd * state.time - state.offset)
    state.locations[i] = x


def synchronize(state: ParticleState, i: int, j: int) -> None:
    """Particle i moves to particle j if j is ahead."""
    if state.locations[j] > state.locations[i]:
        state.locations[i] = state.locations[j]


def step(state: ParticleState, law: JumpLaw, lam: float, mu: float,
         boundary: Optional[BoundarySpec], rng: np.random.Generator) -> ParticleState:
    """
    Advance the system by one event.

    Args:
        state: current state, updated in place
        law: jump-size law
        lam: independent-jump rate
        mu: synchronization rate
        boundary: boundary specification or None
        rng: seeded generator

    Returns:
        The updated state.
    """
    _check_rates(lam, mu)
    n = state.n
    state.time += rng.exponential(1.0 / (n * (lam + mu)))
    state.event_count += 1
    i = int(rng.integers(n))
    if rng.random() < lam / (lam + mu):
        independent_jump(state, i, float(law.sample(rng)), boundary)
    elif n > 1:
        j = int(rng.integers(n - 1))
        j += j >= i
        synchronize(state, i, j)
    return state


# ---------------- block kernels ----------------

@njit()
def _apply_events(loc, dts, picks, kind_u, targets, jumps, p_jump,
                  t0, code, pos, spd, offset):
    t = t0
    for e in range(dts.shape[0]):
        t += dts[e]
        i = picks[e]
        if kind_u[e] < p_jump:
            x = loc[i]
            if code == 2:
                a = pos + spd * t - offset
                if x < a:
                    x = a
            x += jumps[e]
            if code == 1:
                b = pos + spd * t - offset
                if x > b:
                    x = b
            loc[i] = x
        else:
            j = targets[e]
            if j >= 0 and loc[j] > loc[i]:
                loc[i] = loc[j]
    return t


@njit()
def _apply_coupled(low, up, dts, picks, kind_u, targets, jumps, p_jump,
                   t0, code, pos, spd):
    t = t0
    for e in range(dts.shape[0]):
        t += dts[e]
        i = picks[e]
        if kind_u[e] < p_jump:
            xl = low[i]
            xu = up[i]
            if code == 2:
                a = pos + spd * t
                if xl < a:
                    xl = a
                if xu < a:
                    xu = a
            xl += jumps[e]
            xu += jumps[e]
            if code == 1:
                b = pos + spd * t
                if xl > b:
                    xl = b
                if xu > b:
                    xu = b
            low[i] = xl
            up[i] = xu
        else:
            j = targets[e]
            if j >= 0:
                if low[j] > low[i]:
                    low[i] = low[j]
                if up[j] > up[i]:
                    up[i] = up[j]
        if low[i] > up[i]:
            return t, e
    return t, -1


def _draw_block(rng: np.random.Generator, law: JumpLaw, n: int, rate: float,
                p_jump: float, size: int):
    dts = rng.exponential(1.0 / rate, size)
    picks = rng.integers(0, n, size)
    kind_u = rng.random(size)
    if n > 1:
        targets = rng.integers(0, n - 1, size)
        targets += targets >= picks
    else:
        targets = np.full(size, -1, dtype=np.int64)
    jumps = np.zeros(size)
    is_jump = kind_u < p_jump
    count = int(is_jump.sum())
    if count:
        jumps[is_jump] = law.sample(rng, count)
    return dts, picks, kind_u, targets, jumps


def _check_rates(lam: float, mu: float) -> None:
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")


def advance(state: ParticleState, law: JumpLaw, lam: float, mu: float,
            events: int, rng: np.random.Generator,
            boundary: Optional[BoundarySpec] = None) -> ParticleState:
    """Run ``events`` events in place using block draws."""
    _check_rates(lam, mu)
    n = state.n
    rate = n * (lam + mu)
    p_jump = lam / (lam + mu)
    code, pos, spd = _boundary_code(boundary)
    remaining = int(events)
    while remaining > 0:
        size = min(remaining, BLOCK_EVENTS)
        dts, picks, kind_u, targets, jumps = _draw_block(rng, law, n, rate, p_jump, size)
        state.time = _apply_events(state.locations, dts, picks, kind_u, targets, jumps,
                                   p_jump, state.time, code, pos, spd, state.offset)
        state.event_count += size
        remaining -= size
    return state


# ---------------- measurement ----------------

def order_statistic(values: np.ndarray, nu: float) -> float:
    """Empirical nu-quantile: the order statistic of rank ceil(nu n)."""
    n = len(values)
    k = min(max(int(math.ceil(nu * n)) - 1, 0), n - 1)
    return float(np.partition(values, k)[k])


def centered_snapshot(state: ParticleState, nu: float) -> np.ndarray:
    """Locations relative to their nu-th empirical quantile."""
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")
    return state.locations - order_statistic(state.locations, nu)


def measure(locations: np.ndarray, statistic: SpeedStatistic, nu: float = 0.5) -> float:
    if statistic == SpeedStatistic.MEAN:
        return float(np.mean(locations))
    if statistic == SpeedStatistic.QUANTILE:
        return order_statistic(locations, nu)
    return float(np.max(locations))


def simulate_speed(law: JumpLaw, lam: float, mu: float, n: int,
                   total_jumps_per_particle: int = 400,
                   warmup_fraction: float = 0.5,
                   seed: SeedLike = 0,
                   statistic: SpeedStatistic = SpeedStatistic.MEAN,
                   nu: float = 0.5,
                   boundary: Optional[BoundarySpec] = None,
                   initial: Union[str, ParticleState] = "zeros",
                   series: Optional[List[Tuple[float, float]]] = None,
                   record_every: Optional[int] = None) -> SpeedEstimate:
    """
    Estimate the steady-state speed of the n-particle system.

    Runs ``total_jumps_per_particle * n`` events, discards the warmup share and
    divides the displacement of the chosen statistic over the rest by the
    elapsed time. The standard error comes from 10 equal batches.

    Args:
        law: jump-size law
        lam: independent-jump rate
        mu: synchronization rate
        n: number of particles
        total_jumps_per_particle: events per particle, both kinds counted
        warmup_fraction: share of events discarded, in (0, 1)
        seed: integer seed or SeedSequence
        statistic: tracked location statistic
        nu: quantile level for the quantile statistic
        boundary: optional boundary
        initial: ``"zeros"``, ``"spread"`` or an explicit ParticleState
        series: if given, receives (time, statistic) at every checkpoint
        record_every: extra checkpoints every this many events

    Returns:
        SpeedEstimate over the post-warmup window.
    """
    _check_rates(lam, mu)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if total_jumps_per_particle < 2:
        raise ValueError("need at least 2 events per particle")
    if not 0 < warmup_fraction < 1:
        raise ValueError("warmup_fraction must lie in (0, 1)")
    if statistic == SpeedStatistic.QUANTILE and not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu}")

    rng = np.random.default_rng(seed)
    if isinstance(initial, ParticleState):
        state = initial.copy()
    else:
        state = initial_state(n, initial, rng)
    if state.n != n:
        raise ValueError("initial state has the wrong number of particles")

    total = int(total_jumps_per_particle) * n
    warmup = int(round(warmup_fraction * total))
    if total - warmup < BATCHES:
        raise ValueError("too few post-warmup events for batch means")
    batch_marks = [warmup + (total - warmup) * k // BATCHES for k in range(BATCHES + 1)]
    marks = set(batch_marks)
    if record_every:
        marks.update(range(0, total + 1, int(record_every)))
    checkpoints = sorted(marks)

    batch_values = {}
    done = 0
    for mark in checkpoints:
        if mark > done:
            advance(state, law, lam, mu, mark - done, rng, boundary)
            done = mark
        value = measure(effective_locations(state, boundary), statistic, nu) + state.offset
        if series is not None:
            series.append((state.time, value))
        if mark in batch_marks:
            batch_values[mark] = (state.time, value)

    points = [batch_values[m] for m in batch_marks]
    times = np.array([p[0] for p in points])
    values = np.array([p[1] for p in points])
    speed = (values[-1] - values[0]) / (times[-1] - times[0])
    batch_speeds = np.diff(values) / np.diff(times)
    std_error = float(np.std(batch_speeds, ddof=1) / math.sqrt(BATCHES))
    return SpeedEstimate(
        value=float(speed),
        std_error=std_error,
        t_start=float(times[0]),
        t_end=float(times[-1]),
        statistic=statistic,
        nu=nu if statistic == SpeedStatistic.QUANTILE else None,
        n=n,
        events=total,
    )


def pooled_monotone(estimates: Sequence[SpeedEstimate], k: float = 2.0) -> bool:
    """True when each estimate is no lower than its predecessor minus k pooled errors."""
    for prev, cur in zip(estimates, estimates[1:]):
        pooled = math.sqrt(prev.std_error ** 2 + cur.std_error ** 2)
        if cur.value < prev.value - k * pooled:
            return False
    return True


def coupled_dominance_run(init_lower: Sequence[float], init_upper: Sequence[float],
                          law: JumpLaw, lam: float, mu: float, events: int,
                          seed: SeedLike = 0,
                          boundary: Optional[BoundarySpec] = None) -> bool:
    """
    Run two ordered systems on one event stream and check dominance.

    Particles are matched by sorted rank at the start; every event acts on the
    same rank index in both systems with the same jump size or sync target.

    Returns:
        True iff lower <= upper particle by particle after every event, which
        implies rank-wise dominance.
    """
    _check_rates(lam, mu)
    low = np.sort(np.asarray(init_lower, dtype=float))
    up = np.sort(np.asarray(init_upper, dtype=float))
    if low.shape != up.shape or low.ndim != 1 or len(low) < 1:
        raise ValueError("coupled systems need equal, nonzero particle counts")
    if np.any(low > up):
        raise ValueError("initial lower state is not dominated by the upper state")

    rng = np.random.default_rng(seed)
    n = len(low)
    rate = n * (lam + mu)
    p_jump = lam / (lam + mu)
    code, pos, spd = _boundary_code(boundary)
    t = 0.0
    remaining = int(events)
    while remaining > 0:
        size = min(remaining, BLOCK_EVENTS)
        dts, picks, kind_u, targets, jumps = _draw_block(rng, law, n, rate, p_jump, size)
        t, failed_at = _apply_coupled(low, up, dts, picks, kind_u, targets, jumps,
                                      p_jump, t, code, pos, spd)
        if failed_at >= 0:
            return False
        remaining -= size
    return bool(np.all(np.sort(low) <= np.sort(up)))
