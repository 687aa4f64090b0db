"""
Branching random walk companion of the particle system.

Each particle jumps forward independently at rate lambda and splits in place
at rate mu. The leading particle D(t) = max_i W_i(t) started from one
particle at 0 has the law of the benchmark mean-field front.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .dist import JumpLaw
from .jit import njit

logger = logging.getLogger(__name__)

DEFAULT_CAP = 1_000_000
MIN_BLOCK = 256
MAX_BLOCK = 1 << 20

# kernel exit codes
_EXHAUSTED = 0
_REACHED = 1
_CAPPED = 2
_GROW = 3

SeedLike = Union[int, np.random.SeedSequence, None]


@dataclass
class BrwTrajectory:
    """Samples of (t, N(t), D(t)) and the population at the end of the run."""
    times: np.ndarray
    sizes: np.ndarray
    leaders: np.ndarray
    locations: np.ndarray
    end_time: float
    final_leader: float
    cap_exceeded: bool = False


@dataclass
class LeadingCdf:
    """Monte-Carlo estimate of P{D(t) <= x} on a grid."""
    grid: np.ndarray
    values: np.ndarray
    t: float
    replicas: int
    biased: bool = False  # some replica hit the population cap


@njit()
def _brw_events(pop, size, leader, t, t_stop, start, expo, pick_u, kind_u, jumps,
                p_jump, rate_per, cap):
    e = start
    while e < expo.shape[0]:
        dt = expo[e] / (size * rate_per)
        if t + dt > t_stop:
            # keep the memoryless residual of the crossing event
            expo[e] -= (t_stop - t) * size * rate_per
            return size, leader, t_stop, e, 1
        splits = kind_u[e] >= p_jump
        if splits and size >= pop.shape[0]:
            if size >= cap:
                return size, leader, t, e, 2
            return size, leader, t, e, 3
        t += dt
        i = int(pick_u[e] * size)
        if i >= size:
            i = size - 1
        if splits:
            pop[size] = pop[i]
            size += 1
        else:
            x = pop[i] + jumps[e]
            pop[i] = x
            if x > leader:
                leader = x
        e += 1
    return size, leader, t, e, 0


def simulate_brw(law: JumpLaw, lam: float, mu: float, t_end: float,
                 cap: int = DEFAULT_CAP, seed: SeedLike = 0,
                 sample_times: Optional[Sequence[float]] = None) -> BrwTrajectory:
    """
    Simulate the branching random walk from one particle at 0.

    Args:
        law: jump-size law
        lam: jump rate
        mu: split rate
        t_end: final time, > 0
        cap: population cap; reaching it stops the run and sets the flag
        seed: integer seed or SeedSequence
        sample_times: observation times in [0, t_end] (default: 101 even points)

    Returns:
        BrwTrajectory; samples stop early if the cap was hit.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    if lam < 0 or mu < 0 or lam + mu <= 0:
        raise ValueError("rates must be nonnegative with a positive sum")
    if sample_times is None:
        sample_times = np.linspace(0.0, t_end, 101)
    times = np.sort(np.asarray(sample_times, dtype=float))
    if len(times) == 0 or times[0] < 0 or times[-1] > t_end:
        raise ValueError("sample times must lie in [0, t_end]")

    rng = np.random.default_rng(seed)
    rate_per = lam + mu
    p_jump = lam / rate_per
    pop = np.zeros(min(64, cap))
    size, leader, t = 1, 0.0, 0.0
    block = None
    pos = 0
    capped = False
    sizes, leaders = [], []

    for stop in times:
        while True:
            if block is None or pos >= len(block[0]):
                count = min(max(MIN_BLOCK, 4 * size), MAX_BLOCK)
                block = (rng.standard_exponential(count), rng.random(count),
                         rng.random(count), np.asarray(law.sample(rng, count), dtype=float))
                pos = 0
            size, leader, t, pos, status = _brw_events(
                pop, size, leader, t, stop, pos, block[0], block[1], block[2], block[3],
                p_jump, rate_per, cap)
            if status == _REACHED:
                break
            if status == _GROW:
                grown = np.zeros(min(2 * len(pop), cap))
                grown[:size] = pop[:size]
                pop = grown
            elif status == _CAPPED:
                capped = True
                break
        if capped:
            logger.warning("population cap %d reached at t=%.6g before t_end=%.6g", cap, t, t_end)
            break
        sizes.append(size)
        leaders.append(leader)

    recorded = len(sizes)
    return BrwTrajectory(
        times=times[:recorded],
        sizes=np.asarray(sizes, dtype=np.int64),
        leaders=np.asarray(leaders, dtype=float),
        locations=pop[:size].copy(),
        end_time=float(t),
        final_leader=float(leader),
        cap_exceeded=capped,
    )


def leading_cdf(law: JumpLaw, lam: float, mu: float, t: float, replicas: int,
                grid: Sequence[float], seed: SeedLike = 0, cap: int = DEFAULT_CAP,
                progress: bool = False) -> LeadingCdf:
    """
    Estimate P{D(t) <= x} at each grid point from independent replicas.

    Each replica gets its own spawned seed stream, so the result does not
    depend on evaluation order.
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")

    leaders = np.zeros(replicas)
    biased = False
    if t > 0:
        streams = np.random.SeedSequence(seed).spawn(replicas)
        for k in tqdm(range(replicas), desc="BRW replicas", disable=not progress):
            traj = simulate_brw(law, lam, mu, t, cap, streams[k], sample_times=[t])
            if traj.cap_exceeded:
                biased = True
                leaders[k] = traj.final_leader
            else:
                leaders[k] = traj.leaders[-1]
    if biased:
        logger.warning("leading CDF is biased: some replicas hit the population cap")

    leaders.sort()
    values = np.searchsorted(leaders, grid, side="right") / replicas
    return LeadingCdf(grid=grid, values=values, t=float(t), replicas=replicas, biased=biased)


def leading_speed(traj: BrwTrajectory, window: Tuple[float, float]) -> float:
    """Least-squares slope of D(t) over the samples inside the window."""
    t1, t2 = window
    mask = (traj.times >= t1) & (traj.times <= t2)
    if mask.sum() < 2:
        raise ValueError("fewer than two samples inside the window")
    slope, _ = np.polyfit(traj.times[mask], traj.leaders[mask], 1)
    return float(slope)


def yule_pmf(k: Union[int, np.ndarray], mu: float, t: float):
    """P{N(t) = k} for a Yule process of rate mu started from one individual."""
    p = math.exp(-mu * t)
    k = np.asarray(k)
    return p * (1.0 - p) ** (k - 1)
