"""
Reference speed tables and their reproduction.

Each table lists (lambda, mu) pairs on the budget line 2 lambda + mu = 1
(plus its optimum) with a reference finite-n speed (n = 10000) and the
critical speed v**.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .dist import ExponentialMeanOne, JumpLaw, UniformZeroTwo
from .models import TableRow
from .particles import simulate_speed
from .speed import critical

logger = logging.getLogger(__name__)

# (lambda, mu, v_n, v**)
EXPONENTIAL_TABLE: List[Tuple[float, float, float, float]] = [
    (0.45, 0.1, 0.9321, 0.974264069),
    (0.4, 0.2, 1.0863, 1.165685425),
    (0.35, 0.3, 1.2104, 1.29807407),
    (0.3, 0.4, 1.2974, 1.392820323),
    (0.25, 0.5, 1.3236, 1.457106781),
    (0.2, 0.6, 1.3318, 1.492820323),
    (1.0 / 6.0, 2.0 / 3.0, 1.3566, 1.5),
    (0.15, 0.7, 1.3071, 1.49807407),
    (0.1, 0.8, 1.2206, 1.465685425),
    (0.05, 0.9, 1.0567, 1.374264069),
]

UNIFORM_TABLE: List[Tuple[float, float, float, float]] = [
    (0.45, 0.1, 0.8176, 0.844),
    (0.4, 0.2, 0.9243, 0.955),
    (0.35, 0.3, 0.9704, 1.0165),
    (0.3, 0.4, 0.9871, 1.0458),
    (0.27, 0.46, 0.9917, 1.0505),
    (0.25, 0.5, 0.9995, 1.0486),
    (0.2, 0.6, 0.9716, 1.0262),
    (0.15, 0.7, 0.919, 0.9761),
    (0.1, 0.8, 0.8209, 0.8907),
    (0.05, 0.9, 0.6751, 0.7469),
]

TABLES: Dict[int, Tuple[JumpLaw, List[Tuple[float, float, float, float]]]] = {
    1: (ExponentialMeanOne(), EXPONENTIAL_TABLE),
    2: (UniformZeroTwo(), UNIFORM_TABLE),
}


def table_law(table_id: int) -> JumpLaw:
    if table_id not in TABLES:
        raise ValueError(f"unknown table {table_id}; choose from {sorted(TABLES)}")
    return TABLES[table_id][0]


def _table_row(table_id: int, index: int, n: int, seed: int,
               jumps_per_particle: int, warmup_fraction: float) -> Tuple[int, TableRow]:
    law, rows = TABLES[table_id]
    lam, mu, v_n_reference, v_star_reference = rows[index]
    estimate = simulate_speed(law, lam, mu, n,
                              total_jumps_per_particle=jumps_per_particle,
                              warmup_fraction=warmup_fraction,
                              seed=np.random.SeedSequence([seed, index]))
    return index, TableRow(
        lambda_=lam,
        mu=mu,
        v_n_sim=estimate.value,
        v_n_stderr=estimate.std_error,
        v_star_star=critical(law, lam, mu).v_star,
        v_n_reference=v_n_reference,
        v_star_star_reference=v_star_reference,
    )


def reproduce_table(table_id: int, n: int = 10000, seed: int = 0,
                    jumps_per_particle: int = 400, warmup_fraction: float = 0.5,
                    workers: Optional[int] = None, progress: bool = False) -> List[TableRow]:
    """
    Recompute every row of a reference table.

    Row i is simulated from SeedSequence([seed, i]), so results do not depend
    on the worker count or on completion order.

    Args:
        table_id: 1 (exponential jumps) or 2 (uniform jumps on [0, 2])
        n: particles per system
        seed: base seed
        jumps_per_particle: simulated events per particle
        warmup_fraction: share of events discarded before measuring
        workers: process count; 1 runs in-process
        progress: show a tqdm bar

    Returns:
        TableRow list in table order.
    """
    table_law(table_id)
    count = len(TABLES[table_id][1])
    results: Dict[int, TableRow] = {}
    args = (n, seed, jumps_per_particle, warmup_fraction)

    if workers is not None and workers <= 1:
        for index in tqdm(range(count), desc=f"Table {table_id}", disable=not progress):
            results[index] = _table_row(table_id, index, *args)[1]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(_table_row, table_id, index, *args): index
                for index in range(count)
            }
            with tqdm(total=count, desc=f"Table {table_id}", disable=not progress) as pbar:
                for future in as_completed(futures):
                    index, row = future.result()
                    results[index] = row
                    pbar.update(1)

    rows = [results[i] for i in range(count)]
    for row in rows:
        if not row.v_n_sim < row.v_star_star:
            logger.warning("simulated v_n=%.9g is not below v**=%.9g at lambda=%g, mu=%g",
                           row.v_n_sim, row.v_star_star, row.lambda_, row.mu)
    return rows
