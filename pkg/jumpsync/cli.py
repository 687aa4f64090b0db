"""
Command-line interface.

Every subcommand merges a JSON config file with its flags (flags win),
writes CSV/JSONL outputs into one directory and appends a run manifest.
"""

import logging
import math
import sys
import time
import traceback
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np

from . import __version__
from .brw import leading_cdf, leading_speed, simulate_brw
from .dist import law_from_spec, law_to_spec
from .errors import JumpSyncError, NumericalFailure
from .io_utils import (BRW_COLUMNS, GRID_COLUMNS, LEADING_CDF_COLUMNS, QUANTILE_COLUMNS,
                       SERIES_COLUMNS, SIMULATE_COLUMNS, SPEED_COLUMNS, SPEED_CURVE_COLUMNS,
                       TABLE_COLUMNS, TRADEOFF_COLUMNS, WAVE_COLUMNS, JSONLWriter,
                       append_manifest, build_manifest, default_workers,
                       generate_default_output_dir, load_config, write_csv)
from .mfl import (GridCdf, RecenterPolicy, avg_speed, bmfl, frozen_lower_bound,
                  integrate, wave_grid)
from .models import BoundarySpec, RunConfig, SpeedStatistic, WaveKind
from .optimize import optimize_tradeoff, tradeoff_sweep
from .particles import simulate_speed
from .speed import critical, speed_curve
from .tables import reproduce_table, table_law
from .tws import (logistic_tws, shoot, tail_exponent_of_shape, tws_left_boundary,
                  tws_original, tws_right_boundary, wave_profile)

logger = logging.getLogger(__name__)

LAWS = ["exp", "uniform02", "det1"]

_session = {"verbose": False}


def common_options(func):
    """Options shared by every subcommand."""
    options = [
        click.option('--config', '-c', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='Flat JSON config; flags override its values'),
        click.option('--law', type=click.Choice(LAWS), default=None,
                     help='Jump-size law (empirical laws come from --config)'),
        click.option('--lambda', 'lam', type=float, default=None, help='Independent-jump rate'),
        click.option('--mu', type=float, default=None, help='Synchronization rate'),
        click.option('--seed', type=int, default=None, help='Random seed'),
        click.option('--out', '-o', 'out_dir', type=click.Path(file_okay=False), default=None,
                     help='Output directory (default: outputs/<subcommand>_<timestamp>)'),
        click.option('--verbose', '-v', is_flag=True, help='Enable verbose output'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


class _Run:
    """Config resolution, output bookkeeping and the manifest of one invocation."""

    def __init__(self, subcommand: str, config_path: Optional[str], verbose: bool,
                 overrides: Dict[str, Any]):
        _session["verbose"] = verbose
        logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        self.subcommand = subcommand
        self.verbose = verbose
        self.started_at = datetime.now()
        self.t0 = time.perf_counter()
        self.config = load_config(config_path)
        for key, value in overrides.items():
            if value is not None:
                setattr(self.config, key, value)
        self.outputs: List[str] = []
        self._out_dir: Optional[str] = None

    @property
    def out_dir(self) -> str:
        if self._out_dir is None:
            if self.config.out_dir:
                Path(self.config.out_dir).mkdir(parents=True, exist_ok=True)
                self._out_dir = self.config.out_dir
            else:
                self._out_dir = generate_default_output_dir(self.subcommand)
                if self.verbose:
                    click.echo(f"No output directory specified, using: {self._out_dir}")
        return self._out_dir

    @property
    def law(self):
        return law_from_spec(self.config.law)

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self.config, name) is None:
                flag = "lambda" if name == "lambda_" else name.replace("_", "-")
                raise ValueError(f"--{flag} is required")

    def csv(self, name: str, columns: Sequence[str], rows) -> str:
        path = write_csv(str(Path(self.out_dir) / name), columns, rows)
        self.outputs.append(path)
        return path

    def jsonl(self, name: str, records) -> str:
        path = str(Path(self.out_dir) / name)
        with JSONLWriter(path) as writer:
            writer.write_records(records)
        self.outputs.append(path)
        return path

    def finish(self) -> None:
        manifest = build_manifest(self.subcommand, self.config, __version__, self.started_at,
                                  time.perf_counter() - self.t0, self.outputs)
        append_manifest(self.out_dir, manifest)
        click.echo(f"   • Output directory: {Path(self.out_dir).absolute()}")
        if self.verbose:
            for path in self.outputs:
                click.echo(f"     - {Path(path).name}")


@click.group()
@click.version_option(__version__, prog_name="front_speeds")
def cli():
    """
    Front speeds of particle systems driven by independent jumps and
    synchronization: critical speeds, finite-n simulation, the branching
    random walk, mean-field dynamics and traveling waves.
    """


@cli.command()
@common_options
@click.option('--points', type=int, default=200, help='Samples of the speed curve')
def speed(config_path, law, lam, mu, seed, out_dir, verbose, points):
    """
    Critical speed v** and the speed curve v(zeta).

    \b
    # exponential jumps, closed form
    python front_speeds.py speed --law exp --lambda 1 --mu 1
    """
    run = _Run("speed", config_path, verbose,
               dict(law=law, lambda_=lam, mu=mu, seed=seed, out_dir=out_dir))
    run.require("lambda_", "mu")
    run.config.validate()
    jump_law = run.law
    cfg = run.config
    crit = critical(jump_law, cfg.lambda_, cfg.mu)

    upper = 3.0 * crit.zeta_star
    if math.isfinite(jump_law.tail_exponent):
        upper = min(upper, jump_law.tail_exponent * (1.0 - 1e-6))
    zetas = np.linspace(crit.zeta_star / 20.0, upper, points)
    curve = speed_curve(jump_law, cfg.lambda_, cfg.mu, zetas)

    run.csv("speed.csv", SPEED_COLUMNS, [[jump_law.name, cfg.lambda_, cfg.mu, crit.zeta_star,
                                          crit.v_star, crit.at_tail_boundary]])
    run.csv("curve.csv", SPEED_CURVE_COLUMNS, [[p.zeta, p.speed] for p in curve])

    click.echo(f"\n✅ Critical speed computed")
    click.echo(f"📊 {crit}")
    if crit.at_tail_boundary:
        click.echo("   • Minimum sits at the tail exponent")
    run.finish()


@cli.command()
@common_options
@click.option('--n', type=int, default=None, help='Number of particles')
@click.option('--boundary', type=str, default=None,
              help="none | fixed:B | moving-right:B0,v | moving-left:A0,v")
@click.option('--statistic', type=click.Choice([s.value for s in SpeedStatistic]), default=None)
@click.option('--nu', type=float, default=None, help='Quantile level for --statistic quantile')
@click.option('--jumps-per-particle', type=int, default=None)
@click.option('--warmup', 'warmup_fraction', type=float, default=None)
@click.option('--initial', type=click.Choice(["zeros", "spread"]), default=None)
@click.option('--series', 'record_every', type=int, default=None,
              help='Also write the statistic every this many events')
def simulate(config_path, law, lam, mu, seed, out_dir, verbose, n, boundary, statistic, nu,
             jumps_per_particle, warmup_fraction, initial, record_every):
    """
    Steady-state speed of the n-particle system.

    \b
    python front_speeds.py simulate --law exp --lambda 0.2 --mu 0.6 --n 10000 --seed 1
    """
    run = _Run("simulate", config_path, verbose,
               dict(law=law, lambda_=lam, mu=mu, seed=seed, out_dir=out_dir, n=n,
                    boundary=boundary, statistic=statistic, nu=nu,
                    jumps_per_particle=jumps_per_particle, warmup_fraction=warmup_fraction,
                    initial=initial))
    run.require("lambda_", "mu", "n")
    run.config.validate(stochastic=True)
    cfg = run.config
    series: Optional[list] = [] if record_every else None
    estimate = simulate_speed(run.law, cfg.lambda_, cfg.mu, cfg.n,
                              total_jumps_per_particle=cfg.jumps_per_particle,
                              warmup_fraction=cfg.warmup_fraction, seed=cfg.seed,
                              statistic=SpeedStatistic(cfg.statistic), nu=cfg.nu,
                              boundary=BoundarySpec.parse(cfg.boundary),
                              initial=cfg.initial, series=series, record_every=record_every)

    run.csv("simulate.csv", SIMULATE_COLUMNS,
            [[cfg.n, cfg.lambda_, cfg.mu, str(estimate.statistic), estimate.nu, estimate.value,
              estimate.std_error, estimate.t_start, estimate.t_end, estimate.events,
              time.perf_counter() - run.t0]])
    if series is not None:
        run.csv("series.csv", SERIES_COLUMNS, series)

    click.echo(f"\n✅ Simulation completed")
    click.echo(f"📊 Statistics:")
    click.echo(f"   • {estimate}")
    click.echo(f"   • Window: t in [{estimate.t_start:.6g}, {estimate.t_end:.6g}]")
    run.finish()


@cli.command()
@common_options
@click.option('--t-end', type=float, default=None, help='Final time')
@click.option('--cap', type=int, default=None, help='Population cap')
@click.option('--replicas', type=int, default=None,
              help='Also estimate the leading-particle CDF at t-end from this many replicas')
@click.option('--window', type=(float, float), default=None, help='Window for the leader speed')
def brw(config_path, law, lam, mu, seed, out_dir, verbose, t_end, cap, replicas, window):
    """
    Branching random walk: population, leading particle and its CDF.

    \b
    python front_speeds.py brw --law exp --lambda 1 --mu 1 --t-end 8 --seed 3
    """
    run = _Run("brw", config_path, verbose,
               dict(law=law, lambda_=lam, mu=mu, seed=seed, out_dir=out_dir, t_end=t_end,
                    cap=cap, replicas=replicas, window=list(window) if window else None))
    run.require("lambda_", "mu", "t_end")
    run.config.validate(stochastic=True)
    cfg = run.config
    jump_law = run.law

    traj = simulate_brw(jump_law, cfg.lambda_, cfg.mu, cfg.t_end, cfg.cap, cfg.seed)
    run.csv("brw.csv", BRW_COLUMNS, zip(traj.times, traj.sizes, traj.leaders))

    click.echo(f"\n✅ Branching random walk simulated")
    click.echo(f"📊 Statistics:")
    click.echo(f"   • Final population: {len(traj.locations)}")
    click.echo(f"   • Leading particle: {traj.final_leader:.9g} at t={traj.end_time:.6g}")
    if traj.cap_exceeded:
        click.echo(f"   • ⚠️  Population cap {cfg.cap} reached; run stopped early")
    if cfg.window:
        click.echo(f"   • Leader speed over {tuple(cfg.window)}: "
                   f"{leading_speed(traj, tuple(cfg.window)):.9g}")

    if cfg.replicas:
        v_star = critical(jump_law, cfg.lambda_, cfg.mu).v_star if cfg.lambda_ > 0 else 0.0
        grid = np.linspace(-1.0, v_star * cfg.t_end + 10.0, 401)
        result = leading_cdf(jump_law, cfg.lambda_, cfg.mu, cfg.t_end, cfg.replicas, grid,
                             seed=cfg.seed, cap=cfg.cap, progress=True)
        run.csv("leading_cdf.csv", LEADING_CDF_COLUMNS, zip(result.grid, result.values))
        if result.biased:
            click.echo("   • ⚠️  Leading CDF is biased: some replicas hit the cap")
    run.finish()


def _initial_grid(spec: str, cfg: RunConfig, lam: float, mu: float, x_left: float,
                  x_right: float) -> GridCdf:
    kind, _, args = spec.partition(":")
    if kind == "file":
        return GridCdf.from_csv(args, cfg.h)
    if Path(spec).is_file():
        return GridCdf.from_csv(spec, cfg.h)
    try:
        values = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"invalid initial condition: {spec!r}")
    if kind == "dirac":
        return GridCdf.dirac(x_left, x_right, cfg.h)
    if kind == "exp-tail" and len(values) == 1:
        return GridCdf.exponential_tail(values[0], x_left, x_right, cfg.h)
    if kind == "logistic" and len(values) == 2:
        wave = logistic_tws(*values)
        return wave_grid(lambda x: wave_profile(wave, x), x_left, x_right, cfg.h)
    if kind == "wave" and len(values) == 1:
        wave = tws_original(lam, mu, values[0])
        if wave is None:
            raise ValueError(f"no traveling wave at v={values[0]}")
        return wave_grid(lambda x: wave_profile(wave, x), x_left, x_right, cfg.h)
    raise ValueError(f"invalid initial condition: {spec!r}")


@cli.command()
@common_options
@click.option('--t-end', type=float, default=None, help='Integration length')
@click.option('--dt', type=float, default=None, help='Time step')
@click.option('--h', type=float, default=None, help='Grid spacing')
@click.option('--boundary', type=str, default=None,
              help="none | fixed:B | moving-right:B0,v | moving-left:A0,v")
@click.option('--initial', 'initial_spec', type=str, default='dirac', show_default=True,
              help="dirac | exp-tail:ZETA | logistic:V,C | wave:V | file:PATH to an (x, f) CSV")
@click.option('--nu', 'levels', type=float, multiple=True, help='Tracked quantile levels')
@click.option('--x-left', type=float, default=-5.0, show_default=True)
@click.option('--x-right', type=float, default=None, help='Right edge (default from v**)')
@click.option('--window', type=(float, float), default=None, help='Window for the average speed')
@click.option('--recenter', is_flag=True, help='Shift the grid window with the front')
@click.option('--freeze', type=float, default=None,
              help='Frozen fraction nu: run the lower-bound construction instead')
def mfl(config_path, law, lam, mu, seed, out_dir, verbose, t_end, dt, h, boundary,
        initial_spec, levels, x_left, x_right, window, recenter, freeze):
    """
    Mean-field dynamics on a grid.

    \b
    # benchmark trajectory from the step at 0
    python front_speeds.py mfl --law exp --lambda 1 --mu 1 --t-end 40 --window 20 40
    """
    run = _Run("mfl", config_path, verbose,
               dict(law=law, lambda_=lam, mu=mu, seed=seed, out_dir=out_dir, t_end=t_end,
                    dt=dt, h=h, boundary=boundary, window=list(window) if window else None))
    run.require("lambda_", "mu", "t_end")
    run.config.validate()
    cfg = run.config
    jump_law = run.law
    track = tuple(levels) or (cfg.nu,)
    if x_right is None:
        v_upper = critical(jump_law, cfg.lambda_, cfg.mu).v_star if cfg.lambda_ > 0 else cfg.mu
        x_right = (0.0 if recenter else v_upper * cfg.t_end) + 40.0
    policy = RecenterPolicy() if recenter else None
    bound = BoundarySpec.parse(cfg.boundary)

    if freeze is not None:
        f0 = _initial_grid(initial_spec, cfg, cfg.lambda_, cfg.mu, x_left, x_right)
        traj = frozen_lower_bound(f0, jump_law, cfg.lambda_, cfg.mu, freeze, cfg.t_end,
                                  cfg.dt, track=track, boundary=bound, recenter=policy)
    elif initial_spec == "dirac":
        traj = bmfl(jump_law, cfg.lambda_, cfg.mu, cfg.t_end, cfg.dt,
                    grid=(x_left, x_right, cfg.h), boundary=bound, recenter=policy, track=track)
    else:
        f0 = _initial_grid(initial_spec, cfg, cfg.lambda_, cfg.mu, x_left, x_right)
        traj = integrate(f0, jump_law, cfg.lambda_, cfg.mu, boundary=bound, t_end=cfg.t_end,
                         dt=cfg.dt, recenter=policy, track=track)

    run.csv("quantiles.csv", QUANTILE_COLUMNS,
            [[t, nu, q] for nu in track for t, q in zip(traj.times, traj.quantiles[nu])])
    run.csv("final.csv", GRID_COLUMNS, zip(traj.final.x, traj.final.values))

    click.echo(f"\n✅ Mean-field integration completed to t={traj.final.time:.6g}")
    click.echo(f"📊 Statistics:")
    for nu in track:
        click.echo(f"   • q_{nu:g}(t_end) = {traj.quantiles[nu][-1]:.9g}")
    if cfg.window:
        for nu in track:
            click.echo(f"   • Average speed of q_{nu:g} over {tuple(cfg.window)}: "
                       f"{avg_speed(traj, nu, tuple(cfg.window)):.9g}")
    run.finish()


@cli.command()
@common_options
@click.option('--v', 'v', type=float, required=True, help='Wave speed')
@click.option('--kind', type=click.Choice([k.value for k in WaveKind]),
              default=WaveKind.ORIGINAL.value, show_default=True)
@click.option('--phi0', type=float, default=1e-3, show_default=True,
              help='Starting level of a left-boundary wave')
@click.option('--c', 'shift', type=float, default=0.0, help='Shift of the logistic wave')
def tws(config_path, law, lam, mu, seed, out_dir, verbose, v, kind, phi0, shift):
    """
    Traveling-wave shape for exponential jumps (or the lambda = 0 logistic wave).

    \b
    python front_speeds.py tws --lambda 4 --mu 1 --v 7
    """
    run = _Run("tws", config_path, verbose,
               dict(law=law, lambda_=lam, mu=mu, seed=seed, out_dir=out_dir))
    cfg = run.config
    kind = WaveKind(kind)
    if kind != WaveKind.LOGISTIC:
        run.require("lambda_", "mu")
        run.config.validate()
        if law_to_spec(run.law) != "exp":
            raise ValueError("traveling waves are computed for exponential jumps only")

    v_star = None
    if kind == WaveKind.LOGISTIC:
        wave = logistic_tws(v, shift)
    elif kind == WaveKind.LEFT_BOUNDARY:
        wave = tws_left_boundary(cfg.lambda_, cfg.mu, v, phi0)
    elif kind == WaveKind.RIGHT_BOUNDARY:
        wave = tws_right_boundary(cfg.lambda_, cfg.mu, v)
    else:
        wave = tws_original(cfg.lambda_, cfg.mu, v)
        if wave is None:
            wave = shoot(cfg.lambda_ / cfg.mu, v / cfg.mu)
    if kind != WaveKind.LOGISTIC:
        v_star = critical(run.law, cfg.lambda_, cfg.mu).v_star

    tail = tail_exponent_of_shape(wave) if wave.is_proper else None
    record = wave.record(v_star if v_star is not None else 0.0, tail)
    record.lambda_, record.mu, record.v = cfg.lambda_ or 0.0, cfg.mu or 1.0, v
    run.csv("wave.csv", WAVE_COLUMNS, zip(wave.x, wave.phi, wave.z))
    run.jsonl("wave.jsonl", [record])

    click.echo(f"\n✅ Wave computed")
    click.echo(f"📊 Classification: {wave.classification}")
    if v_star is not None:
        click.echo(f"   • v = {v:.9g}, v* = {v_star:.9g}")
    if tail is not None:
        click.echo(f"   • Tail exponent: {tail:.9g}")
    if wave.z1 is not None:
        click.echo(f"   • Slope at phi = 1: {wave.z1:.9g}")
    run.finish()


@cli.command()
@common_options
@click.option('--a', type=float, required=True, help='Cost per unit of lambda')
@click.option('--b', type=float, required=True, help='Cost per unit of mu')
@click.option('--points', type=int, default=100, show_default=True)
def optimize(config_path, law, lam, mu, seed, out_dir, verbose, a, b, points):
    """
    Maximize v** subject to a lambda + b mu = 1.

    \b
    python front_speeds.py optimize --law uniform02 --a 2 --b 1
    """
    run = _Run("optimize", config_path, verbose, dict(law=law, seed=seed, out_dir=out_dir))
    jump_law = run.law
    lams, mus, speeds = tradeoff_sweep(jump_law, a, b, points)
    result = optimize_tradeoff(jump_law, a, b, points=points, sweep=(lams, mus, speeds))
    run.csv("sweep.csv", TRADEOFF_COLUMNS, zip(lams, mus, speeds))
    run.jsonl("optimize.jsonl", [result])

    click.echo(f"\n✅ Trade-off optimized")
    click.echo(f"📊 {result}")
    if not result.unimodal:
        click.echo("   • ⚠️  Speed is not unimodal along the budget line")
    run.finish()


@cli.command('reproduce-table')
@common_options
@click.option('--table', 'table_id', type=click.Choice(["1", "2"]), required=True)
@click.option('--n', type=int, default=None, help='Particles per system (default 10000)')
@click.option('--workers', '-w', type=int, default=None, help='Worker processes')
def reproduce_table_command(config_path, law, lam, mu, seed, out_dir, verbose, table_id, n,
                            workers):
    """
    Recompute a reference speed table.

    \b
    python front_speeds.py reproduce-table --table 1 --seed 0
    """
    run = _Run("reproduce-table", config_path, verbose,
               dict(seed=seed, out_dir=out_dir, n=n, workers=workers))
    cfg = run.config
    table = int(table_id)
    cfg.law = law_to_spec(table_law(table))
    cfg.n = cfg.n or 10000
    cfg.validate(stochastic=True)
    rows = reproduce_table(table, n=cfg.n, seed=cfg.seed,
                           jumps_per_particle=cfg.jumps_per_particle,
                           warmup_fraction=cfg.warmup_fraction,
                           workers=cfg.workers or default_workers(), progress=True)
    run.csv(f"table{table}.csv", TABLE_COLUMNS,
            [[r.lambda_, r.mu, r.v_n_sim, r.v_n_stderr, r.v_star_star, r.v_n_reference,
              r.v_star_star_reference] for r in rows])

    click.echo(f"\n✅ Table {table} reproduced")
    click.echo(f"📊 {'lambda':>8} {'mu':>8} {'v_n':>10} {'v**':>12} {'ref v_n':>10}")
    for r in rows:
        click.echo(f"   {r.lambda_:8.4g} {r.mu:8.4g} {r.v_n_sim:10.4f} "
                   f"{r.v_star_star:12.9g} {r.v_n_reference:10.4f}")
    run.finish()


def dispatch(argv: Sequence[str]) -> int:
    """
    Run one subcommand and map the outcome to an exit code:
    0 success, 1 usage or validation error, 2 numerical failure.
    """
    args = list(argv)
    if not args:
        with click.Context(cli, info_name="front_speeds") as ctx:
            click.echo(cli.get_help(ctx))
        return 1
    _session["verbose"] = False
    try:
        result = cli.main(args=args, prog_name="front_speeds", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("\n❌ Run cancelled by user")
        return 1
    except KeyboardInterrupt:
        click.echo("\n❌ Run cancelled by user")
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except NumericalFailure as e:
        click.echo(f"\n❌ Numerical failure ({type(e).__name__}): {e}")
        _maybe_traceback()
        return 2
    except (ValueError, JumpSyncError) as e:
        click.echo(f"\n❌ Error: {e}")
        _maybe_traceback()
        return 1
    # --help and --version return an int exit code instead of raising
    if isinstance(result, int):
        return result
    return 0


def _maybe_traceback() -> None:
    if _session["verbose"]:
        traceback.print_exc()


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
