"""
Core data models for front-speed simulation and analysis.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
from dataclasses_json import dataclass_json, config
from enum import Enum


class BoundaryKind(Enum):
    """Boundary variants of the particle system and its mean-field limit."""
    NONE = "none"
    FIXED_RIGHT = "fixed"
    MOVING_RIGHT = "moving-right"
    MOVING_LEFT = "moving-left"

    def __str__(self) -> str:
        return self.value


class SpeedStatistic(Enum):
    """Location statistic whose displacement defines a speed estimate."""
    MEAN = "mean"
    QUANTILE = "quantile"
    LEADING = "leading"

    def __str__(self) -> str:
        return self.value


class Classification(Enum):
    """How a phase-plane trajectory ends."""
    PROPER = "proper"
    HITS_ONE_ABOVE = "hits-one-above"
    FELL_TO_AXIS = "fell-to-axis"

    def __str__(self) -> str:
        return self.value


class WaveKind(Enum):
    """Which system a wave shape belongs to."""
    ORIGINAL = "original"
    LEFT_BOUNDARY = "left-boundary"
    RIGHT_BOUNDARY = "right-boundary"
    LOGISTIC = "logistic"

    def __str__(self) -> str:
        return self.value


def _enum_field(enum_cls, default=None):
    meta = config(encoder=lambda x: x.value, decoder=lambda x: enum_cls(x))
    if default is None:
        return field(metadata=meta)
    return field(default=default, metadata=meta)


@dataclass_json
@dataclass(frozen=True)
class BoundarySpec:
    """A reflecting boundary: none, fixed at B, or moving at constant speed."""
    kind: BoundaryKind = _enum_field(BoundaryKind, BoundaryKind.NONE)
    position: float = 0.0  # B, B0 or A0
    speed: float = 0.0

    def __post_init__(self):
        if self.kind in (BoundaryKind.MOVING_RIGHT, BoundaryKind.MOVING_LEFT) and not self.speed > 0:
            raise ValueError(f"moving boundary needs speed > 0, got {self.speed}")
        if self.kind == BoundaryKind.FIXED_RIGHT and self.speed != 0:
            raise ValueError("fixed boundary cannot have a speed")

    @classmethod
    def none(cls) -> 'BoundarySpec':
        return cls()

    @classmethod
    def fixed_right(cls, b: float) -> 'BoundarySpec':
        return cls(BoundaryKind.FIXED_RIGHT, float(b), 0.0)

    @classmethod
    def moving_right(cls, b0: float, v: float) -> 'BoundarySpec':
        return cls(BoundaryKind.MOVING_RIGHT, float(b0), float(v))

    @classmethod
    def moving_left(cls, a0: float, v: float) -> 'BoundarySpec':
        return cls(BoundaryKind.MOVING_LEFT, float(a0), float(v))

    @classmethod
    def parse(cls, text: str) -> 'BoundarySpec':
        """
        Parse ``none``, ``fixed:B``, ``moving-right:B0,v`` or ``moving-left:A0,v``.
        """
        text = (text or "none").strip()
        if text == "none":
            return cls.none()
        name, _, args = text.partition(":")
        try:
            values = [float(p) for p in args.split(",")] if args else []
        except ValueError:
            raise ValueError(f"invalid boundary arguments: {text!r}")
        if name == "fixed" and len(values) == 1:
            return cls.fixed_right(values[0])
        if name == "moving-right" and len(values) == 2:
            return cls.moving_right(*values)
        if name == "moving-left" and len(values) == 2:
            return cls.moving_left(*values)
        raise ValueError(f"invalid boundary spec: {text!r}")

    @property
    def is_right(self) -> bool:
        return self.kind in (BoundaryKind.FIXED_RIGHT, BoundaryKind.MOVING_RIGHT)

    def location(self, t: float) -> float:
        """Absolute boundary location at time t (nan when there is no boundary)."""
        if self.kind == BoundaryKind.NONE:
            return math.nan
        return self.position + self.speed * t

    def __str__(self) -> str:
        if self.kind == BoundaryKind.NONE:
            return "none"
        if self.kind == BoundaryKind.FIXED_RIGHT:
            return f"fixed:{self.position:g}"
        return f"{self.kind.value}:{self.position:g},{self.speed:g}"


@dataclass_json
@dataclass
class SpeedCurvePoint:
    """One sample of the speed curve v(zeta)."""
    zeta: float
    speed: float


@dataclass_json
@dataclass
class CriticalSpeed:
    """Minimizer of the speed curve for given rates."""
    zeta_star: float
    v_star: float
    lambda_: float = field(metadata=config(field_name="lambda"))
    mu: float
    at_tail_boundary: bool = False  # minimum sits at zeta = alpha

    def __str__(self) -> str:
        return f"zeta**={self.zeta_star:.9g}, v**={self.v_star:.9g}"


@dataclass_json
@dataclass
class SpeedEstimate:
    """Steady-state speed estimate of a finite-n system."""
    value: float
    std_error: float
    t_start: float
    t_end: float
    statistic: SpeedStatistic = _enum_field(SpeedStatistic, SpeedStatistic.MEAN)
    nu: Optional[float] = None  # quantile level for QUANTILE
    n: int = 0
    events: int = 0

    @property
    def window(self) -> Tuple[float, float]:
        return (self.t_start, self.t_end)

    def __str__(self) -> str:
        return f"v_n={self.value:.9g} ± {self.std_error:.3g}"


@dataclass_json
@dataclass
class EndpointEigen:
    """
    Linearization of the wave system at (1, 0).

    For real roots zeta1 <= zeta2; for a complex pair zeta1 = zeta2 = real part
    and omega is the imaginary part.
    """
    zeta1: float
    zeta2: float
    complex_pair: bool
    omega: float = 0.0


@dataclass_json
@dataclass
class WaveRecord:
    """Classification summary of a wave computation."""
    kind: WaveKind = _enum_field(WaveKind)
    classification: Classification = _enum_field(Classification)
    lambda_: float = field(default=0.0, metadata=config(field_name="lambda"))
    mu: float = 1.0
    v: float = 0.0
    v_star: float = 0.0
    tail_exponent: Optional[float] = None
    z1: Optional[float] = None
    phi_hit: Optional[float] = None
    phi0: Optional[float] = None


@dataclass_json
@dataclass
class TradeoffResult:
    """Optimal split of a linear budget between jumping and synchronizing."""
    lambda_opt: float
    mu_opt: float
    v_opt: float
    a: float
    b: float
    closed_form: bool = False
    unimodal: bool = True

    def __str__(self) -> str:
        return (f"lambda_opt={self.lambda_opt:.9g}, mu_opt={self.mu_opt:.9g}, "
                f"v_opt={self.v_opt:.9g}")


@dataclass_json
@dataclass
class TableRow:
    """One row of a reproduced speed table."""
    lambda_: float = field(metadata=config(field_name="lambda"))
    mu: float
    v_n_sim: float
    v_n_stderr: float
    v_star_star: float
    v_n_reference: float
    v_star_star_reference: float


@dataclass_json
@dataclass
class RunConfig:
    """
    Every knob a subcommand can take; loaded from a flat JSON file and
    overridden by command-line flags.
    """
    law: Any = "exp"  # "exp" | "uniform02" | "det1" | {"type": "empirical", "points": [...]}
    lambda_: Optional[float] = field(default=None, metadata=config(field_name="lambda"))
    mu: Optional[float] = None
    n: Optional[int] = None
    boundary: str = "none"
    seed: Optional[int] = None
    out_dir: Optional[str] = None
    dt: float = 0.01
    h: float = 0.02
    t_end: Optional[float] = None
    window: Optional[List[float]] = None
    replicas: Optional[int] = None
    cap: int = 1_000_000
    jumps_per_particle: int = 400
    warmup_fraction: float = 0.5
    statistic: str = "mean"
    nu: float = 0.5
    initial: str = "zeros"
    workers: Optional[int] = None

    def validate(self, stochastic: bool = False) -> None:
        """Check rate and seed requirements; raises ValueError."""
        if self.lambda_ is not None and self.lambda_ < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        if self.mu is not None and not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if stochastic and self.seed is None:
            raise ValueError("a seed is required for stochastic runs")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must lie in (0, 1)")


@dataclass_json
@dataclass
class RunManifest:
    """Provenance record appended for every CLI run."""
    subcommand: str
    config: Dict[str, Any]
    version: str
    schema_version: int
    started_at: str
    wall_time: float
    outputs: Dict[str, str] = field(default_factory=dict)  # path -> sha256
