"""
Jump-size distributions.

Every law has mean 1. A law exposes its CDF J, survival function 1 - J,
sampler, Laplace transform L(s) = E exp(-s Z) with derivative, tail exponent
alpha = sup{zeta >= 0 : L(-zeta) < inf}, and the integrated tail
A(x) = int_0^x (1 - J(u)) du used by the mean-field convolution.

Infinite Laplace values are returned as ``math.inf``.
"""

import math
from abc import ABC, abstractmethod
from typing import Any, List, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

EMPIRICAL_MEAN_TOLERANCE = 1e-6
FINITE_DIFFERENCE_STEP = 1e-6


def _safe_exp(y: float) -> float:
    try:
        return math.exp(y)
    except OverflowError:
        return math.inf


class JumpLaw(ABC):
    """A nonnegative jump-size law with unit mean; immutable once built."""

    name: str = ""

    @abstractmethod
    def cdf(self, x: ArrayLike) -> ArrayLike:
        """J(x) = P{Z <= x}."""

    def survival(self, x: ArrayLike) -> ArrayLike:
        """1 - J(x)."""
        return 1.0 - self.cdf(x)

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        """Draw from the law with the caller's generator."""

    @abstractmethod
    def laplace(self, s: float) -> float:
        """L(s); ``math.inf`` where the transform diverges."""

    @abstractmethod
    def laplace_derivative(self, s: float) -> float:
        """dL/ds."""

    @property
    @abstractmethod
    def tail_exponent(self) -> float:
        """alpha in [0, inf]."""

    @abstractmethod
    def integrated_tail(self, x: ArrayLike) -> ArrayLike:
        """int_0^x (1 - J(u)) du, zero for x <= 0."""

    @property
    def support_width(self) -> float:
        """Smallest w with J(w) = 1 (inf for unbounded laws)."""
        return math.inf

    def to_spec(self) -> Any:
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.to_spec() == other.to_spec()

    def __hash__(self) -> int:
        return hash(type(self).__name__)


class ExponentialMeanOne(JumpLaw):
    """Exponential jumps with mean 1."""

    name = "exp"

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        return rng.exponential(1.0, size)

    def laplace(self, s: float) -> float:
        if s <= -1.0:
            return math.inf
        return 1.0 / (1.0 + s)

    def laplace_derivative(self, s: float) -> float:
        if s <= -1.0:
            return -math.inf
        return -1.0 / (1.0 + s) ** 2

    @property
    def tail_exponent(self) -> float:
        return 1.0

    def integrated_tail(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = -np.expm1(-np.maximum(x, 0.0))
        return float(out) if out.ndim == 0 else out


class UniformZeroTwo(JumpLaw):
    """Jumps uniform on [0, 2]."""

    name = "uniform02"

    def cdf(self, x: ArrayLike) -> ArrayLike:
        out = np.clip(np.asarray(x, dtype=float) / 2.0, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        return rng.uniform(0.0, 2.0, size)

    def laplace(self, s: float) -> float:
        if abs(s) < 1e-4:
            return 1.0 - s + (2.0 / 3.0) * s * s - s ** 3 / 3.0
        if -2.0 * s > 700.0:
            return math.inf
        return -math.expm1(-2.0 * s) / (2.0 * s)

    def laplace_derivative(self, s: float) -> float:
        if abs(s) < 1e-3:
            return -1.0 + (4.0 / 3.0) * s - s * s
        e = _safe_exp(-2.0 * s)
        if math.isinf(e):
            return -math.inf
        return (2.0 * s * e + math.expm1(-2.0 * s)) / (2.0 * s * s)

    @property
    def tail_exponent(self) -> float:
        return math.inf

    def integrated_tail(self, x: ArrayLike) -> ArrayLike:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2.0)
        out = x - x * x / 4.0
        return float(out) if out.ndim == 0 else out

    @property
    def support_width(self) -> float:
        return 2.0


class DeterministicOne(JumpLaw):
    """Every jump has size exactly 1."""

    name = "det1"

    def cdf(self, x: ArrayLike) -> ArrayLike:
        out = np.where(np.asarray(x, dtype=float) >= 1.0, 1.0, 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        if size is None:
            return 1.0
        return np.ones(size)

    def laplace(self, s: float) -> float:
        return _safe_exp(-s)

    def laplace_derivative(self, s: float) -> float:
        return -_safe_exp(-s)

    @property
    def tail_exponent(self) -> float:
        return math.inf

    def integrated_tail(self, x: ArrayLike) -> ArrayLike:
        out = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    @property
    def support_width(self) -> float:
        return 1.0


class EmpiricalCdf(JumpLaw):
    """
    Tabulated CDF, linear between knots.

    Knots are (location, cdf) pairs with nondecreasing locations starting at
    x >= 0 and cdf values ending at 1. A repeated location is an atom; a first
    knot with positive cdf is an atom at that location. The mean must equal 1.
    """

    name = "empirical"

    def __init__(self, points: Sequence[Tuple[float, float]]):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ValueError("empirical law needs a list of (x, F) pairs")
        xs, fs = pts[:, 0].copy(), pts[:, 1].copy()
        if xs[0] < 0:
            raise ValueError("empirical law must live on [0, inf)")
        if np.any(np.diff(xs) < 0) or np.any(np.diff(fs) < 0):
            raise ValueError("empirical knots must be nondecreasing in x and F")
        if fs[0] < 0 or abs(fs[-1] - 1.0) > 1e-12:
            raise ValueError("empirical CDF must start >= 0 and end at 1")
        fs[-1] = 1.0
        self._xs = xs
        self._fs = fs
        self._xs.flags.writeable = False
        self._fs.flags.writeable = False

        # cumulative int_0^{x_i} (1 - J) at each knot
        widths = np.diff(xs)
        segment = widths * (2.0 - fs[:-1] - fs[1:]) / 2.0
        self._cum_tail = np.concatenate(([xs[0]], xs[0] + np.cumsum(segment)))

        mean = float(self._cum_tail[-1])
        if abs(mean - 1.0) > EMPIRICAL_MEAN_TOLERANCE:
            raise ValueError(f"empirical law has mean {mean:.9g}, expected 1")

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(x), float(f)) for x, f in zip(self._xs, self._fs)]

    def cdf(self, x: ArrayLike) -> ArrayLike:
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs, fs = self._xs, self._fs
        idx = np.searchsorted(xs, x, side="right")  # knots <= x
        out = np.zeros_like(x)
        inside = (idx > 0) & (idx < len(xs))
        i = idx[inside]
        x_lo, x_hi = xs[i - 1], xs[i]
        out[inside] = fs[i - 1] + (fs[i] - fs[i - 1]) * (x[inside] - x_lo) / (x_hi - x_lo)
        out[idx >= len(xs)] = 1.0
        return float(out[0]) if scalar else out

    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        u = rng.random(size)
        return np.interp(u, self._fs, self._xs)

    def _pieces(self):
        """Atoms (location, mass) and linear pieces (left, width, density)."""
        xs, fs = self._xs, self._fs
        atoms_x = [xs[0]]
        atoms_m = [fs[0]]
        widths = np.diff(xs)
        jumps = np.diff(fs)
        is_atom = widths == 0
        atoms_x.extend(xs[:-1][is_atom])
        atoms_m.extend(jumps[is_atom])
        lin = ~is_atom
        left = xs[:-1][lin]
        width = widths[lin]
        density = jumps[lin] / width
        return np.asarray(atoms_x), np.asarray(atoms_m), left, width, density

    def laplace(self, s: float) -> float:
        if s == 0:
            return 1.0
        atoms_x, atoms_m, left, width, density = self._pieces()
        with np.errstate(over="ignore", invalid="ignore"):
            total = float(np.sum(atoms_m * np.exp(-s * atoms_x)))
            y = s * width
            small = np.abs(y) < 1e-8
            ratio = np.where(small, 1.0 - y / 2.0, -np.expm1(-y) / np.where(small, 1.0, y))
            total += float(np.sum(density * width * np.exp(-s * left) * ratio))
        if not math.isfinite(total):
            return math.inf
        return total

    def laplace_derivative(self, s: float) -> float:
        step = FINITE_DIFFERENCE_STEP
        return (self.laplace(s + step) - self.laplace(s - step)) / (2.0 * step)

    @property
    def tail_exponent(self) -> float:
        return math.inf

    def integrated_tail(self, x: ArrayLike) -> ArrayLike:
        scalar = np.ndim(x) == 0
        x = np.maximum(np.atleast_1d(np.asarray(x, dtype=float)), 0.0)
        xs, fs, cum = self._xs, self._fs, self._cum_tail
        out = np.minimum(x, xs[0])
        idx = np.searchsorted(xs, x, side="right")
        inside = (idx > 0) & (idx < len(xs))
        i = idx[inside]
        d = x[inside] - xs[i - 1]
        slope = (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1])
        out[inside] = cum[i - 1] + d * (1.0 - fs[i - 1]) - 0.5 * slope * d * d
        out[idx >= len(xs)] = cum[-1]
        return float(out[0]) if scalar else out

    @property
    def support_width(self) -> float:
        return float(self._xs[-1])

    def to_spec(self) -> Any:
        return {"type": "empirical", "points": [list(p) for p in self.points]}

    def __repr__(self) -> str:
        return f"EmpiricalCdf({len(self._xs)} knots)"

    def __hash__(self) -> int:
        return hash((tuple(self._xs), tuple(self._fs)))


_BUILTINS = {
    "exp": ExponentialMeanOne,
    "uniform02": UniformZeroTwo,
    "det1": DeterministicOne,
}


def law_from_spec(spec: Any) -> JumpLaw:
    """
    Build a law from its config form.

    Args:
        spec: ``"exp"``, ``"uniform02"``, ``"det1"`` or
            ``{"type": "empirical", "points": [[x, F], ...]}``

    Returns:
        The corresponding JumpLaw.
    """
    if isinstance(spec, JumpLaw):
        return spec
    if isinstance(spec, str) and spec in _BUILTINS:
        return _BUILTINS[spec]()
    if isinstance(spec, dict) and spec.get("type") == "empirical":
        return EmpiricalCdf(spec.get("points", []))
    raise ValueError(f"unknown jump law: {spec!r}")


def law_to_spec(law: JumpLaw) -> Any:
    return law.to_spec()


# Functional forms of the law operations.

def cdf(law: JumpLaw, x: ArrayLike) -> ArrayLike:
    return law.cdf(x)


def survival(law: JumpLaw, x: ArrayLike) -> ArrayLike:
    return law.survival(x)


def sample(law: JumpLaw, rng: np.random.Generator, size=None) -> ArrayLike:
    return law.sample(rng, size)


def laplace(law: JumpLaw, s: float) -> float:
    return law.laplace(s)


def laplace_derivative(law: JumpLaw, s: float) -> float:
    return law.laplace_derivative(s)


def tail_exponent(law: JumpLaw) -> float:
    return law.tail_exponent


def integrated_tail(law: JumpLaw, x: ArrayLike) -> ArrayLike:
    return law.integrated_tail(x)
