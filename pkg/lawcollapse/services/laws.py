"""Laws, quantile functions, exact step-function integrals and stochastic orders.

Every integral here is an exact sum over the breakpoints of step quantile functions; no
numeric quadrature is involved. Order checks evaluate tail integrals only at merged
breakpoints, which suffices because p -> int_p^1 q(s) ds is piecewise linear with kinks
only there.
"""

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path

import numpy as np

from lawcollapse.config import resolve_tol
from lawcollapse.exceptions import DomainError, InputFormatError
from lawcollapse.models import DiscreteLaw, QuantileFn, UniformSample

logger = logging.getLogger(__name__)

# Breakpoints closer than this are treated as one when grids are merged.
GRID_MERGE_EPS = 1e-13


def quantile_function(law: DiscreteLaw) -> QuantileFn:
    """Left-continuous quantile function of ``law``."""
    return QuantileFn.from_law(law)


def quantile(law: DiscreteLaw, s: float) -> float:
    """Left-continuous quantile ``inf{x : P(X <= x) >= s}`` for ``s`` in (0, 1)."""
    return quantile_function(law)(s)


def upper_quantile(law: DiscreteLaw, s: float) -> float:
    """Right-continuous quantile ``inf{x : P(X <= x) > s}`` for ``s`` in (0, 1)."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {s}")
    q = quantile_function(law)
    index = int(np.searchsorted(q.breakpoints, s, side="right"))
    return q.levels[min(index, len(q.levels)) - 1]


def mean(law: DiscreteLaw) -> float:
    return law.mean


def partial_integral(q: QuantileFn, a: float, b: float) -> float:
    """Exact ``int_a^b q(s) ds`` for ``0 <= a <= b <= 1``."""
    if not 0.0 <= a <= b <= 1.0:
        raise DomainError(f"integration bounds must satisfy 0 <= a <= b <= 1, got ({a}, {b})")
    breakpoints = np.asarray(q.breakpoints)
    lo = np.maximum(breakpoints[:-1], a)
    hi = np.minimum(breakpoints[1:], b)
    lengths = np.clip(hi - lo, 0.0, None)
    return math.fsum((np.asarray(q.levels) * lengths).tolist())


def tail_integral(q: QuantileFn, p: float) -> float:
    """``int_p^1 q(s) ds``."""
    return partial_integral(q, p, 1.0)


def merged_breakpoints(*quantiles: QuantileFn, reflect: Sequence[bool] = ()) -> np.ndarray:
    """Union of breakpoint grids, optionally reflected (s -> 1 - s), near-duplicates merged."""
    grids = []
    for i, q in enumerate(quantiles):
        grid = np.asarray(q.breakpoints)
        if i < len(reflect) and reflect[i]:
            grid = 1.0 - grid[::-1]
        grids.append(grid)
    points = np.unique(np.concatenate(grids))
    keep = np.concatenate(([True], np.diff(points) > GRID_MERGE_EPS))
    points = points[keep]
    points[0] = 0.0
    points[-1] = 1.0
    return points


def _levels_at(q: QuantileFn, s: np.ndarray) -> np.ndarray:
    index = np.searchsorted(q.breakpoints, s, side="left")
    return np.asarray(q.levels)[index - 1]


def product_integral(q1: QuantileFn, q2: QuantileFn, reflect_first: bool = False) -> float:
    """Exact ``int_0^1 q1(s) q2(s) ds``, or ``int_0^1 q1(1 - s) q2(s) ds`` when reflected."""
    grid = merged_breakpoints(q1, q2, reflect=(reflect_first, False))
    mids = 0.5 * (grid[:-1] + grid[1:])
    lengths = np.diff(grid)
    first = _levels_at(q1, 1.0 - mids if reflect_first else mids)
    second = _levels_at(q2, mids)
    return math.fsum((first * second * lengths).tolist())


def _tail_profiles(x: DiscreteLaw, y: DiscreteLaw) -> tuple[np.ndarray, np.ndarray]:
    qx, qy = quantile_function(x), quantile_function(y)
    grid = merged_breakpoints(qx, qy)
    tails_x = np.array([tail_integral(qx, p) for p in grid])
    tails_y = np.array([tail_integral(qy, p) for p in grid])
    return tails_x, tails_y


def convex_order_dominates(x: DiscreteLaw, y: DiscreteLaw, tol: float | None = None) -> bool:
    """True iff ``E[f(X)] >= E[f(Y)]`` for every convex f."""
    tol = resolve_tol(tol)
    if abs(x.mean - y.mean) > tol:
        return False
    tails_x, tails_y = _tail_profiles(x, y)
    return bool(np.all(tails_x >= tails_y - tol))


def ssd_dominated(x: DiscreteLaw, y: DiscreteLaw, tol: float | None = None) -> bool:
    """True iff ``E[f(X)] >= E[f(Y)]`` for every nondecreasing convex f."""
    tol = resolve_tol(tol)
    tails_x, tails_y = _tail_profiles(x, y)
    return bool(np.all(tails_x >= tails_y - tol))


def _validate_partition(n: int, partition: Sequence[Iterable[int]]) -> list[list[int]]:
    blocks = [sorted(int(i) for i in block) for block in partition]
    seen: set[int] = set()
    for block in blocks:
        if not block:
            raise DomainError("partition blocks must be nonempty")
        for i in block:
            if not 1 <= i <= n:
                raise DomainError(f"partition index {i} outside 1..{n}")
            if i in seen:
                raise DomainError(f"partition index {i} appears in more than one block")
            seen.add(i)
    if len(seen) != n:
        missing = sorted(set(range(1, n + 1)) - seen)
        raise DomainError(f"partition does not cover indices {missing}")
    return blocks


def dilate(x: UniformSample, partition: Sequence[Iterable[int]]) -> UniformSample:
    """Conditional expectation of ``x`` given the sigma-field of a partition of 1..n."""
    blocks = _validate_partition(x.n, partition)
    out = list(x.values)
    for block in blocks:
        average = math.fsum(x.values[i - 1] for i in block) / len(block)
        for i in block:
            out[i - 1] = average
    return UniformSample.of(out)


def dilatation_pairs(
    x: UniformSample, partitions: Iterable[Sequence[Iterable[int]]]
) -> list[tuple[DiscreteLaw, DiscreteLaw]]:
    """Pairs (law of x, law of its dilatation) for each partition."""
    law = x.to_law()
    return [(law, dilate(x, partition).to_law()) for partition in partitions]


def is_schur_convex_on(
    phi: Callable[[DiscreteLaw], float],
    pairs: Iterable[tuple[DiscreteLaw, DiscreteLaw]],
    tol: float | None = None,
) -> bool:
    """Spot check: phi(x) >= phi(y) whenever x dominates y in convex order."""
    tol = resolve_tol(tol)
    for x, y in pairs:
        if convex_order_dominates(x, y, tol) and phi(x) < phi(y) - tol:
            logger.debug(f"Schur convexity fails: phi={phi(x)} < {phi(y)}")
            return False
    return True


def ingest_csv(path: str | Path) -> DiscreteLaw:
    """Empirical law of a file holding one real number per line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputFormatError(f"cannot read {path}: {e}") from e

    values: list[float] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            value = float(line)
        except ValueError:
            raise InputFormatError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not math.isfinite(value):
            raise InputFormatError(f"{path}:{lineno}: value must be finite, got {line!r}")
        values.append(value)

    if not values:
        raise InputFormatError(f"{path} holds no values")
    logger.debug(f"Ingested {len(values)} values from {path}")
    return UniformSample.of(values).to_law()
