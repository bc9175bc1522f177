"""Capacities on the n-point equiprobable space and exact Choquet integration.

Subsets of {1..n} are passed either as an iterable of 1-based atom indices or as an ``int``
bitmask where bit ``i - 1`` stands for atom ``i``. Exhaustive checks (tables, submodularity,
law invariance, monotonicity) refuse spaces larger than ``exhaustive_max_atoms``.
"""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from lawcollapse.config import get_settings, resolve_tol
from lawcollapse.exceptions import DomainError, SizeLimitError
from lawcollapse.models import ChoquetValue, UniformSample

logger = logging.getLogger(__name__)

Subset = int | Iterable[int]


def subset_mask(subset: Subset, n: int) -> int:
    """Bitmask of a subset of {1..n}."""
    if isinstance(subset, bool):
        raise DomainError("a subset must be a bitmask or an iterable of atom indices")
    if isinstance(subset, int | np.integer):
        mask = int(subset)
        if not 0 <= mask < 1 << n:
            raise DomainError(f"bitmask {mask} is not a subset of {n} atoms")
        return mask
    mask = 0
    for i in subset:
        i = int(i)
        if not 1 <= i <= n:
            raise DomainError(f"atom index {i} outside 1..{n}")
        mask |= 1 << (i - 1)
    return mask


def mask_members(mask: int, n: int) -> frozenset[int]:
    """1-based atom indices of a bitmask."""
    return frozenset(i + 1 for i in range(n) if mask >> i & 1)


def _check_exhaustive(n: int) -> None:
    limit = get_settings().exhaustive_max_atoms
    if n > limit:
        raise SizeLimitError(f"exhaustive subset enumeration refuses n={n} > {limit}")


def _membership(n: int) -> np.ndarray:
    """(2^n, n) 0/1 matrix; row m lists the atoms of bitmask m."""
    masks = np.arange(1 << n)
    return (masks[:, None] >> np.arange(n)) & 1


def _popcounts(n: int) -> np.ndarray:
    return _membership(n).sum(axis=1)


class Capacity(ABC):
    """A normalised set function on the subsets of {1..n}."""

    kind: str = ""

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"a capacity needs n >= 1 atoms, got {n}")
        self.n = n

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @abstractmethod
    def _value(self, mask: int) -> float:
        """Value at a bitmask that is neither empty nor full."""

    @abstractmethod
    def dual(self) -> "Capacity":
        """The conjugate capacity ``A -> 1 - mu(A^c)``."""

    def eval(self, subset: Subset) -> float:
        mask = subset_mask(subset, self.n)
        if mask == 0:
            return 0.0
        if mask == self.full_mask:
            return 1.0
        return self._value(mask)

    def table(self) -> np.ndarray:
        """Values at every bitmask 0 .. 2^n - 1."""
        _check_exhaustive(self.n)
        return np.array([self.eval(mask) for mask in range(1 << self.n)])

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class DistortionCapacity(Capacity):
    """``mu(A) = T(|A| / n)`` for a piecewise-linear distortion T given by its knots."""

    kind = "distortion"

    def __init__(self, n: int, knots: Sequence[tuple[float, float]]):
        super().__init__(n)
        us = np.array([float(u) for u, _ in knots])
        ts = np.array([float(t) for _, t in knots])
        if len(us) < 2 or us[0] != 0.0 or us[-1] != 1.0:
            raise DomainError("distortion knots must start at u=0 and end at u=1")
        if np.any(np.diff(us) <= 0):
            raise DomainError("distortion knot abscissae must be strictly increasing")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise DomainError("a distortion must satisfy T(0) = 0 and T(1) = 1")
        if np.any(np.diff(ts) < 0):
            raise DomainError("a distortion must be nondecreasing")
        self.us = us
        self.ts = ts

    @classmethod
    def identity(cls, n: int) -> "DistortionCapacity":
        """The reference probability P (uniform on n atoms)."""
        return cls(n, [(0.0, 0.0), (1.0, 1.0)])

    @classmethod
    def from_function(cls, n: int, fn: Callable[[float], float]) -> "DistortionCapacity":
        """Distortion sampled at k/n; exact on this space for any T."""
        knots = [(k / n, float(fn(k / n))) for k in range(n + 1)]
        knots[0] = (0.0, 0.0)
        knots[-1] = (1.0, 1.0)
        return cls(n, knots)

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.us.tolist(), self.ts.tolist()))

    def distort(self, u: float | np.ndarray) -> float | np.ndarray:
        return np.interp(u, self.us, self.ts)

    def _value(self, mask: int) -> float:
        return float(self.distort(mask.bit_count() / self.n))

    def table(self) -> np.ndarray:
        _check_exhaustive(self.n)
        return np.asarray(self.distort(_popcounts(self.n) / self.n), dtype=float)

    def dual(self) -> "DistortionCapacity":
        reflected = [(1.0 - u, 1.0 - t) for u, t in reversed(self.knots)]
        return DistortionCapacity(self.n, reflected)


class DensityFamilyCapacity(Capacity):
    """Coherent capacity ``mu(A) = max_d (1/n) sum_{i in A} d_i`` over a finite density family."""

    kind = "densities"

    def __init__(self, densities: Sequence[Sequence[float]]):
        matrix = np.atleast_2d(np.asarray(densities, dtype=float))
        if matrix.size == 0:
            raise DomainError("a density family needs at least one density")
        super().__init__(matrix.shape[1])
        if np.any(~np.isfinite(matrix)) or np.any(matrix < 0):
            raise DomainError("densities must be finite and nonnegative")
        tol = get_settings().probability_sum_tolerance
        means = matrix.mean(axis=1)
        if np.any(np.abs(means - 1.0) > tol):
            raise DomainError(f"densities must average to 1, got means {means.tolist()}")
        self.densities = matrix

    @classmethod
    def uniform(cls, n: int) -> "DensityFamilyCapacity":
        """The reference probability P as a one-density family."""
        return cls([[1.0] * n])

    def permutation_closure(self) -> "DensityFamilyCapacity":
        """Family closed under coordinate permutations; its capacity is law invariant."""
        if self.n > get_settings().oracle_max_atoms:
            raise SizeLimitError(f"permutation closure refuses n={self.n}")
        rows = {
            tuple(row[list(perm)].tolist())
            for row in self.densities
            for perm in permutations(range(self.n))
        }
        return DensityFamilyCapacity(sorted(rows))

    def _value(self, mask: int) -> float:
        flags = np.array([mask >> i & 1 for i in range(self.n)], dtype=float)
        return float(np.max(self.densities @ flags) / self.n)

    def table(self) -> np.ndarray:
        _check_exhaustive(self.n)
        values = (_membership(self.n) @ self.densities.T).max(axis=1) / self.n
        values[0] = 0.0
        values[-1] = 1.0
        return values

    def dual(self) -> "Capacity":
        return DualCapacity(self)


class JPCapacity(Capacity):
    """Jaffray-Philippe capacity ``alpha nu(A) + (1 - alpha)(1 - nu(A^c))``."""

    kind = "jp"

    def __init__(self, nu: DensityFamilyCapacity, alpha: float):
        if not isinstance(nu, DensityFamilyCapacity):
            raise DomainError("a JP capacity is built over a density-family capacity")
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"JP alpha must lie in [0, 1], got {alpha}")
        if alpha == 0.5:
            raise DomainError("JP capacity needs alpha != 1/2")
        super().__init__(nu.n)
        self.nu = nu
        self.alpha = float(alpha)

    def _value(self, mask: int) -> float:
        a = self.alpha
        return a * self.nu.eval(mask) + (1.0 - a) * (1.0 - self.nu.eval(self.full_mask ^ mask))

    def table(self) -> np.ndarray:
        nu = self.nu.table()
        values = self.alpha * nu + (1.0 - self.alpha) * (1.0 - nu[::-1])
        values[0] = 0.0
        values[-1] = 1.0
        return values

    def dual(self) -> "JPCapacity":
        return JPCapacity(self.nu, 1.0 - self.alpha)

    def __repr__(self) -> str:
        return f"JPCapacity(n={self.n}, alpha={self.alpha})"


class ExplicitCapacity(Capacity):
    """A capacity given by a (possibly partial) table of bitmask values."""

    kind = "explicit"

    def __init__(self, n: int, values: Mapping[int, float]):
        super().__init__(n)
        tol = get_settings().tolerance
        table: dict[int, float] = {}
        for key, value in values.items():
            mask = subset_mask(key, n)
            value = float(value)
            if not -tol <= value <= 1.0 + tol:
                raise DomainError(f"capacity value {value} at bitmask {mask} outside [0, 1]")
            table[mask] = value
        if abs(table.get(0, 0.0)) > tol or abs(table.get(self.full_mask, 1.0) - 1.0) > tol:
            raise DomainError("a capacity must vanish on the empty set and equal 1 on the space")
        self.values = table

    @classmethod
    def from_table(cls, n: int, table: Sequence[float] | np.ndarray) -> "ExplicitCapacity":
        return cls(n, dict(enumerate(np.asarray(table, dtype=float).tolist())))

    def _value(self, mask: int) -> float:
        try:
            return self.values[mask]
        except KeyError:
            members = sorted(mask_members(mask, self.n))
            raise DomainError(f"explicit capacity has no value for subset {members}") from None

    def dual(self) -> "Capacity":
        return DualCapacity(self)


class DualCapacity(Capacity):
    """The conjugate ``A -> 1 - base(A^c)`` of another capacity."""

    def __init__(self, base: Capacity):
        super().__init__(base.n)
        self.base = base
        self.kind = f"dual-{base.kind}"

    def _value(self, mask: int) -> float:
        return 1.0 - self.base.eval(self.full_mask ^ mask)

    def table(self) -> np.ndarray:
        return 1.0 - self.base.table()[::-1]

    def dual(self) -> Capacity:
        return self.base


def choquet(mu: Capacity, x: UniformSample) -> ChoquetValue:
    """Exact Choquet integral by layers: ``v_1 + sum_j (v_j - v_{j-1}) mu(X >= v_j)``."""
    if x.n != mu.n:
        raise DomainError(f"sample has n={x.n} atoms but the capacity lives on n={mu.n}")
    values = x.as_array()
    levels = np.unique(values).tolist()
    terms = [levels[0]]
    trace: list[tuple[float, float]] = []
    for previous, level in zip(levels, levels[1:]):
        mask = sum(1 << int(i) for i in np.flatnonzero(values >= level))
        weight = mu.eval(mask)
        trace.append((level, weight))
        terms.append((level - previous) * weight)
    return ChoquetValue(value=math.fsum(terms), layer_trace=tuple(trace))


@dataclass(frozen=True, slots=True)
class SubmodularityCheck:
    """Result of an exhaustive submodularity check; falsy when a violation was found."""

    holds: bool
    violation: tuple[frozenset[int], frozenset[int]] | None = None

    def __bool__(self) -> bool:
        return self.holds


def is_submodular(mu: Capacity, tol: float | None = None) -> SubmodularityCheck:
    """Check ``mu(A u B) + mu(A n B) <= mu(A) + mu(B)`` for all subsets.

    Uses the equivalent local form on pairs (A + i, A + j); the reported violation is the
    first such pair ordered by (A, i, j).
    """
    tol = resolve_tol(tol)
    n = mu.n
    table = mu.table()
    masks = np.arange(1 << n)
    first: tuple[int, int, int] | None = None
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            base = masks[(masks & (bi | bj)) == 0]
            lhs = table[base | bi] + table[base | bj]
            rhs = table[base | bi | bj] + table[base]
            bad = np.flatnonzero(lhs < rhs - tol)
            if bad.size:
                candidate = (int(base[bad[0]]), i, j)
                if first is None or candidate < first:
                    first = candidate
    if first is None:
        return SubmodularityCheck(holds=True)
    a, i, j = first
    pair = (mask_members(a | 1 << i, n), mask_members(a | 1 << j, n))
    logger.debug(f"Submodularity fails on {sorted(pair[0])}, {sorted(pair[1])}")
    return SubmodularityCheck(holds=False, violation=pair)


def is_law_invariant(mu: Capacity, tol: float | None = None) -> bool:
    """True iff mu(A) depends on |A| only."""
    tol = resolve_tol(tol)
    table = mu.table()
    counts = _popcounts(mu.n)
    for k in range(mu.n + 1):
        layer = table[counts == k]
        if layer.max() - layer.min() > tol:
            return False
    return True


def is_monotone(mu: Capacity, tol: float | None = None) -> bool:
    """True iff A subset B implies mu(A) <= mu(B)."""
    tol = resolve_tol(tol)
    table = mu.table()
    masks = np.arange(1 << mu.n)
    for i in range(mu.n):
        bit = 1 << i
        base = masks[(masks & bit) == 0]
        if np.any(table[base | bit] < table[base] - tol):
            return False
    return True


def jp_recover_nu(mu: Capacity, alpha: float) -> ExplicitCapacity:
    """Polarisation ``nu = alpha/(2 alpha - 1) mu - (1 - alpha)/(2 alpha - 1) dual(mu)``."""
    if alpha == 0.5:
        raise DomainError("JP polarisation undefined for alpha = 1/2")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"JP alpha must lie in [0, 1], got {alpha}")
    table = mu.table()
    dual_table = 1.0 - table[::-1]
    scale = 2.0 * alpha - 1.0
    nu = alpha / scale * table - (1.0 - alpha) / scale * dual_table
    return ExplicitCapacity.from_table(mu.n, nu)


def neo_additive(q: Sequence[float], delta: float, alpha: float) -> ExplicitCapacity:
    """``(1 - delta) Q(A) + (1 - alpha) delta 1{A != empty} + alpha delta 1{A = space}``."""
    probs = np.asarray(q, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise DomainError("q must be a nonempty probability vector")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > get_settings().probability_sum_tolerance:
        raise DomainError(f"q must be a probability vector, got {probs.tolist()}")
    if not (0.0 <= delta <= 1.0 and 0.0 <= alpha <= 1.0):
        raise DomainError(f"delta and alpha must lie in [0, 1], got {delta}, {alpha}")
    n = probs.size
    _check_exhaustive(n)
    values = (1.0 - delta) * (_membership(n) @ probs) + (1.0 - alpha) * delta
    values[0] = 0.0
    values[-1] = 1.0
    return ExplicitCapacity.from_table(n, values)
