"""Shared domain types: laws, quantile functions, samples, couplings and verdicts.

All types are immutable after construction and safe to share between threads.
"""

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from lawcollapse.config import get_settings
from lawcollapse.exceptions import DomainError

# Stored probabilities sum to 1 within this after renormalisation.
PROBABILITY_SUM_SLACK = 1e-12


@dataclass(frozen=True, slots=True)
class DiscreteLaw:
    """A finitely supported probability law on the real line.

    ``values`` is strictly increasing and ``probs`` holds the matching strictly positive
    probabilities. Build instances with :meth:`from_atoms`, which sorts, merges duplicate
    values and renormalises.
    """

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values or len(self.values) != len(self.probs):
            raise DomainError("a law needs at least one atom and one probability per value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise DomainError(f"law values must be strictly increasing, got {self.values}")
        if any(p <= 0 for p in self.probs):
            raise DomainError(f"law probabilities must be positive, got {self.probs}")
        if abs(math.fsum(self.probs) - 1.0) > PROBABILITY_SUM_SLACK:
            raise DomainError(f"law probabilities must sum to 1, got {math.fsum(self.probs)}")

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "DiscreteLaw":
        """Build a law from (value, probability) pairs in any order."""
        settings = get_settings()
        pairs = [(float(v), float(p)) for v, p in atoms]
        if not pairs:
            raise DomainError("a law needs at least one atom")
        for v, p in pairs:
            if not math.isfinite(v):
                raise DomainError(f"atom value must be finite, got {v}")
            if not p >= settings.min_atom_probability:
                raise DomainError(
                    f"atom probability {p} at value {v} is below "
                    f"{settings.min_atom_probability}"
                )
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > settings.probability_sum_tolerance:
            raise DomainError(f"atom probabilities sum to {total}, expected 1")

        merged: dict[float, list[float]] = {}
        for v, p in pairs:
            merged.setdefault(v + 0.0, []).append(p)
        values = sorted(merged)
        probs = [math.fsum(merged[v]) / total for v in values]
        return cls(tuple(values), tuple(probs))

    @classmethod
    def point(cls, c: float) -> "DiscreteLaw":
        """The Dirac law at ``c``."""
        return cls((float(c) + 0.0,), (1.0,))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.probs))

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    @property
    def min_support(self) -> float:
        return self.values[0]

    @property
    def max_support(self) -> float:
        return self.values[-1]

    @property
    def maxabs(self) -> float:
        """The sup norm of any random variable with this law."""
        return max(abs(self.values[0]), abs(self.values[-1]))

    @property
    def is_constant(self) -> bool:
        return len(self.values) == 1

    def affine(self, scale: float, shift: float = 0.0) -> "DiscreteLaw":
        """Law of ``scale * X + shift``."""
        return DiscreteLaw.from_atoms((scale * v + shift, p) for v, p in self.atoms)

    def negate(self) -> "DiscreteLaw":
        """Law of ``-X``."""
        return self.affine(-1.0)

    def on_grid(self, n: int, tol: float = 1e-9) -> np.ndarray:
        """Sorted n-vector realising this law on the n-point equiprobable space.

        Raises DomainError when some probability is not a multiple of 1/n.
        """
        counts = np.asarray(self.probs) * n
        rounded = np.rint(counts)
        if np.any(np.abs(counts - rounded) > tol * n) or int(rounded.sum()) != n:
            raise DomainError(
                f"law with probabilities {self.probs} is not representable on {n} atoms"
            )
        return np.repeat(np.asarray(self.values, dtype=float), rounded.astype(int))

    def granularity(self, limit: int = 64) -> int | None:
        """Smallest n <= limit such that the law lives on the n-point space, if any."""
        for n in range(1, limit + 1):
            try:
                self.on_grid(n)
            except DomainError:
                continue
            return n
        return None


@dataclass(frozen=True, slots=True)
class QuantileFn:
    """Left-continuous step quantile function on (0, 1).

    ``q(s) = levels[i]`` for ``s`` in ``(breakpoints[i], breakpoints[i + 1]]``.
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.levels) + 1 or not self.levels:
            raise DomainError("a quantile function needs k levels and k + 1 breakpoints")
        if self.breakpoints[0] != 0.0 or self.breakpoints[-1] != 1.0:
            raise DomainError("quantile breakpoints must start at 0 and end at 1")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("quantile breakpoints must be strictly increasing")
        if any(b < a for a, b in zip(self.levels, self.levels[1:])):
            raise DomainError("quantile levels must be nondecreasing")

    @classmethod
    def from_law(cls, law: DiscreteLaw) -> "QuantileFn":
        cumulative = np.cumsum(np.asarray(law.probs, dtype=float))
        breakpoints = [0.0, *cumulative[:-1].tolist(), 1.0]
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise DomainError("atom probabilities too small to resolve on (0, 1)")
        return cls(tuple(breakpoints), law.values)

    def to_law(self) -> DiscreteLaw:
        return DiscreteLaw.from_atoms(
            (level, b - a)
            for level, a, b in zip(self.levels, self.breakpoints, self.breakpoints[1:])
        )

    def __call__(self, s: float) -> float:
        if not 0.0 < s < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {s}")
        index = int(np.searchsorted(self.breakpoints, s, side="left"))
        return self.levels[index - 1]


@dataclass(frozen=True, slots=True)
class UniformSample:
    """An explicit random variable on the n-point equiprobable space (atom i has mass 1/n)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise DomainError("a sample needs at least one value")

    @classmethod
    def of(cls, values: Iterable[float]) -> "UniformSample":
        return cls(tuple(float(v) + 0.0 for v in values))

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def to_law(self) -> DiscreteLaw:
        n = self.n
        return DiscreteLaw.from_atoms((v, 1.0 / n) for v in self.values)

    def shift(self, m: float) -> "UniformSample":
        return UniformSample.of(self.as_array() + m)

    def scale(self, t: float) -> "UniformSample":
        return UniformSample.of(self.as_array() * t)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / self.n

    @property
    def is_constant(self) -> bool:
        return min(self.values) == max(self.values)


class CouplingKind(StrEnum):
    COMONOTONE = "comonotone"
    ANTIMONOTONE = "antimonotone"


@dataclass(frozen=True, slots=True)
class CouplingResult:
    """A rearrangement of X on Y's space attaining the matching rearrangement bound."""

    x_rearranged: UniformSample
    inner_product: float
    kind: CouplingKind


@dataclass(frozen=True, slots=True)
class ChoquetValue:
    value: float
    # (threshold, capacity of {X >= threshold}) per layer above the minimum
    layer_trace: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True, slots=True)
class CollapseVerdict:
    """Outcome of a collapse detector."""

    collapsed: bool
    gap: float
    witness: DiscreteLaw | UniformSample | None = None
    notes: str = ""
    violation_k: int | None = None

    def __post_init__(self) -> None:
        if not self.gap >= 0:
            raise DomainError(f"verdict gap must be nonnegative, got {self.gap}")


@dataclass(frozen=True)
class Functional:
    """A functional on laws, possibly +inf, with declared capability flags.

    ``weakly_increasing`` and ``increasing`` are caller-declared; they are spot-checked by
    tests, never proved.
    """

    name: str
    evaluate: Callable[[DiscreteLaw], float]
    law_invariant: bool = True
    weakly_increasing: bool = False
    increasing: bool = False
    evaluate_sample: Callable[[UniformSample], float] | None = None

    def __call__(self, x: DiscreteLaw | UniformSample) -> float:
        if isinstance(x, UniformSample):
            if self.evaluate_sample is not None:
                return self.evaluate_sample(x)
            x = x.to_law()
        return self.evaluate(x)
