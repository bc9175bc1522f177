"""Budget-constrained maximisation of law-invariant functionals over law-invariant domains.

Problems read: maximise phi(X) over X in the domain subject to ``E[D X] = p``. Risk measures
enter as objectives only through an explicit negation (see ``payoff_functional``).
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import permutations, product
from typing import Literal

import numpy as np

from lawcollapse.config import get_settings, resolve_tol
from lawcollapse.exceptions import DomainError, InfeasibleError, PreconditionError, SizeLimitError
from lawcollapse.models import CouplingKind, DiscreteLaw, Functional, UniformSample
from lawcollapse.services.functionals import es_functional, mean_functional
from lawcollapse.services.laws import convex_order_dominates, ssd_dominated
from lawcollapse.services.rearrange import couple, is_antimonotone

logger = logging.getLogger(__name__)

# Grid candidates beyond this count are skipped by the exhaustive search.
MAX_GRID_CANDIDATES = 20000


def _as_law(x: DiscreteLaw | UniformSample) -> DiscreteLaw:
    return x.to_law() if isinstance(x, UniformSample) else x


@dataclass(frozen=True)
class RearrangementClosure:
    """All rearrangements of the generators, optionally shifted by constants.

    ``allow_shift`` admits every real shift; ``increasing`` admits nonnegative shifts.
    """

    generators: tuple[DiscreteLaw, ...]
    allow_shift: bool = False
    increasing: bool = False
    kind: Literal["rearrangement"] = "rearrangement"

    def __post_init__(self) -> None:
        if not self.generators:
            raise DomainError("a rearrangement domain needs at least one generator")

    @property
    def is_increasing(self) -> bool:
        return self.increasing or self.allow_shift

    def contains(self, x: DiscreteLaw | UniformSample, tol: float | None = None) -> bool:
        tol = resolve_tol(tol)
        law = _as_law(x)
        for g in self.generators:
            if g.size != law.size:
                continue
            if max(abs(a - b) for a, b in zip(g.probs, law.probs)) > tol:
                continue
            diffs = np.asarray(law.values) - np.asarray(g.values)
            if diffs.max() - diffs.min() > tol:
                continue
            shift = float(diffs.mean())
            if abs(shift) <= tol or self.allow_shift or (self.increasing and shift >= -tol):
                return True
        return False


@dataclass(frozen=True)
class Interval:
    """``{X : a <= X <= b}``."""

    a: float
    b: float
    kind: Literal["interval"] = "interval"

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise DomainError(f"interval domain needs a < b, got [{self.a}, {self.b}]")

    @property
    def is_increasing(self) -> bool:
        return False

    def contains(self, x: DiscreteLaw | UniformSample, tol: float | None = None) -> bool:
        tol = resolve_tol(tol)
        law = _as_law(x)
        return law.min_support >= self.a - tol and law.max_support <= self.b + tol


@dataclass(frozen=True)
class MeanHalfSpace:
    """``{X : E[X] <= bound}``."""

    bound: float
    kind: Literal["mean-half-space"] = "mean-half-space"

    @property
    def is_increasing(self) -> bool:
        return False

    def contains(self, x: DiscreteLaw | UniformSample, tol: float | None = None) -> bool:
        return _as_law(x).mean <= self.bound + resolve_tol(tol)


@dataclass(frozen=True)
class PreferenceBounded:
    """``{X : X <= top}`` in convex or increasing-convex order."""

    top: DiscreteLaw
    order: Literal["convex", "increasing-convex"] = "convex"
    kind: Literal["preference-bounded"] = "preference-bounded"

    @property
    def is_increasing(self) -> bool:
        return False

    def contains(self, x: DiscreteLaw | UniformSample, tol: float | None = None) -> bool:
        law = _as_law(x)
        if self.order == "convex":
            return convex_order_dominates(self.top, law, tol)
        return ssd_dominated(self.top, law, tol)


DomainSpec = RearrangementClosure | Interval | MeanHalfSpace | PreferenceBounded


def price(d: UniformSample, x: UniformSample) -> float:
    """``E[D X]`` on the common n-point space."""
    if x.n != d.n:
        raise DomainError(f"sample has n={x.n} atoms, pricing density has n={d.n}")
    return math.fsum((x.as_array() * d.as_array()).tolist()) / d.n


@dataclass(frozen=True)
class FeasibleQuadruple:
    """Objective, law-invariant domain, pricing density and budget level."""

    phi: Functional
    domain: DomainSpec
    d: UniformSample
    p: float

    def __post_init__(self) -> None:
        if not self.d.mean > 0:
            raise DomainError(f"pricing density must have positive mean, got {self.d.mean}")
        if not self.phi.law_invariant:
            raise DomainError(f"objective {self.phi.name} must be law invariant")

    def price(self, x: UniformSample) -> float:
        return price(self.d, x)

    def budget_shift(self, x: UniformSample) -> float:
        """The constant m with ``E[D (x + m)] = p``."""
        return (self.p - self.price(x)) / self.d.mean


@dataclass(frozen=True)
class SolveReport:
    solution: UniformSample
    value: float
    antimonotone_with_d: bool
    improvement_trace: tuple[tuple[UniformSample, float], ...] = ()


def _check_admissible(q: FeasibleQuadruple, x: UniformSample, tol: float) -> None:
    payment = q.price(x)
    if abs(payment - q.p) > tol:
        raise PreconditionError(f"x violates the budget: E[DX] = {payment}, expected {q.p}")
    if not q.domain.contains(x, tol):
        raise PreconditionError("x is not in the domain")


def improvement_shift(q: FeasibleQuadruple, x: UniformSample, tol: float | None = None) -> float:
    """``m = (E[DX] - E[DX'])/E[D]`` for X' the antimonotone rearrangement of x against d."""
    tol = resolve_tol(tol)
    _check_admissible(q, x, tol)
    coupling = couple(x.to_law(), q.d, CouplingKind.ANTIMONOTONE)
    return (q.price(x) - coupling.inner_product) / q.d.mean


def antimonotone_improve(
    q: FeasibleQuadruple, x: UniformSample, tol: float | None = None
) -> UniformSample:
    """Replace x by its antimonotone rearrangement against d, shifted back onto the budget."""
    tol = resolve_tol(tol)
    if not q.domain.is_increasing:
        raise PreconditionError("antimonotone improvement requires an increasing domain")
    if not q.phi.weakly_increasing:
        raise PreconditionError(f"antimonotone improvement requires {q.phi.name} weakly increasing")
    m = improvement_shift(q, x, tol)
    rearranged = couple(x.to_law(), q.d, CouplingKind.ANTIMONOTONE).x_rearranged
    logger.debug(f"Antimonotone improvement shift m={m}")
    return rearranged.shift(m)


def solve(q: FeasibleQuadruple, tol: float | None = None) -> SolveReport:
    """Best antimonotone-with-d candidate over the generators of a rearrangement domain."""
    tol = resolve_tol(tol)
    domain = q.domain
    if not isinstance(domain, RearrangementClosure) or not domain.is_increasing:
        raise PreconditionError("solve needs an increasing rearrangement domain")
    if not q.phi.weakly_increasing:
        raise PreconditionError(f"solve requires {q.phi.name} weakly increasing")

    trace: list[tuple[UniformSample, float]] = []
    best: tuple[UniformSample, float] | None = None
    for index, g in enumerate(domain.generators):
        coupling = couple(g, q.d, CouplingKind.ANTIMONOTONE)
        m = (q.p - coupling.inner_product) / q.d.mean
        if not domain.allow_shift and m < -tol:
            logger.debug(f"Generator {index} needs shift {m} < 0; skipped")
            continue
        if not domain.allow_shift:
            m = max(m, 0.0)
        candidate = coupling.x_rearranged.shift(m)
        value = q.phi(candidate)
        trace.append((candidate, value))
        logger.debug(f"Generator {index}: shift {m}, value {value}")
        if best is None or value > best[1]:
            best = (candidate, value)

    if best is None:
        raise InfeasibleError("no generator admits a budget-feasible shift")
    solution, value = best
    if not math.isfinite(value):
        raise InfeasibleError(f"optimal value is not finite: {value}")
    logger.info(f"Solved over {len(domain.generators)} generators: value {value}")
    return SolveReport(
        solution=solution,
        value=value,
        antimonotone_with_d=is_antimonotone(solution, q.d),
        improvement_trace=tuple(trace),
    )


class Scenario(StrEnum):
    MEAN_HALF_SPACE = "mean-half-space"
    SHIFTED_ORBIT = "shifted-orbit"
    INTERVAL = "interval"
    PREFERENCE_BOUNDED = "preference-bounded"


@dataclass(frozen=True)
class ExpectedOutcome:
    no_antimonotone_optimum: bool
    non_antimonotone_optimum_exists: bool
    optimal_solution: UniformSample
    optimal_value: float
    description: str = ""


def _default_threshold(d: UniformSample) -> float:
    values = d.as_array()
    for k in np.unique(values)[:-1].tolist():
        if math.fsum(values[values <= k].tolist()) != 0.0:
            return k
    raise DomainError("no threshold k with P(D <= k) in (0, 1) and E[D 1{D <= k}] != 0")


def _orbit_functional(domain: RearrangementClosure) -> Functional:
    def evaluate(law: DiscreteLaw) -> float:
        return -abs(law.mean) if domain.contains(law) else math.inf

    return Functional(name="-|mean| on orbit", evaluate=evaluate)


def counterexample_scenario(
    name: Scenario | str,
    d: UniformSample,
    *,
    k: float | None = None,
    a: float = 0.0,
    b: float = 1.0,
    top: DiscreteLaw | None = None,
) -> tuple[FeasibleQuadruple, ExpectedOutcome]:
    """Build one of the four problems where antimonotone optima fail to exist or to be unique."""
    name = Scenario(name)
    if d.is_constant:
        raise DomainError("collapse: pricing rule is the expectation")
    if not d.mean > 0:
        raise DomainError(f"pricing density must have positive mean, got {d.mean}")
    centered = d.shift(-d.mean)

    if name is Scenario.MEAN_HALF_SPACE:
        z = centered
        q = FeasibleQuadruple(mean_functional(), MeanHalfSpace(0.0), d, price(d, z))
        return q, ExpectedOutcome(
            no_antimonotone_optimum=True,
            non_antimonotone_optimum_exists=True,
            optimal_solution=z,
            optimal_value=0.0,
            description="E[X] <= 0 with phi = mean; an antimonotone optimum breaks the budget",
        )

    if name is Scenario.SHIFTED_ORBIT:
        z = centered
        domain = RearrangementClosure((z.to_law(),), allow_shift=True)
        q = FeasibleQuadruple(_orbit_functional(domain), domain, d, price(d, z))
        return q, ExpectedOutcome(
            no_antimonotone_optimum=True,
            non_antimonotone_optimum_exists=True,
            optimal_solution=z,
            optimal_value=0.0,
            description="shifted rearrangements of Z with phi = -|mean|; increasing domain",
        )

    if name is Scenario.INTERVAL:
        # On finite spaces an antimonotone optimum can coexist with Z (d = (2, 1, 1) admits
        # (0, 1, 1)), so only the non-antimonotone optimum is asserted.
        values = d.as_array()
        k = _default_threshold(d) if k is None else k
        level = float(np.mean(values <= k))
        if not 0.0 < level < 1.0 or math.fsum(values[values <= k].tolist()) == 0.0:
            raise DomainError(
                f"threshold k={k} needs P(D <= k) in (0, 1) and E[D 1{{D <= k}}] != 0"
            )
        z = UniformSample.of(np.where(values <= k, a, b))
        q = FeasibleQuadruple(es_functional(level), Interval(a, b), d, price(d, z))
        return q, ExpectedOutcome(
            no_antimonotone_optimum=False,
            non_antimonotone_optimum_exists=True,
            optimal_solution=z,
            optimal_value=float(b),
            description=f"[{a}, {b}] with phi = ES at P(D <= {k}) = {level:g}",
        )

    top = centered.to_law() if top is None else top
    if top.is_constant:
        raise DomainError("preference-bounded scenario needs a nonconstant top element")
    z = couple(top, d, CouplingKind.COMONOTONE).x_rearranged
    q = FeasibleQuadruple(mean_functional(), PreferenceBounded(top), d, price(d, z))
    return q, ExpectedOutcome(
        no_antimonotone_optimum=True,
        non_antimonotone_optimum_exists=True,
        optimal_solution=z,
        optimal_value=top.mean,
        description="X below B in convex order with phi = mean; Z ~ B comonotone with D",
    )


@dataclass(frozen=True)
class ExhaustiveResult:
    best_value: float
    optima: tuple[UniformSample, ...]
    candidates_checked: int


def _candidates(
    bases: Iterable[UniformSample], grid: Sequence[float], n: int
) -> Iterable[tuple[float, ...]]:
    seen: set[tuple[float, ...]] = set()
    for base in bases:
        for perm in permutations(base.values):
            if perm not in seen:
                seen.add(perm)
                yield perm
    if grid and len(grid) ** n <= MAX_GRID_CANDIDATES:
        for point in product(grid, repeat=n):
            if point not in seen:
                seen.add(point)
                yield point


def exhaustive_optimum(
    q: FeasibleQuadruple,
    bases: Iterable[UniformSample],
    grid: Sequence[float] = (),
    tol: float | None = None,
) -> ExhaustiveResult:
    """Best admissible value over rearrangements of the bases and a value grid.

    Each candidate is tried as is (when it meets the budget) and shifted onto the budget.
    """
    tol = resolve_tol(tol)
    n = q.d.n
    limit = get_settings().search_max_atoms
    if n > limit:
        raise SizeLimitError(f"exhaustive optimum refuses n={n} > {limit}")

    scored: list[tuple[UniformSample, float]] = []
    checked = 0
    for values in _candidates(bases, grid, n):
        raw = UniformSample.of(values)
        tries = [raw.shift(q.budget_shift(raw))]
        if abs(q.price(raw) - q.p) <= tol:
            tries.insert(0, raw)
        for x in tries:
            checked += 1
            if not q.domain.contains(x, tol):
                continue
            value = q.phi(x)
            if math.isfinite(value):
                scored.append((x, value))

    if not scored:
        raise InfeasibleError("no admissible candidate in the exhaustive search")
    best = max(value for _, value in scored)
    optima: dict[tuple[float, ...], UniformSample] = {}
    for x, value in scored:
        if value >= best - tol:
            optima.setdefault(x.values, x)
    return ExhaustiveResult(
        best_value=best, optima=tuple(optima.values()), candidates_checked=checked
    )


@dataclass(frozen=True)
class ScenarioCheck:
    holds: bool
    best_value: float
    antimonotone_optimum_found: bool
    non_antimonotone_optimum_found: bool
    candidates_checked: int
    notes: list[str] = field(default_factory=list)


def _default_grid(q: FeasibleQuadruple, expected: ExpectedOutcome) -> list[float]:
    if isinstance(q.domain, Interval):
        return [q.domain.a, 0.5 * (q.domain.a + q.domain.b), q.domain.b]
    return sorted({0.0, *expected.optimal_solution.values})


def check_scenario(
    q: FeasibleQuadruple,
    expected: ExpectedOutcome,
    bases: Iterable[UniformSample] | None = None,
    grid: Sequence[float] | None = None,
    tol: float | None = None,
) -> ScenarioCheck:
    """Verify an ExpectedOutcome by exhaustive search over rearrangements and a shift grid."""
    tol = resolve_tol(tol)
    bases = [expected.optimal_solution, *(bases or [])]
    grid = _default_grid(q, expected) if grid is None else grid
    result = exhaustive_optimum(q, bases, grid, tol)

    anti = [x for x in result.optima if is_antimonotone(x, q.d, tol)]
    non_anti = [x for x in result.optima if not is_antimonotone(x, q.d, tol)]
    notes = []
    holds = True
    if abs(result.best_value - expected.optimal_value) > tol:
        holds = False
        notes.append(f"best value {result.best_value} differs from {expected.optimal_value}")
    if expected.no_antimonotone_optimum and anti:
        holds = False
        notes.append(f"found {len(anti)} antimonotone optima")
    if expected.non_antimonotone_optimum_exists and not non_anti:
        holds = False
        notes.append("no non-antimonotone optimum found")
    logger.info(f"Scenario check over {result.candidates_checked} candidates: holds={holds}")
    return ScenarioCheck(
        holds=holds,
        best_value=result.best_value,
        antimonotone_optimum_found=bool(anti),
        non_antimonotone_optimum_found=bool(non_anti),
        candidates_checked=result.candidates_checked,
        notes=notes,
    )
