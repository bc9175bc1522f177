"""Expected Shortfall, consistent risk measures and law-invariant convex sets.

Consistent risk measures are represented by a finite family of acceptance generators; the
acceptance sets met in theory are infinite, so every instance here is a finite truncation.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from lawcollapse.config import resolve_tol
from lawcollapse.exceptions import DomainError
from lawcollapse.models import DiscreteLaw
from lawcollapse.services.laws import merged_breakpoints, quantile_function, tail_integral
from lawcollapse.services.rearrange import hl_upper

logger = logging.getLogger(__name__)

INF = math.inf


def es(x: DiscreteLaw, p: float) -> float:
    """Expected Shortfall: tail average of the quantile function above level p."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"ES level must lie in [0, 1], got {p}")
    if p == 1.0:
        return x.max_support
    if p == 0.0:
        return x.mean
    return tail_integral(quantile_function(x), p) / (1.0 - p)


def adjusted_es_sup(x: DiscreteLaw, y: DiscreteLaw) -> float:
    """Exact ``sup_{p in [0, 1]} ES_p(x) - ES_p(y)``.

    On each piece between merged breakpoints the difference is (a p + b)/(1 - p), monotone in
    p, so the supremum sits on a breakpoint in [0, 1) or at the p = 1 limit.
    """
    qx, qy = quantile_function(x), quantile_function(y)
    candidates = [x.max_support - y.max_support]
    for p in merged_breakpoints(qx, qy)[:-1].tolist():
        if p == 0.0:
            candidates.append(x.mean - y.mean)
        else:
            candidates.append((tail_integral(qx, p) - tail_integral(qy, p)) / (1.0 - p))
    return max(candidates)


@dataclass(frozen=True)
class ConsistentRiskMeasure:
    """``phi(X) = min_Y sup_p ES_p(X) - ES_p(Y)`` over a finite set of acceptance generators."""

    generators: tuple[DiscreteLaw, ...]

    def __post_init__(self) -> None:
        if not self.generators:
            raise DomainError("a consistent risk measure needs at least one generator")

    @classmethod
    def of(cls, generators: Iterable[DiscreteLaw]) -> "ConsistentRiskMeasure":
        return cls(tuple(generators))

    @classmethod
    def worst_case(cls) -> "ConsistentRiskMeasure":
        """Generators {delta_0}: the measure is the maximum of the support."""
        return cls((DiscreteLaw.point(0.0),))

    @classmethod
    def centered(cls, laws: Iterable[DiscreteLaw]) -> "ConsistentRiskMeasure":
        """Generators shifted to mean zero; the result is normalised and star-shaped."""
        return cls(tuple(law.affine(1.0, -law.mean) for law in laws))


def crm_eval(phi: ConsistentRiskMeasure, x: DiscreteLaw) -> float:
    return min(adjusted_es_sup(x, g) for g in phi.generators)


def rho_example(x: DiscreteLaw) -> float:
    """``rho(X) = E[X]/2 + int_{1/2}^1 q_X(s) ds``."""
    return 0.5 * x.mean + tail_integral(quantile_function(x), 0.5)


def phi_example(x: DiscreteLaw) -> float:
    """``rho(X)`` where negative, else ``max(E[X], 0)/2``; quasiconvex, not convex."""
    rho = rho_example(x)
    if rho < 0:
        return rho
    return 0.5 * max(x.mean, 0.0)


def es_deviation_bound(x: DiscreteLaw, q: float) -> float:
    """Bound ``2q/(1 - q) ||X||`` on ``|ES_p(X) - E[X]|`` valid for all p <= q."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"deviation bound needs q in [0, 1), got {q}")
    return 2.0 * q / (1.0 - q) * x.maxabs


def is_star_shaped_on(
    phi: ConsistentRiskMeasure,
    laws: Iterable[DiscreteLaw],
    lambdas: Sequence[float],
    tol: float | None = None,
) -> bool:
    """Spot check ``phi(lambda X) <= lambda phi(X)`` for lambda in [0, 1]."""
    tol = resolve_tol(tol)
    if any(not 0.0 <= lam <= 1.0 for lam in lambdas):
        raise DomainError("star-shapedness is checked for lambda in [0, 1]")
    for x in laws:
        value = crm_eval(phi, x)
        for lam in lambdas:
            if crm_eval(phi, x.affine(lam)) > lam * value + tol:
                logger.debug(f"Star-shapedness fails at lambda={lam}")
                return False
    return True


@dataclass(frozen=True)
class LawInvariantSet:
    """Closed convex hull of all rearrangements of the generators plus the cone of the rays.

    ``increasing`` adds every nonnegative constant as a further recession direction.
    """

    generators: tuple[DiscreteLaw, ...]
    rays: tuple[DiscreteLaw, ...] = ()
    increasing: bool = False

    def __post_init__(self) -> None:
        if not self.generators:
            raise DomainError("a law-invariant set needs at least one generator")


def support_functional(c: LawInvariantSet, y: DiscreteLaw, tol: float | None = None) -> float:
    """``sigma_C(y) = sup_{X in C} E[XY]``, possibly +inf."""
    tol = resolve_tol(tol)
    for ray in c.rays:
        if hl_upper(ray, y) > tol:
            return INF
    if c.increasing and y.mean > tol:
        return INF
    return max(hl_upper(g, y) for g in c.generators)


def _probe_levels(c: LawInvariantSet, x: DiscreteLaw) -> list[float]:
    quantiles = [quantile_function(law) for law in (x, *c.generators, *c.rays)]
    return merged_breakpoints(*quantiles)[1:-1].tolist()


def is_member(c: LawInvariantSet, x: DiscreteLaw, tol: float | None = None) -> bool:
    """Membership through the dual form ``E[X'Y] <= sigma_C(Y)`` on a probe family.

    Probes are the constants +1 and -1 and the 0/1 laws with upper mass s (and their negatives)
    for every merged breakpoint s. For one generator without rays this is exactly convex-order
    domination; otherwise it is an outer approximation.
    """
    tol = resolve_tol(tol)
    probes = [DiscreteLaw.point(1.0), DiscreteLaw.point(-1.0)]
    for s in _probe_levels(c, x):
        upper = DiscreteLaw.from_atoms([(0.0, 1.0 - s), (1.0, s)])
        probes.extend([upper, upper.negate()])
    for y in probes:
        if hl_upper(x, y) > support_functional(c, y, tol) + tol:
            return False
    return True


@dataclass(frozen=True, slots=True)
class RecessionVerdict:
    """Outcome of the recession-cone collapse check for a law-invariant set."""

    collapsed: bool
    bounds: tuple[float, float]
    membership_consistent: bool | None = None
    probes_checked: int = 0


def _collapse_probes(c: LawInvariantSet, lo: float, hi: float) -> list[DiscreteLaw]:
    probes = [*c.generators, *c.rays]
    probes += [g.affine(1.0, shift) for g in c.generators for shift in (-1.0, 1.0)]
    probes += [
        DiscreteLaw.point(0.0),
        DiscreteLaw.from_atoms([(-1.0, 0.5), (1.0, 0.5)]),
        DiscreteLaw.from_atoms([(-6.0, 0.5), (4.0, 0.5)]),
    ]
    for bound in (lo, hi):
        if math.isfinite(bound):
            probes += [DiscreteLaw.point(bound + shift) for shift in (-1.0, 0.0, 1.0)]
    return probes


def recession_collapse_check(c: LawInvariantSet, tol: float | None = None) -> RecessionVerdict:
    """Detect a centered nonconstant recession direction, which forces mean-only membership.

    When collapsed, membership of every probe law must agree with its mean lying in
    ``[-sigma_C(-1), sigma_C(1)]``.
    """
    tol = resolve_tol(tol)
    lo = -support_functional(c, DiscreteLaw.point(-1.0), tol)
    hi = support_functional(c, DiscreteLaw.point(1.0), tol)
    collapsed = any(not r.is_constant and abs(r.mean) <= tol for r in c.rays)
    if not collapsed:
        return RecessionVerdict(collapsed=False, bounds=(lo, hi))

    probes = _collapse_probes(c, lo, hi)
    consistent = True
    for probe in probes:
        by_mean = lo - tol <= probe.mean <= hi + tol
        if is_member(c, probe, tol) != by_mean:
            logger.warning(f"Membership of a probe with mean {probe.mean} disagrees with bounds")
            consistent = False
    return RecessionVerdict(
        collapsed=True,
        bounds=(lo, hi),
        membership_consistent=consistent,
        probes_checked=len(probes),
    )
