"""Numeric detectors for collapse to the mean.

Each detector checks a finite probe family and reports it in the verdict notes. A verdict is
one-directional evidence on the probes checked, never a proof over all random variables.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np

from lawcollapse.config import get_settings, resolve_collapse_tol
from lawcollapse.exceptions import DomainError, PreconditionError
from lawcollapse.models import CollapseVerdict, DiscreteLaw, Functional, UniformSample
from lawcollapse.services.capacities import (
    JPCapacity,
    choquet,
    is_law_invariant,
    jp_recover_nu,
)
from lawcollapse.services.laws import dilate
from lawcollapse.services.rearrange import hl_lower, hl_upper

logger = logging.getLogger(__name__)

# Equal-mean pairs every expectation-invariance probe starts from.
ANCHOR_LAWS = (
    ((-6.0, 0.5), (4.0, 0.5)),
    ((-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)),
    ((0.0, 0.5), (4.0, 0.5)),
)


def _finite_base(phi: Functional, x0: float) -> float:
    if not phi.law_invariant:
        raise PreconditionError(f"{phi.name} is not law invariant")
    base = phi(DiscreteLaw.point(x0))
    if not math.isfinite(base):
        raise PreconditionError(f"x0 = {x0} is not in the finite domain of {phi.name}")
    return base


def _difference(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b)


def translation_line_test(
    phi: Functional,
    x0: float,
    z: DiscreteLaw,
    a: float,
    t_grid: Sequence[float],
    tol: float | None = None,
) -> CollapseVerdict:
    """Check ``phi(x0 + tZ) = phi(x0) + a t`` on a grid of t."""
    tol = resolve_collapse_tol(tol)
    if not t_grid:
        raise DomainError("translation line test needs a nonempty t grid")
    base = _finite_base(phi, x0)

    gap, worst_t = 0.0, None
    for t in t_grid:
        value = phi(z.affine(t, x0))
        deviation = _difference(value, base + a * t)
        if deviation > gap:
            gap, worst_t = deviation, t
    logger.debug(f"Line test for {phi.name}: gap={gap} at t={worst_t}")
    return CollapseVerdict(
        collapsed=gap <= tol,
        gap=gap,
        witness=z,
        notes=f"t grid of {len(t_grid)} points; worst t={worst_t}",
    )


def meta_gap_certificate(
    phi: Functional,
    x0: float,
    z: DiscreteLaw,
    y: DiscreteLaw,
    k_max: int,
    conjugate_offset: float = 0.0,
    tol: float | None = None,
) -> CollapseVerdict:
    """Check ``hl_upper(z, y) - hl_lower(z, y) <= 2(phi(x0) + offset - x0 E[y])/k`` for k <= k_max.

    ``conjugate_offset`` is the caller's value of the conjugate of phi at y. The verdict gap is
    the slack left at k_max; collapse means that slack forces y to be constant. A nonconstant y
    that breaks the inequality is returned as witness together with the first failing k.
    """
    tol = resolve_collapse_tol(tol)
    if z.is_constant:
        raise PreconditionError("meta gap certificate needs a nonconstant Z")
    if k_max < 1:
        raise DomainError(f"k_max must be at least 1, got {k_max}")
    base = _finite_base(phi, x0)

    a = phi(z.affine(1.0, x0)) - base
    grid = [sign * k for k in range(1, k_max + 1) for sign in (-1, 1)]
    line = translation_line_test(phi, x0, z, a, grid, tol)
    if not line.collapsed:
        raise PreconditionError(f"{phi.name} is not linear along Z at x0 = {x0}")

    if y.is_constant:
        return CollapseVerdict(collapsed=True, gap=0.0, notes="y constant")

    spread = hl_upper(z, y) - hl_lower(z, y)
    numerator = 2.0 * (base + conjugate_offset - x0 * y.mean)
    violation_k = next(
        (k for k in range(1, k_max + 1) if spread > numerator / k + tol),
        None,
    )
    gap = max(numerator / k_max, 0.0)
    collapsed = gap <= tol
    notes = f"rearrangement spread {spread:.6g}; bound at k_max {numerator / k_max:.6g}"
    if violation_k is not None:
        notes += f"; inequality fails from k={violation_k}, so y must be constant"
    return CollapseVerdict(
        collapsed=collapsed,
        gap=gap,
        witness=y if violation_k is not None else None,
        notes=notes,
        violation_k=violation_k,
    )


def _random_partition(rng: np.random.Generator, n: int) -> list[list[int]]:
    labels = rng.integers(0, max(1, n // 2 + 1), size=n)
    blocks: dict[int, list[int]] = {}
    for i, label in enumerate(labels.tolist(), start=1):
        blocks.setdefault(label, []).append(i)
    return list(blocks.values())


def _equal_mean_pairs(trials: int, seed: int) -> list[tuple[DiscreteLaw, DiscreteLaw]]:
    pairs = []
    for atoms in ANCHOR_LAWS:
        law = DiscreteLaw.from_atoms(atoms)
        pairs.append((law, DiscreteLaw.point(law.mean)))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        sample = UniformSample.of(rng.integers(-5, 6, size=n).astype(float))
        law = sample.to_law()
        pairs.append((law, dilate(sample, _random_partition(rng, n)).to_law()))
        pairs.append((law, DiscreteLaw.point(law.mean)))
    return pairs


def expectation_invariance_probe(
    phi: Functional,
    trials: int,
    seed: int | None = None,
    tol: float | None = None,
) -> CollapseVerdict:
    """Check ``E[X] = E[Y] => phi(X) = phi(Y)`` on anchors and random mean-preserving spreads."""
    tol = resolve_collapse_tol(tol)
    if trials < 0:
        raise DomainError(f"trials must be nonnegative, got {trials}")
    seed = get_settings().seed if seed is None else seed

    gap, witness = 0.0, None
    pairs = _equal_mean_pairs(trials, seed)
    for x, y in pairs:
        deviation = _difference(phi(x), phi(y))
        if deviation > gap:
            gap, witness = deviation, x
    return CollapseVerdict(
        collapsed=gap <= tol,
        gap=gap,
        witness=witness,
        notes=f"{len(ANCHOR_LAWS)} anchor pairs and {2 * trials} random pairs (seed {seed})",
    )


def _indicator_candidates(n: int) -> list[UniformSample]:
    full = (1 << n) - 1
    return [
        UniformSample.of(float(mask >> i & 1) for i in range(n))
        for mask in range(1, full)
    ]


def choquet_symmetric_linearity(
    mu: JPCapacity,
    candidates: Sequence[UniformSample] | None = None,
    tol: float | None = None,
) -> CollapseVerdict:
    """Search for a nonconstant Z with ``E_mu[-Z] = -E_mu[Z]``.

    A witness forces the recovered nu to be the uniform probability; the lowest-index witness
    wins. ``candidates`` replaces the default family of nonconstant 0/1 indicators.
    """
    tol = resolve_collapse_tol(tol)
    if not isinstance(mu, JPCapacity):
        raise DomainError("symmetric linearity test needs a JP capacity")
    if not is_law_invariant(mu):
        raise PreconditionError("symmetric linearity test needs a law-invariant capacity")

    family = _indicator_candidates(mu.n) if candidates is None else list(candidates)
    family = [z for z in family if not z.is_constant]
    if not family:
        raise PreconditionError("symmetric linearity test needs a nonconstant Z")

    best = math.inf
    for index, z in enumerate(family):
        deviation = abs(choquet(mu, z.scale(-1.0)).value + choquet(mu, z).value)
        best = min(best, deviation)
        if deviation > tol:
            continue

        nu = jp_recover_nu(mu, mu.alpha)
        uniform = np.array([m.bit_count() for m in range(1 << mu.n)]) / mu.n
        nu_uniform = bool(np.all(np.abs(nu.table() - uniform) <= tol))
        notes = f"witness at candidate {index} of {len(family)}; recovered nu "
        if nu_uniform:
            notes += "is the uniform probability"
        else:
            logger.error(f"Witness found but recovered nu is not uniform for {mu!r}")
            notes += "is NOT uniform: inconsistency"
        return CollapseVerdict(collapsed=True, gap=deviation, witness=z, notes=notes)

    return CollapseVerdict(
        collapsed=False,
        gap=best,
        notes=f"no witness among {len(family)} candidates",
    )


def recession_direction_test(
    phi: Functional,
    x0: float,
    u: DiscreteLaw,
    t_grid: Sequence[float],
    tol: float | None = None,
) -> CollapseVerdict:
    """Check ``phi(x0 + tU) <= phi(x0)`` for t >= 0: U recedes in the sublevel set of phi(x0).

    ``collapsed`` reports that the check passed on the grid.
    """
    tol = resolve_collapse_tol(tol)
    if not t_grid or any(t < 0 for t in t_grid):
        raise DomainError("recession direction test needs a nonempty grid of t >= 0")
    base = _finite_base(phi, x0)

    excess, worst_t = 0.0, None
    for t in t_grid:
        value = phi(u.affine(t, x0))
        if value - base > excess:
            excess, worst_t = value - base, t
    return CollapseVerdict(
        collapsed=excess <= tol,
        gap=excess,
        witness=u,
        notes=f"t grid of {len(t_grid)} points; worst t={worst_t}",
    )
