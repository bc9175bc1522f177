"""Sharp rearrangement bounds, comonotone/antimonotone couplings and a brute-force oracle."""

import logging
import math
from itertools import permutations

import numpy as np

from lawcollapse.config import get_settings, resolve_tol
from lawcollapse.exceptions import DomainError, SizeLimitError
from lawcollapse.models import CouplingKind, CouplingResult, DiscreteLaw, UniformSample
from lawcollapse.services.laws import product_integral, quantile_function

logger = logging.getLogger(__name__)


def hl_upper(x: DiscreteLaw, y: DiscreteLaw) -> float:
    """``max E[X'Y]`` over all X' with the law of x: ``int_0^1 q_x(s) q_y(s) ds``."""
    return product_integral(quantile_function(x), quantile_function(y))


def hl_lower(x: DiscreteLaw, y: DiscreteLaw) -> float:
    """``min E[X'Y]`` over all X' with the law of x: ``int_0^1 q_x(1 - s) q_y(s) ds``."""
    return product_integral(quantile_function(x), quantile_function(y), reflect_first=True)


def couple(x: DiscreteLaw, y: UniformSample, kind: CouplingKind | str) -> CouplingResult:
    """Arrange the law of x on y's space so that the pair is comonotone or antimonotone.

    Ties in y are broken by atom index (stable sort).
    """
    try:
        kind = CouplingKind(kind)
    except ValueError as e:
        raise DomainError(f"unknown coupling kind {kind!r}") from e
    n = y.n
    ordered = x.on_grid(n)
    order = np.argsort(y.as_array(), kind="stable")
    arranged = np.empty(n)
    if kind is CouplingKind.COMONOTONE:
        arranged[order] = ordered
    else:
        arranged[order] = ordered[::-1]

    sample = UniformSample.of(arranged)
    inner = math.fsum((arranged * y.as_array()).tolist()) / n
    return CouplingResult(x_rearranged=sample, inner_product=inner, kind=kind)


def strict_gap(x: DiscreteLaw, y: DiscreteLaw) -> tuple[float, float]:
    """``(E[X]E[Y] - hl_lower, hl_upper - E[X]E[Y])``; (0, 0) when either law is constant."""
    if x.is_constant or y.is_constant:
        return 0.0, 0.0
    product = x.mean * y.mean
    return product - hl_lower(x, y), hl_upper(x, y) - product


def oracle_extrema(x: UniformSample, y: UniformSample) -> tuple[float, float]:
    """Exhaustive (min, max) of ``(1/n) sum x[pi(i)] y[i]`` over all permutations pi."""
    if x.n != y.n:
        raise DomainError(f"oracle needs samples on one space, got n={x.n} and n={y.n}")
    limit = get_settings().oracle_max_atoms
    if x.n > limit:
        raise SizeLimitError(f"permutation oracle refuses n={x.n} > {limit}")

    perms = np.array(list(permutations(range(x.n))))
    values = x.as_array()[perms] @ y.as_array() / x.n
    logger.debug(f"Oracle enumerated {len(perms)} permutations")
    return float(values.min()), float(values.max())


def _pairwise_signs(x: UniformSample, y: UniformSample) -> np.ndarray:
    if x.n != y.n:
        raise DomainError(f"samples live on different spaces: n={x.n} and n={y.n}")
    a, b = x.as_array(), y.as_array()
    return np.subtract.outer(a, a) * np.subtract.outer(b, b)


def is_comonotone(x: UniformSample, y: UniformSample, tol: float | None = None) -> bool:
    """True iff ``(x_i - x_j)(y_i - y_j) >= 0`` for all atom pairs."""
    return bool(np.all(_pairwise_signs(x, y) >= -resolve_tol(tol)))


def is_antimonotone(x: UniformSample, y: UniformSample, tol: float | None = None) -> bool:
    """True iff ``(x_i - x_j)(y_i - y_j) <= 0`` for all atom pairs."""
    return bool(np.all(_pairwise_signs(x, y) <= resolve_tol(tol)))
