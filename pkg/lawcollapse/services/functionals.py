"""Factories for the functionals used by the collapse detectors and the optimiser."""

from lawcollapse.exceptions import PreconditionError
from lawcollapse.models import DiscreteLaw, Functional, UniformSample
from lawcollapse.services.capacities import Capacity, choquet, is_law_invariant
from lawcollapse.services.riskmeasures import (
    ConsistentRiskMeasure,
    crm_eval,
    es,
    phi_example,
    rho_example,
)


def mean_functional() -> Functional:
    return Functional(
        name="mean",
        evaluate=lambda law: law.mean,
        weakly_increasing=True,
        increasing=True,
    )


def es_functional(p: float) -> Functional:
    return Functional(
        name=f"ES_{p:g}",
        evaluate=lambda law: es(law, p),
        weakly_increasing=True,
        increasing=True,
    )


def rho_functional() -> Functional:
    return Functional(
        name="rho-example",
        evaluate=rho_example,
        weakly_increasing=True,
        increasing=True,
    )


def phi_functional() -> Functional:
    """The quasiconvex example; monotone but flat at 0, so not increasing."""
    return Functional(name="phi-example", evaluate=phi_example, weakly_increasing=True)


def crm_functional(measure: ConsistentRiskMeasure) -> Functional:
    return Functional(
        name=f"crm[{len(measure.generators)}]",
        evaluate=lambda law: crm_eval(measure, law),
        weakly_increasing=True,
        increasing=True,
    )


def choquet_functional(mu: Capacity) -> Functional:
    """Choquet integral against mu; laws are placed on mu's n-point space.

    A capacity that is not law invariant only accepts explicit samples.
    """
    law_invariant = is_law_invariant(mu)

    def evaluate(law: DiscreteLaw) -> float:
        if not law_invariant:
            raise PreconditionError("a non-law-invariant capacity needs an explicit sample")
        return choquet(mu, UniformSample.of(law.on_grid(mu.n))).value

    return Functional(
        name=f"choquet[{mu.kind}]",
        evaluate=evaluate,
        law_invariant=law_invariant,
        weakly_increasing=True,
        increasing=True,
        evaluate_sample=lambda sample: choquet(mu, sample).value,
    )


def payoff_functional(rho: Functional) -> Functional:
    """Objective ``phi(X) = -rho(-X)`` built from a risk functional."""

    def evaluate(law: DiscreteLaw) -> float:
        return -rho(law.negate())

    def evaluate_sample(sample: UniformSample) -> float:
        return -rho(sample.scale(-1.0))

    return Functional(
        name=f"payoff[{rho.name}]",
        evaluate=evaluate,
        law_invariant=rho.law_invariant,
        weakly_increasing=rho.weakly_increasing,
        increasing=rho.increasing,
        evaluate_sample=evaluate_sample,
    )
