"""Computation services for lawcollapse."""

from lawcollapse.services.capacities import Capacity, choquet
from lawcollapse.services.collapse import (
    choquet_symmetric_linearity,
    expectation_invariance_probe,
    meta_gap_certificate,
    translation_line_test,
)
from lawcollapse.services.optimizer import FeasibleQuadruple, solve
from lawcollapse.services.rearrange import couple, hl_lower, hl_upper
from lawcollapse.services.riskmeasures import ConsistentRiskMeasure, crm_eval, es

__all__ = [
    "Capacity",
    "ConsistentRiskMeasure",
    "FeasibleQuadruple",
    "choquet",
    "choquet_symmetric_linearity",
    "couple",
    "crm_eval",
    "es",
    "expectation_invariance_probe",
    "hl_lower",
    "hl_upper",
    "meta_gap_certificate",
    "solve",
    "translation_line_test",
]
