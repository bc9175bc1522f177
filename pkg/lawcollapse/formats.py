"""JSON and CSV input documents, and the byte-stable JSON output encoder."""

import json
import math
from dataclasses import fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Literal, TypeVar

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError, model_validator

from lawcollapse.exceptions import DomainError, InputFormatError
from lawcollapse.models import DiscreteLaw, Functional, UniformSample
from lawcollapse.services.capacities import (
    Capacity,
    DensityFamilyCapacity,
    DistortionCapacity,
    ExplicitCapacity,
    JPCapacity,
)
from lawcollapse.services.functionals import (
    choquet_functional,
    crm_functional,
    es_functional,
    mean_functional,
    payoff_functional,
    phi_functional,
    rho_functional,
)
from lawcollapse.services.laws import ingest_csv
from lawcollapse.services.optimizer import (
    DomainSpec,
    FeasibleQuadruple,
    Interval,
    MeanHalfSpace,
    PreferenceBounded,
    RearrangementClosure,
)
from lawcollapse.services.riskmeasures import ConsistentRiskMeasure, LawInvariantSet

SCHEMA_VERSION = "1"
FLOAT_DECIMALS = 12
CSV_SUFFIXES = {".csv", ".txt"}


# Laws


class Atom(BaseModel):
    v: float
    p: float


class LawDocument(BaseModel):
    """``{"atoms": [{"v": .., "p": ..}, ..]}`` or ``{"uniform": [..]}``."""

    atoms: list[Atom] | None = None
    uniform: list[float] | None = None

    @model_validator(mode="after")
    def exactly_one_form(self) -> "LawDocument":
        if (self.atoms is None) == (self.uniform is None):
            raise ValueError('a law document needs exactly one of "atoms" or "uniform"')
        return self

    def to_law(self) -> DiscreteLaw:
        if self.uniform is not None:
            return UniformSample.of(self.uniform).to_law()
        return DiscreteLaw.from_atoms((atom.v, atom.p) for atom in self.atoms)

    def to_sample(self) -> UniformSample:
        """The explicit sample; an atoms document is laid out sorted on its finest grid."""
        if self.uniform is not None:
            return UniformSample.of(self.uniform)
        law = self.to_law()
        n = law.granularity()
        if n is None:
            raise DomainError("law has no equiprobable representation with at most 64 atoms")
        return UniformSample.of(law.on_grid(n))


# Capacities


class DistortionDocument(BaseModel):
    kind: Literal["distortion"]
    n: int
    knots: list[tuple[float, float]]

    def build(self) -> Capacity:
        return DistortionCapacity(self.n, self.knots)


class DensitiesDocument(BaseModel):
    kind: Literal["densities"]
    d: list[list[float]]
    n: int | None = None

    def build(self) -> DensityFamilyCapacity:
        capacity = DensityFamilyCapacity(self.d)
        if self.n is not None and self.n != capacity.n:
            raise DomainError(f"densities have {capacity.n} entries, document says n={self.n}")
        return capacity


class JPDocument(BaseModel):
    kind: Literal["jp"]
    alpha: float
    nu: DensitiesDocument
    n: int | None = None

    def build(self) -> Capacity:
        return JPCapacity(self.nu.build(), self.alpha)


class ExplicitDocument(BaseModel):
    """Values keyed by decimal bitmask strings; bit i - 1 stands for atom i."""

    kind: Literal["explicit"]
    n: int
    values: dict[str, float]

    def build(self) -> Capacity:
        try:
            table = {int(key): value for key, value in self.values.items()}
        except ValueError as e:
            raise DomainError(f"explicit capacity keys must be decimal bitmasks: {e}") from e
        return ExplicitCapacity(self.n, table)


CapacityDocument = Annotated[
    DistortionDocument | DensitiesDocument | JPDocument | ExplicitDocument,
    Field(discriminator="kind"),
]


# Risk measures and sets


class GeneratorsBody(BaseModel):
    generators: list[LawDocument]


class CrmDocument(BaseModel):
    """``{"crm": {"generators": [law, ..]}}``."""

    crm: GeneratorsBody

    def build(self) -> ConsistentRiskMeasure:
        return ConsistentRiskMeasure.of(g.to_law() for g in self.crm.generators)


class SetBody(BaseModel):
    generators: list[LawDocument]
    rays: list[LawDocument] = []
    increasing: bool = False


class SetDocument(BaseModel):
    """``{"set": {"generators": [..], "rays": [..], "increasing": bool}}``."""

    set: SetBody

    def build(self) -> LawInvariantSet:
        return LawInvariantSet(
            generators=tuple(g.to_law() for g in self.set.generators),
            rays=tuple(r.to_law() for r in self.set.rays),
            increasing=self.set.increasing,
        )


# Objectives


class _PhiBase(BaseModel):
    payoff: bool = False

    def _functional(self) -> Functional:
        raise NotImplementedError

    def build(self) -> Functional:
        functional = self._functional()
        return payoff_functional(functional) if self.payoff else functional


class MeanPhi(_PhiBase):
    kind: Literal["mean"]

    def _functional(self) -> Functional:
        return mean_functional()


class EsPhi(_PhiBase):
    kind: Literal["es"]
    p: float

    def _functional(self) -> Functional:
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"ES level must lie in [0, 1], got {self.p}")
        return es_functional(self.p)


class RhoPhi(_PhiBase):
    kind: Literal["rho-example"]

    def _functional(self) -> Functional:
        return rho_functional()


class PhiExamplePhi(_PhiBase):
    kind: Literal["phi-example"]

    def _functional(self) -> Functional:
        return phi_functional()


class CrmPhi(_PhiBase):
    kind: Literal["crm"]
    generators: list[LawDocument]

    def _functional(self) -> Functional:
        return crm_functional(ConsistentRiskMeasure.of(g.to_law() for g in self.generators))


class ChoquetPhi(_PhiBase):
    kind: Literal["choquet"]
    capacity: CapacityDocument

    def _functional(self) -> Functional:
        return choquet_functional(self.capacity.build())


PhiDocument = Annotated[
    MeanPhi | EsPhi | RhoPhi | PhiExamplePhi | CrmPhi | ChoquetPhi,
    Field(discriminator="kind"),
]


# Domains and problems


class RearrangementDomain(BaseModel):
    kind: Literal["rearrangement"]
    generators: list[LawDocument]
    allow_shift: bool = False
    increasing: bool = False

    def build(self) -> DomainSpec:
        return RearrangementClosure(
            tuple(g.to_law() for g in self.generators), self.allow_shift, self.increasing
        )


class IntervalDomain(BaseModel):
    kind: Literal["interval"]
    a: float
    b: float

    def build(self) -> DomainSpec:
        return Interval(self.a, self.b)


class MeanHalfSpaceDomain(BaseModel):
    kind: Literal["mean-half-space"]
    bound: float

    def build(self) -> DomainSpec:
        return MeanHalfSpace(self.bound)


class PreferenceBoundedDomain(BaseModel):
    kind: Literal["preference-bounded"]
    top: LawDocument
    order: Literal["convex", "increasing-convex"] = "convex"

    def build(self) -> DomainSpec:
        return PreferenceBounded(self.top.to_law(), self.order)


DomainDocument = Annotated[
    RearrangementDomain | IntervalDomain | MeanHalfSpaceDomain | PreferenceBoundedDomain,
    Field(discriminator="kind"),
]


class ProblemDocument(BaseModel):
    """``{"phi": {..}, "domain": {..}, "d": [..], "p": ..}``."""

    phi: PhiDocument
    domain: DomainDocument
    d: list[float]
    p: float

    def build(self) -> FeasibleQuadruple:
        return FeasibleQuadruple(
            phi=self.phi.build(),
            domain=self.domain.build(),
            d=UniformSample.of(self.d),
            p=self.p,
        )


# Loading

T = TypeVar("T")


def _read(path: str | Path) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputFormatError(f"cannot read {path}: {e}") from e


def load_document(path: str | Path, schema: type[T] | Any) -> T:
    """Parse a JSON file into a pydantic model or annotated union."""
    text = _read(path)
    try:
        return TypeAdapter(schema).validate_json(text)
    except ValidationError as e:
        raise InputFormatError(f"{path}: {e.error_count()} validation error(s)\n{e}") from e


def load_law(path: str | Path) -> DiscreteLaw:
    """A law from a JSON law document or a one-value-per-line CSV file."""
    if Path(path).suffix.lower() in CSV_SUFFIXES:
        return ingest_csv(path)
    return load_document(path, LawDocument).to_law()


def load_sample(path: str | Path) -> UniformSample:
    if Path(path).suffix.lower() in CSV_SUFFIXES:
        text = _read(path)
        values = [line.strip() for line in text.splitlines() if line.strip()]
        try:
            return UniformSample.of(float(v) for v in values)
        except ValueError as e:
            raise InputFormatError(f"{path}: {e}") from e
    return load_document(path, LawDocument).to_sample()


def load_capacity(path: str | Path) -> Capacity:
    return load_document(path, CapacityDocument).build()


# Output


def _float(value: float) -> float | str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return round(value, FLOAT_DECIMALS) + 0.0


def to_jsonable(obj: Any) -> Any:
    """Plain JSON structure with rounded floats, normalised zeros and string infinities."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, int | np.integer):
        return int(obj)
    if isinstance(obj, float | np.floating):
        return _float(float(obj))
    if isinstance(obj, DiscreteLaw):
        return {"atoms": [{"v": _float(v), "p": _float(p)} for v, p in obj.atoms]}
    if isinstance(obj, UniformSample):
        return {"uniform": [_float(v) for v in obj.values]}
    if isinstance(obj, Functional):
        return obj.name
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, list | tuple | frozenset | set):
        items = sorted(obj) if isinstance(obj, frozenset | set) else obj
        return [to_jsonable(item) for item in items]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(item) for item in obj.tolist()]
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def dump_json(payload: dict[str, Any]) -> str:
    """Versioned, byte-stable JSON text ending with a newline."""
    document = {"schema": SCHEMA_VERSION, **to_jsonable(payload)}
    return json.dumps(document, indent=2) + "\n"
