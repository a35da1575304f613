"""In-memory star-schema warehouse: metadata, dimension documents, fact documents.

Instances are value objects; a warehouse is never mutated after it has been
parsed or generated, which makes concurrent read access safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Optional


@dataclass(frozen=True)
class FactSetMeta:
    name: str
    measures: tuple[str, ...]
    dim_refs: tuple[str, ...]


@dataclass(frozen=True)
class LevelMeta:
    level_id: str
    attributes: tuple[str, ...]


@dataclass(frozen=True)
class DimensionMeta:
    dim_id: str
    levels: tuple[LevelMeta, ...]

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for level in self.levels for a in level.attributes)


@dataclass(frozen=True)
class WarehouseMeta:
    """Contents of the metadata document: fact sets and dimension layouts."""

    fact_sets: tuple[FactSetMeta, ...]
    dimensions: tuple[DimensionMeta, ...]

    def __post_init__(self):
        dim_ids = [d.dim_id for d in self.dimensions]
        if len(set(dim_ids)) != len(dim_ids):
            raise ValueError("duplicate dim_id in metadata")
        for dim in self.dimensions:
            attrs = dim.attributes
            if len(set(attrs)) != len(attrs):
                raise ValueError(f"duplicate attribute in dimension {dim.dim_id}")
        for fs in self.fact_sets:
            for ref in fs.dim_refs:
                if ref not in dim_ids:
                    raise ValueError(f"fact set {fs.name} references unknown dimension {ref}")

    def dimension(self, dim_id: str) -> Optional[DimensionMeta]:
        return next((d for d in self.dimensions if d.dim_id == dim_id), None)

    def dimension_of_attribute(self, attribute: str) -> Optional[str]:
        """The dimension declaring an attribute, or None. Ambiguity is resolved
        in declaration order (attribute names are normally globally unique)."""
        for dim in self.dimensions:
            if attribute in dim.attributes:
                return dim.dim_id
        return None


@dataclass(frozen=True)
class Instance:
    instance_id: str
    attributes: Mapping[str, str]
    roll_up: Optional[str] = None
    drill_down: Optional[str] = None


@dataclass(frozen=True)
class Level:
    level_id: str
    instances: tuple[Instance, ...]


@dataclass(frozen=True)
class DimensionDoc:
    dim_id: str
    levels: tuple[Level, ...]

    def iter_instances(self) -> Iterator[Instance]:
        for level in self.levels:
            yield from level.instances

    @cached_property
    def instance_ids(self) -> frozenset[str]:
        return frozenset(i.instance_id for i in self.iter_instances())


@dataclass(frozen=True)
class Fact:
    fact_id: str
    measures: Mapping[str, str]
    dim_refs: Mapping[str, str]


@dataclass(frozen=True)
class FactDoc:
    fact_set: str
    facts: tuple[Fact, ...]


@dataclass(frozen=True)
class Violation:
    """One referential-integrity defect; violations are data, not exceptions."""

    kind: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass(frozen=True)
class Warehouse:
    meta: WarehouseMeta
    facts: tuple[FactDoc, ...]
    dimensions: Mapping[str, DimensionDoc]

    def fact_doc(self, fact_set: str) -> Optional[FactDoc]:
        return next((f for f in self.facts if f.fact_set == fact_set), None)


def validate_referential_integrity(warehouse: Warehouse) -> list[Violation]:
    """Every fact reference and every hierarchy pointer must resolve.

    Returns an empty list iff the warehouse is sound; callers that require a
    valid warehouse wrap the result in IntegrityError.
    """
    violations: list[Violation] = []
    meta = warehouse.meta

    for dim_id, dim in warehouse.dimensions.items():
        if meta.dimension(dim_id) is None:
            violations.append(
                Violation("unknown-dimension", f"dimension document {dim_id} not in metadata")
            )
        seen: set[str] = set()
        for inst in dim.iter_instances():
            if inst.instance_id in seen:
                violations.append(
                    Violation("duplicate-instance", f"{dim_id}/{inst.instance_id} repeated")
                )
            seen.add(inst.instance_id)
        declared = set(meta.dimension(dim_id).attributes) if meta.dimension(dim_id) else set()
        for inst in dim.iter_instances():
            for attr in inst.attributes:
                if declared and attr not in declared:
                    violations.append(
                        Violation(
                            "undeclared-attribute",
                            f"{dim_id}/{inst.instance_id} carries {attr} not in metadata",
                        )
                    )
        for pointer in ("roll_up", "drill_down"):
            for inst in dim.iter_instances():
                target = getattr(inst, pointer)
                if target is not None and target not in seen:
                    violations.append(
                        Violation(
                            "dangling-hierarchy",
                            f"{dim_id}/{inst.instance_id} {pointer} -> {target} missing",
                        )
                    )

    for doc in warehouse.facts:
        fs = next((f for f in meta.fact_sets if f.name == doc.fact_set), None)
        if fs is None:
            violations.append(
                Violation("unknown-fact-set", f"fact document {doc.fact_set} not in metadata")
            )
        seen_facts: set[str] = set()
        for fact in doc.facts:
            if fact.fact_id in seen_facts:
                violations.append(
                    Violation("duplicate-fact", f"{doc.fact_set}/{fact.fact_id} repeated")
                )
            seen_facts.add(fact.fact_id)
            for dim_id, value_id in fact.dim_refs.items():
                if fs is not None and dim_id not in fs.dim_refs:
                    violations.append(
                        Violation(
                            "undeclared-dim-ref",
                            f"fact {fact.fact_id} references {dim_id} not declared for {doc.fact_set}",
                        )
                    )
                dim = warehouse.dimensions.get(dim_id)
                if dim is None:
                    violations.append(
                        Violation(
                            "missing-dimension",
                            f"fact {fact.fact_id} references absent dimension {dim_id}",
                        )
                    )
                elif value_id not in dim.instance_ids:
                    violations.append(
                        Violation(
                            "dangling-fact-ref",
                            f"fact {fact.fact_id} references {dim_id}/{value_id} which does not exist",
                        )
                    )
    return violations
