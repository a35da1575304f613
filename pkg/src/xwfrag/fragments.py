"""Warehouse fragments: deriving fact fragments from dimension fragments by
semi-join, the fragmentation-schema document, and on-disk materialization.

A dimension fragment is a predicate plus the instances satisfying it. Fact
fragments are the non-empty cells of the grid spanned by the per-dimension
fragment lists: a fact lands in the cell agreeing with every one of its
dimension references, so the fact partition is complete and disjoint whenever
the dimension fragmentations are.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import IntegrityError, MalformedXmlError
from .model import DimensionDoc, FactDoc, Instance, Level, Violation, Warehouse
from .predicates import (
    ElsePredicate,
    Minterm,
    PredicateTerm,
    SelectionPredicate,
    parse_atom,
)
from .xmlio import (
    META_FILENAME,
    XML_DECLARATION,
    dimension_filename,
    dimension_to_bytes,
    facts_filename,
    facts_to_bytes,
    meta_to_bytes,
)

SCHEMA_FILENAME = "fragmentation_schema.xml"

DimensionPredicate = Minterm | PredicateTerm | ElsePredicate


@dataclass(frozen=True)
class DimensionFragment:
    fragment_id: str
    dim_id: str
    predicate: DimensionPredicate
    instance_ids: frozenset[str]


@dataclass(frozen=True)
class WarehouseFragment:
    fragment_id: str
    dim_parts: Mapping[str, DimensionFragment]
    fact_ids: frozenset[str]


@dataclass(frozen=True)
class SchemaDimension:
    dim_id: str
    predicates: tuple[SelectionPredicate, ...]
    is_else: bool = False


@dataclass(frozen=True)
class SchemaFragment:
    fragment_id: str
    dimensions: tuple[SchemaDimension, ...]


@dataclass(frozen=True)
class FragmentationSchema:
    method: str
    fragments: tuple[SchemaFragment, ...]


def fragment_facts(
    facts: FactDoc, dim_frags: Mapping[str, Sequence[DimensionFragment]]
) -> list[WarehouseFragment]:
    """Assign every fact to the grid cell its dimension references select.

    Cells without facts are not emitted. Raises IntegrityError when a fact
    references an instance covered by no fragment of a fragmented dimension.
    """
    dims = sorted(dim_frags)
    locate: dict[str, dict[str, int]] = {}
    for dim_id in dims:
        index: dict[str, int] = {}
        for k, frag in enumerate(dim_frags[dim_id]):
            for instance_id in frag.instance_ids:
                index[instance_id] = k
        locate[dim_id] = index

    cells: dict[tuple[int, ...], list[str]] = {}
    violations: list[Violation] = []
    for fact in facts.facts:
        key = []
        for dim_id in dims:
            value_id = fact.dim_refs.get(dim_id)
            slot = locate[dim_id].get(value_id) if value_id is not None else None
            if slot is None:
                violations.append(
                    Violation(
                        "unfragmented-reference",
                        f"fact {fact.fact_id} references {dim_id}/{value_id} "
                        f"covered by no fragment",
                    )
                )
                break
            key.append(slot)
        else:
            cells.setdefault(tuple(key), []).append(fact.fact_id)
    if violations:
        raise IntegrityError(violations)

    fragments = []
    for rank, key in enumerate(sorted(cells), start=1):
        parts = {dim_id: dim_frags[dim_id][slot] for dim_id, slot in zip(dims, key)}
        fragments.append(
            WarehouseFragment(
                fragment_id=f"f{rank}",
                dim_parts=parts,
                fact_ids=frozenset(cells[key]),
            )
        )
    return fragments


def build_fragmentation_schema(
    fragments: Sequence[WarehouseFragment], method: str
) -> FragmentationSchema:
    """Describe warehouse fragments by their defining per-dimension predicates."""
    schema_fragments = []
    for wf in fragments:
        dims = []
        for dim_id in sorted(wf.dim_parts):
            predicate = wf.dim_parts[dim_id].predicate
            if isinstance(predicate, ElsePredicate):
                dims.append(SchemaDimension(dim_id, (), is_else=True))
            else:
                dims.append(SchemaDimension(dim_id, predicate.atoms()))
        schema_fragments.append(SchemaFragment(wf.fragment_id, tuple(dims)))
    return FragmentationSchema(method=method, fragments=tuple(schema_fragments))


def emit_fragmentation_schema(schema: FragmentationSchema) -> bytes:
    root = ET.Element("Schema", {"method": schema.method})
    for fragment in schema.fragments:
        frag_el = ET.SubElement(root, "fragment", {"id": fragment.fragment_id})
        for dim in fragment.dimensions:
            dim_el = ET.SubElement(frag_el, "dimension", {"name": dim.dim_id})
            if dim.is_else:
                ET.SubElement(dim_el, "predicate").text = "ELSE"
            else:
                for atom in dim.predicates:
                    ET.SubElement(dim_el, "predicate").text = atom.render()
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return XML_DECLARATION + ET.tostring(root, encoding="unicode").encode("utf-8") + b"\n"


def parse_fragmentation_schema(source: bytes | str | Path) -> FragmentationSchema:
    if isinstance(source, Path):
        text = source.read_bytes()
        origin = str(source)
    else:
        text = source
        origin = "<schema>"
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else None
        raise MalformedXmlError(str(exc), path=origin, line=line) from exc
    if root.tag != "Schema":
        raise MalformedXmlError(f"expected <Schema>, found <{root.tag}>", path=origin)
    method = root.get("method", "")
    fragments = []
    for frag_el in root.findall("fragment"):
        fragment_id = frag_el.get("id")
        if fragment_id is None:
            raise MalformedXmlError("<fragment> misses attribute 'id'", path=origin)
        dims = []
        for dim_el in frag_el.findall("dimension"):
            dim_id = dim_el.get("name")
            if dim_id is None:
                raise MalformedXmlError("<dimension> misses attribute 'name'", path=origin)
            texts = [(p.text or "").strip() for p in dim_el.findall("predicate")]
            if texts == ["ELSE"]:
                dims.append(SchemaDimension(dim_id, (), is_else=True))
            elif "ELSE" in texts:
                raise MalformedXmlError(
                    f"fragment {fragment_id}/{dim_id} mixes ELSE with predicates",
                    path=origin,
                )
            else:
                try:
                    atoms = tuple(parse_atom(t, dim_id) for t in texts)
                except ValueError as exc:
                    raise MalformedXmlError(str(exc), path=origin) from exc
                dims.append(SchemaDimension(dim_id, atoms))
        fragments.append(SchemaFragment(fragment_id, tuple(dims)))
    return FragmentationSchema(method=method, fragments=tuple(fragments))


def restrict_dimension(doc: DimensionDoc, instance_ids: frozenset[str]) -> DimensionDoc:
    """The sub-document keeping only the given instances.

    Hierarchy pointers whose target falls outside the kept set are dropped so
    the restricted document stays referentially sound on its own.
    """
    levels = []
    for level in doc.levels:
        kept = []
        for inst in level.instances:
            if inst.instance_id not in instance_ids:
                continue
            roll_up = inst.roll_up if inst.roll_up in instance_ids else None
            drill_down = inst.drill_down if inst.drill_down in instance_ids else None
            if roll_up == inst.roll_up and drill_down == inst.drill_down:
                kept.append(inst)
            else:
                kept.append(Instance(inst.instance_id, inst.attributes, roll_up, drill_down))
        levels.append(Level(level.level_id, tuple(kept)))
    return DimensionDoc(doc.dim_id, tuple(levels))


def fragment_view(warehouse: Warehouse, wf: WarehouseFragment) -> Warehouse:
    """An in-memory warehouse equivalent to the fragment's materialized collection."""
    fact_doc = warehouse.facts[0]
    facts = tuple(f for f in fact_doc.facts if f.fact_id in wf.fact_ids)
    dimensions = {
        dim_id: (
            restrict_dimension(doc, wf.dim_parts[dim_id].instance_ids)
            if dim_id in wf.dim_parts
            else doc
        )
        for dim_id, doc in warehouse.dimensions.items()
    }
    return Warehouse(warehouse.meta, (FactDoc(fact_doc.fact_set, facts),), dimensions)


def materialize_fragments(
    warehouse: Warehouse,
    fragments: Sequence[WarehouseFragment],
    schema: FragmentationSchema,
    out_dir: str | Path,
) -> Path:
    """Write one self-contained collection per fragment plus the schema document.

    Every collection carries the full metadata, its slice of the fact set,
    the restricted documents of fragmented dimensions and verbatim copies of
    unfragmented ones, so each parses as a valid warehouse on its own.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / SCHEMA_FILENAME).write_bytes(emit_fragmentation_schema(schema))

    meta_bytes = meta_to_bytes(warehouse.meta)
    whole_dims = {
        dim_id: dimension_to_bytes(doc) for dim_id, doc in warehouse.dimensions.items()
    }
    fact_doc = warehouse.facts[0]
    facts_by_id = {fact.fact_id: fact for fact in fact_doc.facts}

    for wf in fragments:
        frag_dir = out / wf.fragment_id
        frag_dir.mkdir(exist_ok=True)
        (frag_dir / META_FILENAME).write_bytes(meta_bytes)
        kept_facts = tuple(
            fact for fact in fact_doc.facts if fact.fact_id in wf.fact_ids
        )
        (frag_dir / facts_filename(fact_doc.fact_set)).write_bytes(
            facts_to_bytes(FactDoc(fact_doc.fact_set, kept_facts))
        )
        for dim_id, doc in warehouse.dimensions.items():
            path = frag_dir / dimension_filename(dim_id)
            part = wf.dim_parts.get(dim_id)
            if part is None:
                path.write_bytes(whole_dims[dim_id])
            else:
                path.write_bytes(
                    dimension_to_bytes(restrict_dimension(doc, part.instance_ids))
                )
    return out


def validate_fragmentation(
    warehouse: Warehouse,
    dim_frags: Mapping[str, Sequence[DimensionFragment]],
    fragments: Sequence[WarehouseFragment],
) -> list[Violation]:
    """Completeness and disjointness of a produced layout, as violation data.

    Checks that every fragmented dimension's fragments partition its instances
    and that the warehouse fragments partition the fact set.
    """
    violations: list[Violation] = []
    for dim_id, frags in dim_frags.items():
        doc = warehouse.dimensions[dim_id]
        seen: set[str] = set()
        for frag in frags:
            overlap = seen & frag.instance_ids
            if overlap:
                violations.append(
                    Violation(
                        "overlapping-dimension-fragments",
                        f"{dim_id}: {sorted(overlap)[:3]} in several fragments",
                    )
                )
            seen |= frag.instance_ids
        missing = doc.instance_ids - seen
        if missing:
            violations.append(
                Violation(
                    "incomplete-dimension-fragments",
                    f"{dim_id}: {len(missing)} instance(s) in no fragment",
                )
            )
        alien = seen - doc.instance_ids
        if alien:
            violations.append(
                Violation(
                    "unknown-instances",
                    f"{dim_id}: fragments list unknown instances {sorted(alien)[:3]}",
                )
            )

    all_facts = {f.fact_id for f in warehouse.facts[0].facts}
    seen_facts: set[str] = set()
    for wf in fragments:
        overlap = seen_facts & wf.fact_ids
        if overlap:
            violations.append(
                Violation(
                    "overlapping-fact-fragments",
                    f"{sorted(overlap)[:3]} in several warehouse fragments",
                )
            )
        seen_facts |= wf.fact_ids
    missing_facts = all_facts - seen_facts
    if missing_facts:
        violations.append(
            Violation(
                "incomplete-fact-fragments",
                f"{len(missing_facts)} fact(s) in no fragment",
            )
        )
    alien_facts = seen_facts - all_facts
    if alien_facts:
        violations.append(
            Violation(
                "unknown-facts",
                f"fragments list unknown facts {sorted(alien_facts)[:3]}",
            )
        )
    return violations


def schema_memberships(
    schema: FragmentationSchema, warehouse: Warehouse
) -> dict[str, frozenset[str]]:
    """Re-derive each fragment's fact membership from its stored predicates.

    Instances are assigned per dimension to the first predicate list they
    satisfy, trying the lists in canonical order (sorted rendered text, ELSE
    last) -- the same order the fragmenters use. A fact belongs to the
    fragment whose entry its reference hits in every dimension the fragment
    constrains.
    """
    entry_keys: dict[str, list] = {}
    for fragment in schema.fragments:
        for dim in fragment.dimensions:
            key = ("ELSE",) if dim.is_else else dim.predicates
            entries = entry_keys.setdefault(dim.dim_id, [])
            if key not in entries:
                entries.append(key)
    for entries in entry_keys.values():
        entries.sort(
            key=lambda key: (key == ("ELSE",), tuple(a.render() for a in key)
                             if key != ("ELSE",) else ())
        )
    entry_of_fragment: dict[str, dict[str, int]] = {}
    for fragment in schema.fragments:
        entry_of_fragment[fragment.fragment_id] = {}
        for dim in fragment.dimensions:
            key = ("ELSE",) if dim.is_else else dim.predicates
            entry_of_fragment[fragment.fragment_id][dim.dim_id] = entry_keys[dim.dim_id].index(key)

    assignment: dict[str, dict[str, int]] = {}
    for dim_id, entries in entry_keys.items():
        doc = warehouse.dimensions[dim_id]
        assigned: dict[str, int] = {}
        for inst in doc.iter_instances():
            for k, key in enumerate(entries):
                if key == ("ELSE",) or all(a.matches(inst.attributes) for a in key):
                    assigned[inst.instance_id] = k
                    break
        assignment[dim_id] = assigned

    memberships: dict[str, set[str]] = {f.fragment_id: set() for f in schema.fragments}
    groups: dict[tuple[str, ...], dict[tuple, list[str]]] = {}
    for fragment in schema.fragments:
        wanted = entry_of_fragment[fragment.fragment_id]
        dims = tuple(sorted(wanted))
        key = tuple(wanted[d] for d in dims)
        groups.setdefault(dims, {}).setdefault(key, []).append(fragment.fragment_id)

    fact_doc = warehouse.facts[0]
    for fact in fact_doc.facts:
        for dims, by_key in groups.items():
            key = []
            for dim_id in dims:
                ref = fact.dim_refs.get(dim_id)
                slot = assignment[dim_id].get(ref) if ref is not None else None
                if slot is None:
                    break
                key.append(slot)
            else:
                for fragment_id in by_key.get(tuple(key), ()):
                    memberships[fragment_id].add(fact.fact_id)
    return {fid: frozenset(ids) for fid, ids in memberships.items()}
