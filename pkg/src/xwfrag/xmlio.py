"""Reading and writing the warehouse document set.

A warehouse directory holds ``dw-model.xml``, one ``facts_<set>.xml`` per fact
set and one ``dimension_<dim>.xml`` per dimension. Serialization is canonical
(fixed attribute order, two-space indent, UTF-8) so identical warehouses
produce identical bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

from .errors import IntegrityError, MalformedXmlError, MissingDocumentError
from .model import (
    DimensionDoc,
    DimensionMeta,
    Fact,
    FactDoc,
    FactSetMeta,
    Instance,
    Level,
    LevelMeta,
    Warehouse,
    WarehouseMeta,
    validate_referential_integrity,
)

XML_DECLARATION = b'<?xml version="1.0" encoding="UTF-8"?>\n'

META_FILENAME = "dw-model.xml"


def facts_filename(fact_set: str) -> str:
    return f"facts_{fact_set}.xml"


def dimension_filename(dim_id: str) -> str:
    return f"dimension_{dim_id}.xml"


def _document_bytes(root: ET.Element) -> bytes:
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return XML_DECLARATION + ET.tostring(root, encoding="unicode").encode("utf-8") + b"\n"


def meta_to_bytes(meta: WarehouseMeta) -> bytes:
    root = ET.Element("dw-model")
    for fs in meta.fact_sets:
        fs_el = ET.SubElement(root, "FactSet", {"name": fs.name})
        for measure in fs.measures:
            ET.SubElement(fs_el, "measure", {"id": measure})
        for ref in fs.dim_refs:
            ET.SubElement(fs_el, "dimension-ref", {"dim-id": ref})
    for dim in meta.dimensions:
        dim_el = ET.SubElement(root, "dimension", {"dim-id": dim.dim_id})
        for level in dim.levels:
            lvl_el = ET.SubElement(dim_el, "Level", {"id": level.level_id})
            for attr in level.attributes:
                ET.SubElement(lvl_el, "attribute", {"id": attr})
    return _document_bytes(root)


def facts_to_bytes(doc: FactDoc) -> bytes:
    root = ET.Element("FactDoc", {"id": doc.fact_set})
    for fact in doc.facts:
        fact_el = ET.SubElement(root, "Fact", {"id": fact.fact_id})
        for name, value in fact.measures.items():
            ET.SubElement(fact_el, "measure", {"name": name, "value": value})
        for dim_id, value_id in fact.dim_refs.items():
            ET.SubElement(fact_el, "dimension", {"dim-id": dim_id, "value-id": value_id})
    return _document_bytes(root)


def dimension_to_bytes(doc: DimensionDoc) -> bytes:
    root = ET.Element("dimension", {"dim-id": doc.dim_id})
    for level in doc.levels:
        lvl_el = ET.SubElement(root, "Level", {"id": level.level_id})
        for inst in level.instances:
            attrs = {"id": inst.instance_id}
            if inst.roll_up is not None:
                attrs["Roll-up"] = inst.roll_up
            if inst.drill_down is not None:
                attrs["Drill-Down"] = inst.drill_down
            inst_el = ET.SubElement(lvl_el, "instance", attrs)
            for name, value in inst.attributes.items():
                ET.SubElement(inst_el, "attribute", {"id": name, "value": value})
    return _document_bytes(root)


def _parse_file(path: Path) -> ET.Element:
    try:
        return ET.parse(path).getroot()
    except ET.ParseError as exc:
        line = exc.position[0] if exc.position else None
        raise MalformedXmlError(str(exc), path=str(path), line=line) from exc


def _attr(el: ET.Element, name: str, path: Path) -> str:
    value = el.get(name)
    if value is None:
        raise MalformedXmlError(f"<{el.tag}> misses attribute {name!r}", path=str(path))
    return value


def meta_from_file(path: Path) -> WarehouseMeta:
    root = _parse_file(path)
    if root.tag != "dw-model":
        raise MalformedXmlError(f"expected <dw-model>, found <{root.tag}>", path=str(path))
    fact_sets = []
    dimensions = []
    for child in root:
        if child.tag == "FactSet":
            fact_sets.append(
                FactSetMeta(
                    name=_attr(child, "name", path),
                    measures=tuple(_attr(m, "id", path) for m in child.findall("measure")),
                    dim_refs=tuple(
                        _attr(r, "dim-id", path) for r in child.findall("dimension-ref")
                    ),
                )
            )
        elif child.tag == "dimension":
            levels = tuple(
                LevelMeta(
                    level_id=_attr(lvl, "id", path),
                    attributes=tuple(_attr(a, "id", path) for a in lvl.findall("attribute")),
                )
                for lvl in child.findall("Level")
            )
            dimensions.append(DimensionMeta(dim_id=_attr(child, "dim-id", path), levels=levels))
        else:
            raise MalformedXmlError(f"unexpected element <{child.tag}>", path=str(path))
    try:
        return WarehouseMeta(fact_sets=tuple(fact_sets), dimensions=tuple(dimensions))
    except ValueError as exc:
        raise MalformedXmlError(str(exc), path=str(path)) from exc


def facts_from_file(path: Path) -> FactDoc:
    root = _parse_file(path)
    if root.tag != "FactDoc":
        raise MalformedXmlError(f"expected <FactDoc>, found <{root.tag}>", path=str(path))
    facts = []
    for fact_el in root.findall("Fact"):
        measures = {
            _attr(m, "name", path): _attr(m, "value", path) for m in fact_el.findall("measure")
        }
        dim_refs = {
            _attr(d, "dim-id", path): _attr(d, "value-id", path)
            for d in fact_el.findall("dimension")
        }
        facts.append(Fact(fact_id=_attr(fact_el, "id", path), measures=measures, dim_refs=dim_refs))
    return FactDoc(fact_set=_attr(root, "id", path), facts=tuple(facts))


def dimension_from_file(path: Path) -> DimensionDoc:
    root = _parse_file(path)
    if root.tag != "dimension":
        raise MalformedXmlError(f"expected <dimension>, found <{root.tag}>", path=str(path))
    levels = []
    for lvl_el in root.findall("Level"):
        instances = []
        for inst_el in lvl_el.findall("instance"):
            instances.append(
                Instance(
                    instance_id=_attr(inst_el, "id", path),
                    attributes={
                        _attr(a, "id", path): _attr(a, "value", path)
                        for a in inst_el.findall("attribute")
                    },
                    roll_up=inst_el.get("Roll-up"),
                    drill_down=inst_el.get("Drill-Down"),
                )
            )
        levels.append(Level(level_id=_attr(lvl_el, "id", path), instances=tuple(instances)))
    return DimensionDoc(dim_id=_attr(root, "dim-id", path), levels=tuple(levels))


def parse_warehouse(dir_path: str | Path, validate: bool = True) -> Warehouse:
    """Load and validate a warehouse directory.

    Raises MissingDocumentError when a metadata-declared document is absent,
    MalformedXmlError on bad XML, and IntegrityError listing every dangling
    reference when the documents disagree. ``validate=False`` skips the
    integrity pass (used on benchmark hot paths where the same collection is
    re-parsed many times).
    """
    directory = Path(dir_path)
    meta_path = directory / META_FILENAME
    if not meta_path.is_file():
        raise MissingDocumentError(f"{META_FILENAME} not found in {directory}")
    meta = meta_from_file(meta_path)

    facts = []
    for fs in meta.fact_sets:
        path = directory / facts_filename(fs.name)
        if not path.is_file():
            raise MissingDocumentError(f"{path.name} not found in {directory}")
        facts.append(facts_from_file(path))

    dimensions = {}
    for dim in meta.dimensions:
        path = directory / dimension_filename(dim.dim_id)
        if not path.is_file():
            raise MissingDocumentError(f"{path.name} not found in {directory}")
        dimensions[dim.dim_id] = dimension_from_file(path)

    warehouse = Warehouse(meta=meta, facts=tuple(facts), dimensions=dimensions)
    if validate:
        violations = validate_referential_integrity(warehouse)
        if violations:
            raise IntegrityError(violations)
    return warehouse


def serialize_warehouse(warehouse: Warehouse, dir_path: str | Path) -> None:
    """Write every warehouse document into a directory (created if needed)."""
    directory = Path(dir_path)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / META_FILENAME).write_bytes(meta_to_bytes(warehouse.meta))
    for doc in warehouse.facts:
        (directory / facts_filename(doc.fact_set)).write_bytes(facts_to_bytes(doc))
    for dim_id, doc in warehouse.dimensions.items():
        (directory / dimension_filename(dim_id)).write_bytes(dimension_to_bytes(doc))
