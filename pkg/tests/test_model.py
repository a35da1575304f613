import pytest

from xwfrag.model import (
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


def test_meta_rejects_duplicate_dimension_ids():
    with pytest.raises(ValueError, match="duplicate dim_id"):
        WarehouseMeta(
            fact_sets=(),
            dimensions=(
                DimensionMeta("A", (LevelMeta("base", ("x",)),)),
                DimensionMeta("A", (LevelMeta("base", ("y",)),)),
            ),
        )


def test_meta_rejects_duplicate_attributes_within_dimension():
    with pytest.raises(ValueError, match="duplicate attribute"):
        WarehouseMeta(
            fact_sets=(),
            dimensions=(
                DimensionMeta(
                    "A",
                    (LevelMeta("l1", ("x",)), LevelMeta("l2", ("x",))),
                ),
            ),
        )


def test_meta_rejects_unknown_dim_ref():
    with pytest.raises(ValueError, match="unknown dimension"):
        WarehouseMeta(
            fact_sets=(FactSetMeta("s", ("m",), ("B",)),),
            dimensions=(DimensionMeta("A", (LevelMeta("base", ("x",)),)),),
        )


def test_valid_warehouse_has_no_violations(retail_warehouse):
    assert validate_referential_integrity(retail_warehouse) == []


def _tamper_fact(warehouse, **kwargs):
    doc = warehouse.facts[0]
    fact = Fact("fx", {"amount": "1", "quantity": "1"}, kwargs)
    return Warehouse(
        warehouse.meta,
        (FactDoc(doc.fact_set, doc.facts + (fact,)),),
        warehouse.dimensions,
    )


def test_dangling_fact_reference(retail_warehouse):
    tampered = _tamper_fact(retail_warehouse, Customer="c9999", Part="p1")
    violations = validate_referential_integrity(tampered)
    assert len(violations) == 1
    assert violations[0].kind == "dangling-fact-ref"
    assert "c9999" in violations[0].message and "fx" in violations[0].message


def test_undeclared_dim_ref(retail_warehouse):
    tampered = _tamper_fact(retail_warehouse, Customer="c1", Part="p1", Ghost="g1")
    kinds = {v.kind for v in validate_referential_integrity(tampered)}
    assert "undeclared-dim-ref" in kinds


def test_dangling_roll_up(retail_warehouse):
    doc = retail_warehouse.dimensions["Part"]
    broken = DimensionDoc(
        "Part",
        (
            Level(
                "base",
                doc.levels[0].instances
                + (Instance("p9", {"p_type": "X", "p_size": "1"}, roll_up="missing"),),
            ),
        ),
    )
    tampered = Warehouse(
        retail_warehouse.meta,
        retail_warehouse.facts,
        {**retail_warehouse.dimensions, "Part": broken},
    )
    violations = validate_referential_integrity(tampered)
    assert [v.kind for v in violations] == ["dangling-hierarchy"]


def test_duplicate_instance_and_fact_ids(retail_warehouse):
    doc = retail_warehouse.dimensions["Part"]
    dup = DimensionDoc(
        "Part", (Level("base", doc.levels[0].instances + (doc.levels[0].instances[0],)),)
    )
    tampered = Warehouse(
        retail_warehouse.meta,
        retail_warehouse.facts,
        {**retail_warehouse.dimensions, "Part": dup},
    )
    kinds = [v.kind for v in validate_referential_integrity(tampered)]
    assert "duplicate-instance" in kinds


def test_undeclared_attribute(retail_warehouse):
    doc = retail_warehouse.dimensions["Part"]
    odd = DimensionDoc(
        "Part",
        (
            Level(
                "base",
                doc.levels[0].instances + (Instance("p9", {"mystery": "1"}),),
            ),
        ),
    )
    tampered = Warehouse(
        retail_warehouse.meta,
        retail_warehouse.facts,
        {**retail_warehouse.dimensions, "Part": odd},
    )
    kinds = [v.kind for v in validate_referential_integrity(tampered)]
    assert "undeclared-attribute" in kinds
