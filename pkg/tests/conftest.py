import warnings

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
)
from xwfrag.workload import parse_workload


@pytest.fixture
def retail_meta():
    return WarehouseMeta(
        fact_sets=(FactSetMeta("sales", ("amount", "quantity"), ("Customer", "Date", "Part")),),
        dimensions=(
            DimensionMeta("Customer", (LevelMeta("base", ("c_nation_key", "c_mkt_segment")),)),
            DimensionMeta("Date", (LevelMeta("base", ("d_date_name",)),)),
            DimensionMeta("Part", (LevelMeta("base", ("p_type", "p_size")),)),
        ),
    )


def build_retail_warehouse():
    """Hand-built two-level warehouse small enough for exhaustive oracles."""
    meta = WarehouseMeta(
        fact_sets=(FactSetMeta("sales", ("amount", "quantity"), ("Customer", "Part")),),
        dimensions=(
            DimensionMeta(
                "Customer",
                (
                    LevelMeta("base", ("c_nation_key", "c_mkt_segment")),
                    LevelMeta("nation", ("n_name",)),
                ),
            ),
            DimensionMeta("Part", (LevelMeta("base", ("p_type", "p_size")),)),
        ),
    )
    customers = (
        Instance("c1", {"c_nation_key": "10", "c_mkt_segment": "BUILDING"}, roll_up="n1"),
        Instance("c2", {"c_nation_key": "13", "c_mkt_segment": "BUILDING"}, roll_up="n1"),
        Instance("c3", {"c_nation_key": "13", "c_mkt_segment": "MACHINERY"}, roll_up="n2"),
        Instance("c4", {"c_nation_key": "20", "c_mkt_segment": "MACHINERY"}, roll_up="n2"),
        Instance("c5", {"c_nation_key": "24", "c_mkt_segment": "HOUSEHOLD"}, roll_up="n2"),
    )
    nations = (
        Instance("n1", {"n_name": "FRANCE"}, drill_down="c1"),
        Instance("n2", {"n_name": "PERU"}, drill_down="c3"),
    )
    parts = (
        Instance("p1", {"p_type": "PROMO BURNISHED COPPER", "p_size": "4"}),
        Instance("p2", {"p_type": "STANDARD BRUSHED STEEL", "p_size": "15"}),
        Instance("p3", {"p_type": "PROMO BURNISHED COPPER", "p_size": "40"}),
    )
    facts = tuple(
        Fact(f"f{i}", {"amount": a, "quantity": q}, {"Customer": c, "Part": p})
        for i, (a, q, c, p) in enumerate(
            [
                ("10.00", "1", "c1", "p1"),
                ("20.00", "2", "c2", "p1"),
                ("30.00", "3", "c2", "p2"),
                ("40.00", "4", "c3", "p3"),
                ("50.00", "5", "c4", "p2"),
                ("60.00", "6", "c5", "p3"),
            ],
            start=1,
        )
    )
    return Warehouse(
        meta=meta,
        facts=(FactDoc("sales", facts),),
        dimensions={
            "Customer": DimensionDoc(
                "Customer", (Level("base", customers), Level("nation", nations))
            ),
            "Part": DimensionDoc("Part", (Level("base", parts),)),
        },
    )


@pytest.fixture
def retail_warehouse():
    return build_retail_warehouse()


SAMPLE_WORKLOAD = """\
(: id=q1 freq=10 :)
for $x in //FactDoc/Fact,
    $y in //dimensions[@dim-id='Customer']/Level/instance
    $z in //dimensions[@dim-id='Part']/Level/instance
where $y/attribute[@id='c_nation_key']/@value = '13'
and $y/attribute[@id='p_type']/@value = 'PROMO BURNISHED COPPER'
and $x/dimension[@dim-id='Customer']/@value-id = $y/@id
and $x/dimension[@dim-id='Part']/@value-id = $z/@id
return $x

(: id=q10 freq=5 :)
for $x in //FactDoc/Fact,
    $y in //dimensions[@dim-id='Customer']/Level/instance
    $z in //dimensions[@dim-id='Date']/Level/instance
where $y/attribute[@id='c_nation_key']/@value > '15'
and $y/attribute[@id='d_date_name']/@value = 'Saturday'
and $x/dimension[@dim-id='Customer']/@value-id = $y/@id
and $x/dimension[@dim-id='Part']/@value-id = $z/@id
return $x
"""


@pytest.fixture
def sample_workload_text():
    return SAMPLE_WORKLOAD


@pytest.fixture
def sample_workload(retail_meta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return parse_workload(SAMPLE_WORKLOAD, retail_meta)
