"""Synthetic warehouse and workload generation.

Warehouses follow a fixed retail star schema (sale facts over Customer,
Supplier, Date and Part) with attribute values drawn from small pools, so
workload predicates always have sensible, non-degenerate selectivity.
Generation is deterministic per seed; dimension content depends only on the
seed and the dimension sizes, never on the fact count, so fact-count sweeps
share identical dimensions.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidSpecError
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
)
from .predicates import SelectionPredicate
from .workload import JoinPredicate, Query, Workload

FACT_SET = "sales"
MEASURES = ("amount", "quantity")
BASE_LEVEL = "base"

NATION_KEYS = tuple(str(k) for k in range(25))
MARKET_SEGMENTS = ("AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY")
REGIONS = ("AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST")
DAY_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
YEARS = tuple(str(y) for y in range(1998, 2003))
PART_SIZES = tuple(str(s) for s in range(1, 51))
PART_TYPES = (
    "PROMO BURNISHED COPPER", "PROMO BURNISHED BRASS", "PROMO ANODIZED TIN",
    "PROMO POLISHED NICKEL", "PROMO PLATED STEEL", "STANDARD BURNISHED COPPER",
    "STANDARD ANODIZED BRASS", "STANDARD POLISHED TIN", "STANDARD PLATED NICKEL",
    "STANDARD BRUSHED STEEL", "ECONOMY BURNISHED BRASS", "ECONOMY ANODIZED COPPER",
    "ECONOMY POLISHED STEEL", "ECONOMY PLATED TIN", "ECONOMY BRUSHED NICKEL",
    "MEDIUM BURNISHED TIN", "MEDIUM ANODIZED STEEL", "MEDIUM POLISHED COPPER",
    "MEDIUM PLATED BRASS", "MEDIUM BRUSHED NICKEL",
)

# attribute -> value pool, per dimension; "numeric" pools get range predicates
ATTRIBUTE_POOLS: Mapping[str, Mapping[str, tuple[str, ...]]] = {
    "Customer": {"c_nation_key": NATION_KEYS, "c_mkt_segment": MARKET_SEGMENTS},
    "Supplier": {"s_nation_key": NATION_KEYS, "s_region": REGIONS},
    "Date": {"d_date_name": DAY_NAMES, "d_month_name": MONTH_NAMES, "d_year": YEARS},
    "Part": {"p_type": PART_TYPES, "p_size": PART_SIZES},
}
_NUMERIC_ATTRS = {"c_nation_key", "s_nation_key", "d_year", "p_size"}
_ID_PREFIX = {"Customer": "c", "Supplier": "s", "Date": "d", "Part": "p"}
DIMENSIONS = tuple(ATTRIBUTE_POOLS)

XWEB_FACTS = 7000
XWEB_DIM_SIZES: Mapping[str, int] = {
    "Customer": 1000,
    "Supplier": 1000,
    "Date": 500,
    "Part": 1000,
}

SELECTIVITY_RANGE = (0.05, 0.50)


@dataclass(frozen=True)
class GenSpec:
    n_facts: int
    dim_sizes: Mapping[str, int]
    seed: int = 0


@dataclass(frozen=True)
class ConfigPreset:
    name: str
    n_facts: int
    n_queries: int
    n_joins: int
    n_predicates: int
    dim_sizes: Mapping[str, int]


def standard_meta() -> WarehouseMeta:
    return WarehouseMeta(
        fact_sets=(FactSetMeta(FACT_SET, MEASURES, DIMENSIONS),),
        dimensions=tuple(
            DimensionMeta(dim_id, (LevelMeta(BASE_LEVEL, tuple(pools)),))
            for dim_id, pools in ATTRIBUTE_POOLS.items()
        ),
    )


def generate_warehouse(spec: GenSpec) -> Warehouse:
    """Deterministically build a warehouse for the given spec."""
    if spec.n_facts < 0:
        raise InvalidSpecError(f"n_facts must be >= 0, got {spec.n_facts}")
    if set(spec.dim_sizes) != set(DIMENSIONS):
        raise InvalidSpecError(
            f"dim_sizes must cover exactly {sorted(DIMENSIONS)}, got {sorted(spec.dim_sizes)}"
        )
    for dim_id, size in spec.dim_sizes.items():
        if size < 1:
            raise InvalidSpecError(f"dimension {dim_id} needs at least 1 instance")

    dimensions: dict[str, DimensionDoc] = {}
    for dim_id in DIMENSIONS:
        rng = random.Random(f"{spec.seed}:dim:{dim_id}")
        prefix = _ID_PREFIX[dim_id]
        instances = tuple(
            Instance(
                instance_id=f"{prefix}{i}",
                attributes={
                    attr: rng.choice(pool)
                    for attr, pool in ATTRIBUTE_POOLS[dim_id].items()
                },
            )
            for i in range(1, spec.dim_sizes[dim_id] + 1)
        )
        dimensions[dim_id] = DimensionDoc(dim_id, (Level(BASE_LEVEL, instances),))

    rng = random.Random(f"{spec.seed}:facts")
    id_pools = {dim_id: [i.instance_id for i in doc.iter_instances()] for dim_id, doc in dimensions.items()}
    facts = tuple(
        Fact(
            fact_id=f"f{i}",
            measures={m: f"{rng.uniform(1, 1000):.2f}" for m in MEASURES},
            dim_refs={dim_id: rng.choice(id_pools[dim_id]) for dim_id in DIMENSIONS},
        )
        for i in range(1, spec.n_facts + 1)
    )
    return Warehouse(
        meta=standard_meta(),
        facts=(FactDoc(FACT_SET, facts),),
        dimensions=dimensions,
    )


def generate_xweb_full(seed: int = 0) -> Warehouse:
    """The full-size reference warehouse: 7000 facts over the standard dimensions."""
    return generate_warehouse(GenSpec(XWEB_FACTS, XWEB_DIM_SIZES, seed))


def _selectivity(pred: SelectionPredicate, dim: DimensionDoc) -> float:
    instances = list(dim.iter_instances())
    if not instances:
        return 0.0
    hits = sum(1 for inst in instances if pred.matches(inst.attributes))
    return hits / len(instances)


def _draw_predicate(rng, warehouse, dim_id, attribute, taken) -> SelectionPredicate:
    pool = ATTRIBUTE_POOLS[dim_id][attribute]
    ops = ("<", ">", "<=", ">=") if attribute in _NUMERIC_ATTRS else ("=",)
    dim = warehouse.dimensions[dim_id]
    lo, hi = SELECTIVITY_RANGE
    for _ in range(500):
        pred = SelectionPredicate(dim_id, attribute, rng.choice(ops), rng.choice(pool))
        if pred in taken:
            continue
        if lo <= _selectivity(pred, dim) <= hi:
            return pred
    raise InvalidSpecError(
        f"could not draw a predicate on {dim_id}/{attribute} with selectivity "
        f"in [{lo:.0%}, {hi:.0%}]"
    )


def generate_workload(
    warehouse: Warehouse,
    n_queries: int,
    n_joins: int,
    n_predicates: int,
    seed: int = 0,
) -> Workload:
    """Synthesize a workload with exact query/join/predicate counts.

    Every predicate in the drawn pool is used by at least one query, so the
    workload's distinct selection predicates number exactly ``n_predicates``;
    predicates cover all dimensions, at least two attributes per dimension
    when counts allow, and sit in the target selectivity band.
    """
    if n_queries < 1:
        raise InvalidSpecError("n_queries must be >= 1")
    if n_joins < n_queries or n_joins > n_queries * len(DIMENSIONS):
        raise InvalidSpecError(
            f"n_joins must lie in [{n_queries}, {n_queries * len(DIMENSIONS)}]"
        )
    if n_predicates < 2:
        raise InvalidSpecError("n_predicates must be >= 2")

    rng = random.Random(f"{seed}:workload")

    # one join per query, extras spread round-robin
    joins_per_query = [1] * n_queries
    extra = n_joins - n_queries
    i = 0
    while extra > 0:
        if joins_per_query[i % n_queries] < len(DIMENSIONS):
            joins_per_query[i % n_queries] += 1
            extra -= 1
        i += 1
    join_dims = [
        tuple(DIMENSIONS[(q + j) % len(DIMENSIONS)] for j in range(k))
        for q, k in enumerate(joins_per_query)
    ]

    pool: list[SelectionPredicate] = []
    taken: set[SelectionPredicate] = set()
    for k in range(n_predicates):
        dim_id = DIMENSIONS[k % len(DIMENSIONS)]
        attrs = tuple(ATTRIBUTE_POOLS[dim_id])
        attribute = attrs[(k // len(DIMENSIONS)) % len(attrs)]
        pred = _draw_predicate(rng, warehouse, dim_id, attribute, taken)
        pool.append(pred)
        taken.add(pred)
    by_dim: dict[str, list[SelectionPredicate]] = {}
    for pred in pool:
        by_dim.setdefault(pred.dim_id, []).append(pred)

    pair_floor = 0.03

    def joint_fraction(preds: Sequence[SelectionPredicate], dim_id: str) -> float:
        doc = warehouse.dimensions[dim_id]
        total = 0
        hits = 0
        for inst in doc.iter_instances():
            total += 1
            if all(p.matches(inst.attributes) for p in preds):
                hits += 1
        return hits / total if total else 0.0

    # group each dimension's predicates into combos (pairs whenever their
    # conjunction keeps workable selectivity, singles otherwise): queries
    # re-use whole combos, giving the workload the recurring predicate
    # combinations that frequency-weighted affinity feeds on
    combos: dict[str, list[tuple[SelectionPredicate, ...]]] = {}
    for dim_id, preds in by_dim.items():
        queue = list(preds)
        dim_combos = []
        while queue:
            chunk = [queue.pop(0)]
            for k, partner in enumerate(queue):
                if joint_fraction([chunk[0], partner], dim_id) >= pair_floor:
                    chunk.append(queue.pop(k))
                    break
            dim_combos.append(tuple(chunk))
        combos[dim_id] = dim_combos

    # every combo lands in at least one query (the workload's distinct
    # predicate count stays exact), then queries adopt recurring combos on
    # their remaining joined dimensions
    selections: list[list[SelectionPredicate]] = [[] for _ in range(n_queries)]
    for dim_id, dim_combos in combos.items():
        hosts = [q for q in range(n_queries) if dim_id in join_dims[q]]
        if not hosts:
            raise InvalidSpecError(
                f"no query joins dimension {dim_id}; increase n_queries or n_joins"
            )
        for k, combo in enumerate(dim_combos):
            selections[hosts[k % len(hosts)]].extend(combo)
    for q in range(n_queries):
        for dim_id in join_dims[q]:
            if any(p.dim_id == dim_id for p in selections[q]):
                continue
            adopt = not selections[q] or rng.random() < 0.7
            if combos.get(dim_id) and adopt:
                selections[q].extend(rng.choice(combos[dim_id]))

    queries = tuple(
        Query(
            query_id=f"q{q + 1}",
            selections=tuple(selections[q]),
            joins=tuple(JoinPredicate(FACT_SET, d) for d in join_dims[q]),
            frequency=rng.randint(1, 20),
        )
        for q in range(n_queries)
    )
    return Workload(queries=queries)


def load_presets(path: str | Path | None = None) -> dict[str, ConfigPreset]:
    """Read generation presets from a TOML file (the packaged one by default)."""
    if path is None:
        raw = resources.files("xwfrag").joinpath("presets.toml").read_bytes()
    else:
        raw = Path(path).read_bytes()
    data = tomllib.loads(raw.decode("utf-8"))
    presets = {}
    for name, entry in data.items():
        try:
            presets[name] = ConfigPreset(
                name=name,
                n_facts=int(entry["n_facts"]),
                n_queries=int(entry["n_queries"]),
                n_joins=int(entry["n_joins"]),
                n_predicates=int(entry["n_predicates"]),
                dim_sizes={d: int(s) for d, s in entry["dim_sizes"].items()},
            )
        except KeyError as exc:
            raise InvalidSpecError(f"preset {name!r} misses key {exc}") from exc
    return presets


def generate_preset(preset: ConfigPreset, seed: int = 0) -> tuple[Warehouse, Workload]:
    """Build the warehouse/workload pair a preset describes.

    The workload depends only on the seed and the dimension content, so
    presets sharing dimension sizes (fact-count variants) get identical
    workloads for the same seed.
    """
    warehouse = generate_warehouse(GenSpec(preset.n_facts, preset.dim_sizes, seed))
    workload = generate_workload(
        warehouse, preset.n_queries, preset.n_joins, preset.n_predicates, seed
    )
    return warehouse, workload
