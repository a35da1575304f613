"""Query evaluation, fragment routing and the benchmark harness.

Queries are evaluated by filtering each joined dimension's instances through
the query's selections and scanning the facts once against the resulting id
sets; smaller collections therefore cost less, which is exactly the effect
fragmentation is meant to buy. Timed runs re-parse their collection from disk
to simulate a cold cache, and the fragmented time under the simulated
parallel execution is the maximum over the touched fragments.
"""

from __future__ import annotations

import csv
import io
import statistics
import tempfile
import time
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ResultMismatchError, UnknownAttributeError, UnknownDimensionError, XwfragError
from .fragments import (
    SCHEMA_FILENAME,
    FragmentationSchema,
    build_fragmentation_schema,
    materialize_fragments,
    parse_fragmentation_schema,
)
from .fragmenters import AffinityFragmenter, PredicateConstructionFragmenter
from .generate import GenSpec, generate_warehouse
from .model import Warehouse
from .predicates import SelectionPredicate, conjunction_satisfiable, negate
from .workload import Query, Workload
from .xmlio import parse_warehouse, serialize_warehouse

# beyond this many negated-term combinations, ELSE routing gives up proving
# emptiness and conservatively keeps the fragment
ELSE_EXPANSION_LIMIT = 4096


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    fact_ids: frozenset[str]
    elapsed_ns: int


@dataclass(frozen=True)
class QueryTiming:
    query_id: str
    t_mono_ns: int
    t_frag_par_ns: int
    t_frag_ser_ns: int
    fragments_touched: int

    @property
    def gain_pct(self) -> float:
        if self.t_mono_ns == 0:
            return 0.0
        return 100.0 * (self.t_mono_ns - self.t_frag_par_ns) / self.t_mono_ns


@dataclass(frozen=True)
class BenchReport:
    method: str
    rows: tuple[QueryTiming, ...]

    @property
    def mean_gain_pct(self) -> float:
        if not self.rows:
            return 0.0
        return sum(r.gain_pct for r in self.rows) / len(self.rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["query_id", "t_mono_ns", "t_frag_par_ns", "t_frag_ser_ns",
             "fragments_touched", "gain_pct"]
        )
        for row in self.rows:
            writer.writerow(
                [row.query_id, row.t_mono_ns, row.t_frag_par_ns, row.t_frag_ser_ns,
                 row.fragments_touched, f"{row.gain_pct:.2f}"]
            )
        return out.getvalue()

    def summary(self) -> str:
        lines = [f"method={self.method} queries={len(self.rows)}"]
        for row in self.rows:
            lines.append(
                f"  {row.query_id}: mono={row.t_mono_ns / 1e6:.2f}ms "
                f"parallel={row.t_frag_par_ns / 1e6:.2f}ms "
                f"serial={row.t_frag_ser_ns / 1e6:.2f}ms "
                f"fragments={row.fragments_touched} gain={row.gain_pct:.1f}%"
            )
        lines.append(f"mean gain: {self.mean_gain_pct:.2f}%")
        return "\n".join(lines)


def evaluate_query(query: Query, warehouse: Warehouse) -> QueryResult:
    """Facts whose referenced instances pass all of the query's selections.

    A fact must join successfully on every joined dimension: its reference has
    to land inside the (selection-filtered) instance set of that dimension.
    """
    started = time.perf_counter_ns()
    allowed: dict[str, set[str]] = {}
    for join in query.joins:
        doc = warehouse.dimensions.get(join.dim_id)
        if doc is None:
            raise UnknownDimensionError(
                f"query {query.query_id} joins unknown dimension {join.dim_id!r}"
            )
        meta_dim = warehouse.meta.dimension(join.dim_id)
        selections = [s for s in query.selections if s.dim_id == join.dim_id]
        for sel in selections:
            if meta_dim is not None and sel.attribute not in meta_dim.attributes:
                raise UnknownAttributeError(
                    f"query {query.query_id}: attribute {sel.attribute!r} "
                    f"not declared by {join.dim_id!r}"
                )
        allowed[join.dim_id] = {
            inst.instance_id
            for inst in doc.iter_instances()
            if all(s.matches(inst.attributes) for s in selections)
        }

    fact_sets = {j.fact_set for j in query.joins}
    if len(fact_sets) > 1:
        raise XwfragError(f"query {query.query_id} joins several fact sets")
    fact_doc = warehouse.fact_doc(fact_sets.pop()) if fact_sets else None
    if fact_doc is None:
        raise XwfragError(f"query {query.query_id}: fact set not found in warehouse")

    matched = frozenset(
        fact.fact_id
        for fact in fact_doc.facts
        if all(fact.dim_refs.get(dim) in ids for dim, ids in allowed.items())
    )
    return QueryResult(query.query_id, matched, time.perf_counter_ns() - started)


def route_query(query: Query, schema: FragmentationSchema) -> tuple[str, ...]:
    """Fragments a query must visit, from the schema document alone.

    A fragment is kept unless, on some dimension both the query and the
    fragment constrain, the query's selections contradict the fragment's
    stored predicates. Dimensions the query leaves unconstrained never
    exclude a fragment.
    """
    sel_by_dim: dict[str, list[SelectionPredicate]] = {}
    for sel in query.selections:
        sel_by_dim.setdefault(sel.dim_id, []).append(sel)

    terms_by_dim: dict[str, list[tuple[SelectionPredicate, ...]]] = {}
    for fragment in schema.fragments:
        for dim in fragment.dimensions:
            if not dim.is_else and dim.predicates:
                entries = terms_by_dim.setdefault(dim.dim_id, [])
                if dim.predicates not in entries:
                    entries.append(dim.predicates)

    # fragments share few distinct per-dimension predicate lists; decide each
    # (dimension, predicate list) pair once
    verdict: dict[tuple[str, tuple], bool] = {}

    def dim_satisfiable(dim) -> bool:
        selections = sel_by_dim.get(dim.dim_id)
        if not selections:
            return True
        key = (dim.dim_id, ("ELSE",) if dim.is_else else dim.predicates)
        cached = verdict.get(key)
        if cached is None:
            if dim.is_else:
                cached = _else_satisfiable(selections, terms_by_dim.get(dim.dim_id, []))
            else:
                cached = conjunction_satisfiable([*selections, *dim.predicates])
            verdict[key] = cached
        return cached

    routed = []
    for fragment in schema.fragments:
        if all(dim_satisfiable(dim) for dim in fragment.dimensions):
            routed.append(fragment.fragment_id)
    return tuple(routed)


def _else_satisfiable(
    selections: Sequence[SelectionPredicate],
    terms: Sequence[tuple[SelectionPredicate, ...]],
) -> bool:
    """Whether the selections can hold outside every term of the dimension.

    The negated conjunctions are expanded distributively: one negated atom is
    picked per term and each combination is tested. Past the expansion limit
    the fragment is conservatively considered reachable.
    """
    if not terms:
        return conjunction_satisfiable(selections)
    size = 1
    for term in terms:
        size *= len(term)
        if size > ELSE_EXPANSION_LIMIT:
            return True
    for choice in product(*terms):
        atoms = list(selections) + [negate(a) for a in choice]
        if conjunction_satisfiable(atoms):
            return True
    return False


def _timed_evaluation(query: Query, collection_dir: Path) -> tuple[int, QueryResult]:
    started = time.perf_counter_ns()
    warehouse = parse_warehouse(collection_dir, validate=False)
    result = evaluate_query(query, warehouse)
    return time.perf_counter_ns() - started, result


def run_benchmark(
    mono_dir: str | Path,
    frag_dir: str | Path,
    workload: Workload,
    repeats: int = 3,
) -> BenchReport:
    """Benchmark a workload over a monolithic and a fragmented warehouse.

    Before any timing is reported, each query's fragmented result (union over
    the routed fragments) is checked for exact equality with the monolithic
    result; a mismatch aborts with ResultMismatchError. Per query and repeat,
    a run re-parses its collection (cold cache) and evaluates; the reported
    numbers are medians over at least three repeats.
    """
    if repeats < 3:
        raise ValueError(f"repeats must be >= 3 for stable medians, got {repeats}")
    mono_dir = Path(mono_dir)
    frag_dir = Path(frag_dir)
    schema = parse_fragmentation_schema(frag_dir / SCHEMA_FILENAME)
    monolith = parse_warehouse(mono_dir)

    routed_of = {q.query_id: route_query(q, schema) for q in workload.queries}
    expected_of = {
        q.query_id: evaluate_query(q, monolith).fact_ids for q in workload.queries
    }
    # routing correctness: the union over routed fragments must reconstruct
    # the monolithic result exactly; each fragment collection is parsed once
    # and evaluated for every query routed to it
    queries_of_fragment: dict[str, list[Query]] = {}
    for query in workload.queries:
        for fragment_id in routed_of[query.query_id]:
            queries_of_fragment.setdefault(fragment_id, []).append(query)
    union_of: dict[str, set[str]] = {q.query_id: set() for q in workload.queries}
    for fragment_id, queries in queries_of_fragment.items():
        collection = parse_warehouse(frag_dir / fragment_id, validate=False)
        for query in queries:
            union_of[query.query_id] |= evaluate_query(query, collection).fact_ids
    for query in workload.queries:
        expected = expected_of[query.query_id]
        union = union_of[query.query_id]
        if union != expected:
            missing = sorted(expected - union)[:5]
            extra = sorted(union - expected)[:5]
            raise ResultMismatchError(
                f"query {query.query_id}: fragmented result differs from monolithic "
                f"(missing {missing}, extra {extra})"
            )

    rows = []
    for query in workload.queries:
        routed = routed_of[query.query_id]
        mono_times, par_times, ser_times = [], [], []
        for _ in range(repeats):
            elapsed, _ = _timed_evaluation(query, mono_dir)
            mono_times.append(elapsed)
            per_fragment = [
                _timed_evaluation(query, frag_dir / fragment_id)[0]
                for fragment_id in routed
            ]
            par_times.append(max(per_fragment, default=0))
            ser_times.append(sum(per_fragment))
        rows.append(
            QueryTiming(
                query_id=query.query_id,
                t_mono_ns=int(statistics.median(mono_times)),
                t_frag_par_ns=int(statistics.median(par_times)),
                t_frag_ser_ns=int(statistics.median(ser_times)),
                fragments_touched=len(routed),
            )
        )
    return BenchReport(method=schema.method, rows=tuple(rows))


def fragmenter_for(method: str):
    if method == "pc":
        return PredicateConstructionFragmenter()
    if method == "ab":
        return AffinityFragmenter()
    raise ValueError(f"unknown method {method!r}; expected 'pc' or 'ab'")


def fragment_to_directory(
    warehouse: Warehouse, workload: Workload, method: str, out_dir: str | Path
):
    """Fit, transform and materialize in one step; returns (fragments, schema)."""
    fragmenter = fragmenter_for(method)
    fragments = fragmenter.fit(warehouse, workload).transform(warehouse)
    schema = build_fragmentation_schema(fragments, method)
    materialize_fragments(warehouse, fragments, schema, out_dir)
    return fragments, schema


def gain_series(
    sizes: Sequence[int],
    method: str,
    workload: Workload,
    dim_sizes: Mapping[str, int],
    seed: int = 0,
    repeats: int = 3,
) -> list[tuple[int, float]]:
    """Mean fragmentation gain per fact count, for one method.

    Each size gets a freshly generated warehouse (same seed, so dimensions are
    shared across sizes), a fresh layout and a full benchmark run.
    """
    rows = []
    for size in sizes:
        warehouse = generate_warehouse(GenSpec(size, dim_sizes, seed))
        with tempfile.TemporaryDirectory(prefix="xwfrag-series-") as scratch:
            mono = Path(scratch) / "mono"
            frags = Path(scratch) / "frags"
            serialize_warehouse(warehouse, mono)
            fragment_to_directory(warehouse, workload, method, frags)
            report = run_benchmark(mono, frags, workload, repeats=repeats)
        rows.append((size, report.mean_gain_pct))
    return rows


def gain_series_csv(rows_by_method: Mapping[str, Sequence[tuple[int, float]]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n_facts", "method", "gain_pct"])
    for method in sorted(rows_by_method):
        for size, gain in rows_by_method[method]:
            writer.writerow([size, method, f"{gain:.2f}"])
    return out.getvalue()
