"""Affinity-based primary horizontal fragmentation.

Workload statistics drive this method: a query/predicate usage matrix and its
frequency vector are condensed into a predicate affinity matrix, affine
predicates are clustered into cycles on the affinity graph, each cycle is
extended into predicate terms covering all attributes in play, and the terms
plus a catch-all ELSE predicate fragment the dimension.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .fragments import DimensionFragment
from .model import DimensionDoc
from .predicates import ElsePredicate, PredicateTerm, SelectionPredicate, implies
from .workload import Workload

IMPLIES = "=>"
IMPLIED_BY = "<="
SIMILAR = "*"


@dataclass
class PredicateUsageMatrix:
    """Boolean query-by-predicate usage with per-query frequencies."""

    query_ids: tuple[str, ...]
    predicates: tuple[SelectionPredicate, ...]
    matrix: np.ndarray  # bool, shape (m, n)
    freq: np.ndarray  # int, shape (m,)


@dataclass
class AffinityMatrix:
    """Pairwise predicate affinity: frequency sums with relation overrides.

    A cell holds the summed frequency of queries using both predicates unless
    the pair is logically related, in which case it holds an implication
    marker or the similarity marker.
    """

    predicates: tuple[SelectionPredicate, ...]
    values: np.ndarray  # int, shape (n, n)
    relations: dict[tuple[int, int], str]

    def cell(self, i: int, j: int):
        return self.relations.get((i, j), int(self.values[i, j]))


@dataclass(frozen=True)
class PredicateCycle:
    cycle_id: str
    members: tuple[int, ...]


@dataclass
class SchematicTable:
    """Attribute usage per cycle: the basis for composing predicate terms."""

    cycle_ids: tuple[str, ...]
    attributes: tuple[str, ...]
    cells: np.ndarray  # bool, shape (len(cycle_ids), len(attributes))


@dataclass
class ClusteringResult:
    cycles: tuple[PredicateCycle, ...]
    unclustered: tuple[int, ...]


def build_pum(workload: Workload, predicates: Sequence[SelectionPredicate]) -> PredicateUsageMatrix:
    predicates = tuple(predicates)
    column = {pred: j for j, pred in enumerate(predicates)}
    matrix = np.zeros((len(workload.queries), len(predicates)), dtype=bool)
    freq = np.zeros(len(workload.queries), dtype=np.int64)
    for i, query in enumerate(workload.queries):
        freq[i] = query.frequency
        for sel in query.selections:
            j = column.get(sel)
            if j is not None:
                matrix[i, j] = True
    return PredicateUsageMatrix(
        query_ids=tuple(q.query_id for q in workload.queries),
        predicates=predicates,
        matrix=matrix,
        freq=freq,
    )


def _similar(pum: PredicateUsageMatrix, i: int, j: int) -> bool:
    """Same-attribute predicates bridged by a shared companion predicate.

    Requires a companion on a different attribute such that one query pairs it
    with the first predicate and a distinct query pairs it with the second.
    """
    p, q = pum.predicates[i], pum.predicates[j]
    if (p.dim_id, p.attribute) != (q.dim_id, q.attribute):
        return False
    m = pum.matrix
    for c, companion in enumerate(pum.predicates):
        if c in (i, j):
            continue
        if (companion.dim_id, companion.attribute) == (p.dim_id, p.attribute):
            continue
        with_i = m[:, i] & m[:, c]
        with_j = m[:, j] & m[:, c]
        if with_i.any() and with_j.any() and (with_i | with_j).sum() >= 2:
            return True
    return False


def build_affinity(pum: PredicateUsageMatrix) -> AffinityMatrix:
    """Condense the usage matrix into the affinity matrix.

    Numeric cells sum the frequencies of queries using both predicates; the
    diagonal therefore holds each predicate's total usage frequency.
    Same-attribute pairs are first tested for entailment (implication markers)
    and then for similarity, which take precedence over the numeric value.
    """
    weighted = pum.matrix.astype(np.int64) * pum.freq[:, None]
    values = weighted.T @ pum.matrix.astype(np.int64)
    relations: dict[tuple[int, int], str] = {}
    n = len(pum.predicates)
    for i in range(n):
        for j in range(i + 1, n):
            p, q = pum.predicates[i], pum.predicates[j]
            fwd, back = implies(p, q), implies(q, p)
            if fwd:
                relations[(i, j)] = IMPLIES
                relations[(j, i)] = IMPLIED_BY
            elif back:
                relations[(i, j)] = IMPLIED_BY
                relations[(j, i)] = IMPLIES
            elif _similar(pum, i, j):
                relations[(i, j)] = SIMILAR
                relations[(j, i)] = SIMILAR
    return AffinityMatrix(predicates=pum.predicates, values=values, relations=relations)


class _Forest:
    def __init__(self):
        self.parent: dict[tuple[int, ...], tuple[int, ...]] = {}
        self.adjacency: dict[tuple[int, ...], dict[tuple[int, ...], int]] = {}

    def add(self, node):
        self.parent.setdefault(node, node)
        self.adjacency.setdefault(node, {})

    def find(self, node):
        root = node
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[node] != root:
            self.parent[node], node = root, self.parent[node]
        return root

    def link(self, a, b, weight):
        self.add(a)
        self.add(b)
        self.adjacency[a][b] = weight
        self.adjacency[b][a] = weight
        self.parent[self.find(a)] = self.find(b)

    def path(self, start, goal):
        """Nodes along the unique-ish tree path (BFS, deterministic order)."""
        previous = {start: None}
        queue = [start]
        while queue:
            node = queue.pop(0)
            if node == goal:
                break
            for neighbor in sorted(self.adjacency[node]):
                if neighbor not in previous:
                    previous[neighbor] = node
                    queue.append(neighbor)
        path = [goal]
        while previous[path[-1]] is not None:
            path.append(previous[path[-1]])
        return path

    def path_min_weight(self, path):
        return min(
            self.adjacency[a][b] for a, b in zip(path, path[1:])
        )


def cluster_predicates(aff: AffinityMatrix) -> ClusteringResult:
    """Group predicates into cycles on the affinity graph.

    Positive-affinity edges are taken by descending weight while growing a
    spanning forest; an edge closing a loop opens a cycle candidate, which
    later edges extend only while at least as heavy as the candidate's weakest
    internal edge. Cut candidates are emitted as cycles; leftover connected
    predicates pair up as residual cycles and everything else is reported
    unclustered. Predicates related by implication or similarity are merged
    into one clustering node up front (their affinity rows summed) and
    expanded back into the emitted cycles.
    """
    n = len(aff.predicates)
    merged = _merge_related(n, aff.relations)
    weight: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}
    for a, b in product(merged, merged):
        if a < b:
            w = int(sum(aff.values[i, j] for i in a for j in b))
            if w > 0:
                weight[(a, b)] = w
    edges = sorted(weight.items(), key=lambda kv: (-kv[1], kv[0]))

    forest = _Forest()
    for node in merged:
        forest.add(node)
    frozen: set[tuple[int, ...]] = set()
    emitted: list[set[tuple[int, ...]]] = []
    active_nodes: set[tuple[int, ...]] | None = None
    active_min = 0

    def cut():
        nonlocal active_nodes
        emitted.append(active_nodes)
        frozen.update(active_nodes)
        active_nodes = None

    for (a, b), w in edges:
        if active_nodes is not None:
            touches = a in active_nodes or b in active_nodes
            if touches and w >= active_min and not ({a, b} & frozen):
                active_nodes |= {a, b}
                active_min = min(active_min, w)
                forest.link(a, b, w)
                continue
            cut()
        if a in frozen or b in frozen:
            continue
        if forest.find(a) != forest.find(b):
            forest.link(a, b, w)
        else:
            path = forest.path(a, b)
            active_nodes = set(path)
            active_min = min(w, forest.path_min_weight(path))
    if active_nodes is not None:
        cut()

    # leftover connected groups (and lone relation-merged groups) become
    # residual cycles; lone single predicates stay unclustered
    leftover_adj = {
        node: [nb for nb in forest.adjacency[node] if nb not in frozen]
        for node in merged
        if node not in frozen
    }
    seen: set[tuple[int, ...]] = set()
    for node in sorted(leftover_adj):
        if node in seen:
            continue
        component = []
        stack = [node]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            component.append(current)
            stack.extend(leftover_adj[current])
        if len(component) > 1 or len(component[0]) > 1:
            emitted.append(set(component))

    cycles = []
    clustered: set[int] = set()
    for k, nodes in enumerate(emitted, start=1):
        members = tuple(sorted(i for node in nodes for i in node))
        if len(members) < 2:
            continue
        cycles.append(PredicateCycle(cycle_id=f"c{k}", members=members))
        clustered.update(members)
    unclustered = tuple(i for i in range(n) if i not in clustered)
    return ClusteringResult(cycles=tuple(cycles), unclustered=unclustered)


def _merge_related(n: int, relations: dict[tuple[int, int], str]) -> list[tuple[int, ...]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j) in relations:
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(sorted(g)) for g in groups.values())


def build_schematic_table(
    cycles: Sequence[PredicateCycle], predicates: Sequence[SelectionPredicate]
) -> SchematicTable:
    """Mark, per cycle, which of the predicate set's attributes it touches."""
    attributes = tuple(dict.fromkeys(p.attribute for p in predicates))
    position = {a: k for k, a in enumerate(attributes)}
    cells = np.zeros((len(cycles), len(attributes)), dtype=bool)
    for r, cycle in enumerate(cycles):
        for i in cycle.members:
            cells[r, position[predicates[i].attribute]] = True
    return SchematicTable(
        cycle_ids=tuple(c.cycle_id for c in cycles),
        attributes=attributes,
        cells=cells,
    )


def compose_predicate_terms(
    table: SchematicTable,
    cycles: Sequence[PredicateCycle],
    predicates: Sequence[SelectionPredicate],
) -> tuple[tuple[PredicateTerm, ...], ElsePredicate]:
    """Extend each cycle over all attributes in play into predicate terms.

    Each term takes exactly one predicate per attribute: for attributes the
    cycle covers, one of the cycle's own predicates on it (several members on
    one attribute are alternatives, multiplied out); for attributes the cycle
    misses, one of the whole set's predicates on it (the sub-cycles). One
    predicate per attribute keeps every term satisfiable. The ELSE predicate
    matches whatever no term matches, guaranteeing completeness.
    """
    terms: list[PredicateTerm] = []
    for r, cycle in enumerate(cycles):
        members = [predicates[i] for i in cycle.members]
        covered: dict[str, list[SelectionPredicate]] = {}
        for member in members:
            covered.setdefault(member.attribute, []).append(member)
        pools = list(covered.values())
        for k, attribute in enumerate(table.attributes):
            if not table.cells[r, k]:
                pools.append([p for p in predicates if p.attribute == attribute])
        for choice in product(*pools):
            terms.append(PredicateTerm(tuple(choice), source_cycle=cycle.cycle_id))
    return tuple(terms), ElsePredicate(tuple(terms))


def term_order_key(term: PredicateTerm) -> tuple[str, ...]:
    return tuple(atom.render() for atom in term.atoms())


def fragment_dimension_ab(
    dim: DimensionDoc,
    terms: Sequence[PredicateTerm],
    else_pred: ElsePredicate,
) -> tuple[list[DimensionFragment], list[PredicateTerm]]:
    """Assign each instance to its first matching term, or to the ELSE fragment.

    First-match assignment makes fragments disjoint; ELSE makes them complete.
    Terms are tried in a canonical order (sorted by their rendered text), so
    the assignment can be reproduced from the emitted schema alone. Terms
    matching nothing are returned separately instead of producing empty
    fragments.
    """
    terms = sorted(dict.fromkeys(terms), key=term_order_key)
    buckets: dict[int, list[str]] = {}
    leftovers: list[str] = []
    for inst in dim.iter_instances():
        for k, term in enumerate(terms):
            if term.matches(inst.attributes):
                buckets.setdefault(k, []).append(inst.instance_id)
                break
        else:
            leftovers.append(inst.instance_id)

    fragments = []
    empty = []
    for k, term in enumerate(terms):
        members = buckets.get(k)
        if members:
            fragments.append(
                DimensionFragment(
                    fragment_id=f"{dim.dim_id}-t{k + 1}",
                    dim_id=dim.dim_id,
                    predicate=term,
                    instance_ids=frozenset(members),
                )
            )
        else:
            empty.append(term)
    if leftovers:
        fragments.append(
            DimensionFragment(
                fragment_id=f"{dim.dim_id}-else",
                dim_id=dim.dim_id,
                predicate=else_pred,
                instance_ids=frozenset(leftovers),
            )
        )
    return fragments, empty


def pum_to_csv(pum: PredicateUsageMatrix) -> str:
    out = io.StringIO()
    header = ["query"] + [p.render() for p in pum.predicates] + ["freq"]
    out.write(",".join(_csv_quote(h) for h in header) + "\n")
    for i, query_id in enumerate(pum.query_ids):
        row = [query_id]
        row.extend("1" if pum.matrix[i, j] else "0" for j in range(len(pum.predicates)))
        row.append(str(int(pum.freq[i])))
        out.write(",".join(_csv_quote(c) for c in row) + "\n")
    return out.getvalue()


def affinity_to_csv(aff: AffinityMatrix) -> str:
    out = io.StringIO()
    labels = [p.render() for p in aff.predicates]
    out.write(",".join(_csv_quote(h) for h in ["predicate"] + labels) + "\n")
    for i, label in enumerate(labels):
        row = [label] + [str(aff.cell(i, j)) for j in range(len(labels))]
        out.write(",".join(_csv_quote(c) for c in row) + "\n")
    return out.getvalue()


def _csv_quote(cell: str) -> str:
    if "," in cell or '"' in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell
