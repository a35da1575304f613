"""Predicate-construction primary horizontal fragmentation.

A dimension's workload predicates are first reduced to a complete and minimal
subset (two instances satisfying the same reduced predicates satisfy the same
original ones, and nothing can be removed without merging instance classes).
All sign assignments over the reduced set are then enumerated as minterms,
contradictory ones pruned, and each instance lands in the unique minterm it
satisfies.
"""

from __future__ import annotations

from itertools import combinations, product
from typing import Sequence

from .errors import FragmentationError, TooManyPredicatesError
from .fragments import DimensionFragment
from .model import DimensionDoc
from .predicates import (
    Minterm,
    SelectionPredicate,
    SignedPredicate,
    conjunction_satisfiable,
)

# largest predicate set searched exhaustively for a smallest equivalent subset;
# beyond it, iterated redundancy elimination is used instead
EXACT_MINIMALITY_LIMIT = 12

MAX_MINTERM_PREDICATES = 20


def _satisfaction_masks(
    predicates: Sequence[SelectionPredicate], dim: DimensionDoc
) -> tuple[list[int], int]:
    instances = list(dim.iter_instances())
    masks = []
    for pred in predicates:
        mask = 0
        for i, inst in enumerate(instances):
            if pred.matches(inst.attributes):
                mask |= 1 << i
        masks.append(mask)
    return masks, len(instances)


def _partition(masks: Sequence[int], n_instances: int) -> frozenset[int]:
    blocks = [(1 << n_instances) - 1] if n_instances else []
    for mask in masks:
        refined = []
        for block in blocks:
            inside = block & mask
            outside = block & ~mask
            if inside:
                refined.append(inside)
            if outside:
                refined.append(outside)
        blocks = refined
    return frozenset(blocks)


def com_min(
    predicates: Sequence[SelectionPredicate], dim: DimensionDoc
) -> tuple[SelectionPredicate, ...]:
    """Reduce a dimension's predicate set to a complete and minimal subset.

    The result induces exactly the same partition of the dimension's instances
    as the full set (completeness) and no member can be dropped without
    coarsening it (minimality). Small inputs are solved exactly: subsets are
    enumerated by ascending size and the first one reproducing the partition
    wins, so the output is a smallest equivalent subset. Larger inputs fall
    back to repeatedly discarding redundant predicates in input order.
    """
    deduped = list(dict.fromkeys(predicates))
    for pred in deduped:
        if pred.dim_id != dim.dim_id:
            raise ValueError(f"predicate on {pred.dim_id!r} applied to {dim.dim_id!r}")
    masks, n = _satisfaction_masks(deduped, dim)
    target = _partition(masks, n)

    if len(deduped) <= EXACT_MINIMALITY_LIMIT:
        for size in range(len(deduped) + 1):
            for combo in combinations(range(len(deduped)), size):
                if _partition([masks[i] for i in combo], n) == target:
                    return tuple(deduped[i] for i in combo)

    kept = list(range(len(deduped)))
    changed = True
    while changed:
        changed = False
        for i in list(kept):
            trial = [j for j in kept if j != i]
            if _partition([masks[j] for j in trial], n) == target:
                kept = trial
                changed = True
    return tuple(deduped[i] for i in kept)


def gen_minterms(
    predicates: Sequence[SelectionPredicate], limit: int = MAX_MINTERM_PREDICATES
) -> tuple[Minterm, ...]:
    """All satisfiable sign assignments over a predicate set.

    Enumeration is exponential in the set size and refuses to run past
    ``limit``. Predicates are ordered by (dimension, attribute, operator,
    literal) so output is independent of input order.
    """
    ordered = sorted(dict.fromkeys(predicates), key=lambda p: p.sort_key())
    if len(ordered) > limit:
        raise TooManyPredicatesError(
            f"{len(ordered)} predicates would require 2^{len(ordered)} minterms "
            f"(limit {limit})"
        )
    minterms = []
    for signs in product((True, False), repeat=len(ordered)):
        conjuncts = tuple(
            SignedPredicate(pred, positive) for pred, positive in zip(ordered, signs)
        )
        if conjunction_satisfiable(conjuncts):
            minterms.append(Minterm(conjuncts))
    return tuple(minterms)


def fragment_dimension_pc(
    dim: DimensionDoc, minterms: Sequence[Minterm]
) -> tuple[list[DimensionFragment], list[Minterm]]:
    """Partition a dimension's instances by minterm.

    Returns the non-empty fragments in minterm order plus the minterms that
    matched nothing. Every instance must satisfy exactly one minterm; an
    instance matching a pruned sign pattern (possible only for data outside
    the supported value semantics) raises FragmentationError.
    """
    if not minterms:
        raise ValueError("no minterms given")
    order = [c.predicate for c in minterms[0].conjuncts]
    by_signs = {
        tuple(c.positive for c in m.conjuncts): k for k, m in enumerate(minterms)
    }
    buckets: dict[int, list[str]] = {}
    for inst in dim.iter_instances():
        signs = tuple(p.matches(inst.attributes) for p in order)
        k = by_signs.get(signs)
        if k is None:
            raise FragmentationError(
                f"instance {dim.dim_id}/{inst.instance_id} matches a sign pattern "
                f"pruned as unsatisfiable; its values fall outside the supported "
                f"comparison semantics"
            )
        buckets.setdefault(k, []).append(inst.instance_id)

    fragments = []
    empty = []
    for k, minterm in enumerate(minterms):
        members = buckets.get(k)
        if members:
            fragments.append(
                DimensionFragment(
                    fragment_id=f"{dim.dim_id}-m{k + 1}",
                    dim_id=dim.dim_id,
                    predicate=minterm,
                    instance_ids=frozenset(members),
                )
            )
        else:
            empty.append(minterm)
    return fragments, empty
