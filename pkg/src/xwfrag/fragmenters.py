"""Fragmenter estimators with the scikit-learn fit/transform contract.

``fit(warehouse, workload)`` learns a per-dimension fragmentation from the
workload's selection predicates; ``transform(warehouse)`` derives the fact
fragments by semi-join. Both fragmenters expose ``get_params``/``set_params``
and fitted attributes with trailing underscores, so they clone and compose
like any other estimator.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import ab, pc
from .errors import FragmentationError, IntegrityError
from .fragments import WarehouseFragment, build_fragmentation_schema, fragment_facts
from .model import Warehouse, validate_referential_integrity
from .workload import Workload, attribute_predicates, extract_selection_predicates


def check_warehouse(X) -> Warehouse:
    """Validate an input warehouse: right type, referentially sound, one fact set."""
    if not isinstance(X, Warehouse):
        raise TypeError(f"expected a Warehouse, got {type(X).__name__}")
    violations = validate_referential_integrity(X)
    if violations:
        raise IntegrityError(violations)
    if len(X.facts) != 1:
        raise FragmentationError(
            f"fragmentation expects exactly one fact set, found {len(X.facts)}"
        )
    return X


def check_workload(y, warehouse: Warehouse) -> Workload:
    """Validate the supervising workload against the warehouse metadata."""
    if not isinstance(y, Workload):
        raise TypeError(f"expected a Workload, got {type(y).__name__}")
    for query in y.queries:
        for join in query.joins:
            if warehouse.meta.dimension(join.dim_id) is None:
                raise FragmentationError(
                    f"query {query.query_id} joins unknown dimension {join.dim_id!r}"
                )
    # raises UnknownDimension/UnknownAttribute on unresolvable predicates
    attribute_predicates(extract_selection_predicates(y), warehouse.meta)
    return y


class BaseFragmenter(BaseEstimator, TransformerMixin):
    """Shared fit/transform plumbing; subclasses fragment one dimension."""

    method: str = ""

    def fit(self, X, y=None):
        """Learn dimension fragments from a warehouse and its workload.

        Parameters
        ----------
        X : Warehouse
        y : Workload
            The analytical workload whose selection predicates drive the
            fragmentation. Required.
        """
        if y is None:
            raise ValueError("a Workload is required to fit a fragmenter")
        X = check_warehouse(X)
        y = check_workload(y, X)
        predicates = extract_selection_predicates(y)
        per_dim = attribute_predicates(predicates, X.meta)

        self.predicates_ = predicates
        self.per_dimension_predicates_ = per_dim
        self.candidate_dimensions_ = tuple(sorted(per_dim))
        fragments = {}
        dropped = {}
        for dim_id in self.candidate_dimensions_:
            frags, empty = self._fragment_dimension(
                X.dimensions[dim_id], per_dim[dim_id], y
            )
            fragments[dim_id] = tuple(frags)
            dropped[dim_id] = tuple(empty)
        self.dimension_fragments_ = fragments
        self.empty_fragments_ = dropped
        return self

    def transform(self, X) -> list[WarehouseFragment]:
        """Split a warehouse's facts along the fitted dimension fragments."""
        check_is_fitted(self, "dimension_fragments_")
        X = check_warehouse(X)
        return fragment_facts(X.facts[0], self.dimension_fragments_)

    def fragmentation_schema(self, fragments):
        return build_fragmentation_schema(fragments, self.method)

    def _fragment_dimension(self, dim, predicates, workload):
        raise NotImplementedError


class PredicateConstructionFragmenter(BaseFragmenter):
    """Fragment dimensions by minterms over a complete, minimal predicate set.

    Parameters
    ----------
    max_predicates : int, default 20
        Upper bound on the reduced predicate set of a single dimension;
        minterm enumeration is exponential and refuses to run past it.
    """

    method = "pc"

    def __init__(self, max_predicates: int = pc.MAX_MINTERM_PREDICATES):
        self.max_predicates = max_predicates

    def _fragment_dimension(self, dim, predicates, workload):
        reduced = pc.com_min(predicates, dim)
        minterms = pc.gen_minterms(reduced, limit=self.max_predicates)
        return pc.fragment_dimension_pc(dim, minterms)


class AffinityFragmenter(BaseFragmenter):
    """Fragment dimensions by predicate terms clustered from workload affinity."""

    method = "ab"

    def __init__(self):
        pass

    def fit(self, X, y=None):
        self.usage_matrices_ = {}
        self.affinity_matrices_ = {}
        return super().fit(X, y)

    def _fragment_dimension(self, dim, predicates, workload):
        pum = ab.build_pum(workload, predicates)
        aff = ab.build_affinity(pum)
        self.usage_matrices_[dim.dim_id] = pum
        self.affinity_matrices_[dim.dim_id] = aff
        clustering = ab.cluster_predicates(aff)
        table = ab.build_schematic_table(clustering.cycles, predicates)
        terms, else_pred = ab.compose_predicate_terms(table, clustering.cycles, predicates)
        return ab.fragment_dimension_ab(dim, terms, else_pred)
