"""xwfrag: workload-driven derived horizontal fragmentation for XML
star-schema data warehouses.

Dimensions are split by the workload's selection predicates, either through
minterms over a complete and minimal predicate set (predicate construction)
or through affinity clustering of co-used predicates (affinity based); fact
documents follow by semi-join on the dimension references. The resulting
layout ships with a machine-readable fragmentation schema used to route
queries, and a benchmark harness compares fragmented against monolithic
execution.
"""

from .ab import (
    AffinityMatrix,
    PredicateCycle,
    PredicateUsageMatrix,
    build_affinity,
    build_pum,
    build_schematic_table,
    cluster_predicates,
    compose_predicate_terms,
    fragment_dimension_ab,
)
from .bench import (
    BenchReport,
    QueryResult,
    QueryTiming,
    evaluate_query,
    gain_series,
    route_query,
    run_benchmark,
)
from .errors import (
    FragmentationError,
    IntegrityError,
    InvalidSpecError,
    MalformedXmlError,
    MissingDocumentError,
    ResultMismatchError,
    TooManyPredicatesError,
    UnknownAttributeError,
    UnknownDimensionError,
    WorkloadSyntaxError,
    XwfragError,
)
from .fragmenters import (
    AffinityFragmenter,
    BaseFragmenter,
    PredicateConstructionFragmenter,
    check_warehouse,
    check_workload,
)
from .fragments import (
    DimensionFragment,
    FragmentationSchema,
    WarehouseFragment,
    build_fragmentation_schema,
    emit_fragmentation_schema,
    fragment_facts,
    fragment_view,
    materialize_fragments,
    parse_fragmentation_schema,
    schema_memberships,
    validate_fragmentation,
)
from .generate import (
    ConfigPreset,
    GenSpec,
    generate_preset,
    generate_warehouse,
    generate_workload,
    generate_xweb_full,
    load_presets,
)
from .model import (
    DimensionDoc,
    Fact,
    FactDoc,
    Instance,
    Level,
    Violation,
    Warehouse,
    WarehouseMeta,
    validate_referential_integrity,
)
from .pc import com_min, fragment_dimension_pc, gen_minterms
from .predicates import (
    ElsePredicate,
    Minterm,
    PredicateTerm,
    SelectionPredicate,
    SignedPredicate,
)
from .workload import (
    JoinPredicate,
    Query,
    Workload,
    WorkloadWarning,
    attribute_predicates,
    extract_selection_predicates,
    parse_workload,
    render_workload,
)
from .xmlio import parse_warehouse, serialize_warehouse

__version__ = "0.1.0"
