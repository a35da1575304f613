"""Parser for the restricted analytical query language.

A workload file is a sequence of FLWOR blocks, each optionally preceded by a
pragma comment carrying an id and a usage frequency::

    (: id=q1 freq=10 :)
    for $x in //FactDoc/Fact,
        $y in //dimensions[@dim-id='Customer']/Level/instance
    where $y/attribute[@id='c_nation_key']/@value = '13'
    and $x/dimension[@dim-id='Customer']/@value-id = $y/@id
    return $x

Conditions are either attribute selections against a string literal or
fact-to-dimension joins on the value-id reference. Nothing else (aggregation,
nesting, ordering, general XPath) is accepted.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from .errors import UnknownAttributeError, UnknownDimensionError, WorkloadSyntaxError
from .model import WarehouseMeta
from .predicates import OPS, SelectionPredicate


class WorkloadWarning(UserWarning):
    """A query is inconsistent (variable bindings vs. metadata) but salvageable."""


@dataclass(frozen=True)
class JoinPredicate:
    fact_set: str
    dim_id: str


@dataclass(frozen=True)
class Query:
    query_id: str
    selections: tuple[SelectionPredicate, ...]
    joins: tuple[JoinPredicate, ...]
    frequency: int = 1

    @property
    def join_dims(self) -> tuple[str, ...]:
        return tuple(j.dim_id for j in self.joins)


@dataclass(frozen=True)
class Workload:
    queries: tuple[Query, ...] = field(default=())


_PRAGMA = re.compile(r"\(:\s*(.*?)\s*:\)", re.DOTALL)
_PRAGMA_PAIR = re.compile(r"([A-Za-z_]\w*)\s*=\s*([^\s]+)")
_VAR = re.compile(r"\$([A-Za-z_]\w*)")
_FACT_PATH = re.compile(r"//FactDoc/Fact")
_DIM_PATH = re.compile(r"//dimensions\[@dim-id='([^']+)'\]/Level/instance")
_ATTR_TAIL = re.compile(r"/attribute\[@id='([^']+)'\]/@value")
_JOIN_TAIL = re.compile(r"/dimension\[@dim-id='([^']+)'\]/@value-id")
_ID_TAIL = re.compile(r"/@id")
_OP = re.compile(r"<=|>=|!=|=|<|>")
_LITERAL = re.compile(r"'([^']+)'")
_COMMA = re.compile(r",")


def _keyword(word: str) -> re.Pattern[str]:
    return re.compile(rf"{word}\b")


_FOR, _IN, _WHERE, _AND, _RETURN = map(_keyword, ["for", "in", "where", "and", "return"])


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self._skip_ws()
        return self.pos >= len(self.text)

    def peek(self, pattern: re.Pattern[str]):
        self._skip_ws()
        return pattern.match(self.text, self.pos)

    def accept(self, pattern: re.Pattern[str]):
        m = self.peek(pattern)
        if m is not None:
            self.pos = m.end()
        return m

    def expect(self, pattern: re.Pattern[str], what: str) -> re.Match[str]:
        m = self.accept(pattern)
        if m is None:
            self.fail(f"expected {what}")
        return m

    def location(self) -> tuple[int, int]:
        line = self.text.count("\n", 0, self.pos) + 1
        column = self.pos - self.text.rfind("\n", 0, self.pos)
        return line, column

    def fail(self, message: str):
        self._skip_ws()
        line, column = self.location()
        raise WorkloadSyntaxError(message, line=line, column=column)


def _parse_pragma(scanner: _Scanner) -> dict[str, str]:
    m = scanner.accept(_PRAGMA)
    if m is None:
        return {}
    pairs = dict(_PRAGMA_PAIR.findall(m.group(1)))
    unknown = set(pairs) - {"id", "freq"}
    if unknown:
        scanner.fail(f"unknown pragma key(s): {', '.join(sorted(unknown))}")
    return pairs


def parse_workload(text: str, meta: WarehouseMeta) -> Workload:
    """Parse workload text against warehouse metadata.

    Attribute conditions are attached to the dimension that declares the
    attribute; when that disagrees with the variable the condition was written
    on (a common slip in hand-written workloads), a WorkloadWarning is issued
    and the metadata wins. Join dimensions come from the bound variable, with
    the same warn-and-override treatment for a mismatched dim-id literal.
    """
    if len(meta.fact_sets) == 0:
        raise WorkloadSyntaxError("metadata declares no fact set")
    if len(meta.fact_sets) > 1:
        raise WorkloadSyntaxError("metadata declares several fact sets; queries are ambiguous")
    fact_set = meta.fact_sets[0].name

    scanner = _Scanner(text)
    queries: list[Query] = []
    seen_ids: set[str] = set()
    while not scanner.at_end():
        query = _parse_query(scanner, meta, fact_set, default_id=f"q{len(queries) + 1}")
        if query.query_id in seen_ids:
            scanner.fail(f"duplicate query id {query.query_id!r}")
        seen_ids.add(query.query_id)
        queries.append(query)
    return Workload(queries=tuple(queries))


def _parse_query(scanner: _Scanner, meta: WarehouseMeta, fact_set: str, default_id: str) -> Query:
    pragma = _parse_pragma(scanner)
    query_id = pragma.get("id", default_id)
    try:
        frequency = int(pragma.get("freq", "1"))
    except ValueError:
        scanner.fail(f"freq must be an integer, got {pragma['freq']!r}")
    if frequency < 1:
        scanner.fail(f"freq must be positive, got {frequency}")

    scanner.expect(_FOR, "'for'")
    fact_var: str | None = None
    dim_vars: dict[str, str] = {}
    while True:
        var = scanner.expect(_VAR, "a variable binding").group(1)
        scanner.expect(_IN, "'in'")
        if scanner.accept(_FACT_PATH):
            if fact_var is not None:
                scanner.fail("more than one fact binding")
            fact_var = var
        else:
            m = scanner.accept(_DIM_PATH)
            if m is None:
                scanner.fail("expected //FactDoc/Fact or //dimensions[@dim-id='...']/Level/instance")
            dim_id = m.group(1)
            if meta.dimension(dim_id) is None:
                raise UnknownDimensionError(f"query {query_id}: unknown dimension {dim_id!r}")
            if var in dim_vars or var == fact_var:
                scanner.fail(f"variable ${var} bound twice")
            dim_vars[var] = dim_id
        scanner.accept(_COMMA)
        if scanner.peek(_VAR) is None:
            break
    if fact_var is None:
        scanner.fail("no fact binding (//FactDoc/Fact) in 'for' clause")

    scanner.expect(_WHERE, "'where'")
    selections: list[SelectionPredicate] = []
    join_dims: list[str] = []
    while True:
        _parse_condition(scanner, meta, query_id, fact_var, dim_vars, selections, join_dims)
        if scanner.accept(_AND) is None:
            break
    if not join_dims:
        scanner.fail(f"query {query_id} has no join condition")

    scanner.expect(_RETURN, "'return'")
    returned = scanner.expect(_VAR, "the fact variable").group(1)
    if returned != fact_var:
        scanner.fail(f"query must return the fact variable ${fact_var}")

    joined = list(dict.fromkeys(join_dims))
    for sel in selections:
        if sel.dim_id not in joined:
            raise WorkloadSyntaxError(
                f"query {query_id} selects on {sel.dim_id}/{sel.attribute} "
                f"but never joins dimension {sel.dim_id}"
            )
    return Query(
        query_id=query_id,
        selections=tuple(selections),
        joins=tuple(JoinPredicate(fact_set, d) for d in joined),
        frequency=frequency,
    )


def _parse_condition(scanner, meta, query_id, fact_var, dim_vars, selections, join_dims):
    var = scanner.expect(_VAR, "a condition starting with a variable").group(1)
    attr_m = scanner.accept(_ATTR_TAIL)
    if attr_m is not None:
        attribute = attr_m.group(1)
        op = scanner.expect(_OP, "a comparison operator").group(0)
        rhs = scanner.expect(_LITERAL, "a quoted literal").group(1)
        if op not in OPS:  # pragma: no cover - the regex admits exactly OPS
            scanner.fail(f"unsupported operator {op!r}")
        dim_id = meta.dimension_of_attribute(attribute)
        if dim_id is None:
            raise UnknownAttributeError(
                f"query {query_id}: attribute {attribute!r} declared by no dimension"
            )
        bound = dim_vars.get(var)
        if bound is None and var != fact_var:
            scanner.fail(f"condition references unbound variable ${var}")
        if bound != dim_id:
            warnings.warn(
                f"query {query_id}: attribute {attribute!r} belongs to dimension "
                f"{dim_id!r} but is tested on ${var} (bound to {bound!r}); "
                f"using {dim_id!r}",
                WorkloadWarning,
                stacklevel=4,
            )
        selections.append(SelectionPredicate(dim_id, attribute, op, rhs))
        return

    join_m = scanner.accept(_JOIN_TAIL)
    if join_m is not None:
        literal_dim = join_m.group(1)
        if var != fact_var:
            scanner.fail(f"join condition must start from the fact variable ${fact_var}")
        op = scanner.expect(_OP, "'='").group(0)
        if op != "=":
            scanner.fail("join condition must use '='")
        rhs_var = scanner.expect(_VAR, "a dimension variable").group(1)
        scanner.expect(_ID_TAIL, "/@id")
        bound = dim_vars.get(rhs_var)
        if bound is None:
            scanner.fail(f"join references unbound variable ${rhs_var}")
        if bound != literal_dim:
            warnings.warn(
                f"query {query_id}: join names dimension {literal_dim!r} but "
                f"${rhs_var} is bound to {bound!r}; using {bound!r}",
                WorkloadWarning,
                stacklevel=4,
            )
        join_dims.append(bound)
        return

    scanner.fail("expected an attribute selection or a join condition")


_DIM_VAR_NAMES = ["y", "z", "u", "v", "w", "s", "t", "r"]


def render_workload(workload: Workload) -> str:
    """Canonical text for a workload; parse(render(w), meta) == w."""
    blocks = []
    for query in workload.queries:
        var_of = {}
        for i, join in enumerate(query.joins):
            name = _DIM_VAR_NAMES[i] if i < len(_DIM_VAR_NAMES) else f"v{i}"
            var_of[join.dim_id] = name
        lines = [f"(: id={query.query_id} freq={query.frequency} :)"]
        bindings = ["for $x in //FactDoc/Fact"]
        for join in query.joins:
            bindings.append(
                f"    ${var_of[join.dim_id]} in "
                f"//dimensions[@dim-id='{join.dim_id}']/Level/instance"
            )
        lines.append(",\n".join(bindings))
        conds = [
            f"${var_of[s.dim_id]}/attribute[@id='{s.attribute}']/@value {s.op} '{s.rhs}'"
            for s in query.selections
        ]
        conds.extend(
            f"$x/dimension[@dim-id='{j.dim_id}']/@value-id = ${var_of[j.dim_id]}/@id"
            for j in query.joins
        )
        lines.append("where " + conds[0])
        lines.extend(f"and {c}" for c in conds[1:])
        lines.append("return $x")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def extract_selection_predicates(workload: Workload) -> tuple[SelectionPredicate, ...]:
    """All distinct selection predicates, in first-use order."""
    return tuple(dict.fromkeys(s for q in workload.queries for s in q.selections))


def attribute_predicates(
    predicates: tuple[SelectionPredicate, ...], meta: WarehouseMeta
) -> dict[str, tuple[SelectionPredicate, ...]]:
    """Partition predicates by the dimension declaring their attribute.

    Keys are the candidate dimensions for fragmentation; dimensions no
    predicate touches do not appear.
    """
    by_dim: dict[str, list[SelectionPredicate]] = {}
    for pred in predicates:
        dim = meta.dimension(pred.dim_id)
        if dim is None:
            raise UnknownDimensionError(f"predicate on unknown dimension {pred.dim_id!r}")
        if pred.attribute not in dim.attributes:
            raise UnknownAttributeError(
                f"attribute {pred.attribute!r} not declared by dimension {pred.dim_id!r}"
            )
        by_dim.setdefault(pred.dim_id, []).append(pred)
    return {dim: tuple(preds) for dim, preds in by_dim.items()}
