"""Selection-predicate algebra: comparison semantics, negation, conjunction
satisfiability, and entailment.

Attribute values are stored as strings. Comparisons first try to interpret
both sides as decimals and fall back to lexicographic string order, so
``'13' = '13.0'`` holds while ``'abc' < 'abd'`` is decided textually.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from typing import Iterable, Mapping, Optional

OPS = ("=", "!=", "<", ">", "<=", ">=")

COMPLEMENT = {
    "=": "!=",
    "!=": "=",
    "<": ">=",
    ">=": "<",
    ">": "<=",
    "<=": ">",
}

# comparison outcomes admitted by each operator: -1 (below), 0 (equal), 1 (above)
_ADMITTED = {
    "=": frozenset({0}),
    "!=": frozenset({-1, 1}),
    "<": frozenset({-1}),
    ">": frozenset({1}),
    "<=": frozenset({-1, 0}),
    ">=": frozenset({0, 1}),
}

_ATOM_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_\-]*)\s*(<=|>=|!=|=|<|>)\s*'([^']+)'\s*$"
)


@lru_cache(maxsize=65536)
def as_decimal(text: str) -> Optional[Decimal]:
    """Decimal value of ``text``, or None if it is not a finite number."""
    try:
        value = Decimal(text)
    except InvalidOperation:
        return None
    if not value.is_finite():
        return None
    return value


def compare_values(left: str, right: str) -> int:
    """Three-way comparison: numeric when both sides parse, else lexicographic."""
    ln, rn = as_decimal(left), as_decimal(right)
    if ln is not None and rn is not None:
        if ln < rn:
            return -1
        return 0 if ln == rn else 1
    if left < right:
        return -1
    return 0 if left == right else 1


def satisfies(value: Optional[str], op: str, rhs: str) -> bool:
    """Whether a stored attribute value satisfies ``value op rhs``.

    A missing value (None) satisfies nothing; negated forms of a predicate
    are expressed through the complemented operator, so absence makes the
    positive form false and the complement true.
    """
    if value is None:
        return False
    return compare_values(value, rhs) in _ADMITTED[op]


@dataclass(frozen=True)
class SelectionPredicate:
    """One comparison ``attribute op 'rhs'`` against a dimension's instances."""

    dim_id: str
    attribute: str
    op: str
    rhs: str

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unsupported operator {self.op!r}")

    def matches(self, attributes: Mapping[str, str]) -> bool:
        return satisfies(attributes.get(self.attribute), self.op, self.rhs)

    def sort_key(self):
        return (self.dim_id, self.attribute, self.op, self.rhs)

    def render(self) -> str:
        return f"{self.attribute} {self.op} '{self.rhs}'"


@dataclass(frozen=True)
class SignedPredicate:
    """A predicate taken in natural (positive) or negated form."""

    predicate: SelectionPredicate
    positive: bool = True

    @property
    def effective_op(self) -> str:
        return self.predicate.op if self.positive else COMPLEMENT[self.predicate.op]

    def as_atom(self) -> SelectionPredicate:
        """The equivalent positive predicate (negation folded into the operator)."""
        p = self.predicate
        return SelectionPredicate(p.dim_id, p.attribute, self.effective_op, p.rhs)

    def matches(self, attributes: Mapping[str, str]) -> bool:
        return self.predicate.matches(attributes) == self.positive

    def render(self) -> str:
        return self.as_atom().render()


@dataclass(frozen=True)
class Minterm:
    """Conjunction assigning every predicate of a dimension's set a sign."""

    conjuncts: tuple[SignedPredicate, ...]

    def matches(self, attributes: Mapping[str, str]) -> bool:
        return all(c.matches(attributes) for c in self.conjuncts)

    def atoms(self) -> tuple[SelectionPredicate, ...]:
        return tuple(c.as_atom() for c in self.conjuncts)

    def render(self) -> str:
        return " and ".join(c.render() for c in self.conjuncts)


@dataclass(frozen=True)
class PredicateTerm:
    """Conjunction of positive predicates extending a cycle over all common attributes."""

    conjuncts: tuple[SelectionPredicate, ...]
    source_cycle: str = ""

    def matches(self, attributes: Mapping[str, str]) -> bool:
        return all(c.matches(attributes) for c in self.conjuncts)

    def atoms(self) -> tuple[SelectionPredicate, ...]:
        return self.conjuncts

    def render(self) -> str:
        return " and ".join(c.render() for c in self.conjuncts)


@dataclass(frozen=True)
class ElsePredicate:
    """Catch-all: matches instances matched by none of the sibling terms."""

    terms: tuple[PredicateTerm, ...] = field(default=(), compare=False)

    def matches(self, attributes: Mapping[str, str]) -> bool:
        return not any(t.matches(attributes) for t in self.terms)

    def render(self) -> str:
        return "ELSE"


def negate(predicate: SelectionPredicate) -> SelectionPredicate:
    return SelectionPredicate(
        predicate.dim_id, predicate.attribute, COMPLEMENT[predicate.op], predicate.rhs
    )


def parse_atom(text: str, dim_id: str) -> SelectionPredicate:
    """Parse the compact ``attribute op 'literal'`` form (or raise ValueError)."""
    m = _ATOM_RE.match(text)
    if m is None:
        raise ValueError(f"not a predicate: {text!r}")
    return SelectionPredicate(dim_id, m.group(1), m.group(2), m.group(3))


def conjunction_satisfiable(atoms: Iterable[SelectionPredicate | SignedPredicate]) -> bool:
    """Whether some assignment of attribute values satisfies every atom at once.

    Constraints on different attributes never conflict. Within one attribute,
    an equality pins the value and is checked exactly; otherwise all-numeric
    literals get interval reasoning over the number line, and string literals
    get per-literal outcome reasoning (conservative: unknown means satisfiable).
    """
    groups: dict[tuple[str, str], list[tuple[str, str]]] = defaultdict(list)
    for atom in atoms:
        if isinstance(atom, SignedPredicate):
            atom = atom.as_atom()
        groups[(atom.dim_id, atom.attribute)].append((atom.op, atom.rhs))
    return all(_group_satisfiable(cs) for cs in groups.values())


def _group_satisfiable(constraints: list[tuple[str, str]]) -> bool:
    pinned = next((rhs for op, rhs in constraints if op == "="), None)
    if pinned is not None:
        return all(satisfies(pinned, op, rhs) for op, rhs in constraints)

    numeric = [(op, as_decimal(rhs)) for op, rhs in constraints]
    if all(value is not None for _, value in numeric):
        return _interval_satisfiable(numeric)

    outcomes: dict[str, set[int]] = defaultdict(lambda: {-1, 0, 1})
    for op, rhs in constraints:
        outcomes[rhs] &= _ADMITTED[op]
    return all(outcomes.values())


def _interval_satisfiable(constraints: list[tuple[str, Decimal]]) -> bool:
    lo: Optional[tuple[Decimal, bool]] = None  # (bound, inclusive)
    hi: Optional[tuple[Decimal, bool]] = None
    excluded: set[Decimal] = set()
    for op, value in constraints:
        if op == ">":
            if lo is None or (value, False) > lo:
                lo = (value, False)
        elif op == ">=":
            if lo is None or value > lo[0]:
                lo = (value, True)
        elif op == "<":
            if hi is None or (value, False) < hi:
                hi = (value, False)
        elif op == "<=":
            if hi is None or value < hi[0]:
                hi = (value, True)
        else:  # "!="
            excluded.add(value)
    if lo is None or hi is None:
        return True  # half-line or full line: dense, finitely many exclusions
    if lo[0] > hi[0]:
        return False
    if lo[0] == hi[0]:
        return lo[1] and hi[1] and lo[0] not in excluded
    return True


def implies(p: SelectionPredicate, q: SelectionPredicate) -> bool:
    """Whether every value satisfying ``p`` satisfies ``q`` (same attribute only).

    Mixed numeric/string literal pairs make no claim; the check is an
    under-approximation but never asserts a false entailment.
    """
    if (p.dim_id, p.attribute) != (q.dim_id, q.attribute):
        return False
    if p == q:
        return True
    if p.op == "=":
        return satisfies(p.rhs, q.op, q.rhs)
    if q.op == "=":
        return False
    if p.op == "!=":
        return q.op == "!=" and compare_values(p.rhs, q.rhs) == 0
    pn, qn = as_decimal(p.rhs), as_decimal(q.rhs)
    if (pn is None) != (qn is None):
        return False
    c = compare_values(p.rhs, q.rhs)
    if p.op == "<":
        return (q.op in ("<", "<=") and c <= 0) or (q.op == "!=" and c <= 0)
    if p.op == "<=":
        return (q.op == "<" and c < 0) or (q.op == "<=" and c <= 0) or (q.op == "!=" and c < 0)
    if p.op == ">":
        return (q.op in (">", ">=") and c >= 0) or (q.op == "!=" and c >= 0)
    if p.op == ">=":
        return (q.op == ">" and c > 0) or (q.op == ">=" and c >= 0) or (q.op == "!=" and c > 0)
    return False
