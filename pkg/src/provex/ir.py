"""Core types for the SPJ/SPJA rule language: catalog, atoms, predicates, rules, programs.

Rules join their body atoms by natural join over exposed attribute names;
renaming columns inside an atom is the only way to avoid unwanted joins.
Everything here is immutable after construction and safe to share.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

Value = int | Decimal | str

ATTR_KINDS = ("int", "decimal", "text", "date")
AGG_FUNCTIONS = ("sum", "count", "min", "max", "avg")
COMPARISON_OPS = ("<", "<=", "=", "!=", ">=", ">")


class ProvexError(Exception):
    """Base class for all errors raised by this package."""


class CatalogError(ProvexError):
    pass


class SafetyError(ProvexError):
    pass


def value_kind(v: Value) -> str:
    """Runtime kind used for comparison compatibility: 'numeric' or 'text'.

    Dates are ISO-8601 text and order lexicographically, so they behave as text.
    """
    if isinstance(v, bool):  # bool is an int subclass; reject explicitly
        raise TypeError("boolean is not a relation value")
    if isinstance(v, (int, Decimal)):
        return "numeric"
    if isinstance(v, str):
        return "text"
    raise TypeError(f"unsupported value type {type(v).__name__}")


def compare_values(left: Value, op: str, right: Value) -> bool:
    if value_kind(left) != value_kind(right):
        raise ProvexError(
            f"comparison between incompatible value kinds: {left!r} {op} {right!r}"
        )
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == ">=":
        return left >= right
    if op == ">":
        return left > right
    raise ProvexError(f"unknown comparison operator {op!r}")


def format_value(v: Value) -> str:
    if isinstance(v, (int, Decimal)):
        return str(v)
    escaped = v.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def parse_typed_value(text: str, kind: str) -> Value:
    """Parse a CSV/JSON scalar according to a declared attribute kind."""
    if kind == "int":
        return int(text)
    if kind == "decimal":
        return Decimal(text)
    if kind in ("text", "date"):
        return text
    raise CatalogError(f"unknown attribute kind {kind!r}")


@dataclass(frozen=True)
class CatalogEntry:
    """Schema of a base table or view: ordered attributes plus an optional key."""

    name: str
    attributes: tuple[str, ...]
    key: frozenset[str] | None = None
    kind: str = "base"  # "base" | "view"
    attr_kinds: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(set(self.attributes)) != len(self.attributes):
            raise CatalogError(f"duplicate attribute names in relation {self.name}")
        if self.key is not None and not self.key <= set(self.attributes):
            raise CatalogError(f"key of {self.name} is not a subset of its attributes")
        if self.attr_kinds is not None and len(self.attr_kinds) != len(self.attributes):
            raise CatalogError(f"attribute kinds of {self.name} do not match attributes")

    def kind_of(self, attr: str) -> str | None:
        if self.attr_kinds is None:
            return None
        return self.attr_kinds[self.attributes.index(attr)]


@dataclass
class Catalog:
    """All declared relations plus any extra functional dependencies declared on them."""

    entries: dict[str, CatalogEntry] = field(default_factory=dict)
    declared_fds: dict[str, list[tuple[frozenset[str], str]]] = field(default_factory=dict)

    def add(self, entry: CatalogEntry) -> None:
        self.entries[entry.name] = entry

    def add_fd(self, relation: str, determinant: frozenset[str], dependent: str) -> None:
        entry = self.entries.get(relation)
        if entry is None:
            raise CatalogError(f"fd declared on unknown relation {relation}")
        for a in set(determinant) | {dependent}:
            if a not in entry.attributes:
                raise CatalogError(f"fd on {relation} mentions unknown attribute {a}")
        self.declared_fds.setdefault(relation, []).append((determinant, dependent))

    def get(self, name: str) -> CatalogEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise CatalogError(f"unknown relation {name}") from None

    def copy(self) -> Catalog:
        return Catalog(dict(self.entries), {k: list(v) for k, v in self.declared_fds.items()})


@dataclass(frozen=True)
class Const:
    """Constant operand of a predicate, kept distinct from attribute names."""

    value: Value


PredOperand = "str | Const"


@dataclass(frozen=True)
class Predicate:
    """Comparison between exposed attributes and/or constants; at least one attribute side."""

    left: str | Const
    op: str
    right: str | Const

    def __post_init__(self) -> None:
        if self.op not in COMPARISON_OPS:
            raise ProvexError(f"unknown comparison operator {self.op!r}")
        if isinstance(self.left, Const) and isinstance(self.right, Const):
            raise ProvexError("predicate must mention at least one attribute")

    def attributes(self) -> set[str]:
        out = set()
        if isinstance(self.left, str):
            out.add(self.left)
        if isinstance(self.right, str):
            out.add(self.right)
        return out

    def format(self) -> str:
        def side(x: str | Const) -> str:
            return x if isinstance(x, str) else format_value(x.value)

        return f"{side(self.left)} {self.op} {side(self.right)}"


@dataclass(frozen=True)
class TableAtom:
    """One occurrence of a relation in a rule body.

    ``renamings`` is the complete source-to-exposed column map in the relation's
    attribute order; unrenamed columns map to themselves.  The occurrence alias
    is unique within its rule (defaults to the relation name).
    """

    relation: str
    occurrence: str
    renamings: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        exposed = [e for _, e in self.renamings]
        if len(set(exposed)) != len(exposed):
            raise SafetyError(
                f"atom {self.relation}@{self.occurrence} exposes duplicate column names"
            )

    @property
    def exposed(self) -> tuple[str, ...]:
        return tuple(e for _, e in self.renamings)

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.renamings)

    def exposed_of(self, source: str) -> str:
        for s, e in self.renamings:
            if s == source:
                return e
        raise CatalogError(f"{self.relation} has no attribute {source}")

    def source_of(self, exposed: str) -> str:
        for s, e in self.renamings:
            if e == exposed:
                return s
        raise CatalogError(f"atom {self.relation}@{self.occurrence} does not expose {exposed}")

    def is_identity(self) -> bool:
        return all(s == e for s, e in self.renamings)

    def format(self) -> str:
        name = self.relation
        if self.occurrence != self.relation:
            name = f"{self.relation}@{self.occurrence}"
        if self.is_identity():
            return name
        cols = ", ".join(s if s == e else f"{s} as {e}" for s, e in self.renamings)
        return f"{name}({cols})"


@dataclass(frozen=True)
class HeadColumn:
    """Head column: a plain projected attribute or an aggregate over one.

    ``output`` is the column name in the head relation; ``source`` is the exposed
    body attribute it reads.  Plain columns normally keep output == source; a
    differing output acts as a projection-time rename (used by generated rules).
    """

    output: str
    source: str
    agg: str | None = None

    def __post_init__(self) -> None:
        if self.agg is not None and self.agg not in AGG_FUNCTIONS:
            raise ProvexError(f"unknown aggregate function {self.agg!r}")

    @property
    def is_plain(self) -> bool:
        return self.agg is None

    def format(self) -> str:
        if self.agg is not None:
            return f"{self.agg}({self.source}) as {self.output}"
        if self.output != self.source:
            return f"{self.source} as {self.output}"
        return self.output


@dataclass(frozen=True)
class Rule:
    """A single SPJ or SPJA rule: head columns defined over a joined, filtered body."""

    head_name: str
    head_columns: tuple[HeadColumn, ...]
    body_atoms: tuple[TableAtom, ...]
    body_predicates: tuple[Predicate, ...]

    def __post_init__(self) -> None:
        outputs = [c.output for c in self.head_columns]
        if len(set(outputs)) != len(outputs):
            raise SafetyError(f"duplicate output names in head of {self.head_name}")
        aliases = [a.occurrence for a in self.body_atoms]
        if len(set(aliases)) != len(aliases):
            raise SafetyError(
                f"duplicate occurrence alias in body of {self.head_name};"
                " alias repeated relations with @name"
            )
        if not self.body_atoms:
            raise SafetyError(f"rule {self.head_name} has an empty body")

    @property
    def kind(self) -> str:
        return "SPJA" if any(c.agg for c in self.head_columns) else "SPJ"

    @property
    def head_attrs(self) -> tuple[str, ...]:
        return tuple(c.output for c in self.head_columns)

    @property
    def group_by(self) -> tuple[str, ...]:
        """Plain head outputs; for an SPJA rule these are the grouping columns."""
        return tuple(c.output for c in self.head_columns if c.is_plain)

    @property
    def anchor_attrs(self) -> frozenset[str]:
        """Head attributes that name exposed body columns (the plain columns).

        Aggregate outputs are fresh names and never refer to body columns, so
        dependency reasoning over the body starts from this set.
        """
        return frozenset(c.source for c in self.head_columns if c.is_plain)

    def atom(self, alias: str) -> TableAtom:
        for a in self.body_atoms:
            if a.occurrence == alias:
                return a
        raise ProvexError(f"rule {self.head_name} has no occurrence {alias!r}")

    def exposed_attrs(self) -> set[str]:
        out: set[str] = set()
        for a in self.body_atoms:
            out.update(a.exposed)
        return out

    def format(self) -> str:
        head = ", ".join(c.format() for c in self.head_columns)
        body = [a.format() for a in self.body_atoms]
        body += [p.format() for p in self.body_predicates]
        return f"{self.head_name}({head}) :- {', '.join(body)}."


@dataclass(frozen=True)
class Occurrence:
    """Global identity of a body atom: which rule it sits in and its alias."""

    rule_head: str
    alias: str
    relation: str
    is_view: bool

    @property
    def path(self) -> str:
        return f"{self.rule_head}.{self.alias}"


@dataclass
class Program:
    """Ordered rules; the final rule's head is the query result.

    ``catalog`` is the effective catalog: declared entries, entries inferred
    from explicit column lists, and one view entry per rule head.
    """

    rules: tuple[Rule, ...]
    catalog: Catalog

    @property
    def final_rule(self) -> Rule:
        return self.rules[-1]

    @property
    def result_name(self) -> str:
        return self.rules[-1].head_name

    def rule_for(self, head: str) -> Rule:
        for r in self.rules:
            if r.head_name == head:
                return r
        raise ProvexError(f"program has no rule defining {head}")

    def is_view(self, relation: str) -> bool:
        return any(r.head_name == relation for r in self.rules)

    def occurrences(self) -> list[Occurrence]:
        out = []
        for r in self.rules:
            for a in r.body_atoms:
                out.append(
                    Occurrence(r.head_name, a.occurrence, a.relation, self.is_view(a.relation))
                )
        return out

    def occurrence(self, ref: str) -> Occurrence:
        """Resolve an occurrence reference: a full ``rule.alias`` path, or a bare
        alias/relation name when unambiguous across the program."""
        occs = self.occurrences()
        for o in occs:
            if o.path == ref:
                return o
        matches = [o for o in occs if o.alias == ref] or [o for o in occs if o.relation == ref]
        if len(matches) == 1:
            return matches[0]
        if not matches:
            raise ProvexError(f"unknown occurrence {ref!r}")
        paths = ", ".join(o.path for o in matches)
        raise ProvexError(f"ambiguous occurrence {ref!r}; candidates: {paths}")

    def base_occurrences(self) -> list[Occurrence]:
        return [o for o in self.occurrences() if not o.is_view]

    def format(self) -> str:
        return "\n".join(r.format() for r in self.rules) + "\n"


def make_atom(
    relation: str,
    catalog: Catalog,
    alias: str | None = None,
    renames: dict[str, str] | None = None,
) -> TableAtom:
    """Build an atom with the complete renaming map filled in from the catalog."""
    entry = catalog.get(relation)
    renames = renames or {}
    for src in renames:
        if src not in entry.attributes:
            raise CatalogError(f"unknown source attribute {src} in renaming of {relation}")
    renamings = tuple((a, renames.get(a, a)) for a in entry.attributes)
    return TableAtom(relation, alias or relation, renamings)


def check_safety(rule: Rule, catalog: Catalog) -> list[str]:
    """Return violation messages; empty means the rule is safe.

    Safe: every plain head attribute and every predicate attribute is exposed
    by some body atom, and every body relation is known to the catalog.
    """
    violations: list[str] = []
    exposed: set[str] = set()
    for atom in rule.body_atoms:
        entry = catalog.entries.get(atom.relation)
        if entry is None:
            violations.append(f"unknown relation {atom.relation}")
            continue
        for src, _ in atom.renamings:
            if src not in entry.attributes:
                violations.append(
                    f"unknown source attribute {src} in renaming of {atom.relation}"
                )
        exposed.update(atom.exposed)
    for col in rule.head_columns:
        if col.source not in exposed:
            violations.append(f"head attribute {col.source} not exposed by the body")
        if col.agg is not None and col.output in exposed:
            violations.append(
                f"aggregate output {col.output} shadows a body attribute of the same name"
            )
    for pred in rule.body_predicates:
        for attr in sorted(pred.attributes()):
            if attr not in exposed:
                violations.append(f"predicate attribute {attr} not exposed by the body")
    return violations


def rhs_attributes(rule: Rule) -> set[str]:
    """Union of the exposed attributes of all body atoms.

    Predicates add nothing new for a safe rule.
    """
    return rule.exposed_attrs()


def inferred_view_key(rule: Rule) -> frozenset[str] | None:
    """Grouping makes the plain head columns a key of an SPJA head; SPJ heads get none."""
    if rule.kind != "SPJA":
        return None
    return frozenset(rule.group_by)


AGG_RESULT_KINDS = {"count": "int", "avg": "decimal"}


def head_entry(rule: Rule, catalog: Catalog) -> CatalogEntry:
    """Catalog entry for a rule head, with attribute kinds derived when known."""
    kinds: list[str] | None = []
    exposed_kind: dict[str, str] = {}
    for atom in rule.body_atoms:
        entry = catalog.entries.get(atom.relation)
        if entry is None or entry.attr_kinds is None:
            continue
        for src, exp in atom.renamings:
            exposed_kind[exp] = entry.kind_of(src) or "text"
    for col in rule.head_columns:
        if col.agg in AGG_RESULT_KINDS:
            kinds.append(AGG_RESULT_KINDS[col.agg])
        elif col.source in exposed_kind:
            kinds.append(exposed_kind[col.source])
        else:
            kinds = None
            break
    return CatalogEntry(
        name=rule.head_name,
        attributes=rule.head_attrs,
        key=inferred_view_key(rule),
        kind="view",
        attr_kinds=tuple(kinds) if kinds is not None else None,
    )
