"""Keys and functional dependencies over rule bodies.

FDs come from three places only: declared base-table keys, keys inferred for
grouped views, and extra dependencies declared in the catalog.  Equality
predicates contribute dependencies as well, since ``a = b`` forces the two
columns to agree in every surviving row.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ir import Catalog, Const, Program, Rule, inferred_view_key


@dataclass(frozen=True)
class FunctionalDependency:
    """determinant -> dependent over the exposed names of a rule body."""

    determinant: frozenset[str]
    dependent: str

    @staticmethod
    def make(determinant: frozenset[str], dependent: str) -> "FunctionalDependency":
        # normalize away a reflexive dependent
        return FunctionalDependency(determinant - {dependent} if dependent in determinant else determinant, dependent)


@dataclass(frozen=True)
class KeyFact:
    """A key attribute set for a base table or rule head."""

    relation: str
    key: frozenset[str]


def infer_view_key(rule: Rule) -> KeyFact | None:
    """Grouping makes the plain head columns a key; an aggregate-only head has
    at most one row (empty key).  SPJ heads get no key."""
    key = inferred_view_key(rule)
    if key is None:
        return None
    return KeyFact(rule.head_name, key)


def program_view_keys(program: Program) -> set[KeyFact]:
    out = set()
    for rule in program.rules:
        fact = infer_view_key(rule)
        if fact is not None:
            out.add(fact)
    return out


def atom_fds(atom, catalog: Catalog, view_keys: set[KeyFact] = frozenset()):
    """Intrinsic FDs one atom contributes, instantiated over its exposed names:
    its declared or inferred key determining every column, plus declared FDs."""
    key_by_relation = {fact.relation: fact.key for fact in view_keys}
    fds: set[FunctionalDependency] = set()
    entry = catalog.entries.get(atom.relation)
    key = None
    if entry is not None and entry.key is not None:
        key = entry.key
    elif atom.relation in key_by_relation:
        key = key_by_relation[atom.relation]
    if key is not None:
        det = frozenset(atom.exposed_of(k) for k in key)
        for _, exposed in atom.renamings:
            if exposed not in det:
                fds.add(FunctionalDependency(det, exposed))
    for det_src, dep_src in catalog.declared_fds.get(atom.relation, []):
        det = frozenset(atom.exposed_of(a) for a in det_src)
        dep = atom.exposed_of(dep_src)
        if dep not in det:
            fds.add(FunctionalDependency(det, dep))
    return fds


def predicate_fds(predicates) -> set[FunctionalDependency]:
    """Dependencies an equality predicate enforces while it is applied."""
    fds: set[FunctionalDependency] = set()
    for pred in predicates:
        if pred.op != "=":
            continue
        left, right = pred.left, pred.right
        if isinstance(left, str) and isinstance(right, str):
            fds.add(FunctionalDependency(frozenset({left}), right))
            fds.add(FunctionalDependency(frozenset({right}), left))
        elif isinstance(left, str) and isinstance(right, Const):
            fds.add(FunctionalDependency(frozenset(), left))
        elif isinstance(right, str) and isinstance(left, Const):
            fds.add(FunctionalDependency(frozenset(), right))
    return fds


@dataclass
class BodyDependencies:
    """Per-atom intrinsic FDs of a rule body.  Pruning activates an atom's FDs
    only while that atom is retained; the flat union is the full FD set."""

    per_atom: dict[str, set[FunctionalDependency]]
    equalities: set[FunctionalDependency]

    def all(self) -> set[FunctionalDependency]:
        out: set[FunctionalDependency] = set(self.equalities)
        for fds in self.per_atom.values():
            out |= fds
        return out

    def for_atoms(self, aliases) -> set[FunctionalDependency]:
        out: set[FunctionalDependency] = set()
        for alias in aliases:
            out |= self.per_atom.get(alias, set())
        return out


def body_dependencies(
    rule: Rule, catalog: Catalog, view_keys: set[KeyFact] = frozenset()
) -> BodyDependencies:
    per_atom = {a.occurrence: atom_fds(a, catalog, view_keys) for a in rule.body_atoms}
    return BodyDependencies(per_atom, predicate_fds(rule.body_predicates))


def derive_body_fds(
    rule: Rule, catalog: Catalog, view_keys: set[KeyFact] = frozenset()
) -> set[FunctionalDependency]:
    """Instantiate declared keys, view keys and declared FDs over the exposed
    names of the rule body, plus dependencies induced by equality predicates."""
    return body_dependencies(rule, catalog, view_keys).all()


def closure(attrs: frozenset[str] | set[str], fds: set[FunctionalDependency]) -> frozenset[str]:
    """Smallest superset of ``attrs`` closed under ``fds``."""
    out = set(attrs)
    changed = True
    while changed:
        changed = False
        for fd in fds:
            if fd.dependent not in out and fd.determinant <= out:
                out.add(fd.dependent)
                changed = True
    return frozenset(out)


def holds_fd(lhs: frozenset[str] | set[str], attr: str, fds: set[FunctionalDependency]) -> bool:
    """True iff ``lhs`` functionally determines ``attr`` (reflexivity included)."""
    return attr in lhs or attr in closure(lhs, fds)
