"""Dataset directories: one CSV per relation plus a ``catalog.txt`` sidecar.

Catalog lines are ``name; attr kind, attr kind, ...; key: a, b; fd: a, b -> c``
with ``%`` comments.  Kinds are int, decimal, text or date.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .engine import Database, RelationInstance
from .ir import ATTR_KINDS, Catalog, CatalogEntry, CatalogError, parse_typed_value

CATALOG_FILENAME = "catalog.txt"


def parse_catalog(text: str) -> Catalog:
    catalog = Catalog()
    pending_fds = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        segments = [seg.strip() for seg in line.split(";")]
        if len(segments) < 2:
            raise CatalogError(f"catalog line {lineno}: expected 'name; attrs...'")
        name = segments[0]
        attrs: list[str] = []
        kinds: list[str] = []
        for item in segments[1].split(","):
            parts = item.split()
            if len(parts) != 2:
                raise CatalogError(
                    f"catalog line {lineno}: attribute {item.strip()!r} needs 'name kind'"
                )
            attr, kind = parts
            if kind not in ATTR_KINDS:
                raise CatalogError(f"catalog line {lineno}: unknown kind {kind!r}")
            attrs.append(attr)
            kinds.append(kind)
        key = None
        for seg in segments[2:]:
            if seg.startswith("key:"):
                key = frozenset(a.strip() for a in seg[4:].split(",") if a.strip())
            elif seg.startswith("fd:"):
                body = seg[3:]
                if "->" not in body:
                    raise CatalogError(f"catalog line {lineno}: fd needs 'a, b -> c'")
                det, dep = body.split("->", 1)
                determinant = frozenset(a.strip() for a in det.split(",") if a.strip())
                pending_fds.append((name, determinant, dep.strip()))
            elif seg:
                raise CatalogError(f"catalog line {lineno}: unknown segment {seg!r}")
        catalog.add(CatalogEntry(name, tuple(attrs), key, "base", tuple(kinds)))
    for relation, det, dep in pending_fds:
        catalog.add_fd(relation, det, dep)
    return catalog


def format_catalog(catalog: Catalog) -> str:
    lines = []
    for entry in catalog.entries.values():
        if entry.kind != "base":
            continue
        if entry.attr_kinds is None:
            raise CatalogError(f"relation {entry.name} has no attribute kinds to write")
        attrs = ", ".join(f"{a} {k}" for a, k in zip(entry.attributes, entry.attr_kinds))
        line = f"{entry.name}; {attrs}"
        if entry.key:
            line += "; key: " + ", ".join(sorted(entry.key))
        for det, dep in catalog.declared_fds.get(entry.name, []):
            line += "; fd: " + ", ".join(sorted(det)) + " -> " + dep
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_relation_csv(entry: CatalogEntry, text: str) -> RelationInstance:
    if entry.attr_kinds is None:
        raise CatalogError(f"relation {entry.name} needs attribute kinds to load CSV data")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CatalogError(f"{entry.name}: empty CSV") from None
    if tuple(h.strip() for h in header) != entry.attributes:
        raise CatalogError(
            f"{entry.name}: CSV header {header} does not match catalog attributes"
        )
    rows = set()
    for record in reader:
        if not record:
            continue
        if len(record) != len(entry.attributes):
            raise CatalogError(f"{entry.name}: row {record} has wrong width")
        rows.add(tuple(parse_typed_value(v, k) for v, k in zip(record, entry.attr_kinds)))
    return RelationInstance(entry, frozenset(rows))


def format_relation_csv(inst: RelationInstance) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(inst.schema.attributes)
    for row in inst.sorted_rows():
        writer.writerow([str(v) for v in row])
    return out.getvalue()


def load_dataset(path: str | Path) -> tuple[Catalog, Database]:
    path = Path(path)
    catalog_file = path / CATALOG_FILENAME
    if not catalog_file.exists():
        raise CatalogError(f"no {CATALOG_FILENAME} in {path}")
    catalog = parse_catalog(catalog_file.read_text())
    db: Database = {}
    for entry in catalog.entries.values():
        csv_file = path / f"{entry.name}.csv"
        if not csv_file.exists():
            raise CatalogError(f"missing data file {csv_file}")
        db[entry.name] = parse_relation_csv(entry, csv_file.read_text())
    return catalog, db


def write_dataset(path: str | Path, catalog: Catalog, db: Database) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / CATALOG_FILENAME).write_text(format_catalog(catalog))
    for name, inst in db.items():
        if inst.schema.kind != "base":
            continue
        (path / f"{name}.csv").write_text(format_relation_csv(inst))
