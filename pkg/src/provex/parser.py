"""Parser for the rule language.

Grammar (one statement per rule, ``%`` starts a line comment)::

    Head(col {, col}) :- item {, item}.
    col   := name | name as name | fn(name) as name
    item  := atom | pred
    atom  := RelName [@alias] [(name [as name] {, name [as name]})]
    pred  := operand op operand          op in < <= = != >= >  (or their unicode forms)

A parenthesised atom lists the relation's complete column set, each column
optionally renamed.  Bare atoms take their schema from the catalog or from an
earlier rule's head; a parenthesised atom over an undeclared relation declares
its schema implicitly.  Parsing fails on unsafe rules, duplicate head names and
forward references, so every program that parses is evaluable.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .ir import (
    AGG_FUNCTIONS,
    Catalog,
    CatalogEntry,
    Const,
    HeadColumn,
    Predicate,
    Program,
    ProvexError,
    Rule,
    TableAtom,
    check_safety,
    head_entry,
)

_OP_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "<>": "!="}
_OPS = ("<=", ">=", "!=", "<>", "=", "<", ">", "≤", "≥", "≠")


class ParseError(ProvexError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER STRING OP PUNCT EOF
    text: str
    value: object
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)

    def push(kind: str, s: str, value: object = None) -> None:
        tokens.append(Token(kind, s, value, line, col))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == ":" and text[i : i + 2] == ":-":
            push("PUNCT", ":-")
            i += 2
            col += 2
            continue
        two = text[i : i + 2]
        if two in _OPS or ch in _OPS:
            op = two if two in _OPS else ch
            push("OP", _OP_ALIASES.get(op, op))
            i += len(op)
            col += len(op)
            continue
        if ch in "(),.@":
            push("PUNCT", ch)
            i += 1
            col += 1
            continue
        if ch in "'\"":
            quote = ch
            j = i + 1
            buf = []
            while j < n and text[j] != quote:
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string literal", line, col)
            push("STRING", text[i : j + 1], "".join(buf))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                value: object = Decimal(text[i:j])
            else:
                value = int(text[i:j])
            push("NUMBER", text[i:j], value)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            push("IDENT", text[i:j])
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", None, line, col))
    return tokens


@dataclass
class _RawAtom:
    relation: str
    alias: str | None
    columns: list[tuple[str, str]] | None  # (source, exposed) when parenthesised
    line: int
    col: int


@dataclass
class _RawRule:
    head_name: str
    head_columns: list[HeadColumn]
    atoms: list[_RawAtom]
    predicates: list[Predicate]
    line: int
    col: int


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return tok

    def parse_rules(self) -> list[_RawRule]:
        rules = []
        while self.peek().kind != "EOF":
            rules.append(self.rule())
        return rules

    def rule(self) -> _RawRule:
        head = self.expect("IDENT")
        self.expect("PUNCT", "(")
        cols = [self.head_column()]
        while self.peek().text == ",":
            self.next()
            cols.append(self.head_column())
        self.expect("PUNCT", ")")
        self.expect("PUNCT", ":-")
        atoms: list[_RawAtom] = []
        preds: list[Predicate] = []
        while True:
            self.body_item(atoms, preds)
            tok = self.next()
            if tok.text == ".":
                break
            if tok.text != ",":
                raise ParseError(f"expected ',' or '.', found {tok.text!r}", tok.line, tok.col)
        return _RawRule(head.text, cols, atoms, preds, head.line, head.col)

    def head_column(self) -> HeadColumn:
        tok = self.expect("IDENT")
        if tok.text in AGG_FUNCTIONS and self.peek().text == "(":
            self.next()
            operand = self.expect("IDENT")
            self.expect("PUNCT", ")")
            self.expect_as(tok)
            output = self.expect("IDENT")
            return HeadColumn(output=output.text, source=operand.text, agg=tok.text)
        if self.peek().kind == "IDENT" and self.peek().text == "as":
            self.next()
            output = self.expect("IDENT")
            return HeadColumn(output=output.text, source=tok.text)
        return HeadColumn(output=tok.text, source=tok.text)

    def expect_as(self, context: Token) -> None:
        tok = self.next()
        if tok.kind != "IDENT" or tok.text != "as":
            raise ParseError(
                f"aggregate {context.text} requires 'as <name>'", tok.line, tok.col
            )

    def body_item(self, atoms: list[_RawAtom], preds: list[Predicate]) -> None:
        tok = self.peek()
        if tok.kind in ("NUMBER", "STRING") or (
            tok.kind == "IDENT" and self.peek(1).kind == "OP"
        ):
            preds.append(self.predicate())
            return
        if tok.kind != "IDENT":
            raise ParseError(f"expected table or predicate, found {tok.text!r}", tok.line, tok.col)
        atoms.append(self.atom())

    def predicate(self) -> Predicate:
        left = self.operand()
        op = self.next()
        if op.kind != "OP":
            raise ParseError(f"expected comparison operator, found {op.text!r}", op.line, op.col)
        right = self.operand()
        try:
            return Predicate(left, op.text, right)
        except ProvexError as exc:
            raise ParseError(str(exc), op.line, op.col) from None

    def operand(self) -> str | Const:
        tok = self.next()
        if tok.kind == "IDENT":
            return tok.text
        if tok.kind in ("NUMBER", "STRING"):
            return Const(tok.value)  # type: ignore[arg-type]
        raise ParseError(f"expected attribute or constant, found {tok.text!r}", tok.line, tok.col)

    def atom(self) -> _RawAtom:
        name = self.expect("IDENT")
        alias = None
        if self.peek().text == "@":
            self.next()
            tok = self.next()
            if tok.kind not in ("IDENT", "NUMBER"):
                raise ParseError("expected alias after '@'", tok.line, tok.col)
            alias = tok.text
        columns = None
        if self.peek().text == "(":
            self.next()
            columns = [self.atom_column()]
            while self.peek().text == ",":
                self.next()
                columns.append(self.atom_column())
            self.expect("PUNCT", ")")
        return _RawAtom(name.text, alias, columns, name.line, name.col)

    def atom_column(self) -> tuple[str, str]:
        src = self.expect("IDENT")
        if self.peek().kind == "IDENT" and self.peek().text == "as":
            self.next()
            exposed = self.expect("IDENT")
            return (src.text, exposed.text)
        return (src.text, src.text)


def parse_program(text: str, catalog: Catalog | None = None) -> Program:
    """Parse and resolve a program; raises ParseError on any syntax, schema or
    safety problem so that no unsafe program is constructible through here."""
    raw_rules = _Parser(_tokenize(text)).parse_rules()
    if not raw_rules:
        raise ParseError("program has no rules", 1, 1)
    effective = catalog.copy() if catalog is not None else Catalog()
    head_names = [r.head_name for r in raw_rules]
    rules: list[Rule] = []
    defined: set[str] = set()
    for raw in raw_rules:
        if raw.head_name in defined or raw.head_name in effective.entries:
            raise ParseError(f"duplicate head name {raw.head_name}", raw.line, raw.col)
        atoms = []
        for ra in raw.atoms:
            atoms.append(_resolve_atom(ra, effective, head_names, defined))
        try:
            rule = Rule(raw.head_name, tuple(raw.head_columns), tuple(atoms), tuple(raw.predicates))
        except ProvexError as exc:
            raise ParseError(str(exc), raw.line, raw.col) from None
        violations = check_safety(rule, effective)
        if violations:
            raise ParseError(
                f"rule {raw.head_name} is unsafe: " + "; ".join(violations), raw.line, raw.col
            )
        effective.add(head_entry(rule, effective))
        defined.add(raw.head_name)
        rules.append(rule)
    return Program(tuple(rules), effective)


def _resolve_atom(
    raw: _RawAtom, effective: Catalog, head_names: list[str], defined: set[str]
) -> TableAtom:
    entry = effective.entries.get(raw.relation)
    if entry is None and raw.relation in head_names:
        raise ParseError(
            f"forward reference to {raw.relation}; rules must be ordered", raw.line, raw.col
        )
    if raw.columns is None:
        if entry is None:
            raise ParseError(
                f"unknown relation {raw.relation}; declare it in the catalog or list its columns",
                raw.line,
                raw.col,
            )
        renamings = tuple((a, a) for a in entry.attributes)
    else:
        sources = [s for s, _ in raw.columns]
        if len(set(sources)) != len(sources):
            raise ParseError(
                f"column listed twice in atom {raw.relation}", raw.line, raw.col
            )
        if entry is not None:
            if set(sources) != set(entry.attributes):
                raise ParseError(
                    f"atom {raw.relation} must list all of its columns exactly"
                    f" (expected {', '.join(entry.attributes)})",
                    raw.line,
                    raw.col,
                )
        else:
            effective.add(CatalogEntry(raw.relation, tuple(sources)))
        renamings = tuple(raw.columns)
    try:
        return TableAtom(raw.relation, raw.alias or raw.relation, renamings)
    except ProvexError as exc:
        raise ParseError(str(exc), raw.line, raw.col) from None
