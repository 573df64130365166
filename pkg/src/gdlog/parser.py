"""Concrete syntax for programs (.gdl) and fact files.

Grammar sketch::

    program    := (decl | rule | constraint)* ;
    decl       := ("edb" | "idb") IDENT "/" INT "." ;
    rule       := atom ":-" atom ("," atom)* "." ;
    constraint := atom ("," atom)* "=>" (atom | "false") "." ;
    atom       := IDENT "(" term ("," term)* ")" ;
    term       := NUMBER | STRING | IDENT              -- lowercase start: variable
                | IDENT "[" [term ("," term)*] "]" ;   -- distribution draw

Comments run from ``//`` to end of line. Relations must be declared
before use; arities are checked at parse time. Identifiers containing
``__`` are reserved for generated relation names and rejected here.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .model import (
    Atom,
    Constraint,
    DeltaTerm,
    Fact,
    GdlogError,
    Instance,
    Program,
    Rule,
    Variable,
)

__all__ = [
    "SourceSpan",
    "ParseError",
    "parse_program",
    "parse_facts",
    "parse_fact_literal",
    "load_edb_csv",
    "format_constant",
    "render_fact",
    "render_facts",
    "render_atom",
    "render_rule",
    "render_constraint",
    "render_program",
]


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int  # 1-based
    col: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class ParseError(GdlogError):
    def __init__(self, span: SourceSpan, message: str):
        super().__init__(f"{span}: {message}")
        self.span = span
        self.message = message


# ---------------------------------------------------------------------------
# Lexer

_PUNCT = {":-", "=>", "(", ")", "[", "]", ",", ".", "/"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "number" | "string" | "punct" | "eof"
    text: str
    value: object
    line: int
    col: int


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _lex(text: str, filename: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span() -> SourceSpan:
        return SourceSpan(filename, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith(":-", i) or text.startswith("=>", i):
            tokens.append(_Token("punct", text[i : i + 2], None, line, col))
            i += 2
            col += 2
            continue
        if ch in "()[],./":
            tokens.append(_Token("punct", ch, None, line, col))
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise ParseError(
                        SourceSpan(filename, start_line, start_col),
                        "unterminated string literal",
                    )
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError(span(), "dangling escape")
                    esc = text[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        raise ParseError(span(), f"unknown escape '\\{esc}'")
                    buf.append(mapped)
                    i += 2
                    col += 2
                else:
                    buf.append(c)
                    i += 1
                    col += 1
            tokens.append(
                _Token("string", "".join(buf), "".join(buf), start_line, start_col)
            )
            continue
        if ch.isdigit() or (ch in "+-" and i + 1 < n and text[i + 1].isdigit()):
            start_line, start_col = line, col
            j = i
            if text[j] in "+-":
                j += 1
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                # a trailing period is the statement terminator, not a decimal
                if j + 1 < n and text[j + 1].isdigit():
                    j += 1
                    while j < n and text[j].isdigit():
                        j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ParseError(
                    SourceSpan(filename, start_line, start_col),
                    f"malformed number '{lit}'",
                ) from None
            tokens.append(_Token("number", lit, value, start_line, start_col))
            col += j - i
            i = j
            continue
        if _is_ident_start(ch):
            start_col = col
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            name = text[i:j]
            tokens.append(_Token("ident", name, name, line, start_col))
            col += j - i
            i = j
            continue
        raise ParseError(span(), f"unexpected character {ch!r}")
    tokens.append(_Token("eof", "", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# Program parser


class _Parser:
    def __init__(self, text: str, filename: str):
        self.tokens = _lex(text, filename)
        self.pos = 0
        self.filename = filename

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, token: _Token, message: str) -> ParseError:
        return ParseError(SourceSpan(self.filename, token.line, token.col), message)

    def expect_punct(self, text: str) -> _Token:
        t = self.next()
        if t.kind != "punct" or t.text != text:
            raise self.error(t, f"expected '{text}', found '{t.text or t.kind}'")
        return t

    def expect_ident(self, what: str = "identifier") -> _Token:
        t = self.next()
        if t.kind != "ident":
            raise self.error(t, f"expected {what}, found '{t.text or t.kind}'")
        if "__" in t.text:
            raise self.error(
                t, f"'{t.text}': double underscore is reserved for generated names"
            )
        return t


def _check_relation(p: _Parser, tok: _Token, name: str, arity: int, schema: dict):
    if name not in schema:
        raise p.error(tok, f"undeclared relation '{name}'")
    if schema[name] != arity:
        raise p.error(
            tok,
            f"relation '{name}' declared with arity {schema[name]}, "
            f"used with {arity}",
        )


def _parse_term(p: _Parser, dists):
    t = p.peek()
    if t.kind == "number":
        p.next()
        return t.value
    if t.kind == "string":
        p.next()
        return t.value
    if t.kind == "ident":
        tok = p.expect_ident("term")
        nxt = p.peek()
        if nxt.kind == "punct" and nxt.text == "[":
            spec = dists.get(tok.text) if dists is not None else None
            if spec is None:
                raise p.error(tok, f"unknown distribution '{tok.text}'")
            p.expect_punct("[")
            params = []
            if p.peek().text != "]":  # Name[] for zero-parameter draws
                params.append(_parse_inner_term(p))
                while p.peek().text == ",":
                    p.next()
                    params.append(_parse_inner_term(p))
            p.expect_punct("]")
            if len(params) != spec.pardim:
                raise p.error(
                    tok,
                    f"distribution '{tok.text}' expects {spec.pardim} "
                    f"parameters, got {len(params)}",
                )
            return DeltaTerm(tok.text, tuple(params))
        if tok.text[0].islower():
            return Variable(tok.text)
        raise p.error(
            tok,
            f"'{tok.text}': variables start lowercase; quote symbolic constants",
        )
    raise p.error(t, f"expected a term, found '{t.text or t.kind}'")


def _parse_inner_term(p: _Parser):
    # distribution parameters: constants or variables, no nested draws
    t = p.peek()
    if t.kind in ("number", "string"):
        p.next()
        return t.value
    if t.kind == "ident":
        tok = p.expect_ident("parameter")
        if tok.text[0].islower():
            return Variable(tok.text)
        raise p.error(tok, f"'{tok.text}': variables start lowercase")
    raise p.error(t, f"expected a parameter, found '{t.text or t.kind}'")


def _parse_atom(p: _Parser, schema: dict, dists) -> Atom:
    tok = p.expect_ident("relation name")
    p.expect_punct("(")
    args = [_parse_term(p, dists)]
    while p.peek().text == ",":
        p.next()
        args.append(_parse_term(p, dists))
    p.expect_punct(")")
    _check_relation(p, tok, tok.text, len(args), schema)
    return Atom(tok.text, tuple(args))


def parse_program(text: str, dists, filename: str = "<string>") -> Program:
    """Parse a .gdl program against the distribution registry ``dists``."""
    p = _Parser(text, filename)
    edb: dict = {}
    idb: dict = {}
    rules: list = []
    constraints: list = []

    while p.peek().kind != "eof":
        t = p.peek()
        if t.kind == "ident" and t.text in ("edb", "idb"):
            p.next()
            name_tok = p.expect_ident("relation name")
            p.expect_punct("/")
            arity_tok = p.next()
            if arity_tok.kind != "number" or arity_tok.value != int(arity_tok.value):
                raise p.error(arity_tok, "expected an integer arity")
            arity = int(arity_tok.value)
            if arity < 1:
                # the atom grammar has no nullary form
                raise p.error(arity_tok, "arity must be positive")
            p.expect_punct(".")
            name = name_tok.text
            if name in edb or name in idb:
                raise p.error(name_tok, f"duplicate declaration of '{name}'")
            (edb if t.text == "edb" else idb)[name] = arity
            continue

        schema = {**edb, **idb}
        first = _parse_atom(p, schema, dists)
        sep = p.next()
        if sep.kind == "punct" and sep.text == ":-":
            body = [_parse_atom(p, schema, dists)]
            while p.peek().text == ",":
                p.next()
                body.append(_parse_atom(p, schema, dists))
            p.expect_punct(".")
            rules.append(Rule(first, tuple(body)))
        elif sep.kind == "punct" and (sep.text == "," or sep.text == "=>"):
            body = [first]
            while sep.text == ",":
                body.append(_parse_atom(p, schema, dists))
                sep = p.next()
            if sep.text != "=>":
                raise p.error(sep, f"expected '=>', found '{sep.text or sep.kind}'")
            head: Atom | None
            nxt = p.peek()
            if nxt.kind == "ident" and nxt.text == "false":
                p.next()
                head = None
            else:
                head = _parse_atom(p, schema, dists)
            p.expect_punct(".")
            constraints.append(Constraint(tuple(body), head))
        else:
            raise p.error(sep, f"expected ':-' or '=>', found '{sep.text or sep.kind}'")

    return Program(edb, idb, rules, constraints, dists)


# ---------------------------------------------------------------------------
# Fact files


def _parse_one_fact(p: _Parser, schema: dict, what: str) -> Fact:
    tok = p.expect_ident("relation name")
    p.expect_punct("(")
    args = []
    while True:
        t = p.next()
        if t.kind in ("number", "string"):
            args.append(t.value)
        else:
            raise p.error(t, f"expected a constant, found '{t.text or t.kind}'")
        t = p.next()
        if t.text == ")":
            break
        if t.text != ",":
            raise p.error(t, f"expected ',' or ')', found '{t.text or t.kind}'")
    p.expect_punct(".")
    if tok.text not in schema:
        raise p.error(tok, f"'{tok.text}' is not {what}")
    if schema[tok.text] != len(args):
        raise p.error(
            tok,
            f"relation '{tok.text}' declared with arity {schema[tok.text]}, "
            f"used with {len(args)}",
        )
    return Fact(tok.text, tuple(args))


def parse_facts(text: str, edb_schema: dict, filename: str = "<string>") -> Instance:
    """Parse ``Rel(c1, ..., cn).`` statements into an instance.

    Only EDB relations are allowed; duplicates collapse.
    """
    p = _Parser(text, filename)
    facts = set()
    while p.peek().kind != "eof":
        facts.add(_parse_one_fact(p, edb_schema, "an EDB relation"))
    return frozenset(facts)


def parse_fact_literal(text: str, schema: dict, filename: str = "<query>") -> Fact:
    """Parse a single ground fact literal such as ``Earthquake("Napa", 1)``.

    The trailing period is optional. ``schema`` maps every queryable
    relation to its arity.
    """
    stripped = text.strip()
    if not stripped.endswith("."):
        stripped += "."
    p = _Parser(stripped, filename)
    fact = _parse_one_fact(p, schema, "a known relation")
    if p.peek().kind != "eof":
        raise p.error(p.peek(), "trailing input after fact")
    return fact


def load_edb_csv(relation: str, rows, edb_schema: dict) -> Instance:
    """Load header-less CSV rows as facts of ``relation``.

    ``rows`` is a text stream or a string. Numeric-looking cells parse
    as numbers, everything else as symbols.
    """
    if relation not in edb_schema:
        raise ParseError(
            SourceSpan(f"<csv:{relation}>", 1, 1),
            f"'{relation}' is not an EDB relation",
        )
    arity = edb_schema[relation]
    if isinstance(rows, str):
        rows = io.StringIO(rows)
    facts = set()
    for lineno, row in enumerate(csv.reader(rows), start=1):
        if not row:
            continue  # blank line
        if len(row) != arity:
            raise ParseError(
                SourceSpan(f"<csv:{relation}>", lineno, 1),
                f"row {lineno}: expected {arity} columns, got {len(row)}",
            )
        args = []
        for cell in row:
            cell = cell.strip()
            try:
                args.append(float(cell))
            except ValueError:
                args.append(cell)
        facts.add(Fact(relation, tuple(args)))
    return frozenset(facts)


# ---------------------------------------------------------------------------
# Pretty-printing


def format_constant(c) -> str:
    if isinstance(c, str):
        escaped = c.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    if math.isfinite(c) and c == math.floor(c) and abs(c) < 1e16:
        return str(int(c))
    return repr(c)


def _format_term(t) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, DeltaTerm):
        inner = ", ".join(_format_term(x) for x in t.params)
        return f"{t.dist}[{inner}]"
    return format_constant(t)


def render_atom(atom: Atom) -> str:
    inner = ", ".join(_format_term(t) for t in atom.args)
    return f"{atom.relation}({inner})"


def render_rule(rule: Rule) -> str:
    body = ", ".join(render_atom(a) for a in rule.body)
    return f"{render_atom(rule.head)} :- {body}."


def render_constraint(c: Constraint) -> str:
    body = ", ".join(render_atom(a) for a in c.body)
    head = "false" if c.head is None else render_atom(c.head)
    return f"{body} => {head}."


def render_program(program: Program) -> str:
    lines = []
    for name, arity in program.edb.items():
        lines.append(f"edb {name}/{arity}.")
    for name, arity in program.idb.items():
        lines.append(f"idb {name}/{arity}.")
    if program.rules:
        lines.append("")
    for r in program.rules:
        lines.append(render_rule(r))
    if program.constraints:
        lines.append("")
    for c in program.constraints:
        lines.append(render_constraint(c))
    return "\n".join(lines) + "\n"


def render_fact(f: Fact) -> str:
    inner = ", ".join(format_constant(a) for a in f.args)
    return f"{f.relation}({inner})"


def render_facts(instance) -> str:
    from .model import fact_key

    return "".join(f"{render_fact(f)}.\n" for f in sorted(instance, key=fact_key))
