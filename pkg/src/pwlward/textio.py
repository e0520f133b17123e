"""Reading and writing programs (.tgd), databases (.facts) and queries (.cq).

Rules are written ``Body1, Body2 -> exists z: Head.``; queries are written
``Q(x) :- Body.``; ``%`` starts a comment. In programs and queries a term
starting with a lowercase letter or ``_`` is a variable and anything else
(capitalized, numeric, or single-quoted) is a constant. Database files
contain facts only, so every bare identifier there is a constant.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .core import CQ, TGD, Atom, Constant, Instance, Null, Program, Variable


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int

    def __str__(self):
        return f"line {self.line}, column {self.column}"


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{message} ({span})" if span else message)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<implied>:-)
  | (?P<colon>:)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<dot>\.)
  | (?P<quoted>'[^'\n]*')
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(line, pos - line_start + 1, 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            span = SourceSpan(line, pos - line_start + 1, m.end() - pos)
            tokens.append(_Token(kind, m.group(), span))
        pos = m.end()
    tokens.append(_Token("eof", "", SourceSpan(line, pos - line_start + 1, 0)))
    return tokens


class _Parser:
    def __init__(self, text: str, facts_only: bool = False):
        self.tokens = _tokenize(text)
        self.i = 0
        self.facts_only = facts_only
        self.arities: dict[str, int] = {}
        self._anon = 0
        self._used_names: set[str] = set()

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, what: str) -> _Token:
        t = self.tok
        if t.kind != kind:
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(f"expected {what}, found {found}", t.span)
        self.i += 1
        return t

    def term(self, anonymous: list):
        t = self.tok
        if t.kind == "quoted":
            self.i += 1
            return Constant(t.text[1:-1]), t
        name = self.expect("ident", "a term").text
        if name == "_":
            if self.facts_only:
                raise ParseError("variable in fact", t.span)
            anonymous.append(t)
            return ("anon", t), t
        if self.facts_only:
            if name.startswith("_"):
                raise ParseError(f"variable {name!r} in fact", t.span)
            return Constant(name), t
        if name[0].islower() or name[0] == "_":
            self._used_names.add(name)
            return Variable(name), t
        return Constant(name), t

    def atom(self, anonymous: list) -> tuple:
        name_tok = self.expect("ident", "a predicate name")
        args, spans = [], []
        if self.at("lparen"):
            self.i += 1
            while True:
                term, tok = self.term(anonymous)
                args.append(term)
                spans.append(tok.span)
                if self.at("comma"):
                    self.i += 1
                    continue
                self.expect("rparen", "',' or ')'")
                break
        pred = name_tok.text
        known = self.arities.setdefault(pred, len(args))
        if known != len(args):
            raise ParseError(
                f"arity mismatch for {pred}: used with {len(args)} argument(s), "
                f"previously {known}",
                name_tok.span,
            )
        return pred, args, spans, name_tok

    def fresh_anonymous(self) -> Variable:
        while True:
            self._anon += 1
            name = f"_{self._anon}"
            if name not in self._used_names:
                self._used_names.add(name)
                return Variable(name)

    def finish_atom(self, raw) -> Atom:
        pred, args, _, _ = raw
        terms = []
        for a in args:
            if isinstance(a, tuple) and a and a[0] == "anon":
                terms.append(self.fresh_anonymous())
            else:
                terms.append(a)
        return Atom(pred, tuple(terms))

    def atom_list(self) -> list:
        anonymous: list = []
        out = [self.atom(anonymous)]
        while self.at("comma"):
            self.i += 1
            out.append(self.atom(anonymous))
        return out


def _check_vars(atoms_raw):
    for pred, args, spans, _ in atoms_raw:
        for a, span in zip(args, spans):
            if isinstance(a, Variable):
                yield a, span


def parse_program(text: str, strict: bool = True) -> Program:
    """Parse a ``.tgd`` program.

    In strict mode a head variable that is neither in the body nor declared
    with ``exists`` is an error.
    """
    p = _Parser(text)
    rules = []
    while not p.at("eof"):
        start = p.tok
        body_raw = p.atom_list()
        p.expect("arrow", "'->'")
        declared: dict = {}
        if p.at("ident", "exists") and p.tokens[p.i + 1].kind == "ident":
            p.i += 1
            while True:
                tok = p.expect("ident", "an existential variable")
                if not (tok.text[0].islower() or tok.text[0] == "_") or tok.text == "_":
                    raise ParseError(f"{tok.text!r} is not a variable name", tok.span)
                declared[Variable(tok.text)] = tok.span
                p._used_names.add(tok.text)
                if p.at("comma"):
                    p.i += 1
                    continue
                p.expect("colon", "':' after the existential variables")
                break
        head_raw = p.atom_list()
        p.expect("dot", "'.' at the end of the rule")
        body = [p.finish_atom(r) for r in body_raw]
        head = [p.finish_atom(r) for r in head_raw]
        body_vars = {t for a in body for t in a.args if isinstance(t, Variable)}
        for v, span in _check_vars(body_raw):
            if v in declared:
                raise ParseError(f"existential variable {v} used in the body", span)
        for v, span in _check_vars(head_raw):
            if v not in body_vars and v not in declared and strict:
                raise ParseError(
                    f"head variable {v} does not occur in the body and is not declared "
                    f"with 'exists'",
                    span,
                )
        if any(isinstance(t, tuple) for a in head_raw for t in a[1]):
            raise ParseError("anonymous variable '_' in a rule head", start.span)
        rules.append(TGD(tuple(body), tuple(head), label=f"line {start.span.line}"))
    return Program(tuple(rules))


def parse_database(text: str) -> Instance:
    """Parse a ``.facts`` file: ``Pred(a, b).`` per fact."""
    p = _Parser(text, facts_only=True)
    facts = []
    while not p.at("eof"):
        raw = p.atom([])
        p.expect("dot", "'.' at the end of the fact")
        facts.append(p.finish_atom(raw))
    return Instance(facts)


def parse_query(text: str, program: Program | None = None) -> CQ:
    """Parse ``Q(x̄) :- body.``; the head predicate must not occur in ``program``."""
    p = _Parser(text)
    if program is not None:
        p.arities.update(program.arities)
    head_tok = p.tok
    anonymous: list = []
    head_name = p.expect("ident", "a query head").text
    if program is not None and head_name in program.schema:
        raise ParseError(f"query head predicate {head_name} occurs in the program", head_tok.span)
    output, spans = [], []
    if p.at("lparen"):
        p.i += 1
        while True:
            term, tok = p.term(anonymous)
            if isinstance(term, tuple):
                raise ParseError("anonymous variable in the query head", tok.span)
            output.append(term)
            spans.append(tok.span)
            if p.at("comma"):
                p.i += 1
                continue
            p.expect("rparen", "',' or ')'")
            break
    p.expect("implied", "':-'")
    body_raw = p.atom_list()
    p.expect("dot", "'.' at the end of the query")
    p.expect("eof", "end of input after the query")
    body = [p.finish_atom(r) for r in body_raw]
    body_vars = {t for a in body for t in a.args if isinstance(t, Variable)}
    for t, span in zip(output, spans):
        if isinstance(t, Variable) and t not in body_vars:
            raise ParseError(f"output variable {t} does not occur in the body", span)
    if any(a.predicate == head_name for a in body):
        raise ParseError(f"query head predicate {head_name} used in the body", head_tok.span)
    return CQ(head_name, tuple(output), tuple(body))


_VAR_NAME = re.compile(r"[a-z_][A-Za-z0-9_]*\Z")
_CONST_NAME = re.compile(r"[A-Z0-9][A-Za-z0-9_]*\Z")
_FACT_CONST = re.compile(r"[A-Za-z0-9][A-Za-z0-9_]*\Z")


def _term_text(t, rename: dict, facts: bool = False) -> str:
    if isinstance(t, Variable):
        if t in rename:
            return rename[t]
        return t.name
    if isinstance(t, Constant):
        pattern = _FACT_CONST if facts else _CONST_NAME
        if pattern.match(t.name) and not (not facts and t.name == "exists"):
            return t.name
        return f"'{t.name}'"
    if isinstance(t, Null):
        return str(t)
    raise TypeError(f"not a term: {t!r}")


def _atom_text(a: Atom, rename: dict, facts: bool = False) -> str:
    if not a.args:
        return a.predicate
    return f"{a.predicate}({', '.join(_term_text(t, rename, facts) for t in a.args)})"


def _renaming(variables) -> dict:
    used = {v.name for v in variables if _VAR_NAME.match(str(v.name))}
    out, n = {}, 0
    for v in variables:
        if not _VAR_NAME.match(str(v.name)) or v.name == "_":
            while True:
                n += 1
                cand = f"v{n}"
                if cand not in used:
                    used.add(cand)
                    break
            out[v] = cand
    return out


def serialize_tgd(rule: TGD) -> str:
    rename = _renaming(list(rule.body_variables) + list(rule.existentials))
    body = ", ".join(_atom_text(a, rename) for a in rule.body)
    head = ", ".join(_atom_text(a, rename) for a in rule.head)
    if rule.existentials:
        ex = ", ".join(_term_text(v, rename) for v in rule.existentials)
        return f"{body} -> exists {ex}: {head}."
    return f"{body} -> {head}."


def serialize_program(program: Program) -> str:
    return "".join(serialize_tgd(r) + "\n" for r in program)


def serialize_database(database) -> str:
    atoms = sorted(database, key=lambda a: (a.predicate, [t.sort_key for t in a.args]))
    return "".join(_atom_text(a, {}, facts=True) + ".\n" for a in atoms)


def serialize_query(q: CQ) -> str:
    vars_in_order = list(dict.fromkeys(
        [t for t in q.output if isinstance(t, Variable)]
        + [t for a in q.body for t in a.args if isinstance(t, Variable)]
    ))
    rename = _renaming(vars_in_order)
    head = q.head_predicate
    if q.output:
        head += f"({', '.join(_term_text(t, rename) for t in q.output)})"
    return f"{head} :- {', '.join(_atom_text(a, rename) for a in q.body)}.\n"


def serialize_report(report: Any) -> str:
    """JSON with sorted keys; objects exposing ``to_dict`` are converted first."""
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def read_program(path) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse_program(f.read())


def read_database(path) -> Instance:
    with open(path, encoding="utf-8") as f:
        return parse_database(f.read())


def read_query(path, program: Program | None = None) -> CQ:
    with open(path, encoding="utf-8") as f:
        return parse_query(f.read(), program)
