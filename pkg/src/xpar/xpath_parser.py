"""Recursive-descent parser for the supported XPath subset.

``//`` is normalized at parse time: ``a//b`` becomes a descendant step and
``a//@x`` (or any step that cannot absorb the shorthand) becomes an
explicit descendant-or-self::node() step followed by the original step.
``db:attribute(db, value)`` and ``db:text(db, value)`` are accepted as
leading forms and mapped to an :class:`~xpar.xpath_ast.IndexAccess` head.
"""

from __future__ import annotations

import re

from .errors import UnsupportedFeatureError, XPathSyntaxError
from .xpath_ast import (AndExpr, Axis, Compare, FnCount, FnLast, FnName,
                        FnPosition, IndexAccess, Kind, KindTest, NameTest,
                        NumberLit, OrExpr, Path, StringLit, Step, Wildcard)

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?|\.\d+(?!\.))
  | (?P<dbfn>db:(?:attribute|text)\b)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.-]*)
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<op>//|\.\.|::|<=|>=|!=|[]/[()@*.,=<>;])
""", re.VERBOSE)

_AXES = {a.value: a for a in Axis}
_UNSUPPORTED_AXES = {"ancestor-or-self", "preceding", "following",
                     "preceding-sibling", "namespace"}
_KIND_TESTS = {"node": Kind.NODE, "text": Kind.TEXT, "element": Kind.ELEMENT,
               "attribute": Kind.ATTRIBUTE, "document-node": Kind.DOCUMENT}
_UNSUPPORTED_KIND_TESTS = {"comment", "processing-instruction"}
_FUNCTIONS = {"name", "last", "position", "count"}


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise XPathSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            raise XPathSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                                   tok.pos)
        return tok

    def at(self, text):
        return self.peek().text == text

    # -- query -----------------------------------------------------------

    def parse_query(self):
        tok = self.peek()
        if tok.kind == "dbfn":
            return self.parse_index_query()
        if tok.text == "/" or tok.text == "//":
            return self.parse_absolute()
        steps = self.parse_relative_steps()
        return Path(absolute=False, steps=tuple(steps))

    def parse_index_query(self):
        fn = self.next()
        kind = "attribute" if fn.text == "db:attribute" else "text"
        self.expect("(")
        db = self.parse_string_lit()
        self.expect(",")
        value = self.parse_string_lit()
        self.expect(")")
        preds = self.parse_predicates()
        head = IndexAccess(kind=kind, db=db, value=value, predicates=preds)
        steps = []
        while self.at("/") or self.at("//"):
            self.next_step_into(steps)
        return Path(absolute=True, steps=tuple(steps), index=head)

    def parse_absolute(self):
        steps = []
        if self.at("//"):
            self.next()
            self.append_step(steps, descendant=True)
            self.parse_step_tail(steps)
        else:
            self.expect("/")
            if self.peek().kind != "eof":
                self.append_step(steps, descendant=False)
                self.parse_step_tail(steps)
        return Path(absolute=True, steps=tuple(steps))

    def parse_relative_steps(self):
        steps = []
        self.append_step(steps, descendant=False)
        self.parse_step_tail(steps)
        if not steps:
            raise XPathSyntaxError("empty relative path", self.peek().pos)
        return steps

    def parse_step_tail(self, steps):
        while self.at("/") or self.at("//"):
            self.next_step_into(steps)

    def next_step_into(self, steps):
        sep = self.next()
        self.append_step(steps, descendant=(sep.text == "//"))

    def append_step(self, steps, descendant):
        step = self.parse_step()
        if descendant:
            if step.axis is Axis.CHILD:
                step = Step(Axis.DESCENDANT, step.test, step.predicates)
            elif step.axis is Axis.SELF:
                step = Step(Axis.DESCENDANT_OR_SELF, step.test, step.predicates)
            else:
                steps.append(Step(Axis.DESCENDANT_OR_SELF, KindTest(Kind.NODE)))
        steps.append(step)

    # -- steps -----------------------------------------------------------

    def parse_step(self):
        tok = self.peek()
        if tok.text == ".":
            self.next()
            return Step(Axis.SELF, KindTest(Kind.NODE), self.parse_predicates())
        if tok.text == "..":
            self.next()
            return Step(Axis.PARENT, KindTest(Kind.NODE), self.parse_predicates())
        if tok.text == "@":
            self.next()
            test = self.parse_node_test(allow_kind=False)
            return Step(Axis.ATTRIBUTE, test, self.parse_predicates())
        if tok.kind == "name" and self.peek(1).text == "::":
            axis_name = self.next().text
            self.expect("::")
            axis = _AXES.get(axis_name)
            if axis is None:
                if axis_name in _UNSUPPORTED_AXES:
                    raise UnsupportedFeatureError(f"axis {axis_name!r} is not supported")
                raise XPathSyntaxError(f"unknown axis {axis_name!r}", tok.pos)
            return Step(axis, self.parse_node_test(allow_kind=True), self.parse_predicates())
        test = self.parse_node_test(allow_kind=True)
        return Step(Axis.CHILD, test, self.parse_predicates())

    def parse_node_test(self, allow_kind):
        tok = self.next()
        if tok.text == "*":
            return Wildcard()
        if tok.kind != "name":
            raise XPathSyntaxError(f"expected a node test, found {tok.text!r}", tok.pos)
        if self.at("("):
            if tok.text in _UNSUPPORTED_KIND_TESTS:
                raise UnsupportedFeatureError(f"{tok.text}() nodes are not supported")
            if tok.text in _FUNCTIONS:
                raise UnsupportedFeatureError(
                    f"function {tok.text}() is only supported inside predicates")
            kind = _KIND_TESTS.get(tok.text)
            if kind is None:
                raise XPathSyntaxError(f"unknown node kind test {tok.text!r}", tok.pos)
            if not allow_kind and kind is not Kind.NODE:
                raise XPathSyntaxError("attribute axis takes a name or wildcard test", tok.pos)
            self.expect("(")
            self.expect(")")
            return KindTest(kind)
        return NameTest(tok.text)

    def parse_predicates(self):
        preds = []
        while self.at("["):
            self.next()
            preds.append(self.parse_or())
            self.expect("]")
        return tuple(preds)

    # -- predicate expressions --------------------------------------------

    def parse_or(self):
        terms = [self.parse_and()]
        while self.peek().text == "or":
            self.next()
            terms.append(self.parse_and())
        return terms[0] if len(terms) == 1 else OrExpr(tuple(terms))

    def parse_and(self):
        terms = [self.parse_cmp()]
        while self.peek().text == "and":
            self.next()
            terms.append(self.parse_cmp())
        return terms[0] if len(terms) == 1 else AndExpr(tuple(terms))

    def parse_cmp(self):
        lhs = self.parse_atom()
        tok = self.peek()
        if tok.text in ("=", "<", "<=", ">", ">="):
            self.next()
            rhs = self.parse_atom()
            return Compare(tok.text, lhs, rhs)
        if tok.text == "!=":
            raise UnsupportedFeatureError("operator != is not supported")
        return lhs

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return NumberLit(float(tok.text))
        if tok.kind == "string":
            self.next()
            return StringLit(tok.text[1:-1])
        if tok.text == "(":
            self.next()
            e = self.parse_or()
            self.expect(")")
            return e
        if tok.text == "/" or tok.text == "//" or tok.kind == "dbfn":
            raise UnsupportedFeatureError("absolute paths inside predicates are not supported")
        if tok.kind == "name" and self.peek(1).text == "(" and tok.text in _FUNCTIONS:
            return self.parse_function()
        if tok.kind == "name" and self.peek(1).text == "(" \
                and tok.text not in _KIND_TESTS and tok.text not in _UNSUPPORTED_KIND_TESTS:
            raise UnsupportedFeatureError(f"function {tok.text}() is not supported")
        # otherwise a relative path atom: . .. @ name axis:: * kind()
        steps = self.parse_relative_steps()
        return Path(absolute=False, steps=tuple(steps))

    def parse_function(self):
        tok = self.next()
        self.expect("(")
        if tok.text == "name":
            self.expect(".")
            self.expect(")")
            return FnName()
        if tok.text == "last":
            self.expect(")")
            return FnLast()
        if tok.text == "position":
            self.expect(")")
            return FnPosition()
        arg = self.parse_query()
        if arg.is_rooted():
            raise UnsupportedFeatureError("count() takes a relative path argument")
        self.expect(")")
        return FnCount(arg)

    def parse_string_lit(self):
        tok = self.next()
        if tok.kind != "string":
            raise XPathSyntaxError(f"expected a string literal, found {tok.text!r}", tok.pos)
        return tok.text[1:-1]


def parse_xpath(text):
    """Parse query text into a :class:`~xpar.xpath_ast.Path`.

    Raises :class:`XPathSyntaxError` with the failing position on bad
    syntax and :class:`UnsupportedFeatureError` for grammar that is valid
    XPath but outside the supported subset.
    """
    p = _Parser(text)
    query = p.parse_query()
    tok = p.peek()
    if tok.kind != "eof":
        raise XPathSyntaxError(f"unexpected trailing input {tok.text!r}", tok.pos)
    return query
