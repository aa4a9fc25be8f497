"""AST for the supported XPath subset, with a canonical unparser.

The subset covers absolute and relative step chains over the axes child,
descendant, descendant-or-self, self, parent, ancestor, following-sibling
and attribute; name, wildcard and node-kind tests; and predicates built
from or/and, comparisons, number and string literals, relative paths and
the functions name(.), last(), position() and count(path).

A query may also start from a value-index lookup (the ``db:attribute`` /
``db:text`` spelling), represented as a first-class :class:`IndexAccess`
head rather than surface syntax.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Axis(enum.Enum):
    CHILD = "child"
    DESCENDANT = "descendant"
    DESCENDANT_OR_SELF = "descendant-or-self"
    SELF = "self"
    PARENT = "parent"
    ANCESTOR = "ancestor"
    FOLLOWING_SIBLING = "following-sibling"
    ATTRIBUTE = "attribute"


DOWNWARD_AXES = frozenset({Axis.CHILD, Axis.DESCENDANT, Axis.DESCENDANT_OR_SELF,
                           Axis.SELF, Axis.ATTRIBUTE})


@dataclass(frozen=True)
class NameTest:
    name: str


@dataclass(frozen=True)
class Wildcard:
    pass


class Kind(enum.Enum):
    ELEMENT = "element"
    TEXT = "text"
    ATTRIBUTE = "attribute"
    NODE = "node"
    DOCUMENT = "document-node"


@dataclass(frozen=True)
class KindTest:
    kind: Kind


# Predicate expressions.  Comparison operands are any of these plus Path.

@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class FnName:
    """name(.) of the context node."""


@dataclass(frozen=True)
class FnLast:
    pass


@dataclass(frozen=True)
class FnPosition:
    pass


@dataclass(frozen=True)
class FnCount:
    path: "Path"


@dataclass(frozen=True)
class Compare:
    op: str  # one of = < <= > >=
    lhs: object
    rhs: object


@dataclass(frozen=True)
class AndExpr:
    terms: tuple


@dataclass(frozen=True)
class OrExpr:
    terms: tuple


@dataclass(frozen=True)
class Step:
    axis: Axis
    test: object
    predicates: tuple = ()


@dataclass(frozen=True)
class IndexAccess:
    """Node-set source backed by the attribute/text value index."""

    kind: str  # "attribute" or "text"
    db: str
    value: str
    predicates: tuple = ()


@dataclass(frozen=True)
class Path:
    """A query: optional index head, then a step chain.

    ``absolute`` queries start at the document node and ignore any context;
    index-headed queries are rooted the same way.  Relative queries require
    a non-empty evaluation context.
    """

    absolute: bool
    steps: tuple = ()
    index: IndexAccess | None = None

    def is_rooted(self):
        return self.absolute or self.index is not None


def _unparse_test(test):
    if isinstance(test, NameTest):
        return test.name
    if isinstance(test, Wildcard):
        return "*"
    return f"{test.kind.value}()"


def _unparse_step(step, first):
    preds = "".join(f"[{unparse_expr(p)}]" for p in step.predicates)
    axis, test = step.axis, step.test
    if axis is Axis.CHILD:
        return _unparse_test(test) + preds
    if axis is Axis.ATTRIBUTE and isinstance(test, (NameTest, Wildcard)):
        return "@" + _unparse_test(test) + preds
    if axis is Axis.SELF and isinstance(test, KindTest) and test.kind is Kind.NODE and not preds:
        return "."
    if axis is Axis.PARENT and isinstance(test, KindTest) and test.kind is Kind.NODE and not preds:
        return ".."
    if axis is Axis.DESCENDANT and not first:
        # joined with the preceding step by // (handled by the caller)
        return _unparse_test(test) + preds
    return f"{axis.value}::{_unparse_test(test)}{preds}"


def unparse(path):
    """Surface syntax whose re-parse yields an equal AST."""
    out = []
    if path.index is not None:
        fn = "db:attribute" if path.index.kind == "attribute" else "db:text"
        out.append(f'{fn}("{path.index.db}", {_quote(path.index.value)})')
        out.append("".join(f"[{unparse_expr(p)}]" for p in path.index.predicates))
    for i, step in enumerate(path.steps):
        first = i == 0 and path.index is None
        if first:
            if path.absolute:
                if step.axis is Axis.DESCENDANT:
                    out.append("//" + _unparse_test(step.test)
                               + "".join(f"[{unparse_expr(p)}]" for p in step.predicates))
                    continue
                out.append("/")
        else:
            if step.axis is Axis.DESCENDANT:
                out.append("//" + _unparse_test(step.test)
                           + "".join(f"[{unparse_expr(p)}]" for p in step.predicates))
                continue
            out.append("/")
        out.append(_unparse_step(step, first and not path.absolute))
    if path.absolute and not path.steps and path.index is None:
        return "/"
    return "".join(out)


def _quote(s):
    if '"' not in s:
        return f'"{s}"'
    if "'" not in s:
        return f"'{s}'"
    raise ValueError("string literal cannot contain both quote kinds")


def _unparse_number(v):
    if math.isfinite(v) and v == int(v):
        return str(int(v))
    return repr(v)


def unparse_expr(e):
    if isinstance(e, OrExpr):
        return " or ".join(_paren_or_term(t) for t in e.terms)
    if isinstance(e, AndExpr):
        return " and ".join(_paren_and_term(t) for t in e.terms)
    if isinstance(e, Compare):
        return f"{_paren_cmp_side(e.lhs)} {e.op} {_paren_cmp_side(e.rhs)}"
    if isinstance(e, NumberLit):
        return _unparse_number(e.value)
    if isinstance(e, StringLit):
        return _quote(e.value)
    if isinstance(e, FnName):
        return "name(.)"
    if isinstance(e, FnLast):
        return "last()"
    if isinstance(e, FnPosition):
        return "position()"
    if isinstance(e, FnCount):
        return f"count({unparse(e.path)})"
    if isinstance(e, Path):
        return unparse(e)
    raise TypeError(f"cannot unparse {e!r}")


def _paren_or_term(t):
    return unparse_expr(t)


def _paren_and_term(t):
    s = unparse_expr(t)
    return f"({s})" if isinstance(t, OrExpr) else s


def _paren_cmp_side(t):
    s = unparse_expr(t)
    return f"({s})" if isinstance(t, (OrExpr, AndExpr, Compare)) else s
