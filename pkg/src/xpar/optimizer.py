"""Index-driven query rewriting.

Two rule families, applied to absolute queries until nothing changes:

* descendant-to-child-chain: a ``//name`` step whose target is reachable
  from the current context by exactly one label chain (per the path
  summary) becomes that chain of child steps, predicates kept on the last;
* value-index inversion: an equality between an ``@attr`` or child-element
  path and a string literal is replaced by a value-index lookup head, with
  reversed parent/ancestor steps re-establishing the original location as
  guards and the remaining predicates re-attached.

Both rules fire only when the justifying summary or index fact is present,
so rewrites are result-preserving on any document the summary and indices
were built from.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .nodestore import ATTRIBUTE_VALUES, TEXT_VALUES
from .splitter import is_positional
from .xpath_ast import (AndExpr, Axis, Compare, FnName, IndexAccess, Kind,
                        KindTest, NameTest, Path, Step, StringLit, Wildcard,
                        unparse)

DESCENDANT_TO_CHILD_CHAIN = "descendant_to_child_chain"
VALUE_INDEX_INVERSION = "value_index_inversion"

_DOC = ()  # the document's label path


@dataclass(frozen=True)
class RewriteReport:
    input: Path
    output: Path
    applied: tuple
    notes: tuple

    @property
    def changed(self):
        return self.input != self.output


def _match_paths(paths, test):
    if isinstance(test, NameTest):
        return {p for p in paths if p and p[-1] == test.name}
    if isinstance(test, Wildcard):
        return {p for p in paths if p}
    kind = test.kind
    if kind is Kind.NODE:
        return set(paths)
    if kind is Kind.ELEMENT:
        return {p for p in paths if p}
    if kind is Kind.DOCUMENT:
        return {p for p in paths if p == _DOC}
    return set()  # text()/attribute(): no element locations


def _context_paths(steps, summary):
    """Element label paths reachable after ``steps`` from the document.

    Non-element results (attributes, texts) are dropped: they have no
    children, so a descendant step evaluated from them is empty either way
    and does not affect chain-rewrite soundness.
    """
    paths = {_DOC}
    for step in steps:
        axis, test = step.axis, step.test
        if axis is Axis.CHILD:
            nxt = set()
            for cp in paths:
                nxt |= summary.extensions(cp)
            paths = _match_paths(nxt, test)
        elif axis is Axis.DESCENDANT or axis is Axis.DESCENDANT_OR_SELF:
            nxt = set()
            for cp in paths:
                k = len(cp)
                nxt |= {sp for sp in summary.paths if len(sp) > k and sp[:k] == cp}
            if axis is Axis.DESCENDANT_OR_SELF:
                nxt |= paths
            paths = _match_paths(nxt, test)
        elif axis is Axis.SELF:
            paths = _match_paths(paths, test)
        elif axis is Axis.PARENT:
            paths = _match_paths({cp[:-1] for cp in paths if cp}, test)
        elif axis is Axis.ANCESTOR:
            nxt = set()
            for cp in paths:
                nxt |= {cp[:k] for k in range(len(cp))}
            paths = _match_paths(nxt, test)
        elif axis is Axis.FOLLOWING_SIBLING:
            nxt = set()
            for cp in paths:
                if cp:
                    nxt |= summary.extensions(cp[:-1])
            paths = _match_paths(nxt, test)
        else:  # attribute axis: no element locations afterwards
            paths = set()
    return paths


def rule_descendant_to_child_chain(ast, summary):
    """Replace uniquely-reachable descendant steps with child chains."""
    if not ast.absolute or ast.index is not None:
        return ast, ()
    notes = []
    changed = True
    while changed:
        changed = False
        steps = list(ast.steps)
        for i, step in enumerate(steps):
            if step.axis is not Axis.DESCENDANT or not isinstance(step.test, NameTest):
                continue
            ctx = _context_paths(tuple(steps[:i]), summary)
            chains = set()
            for cp in ctx:
                chains |= summary.descendant_chains(cp, step.test.name)
            if len(chains) != 1:
                continue
            (chain,) = chains
            repl = [Step(Axis.CHILD, NameTest(label)) for label in chain]
            repl[-1] = Step(Axis.CHILD, NameTest(chain[-1]), step.predicates)
            steps[i:i + 1] = repl
            ast = replace(ast, steps=tuple(steps))
            notes.append(f"//{step.test.name} reachable only via "
                         f"{'/'.join(chain)} from {{{', '.join('/' + '/'.join(c) for c in sorted(ctx))}}}")
            changed = True
            break
    return ast, tuple(notes)


def _strip_self_steps(steps):
    return tuple(s for s in steps
                 if not (s.axis is Axis.SELF and isinstance(s.test, KindTest)
                         and s.test.kind is Kind.NODE and not s.predicates))


def _eligible_value_predicate(pred):
    """(kind, name, literal) for an invertible `path = "literal"` predicate."""
    if not isinstance(pred, Compare) or pred.op != "=":
        return None
    lhs, rhs = pred.lhs, pred.rhs
    if isinstance(lhs, StringLit) and isinstance(rhs, Path):
        lhs, rhs = rhs, lhs
    if not (isinstance(lhs, Path) and isinstance(rhs, StringLit)) or lhs.is_rooted():
        return None
    steps = _strip_self_steps(lhs.steps)
    if len(steps) != 1 or steps[0].predicates:
        return None
    step = steps[0]
    if not isinstance(step.test, NameTest):
        return None
    if step.axis is Axis.ATTRIBUTE:
        return ("attribute", step.test.name, rhs.value)
    if step.axis is Axis.CHILD:
        return ("text", step.test.name, rhs.value)
    return None


def _reverse_axis(axis):
    return Axis.PARENT if axis is Axis.CHILD else Axis.ANCESTOR


def _location_guard(steps, k):
    """Reversed-step predicate re-establishing the location of step k."""
    guard = []
    for j in range(k, 0, -1):
        guard.append(Step(_reverse_axis(steps[j].axis), steps[j - 1].test))
    guard.append(Step(_reverse_axis(steps[0].axis), KindTest(Kind.DOCUMENT)))
    return Path(absolute=False, steps=tuple(guard))


def rule_value_index_inversion(ast, indices, summary):
    """Start the query from a value-index lookup when a predicate allows it.

    Applies to absolute queries whose steps up to the predicated one are
    child/descendant with no intervening predicates.  Text inversion also
    requires the compared child element to be a summary leaf everywhere it
    can occur (so its string value is its single text node) and a non-empty
    literal.  With several eligible predicates the smallest index hit count
    wins.
    """
    if not ast.absolute or ast.index is not None:
        return ast, ()
    steps = ast.steps
    candidates = []
    for k, step in enumerate(steps):
        if step.axis not in (Axis.CHILD, Axis.DESCENDANT):
            continue
        if not isinstance(step.test, (NameTest, Wildcard)):
            continue
        if any(s.predicates for s in steps[:k]):
            continue
        if any(s.axis not in (Axis.CHILD, Axis.DESCENDANT) for s in steps[:k]):
            continue
        if any(is_positional(p) for p in step.predicates):
            continue  # re-attaching the rest would renumber positions
        for pi, pred in enumerate(step.predicates):
            # one `and` chain decomposes into sequential predicates, so any
            # conjunct can be inverted with the others re-attached
            units = pred.terms if isinstance(pred, AndExpr) else (pred,)
            for ci, unit in enumerate(units):
                info = _eligible_value_predicate(unit)
                if info is None:
                    continue
                kind, name, literal = info
                if kind == "text":
                    if literal == "":
                        continue
                    ctx = _context_paths(steps[:k + 1], summary)
                    child_paths = [cp + (name,) for cp in ctx if cp + (name,) in summary]
                    if not all(summary.is_leaf(p) for p in child_paths):
                        continue
                hits = indices.hit_count(
                    ATTRIBUTE_VALUES if kind == "attribute" else TEXT_VALUES, literal)
                candidates.append((hits, k, pi, ci, kind, name, literal))
    if not candidates:
        return ast, ()
    hits, k, pi, ci, kind, name, literal = min(
        candidates, key=lambda c: (c[0], c[1], c[2], c[3]))
    step = steps[k]
    other_preds = []
    for i, pred in enumerate(step.predicates):
        if i != pi:
            other_preds.append(pred)
        elif isinstance(pred, AndExpr):
            other_preds.extend(u for j, u in enumerate(pred.terms) if j != ci)
    other_preds = tuple(other_preds)
    guard = _location_guard(steps, k)
    if kind == "attribute":
        head = IndexAccess("attribute", indices.db_name, literal,
                           predicates=(Compare("=", FnName(), StringLit(name)),))
        new_steps = (Step(Axis.PARENT, step.test, (guard,) + other_preds),) + steps[k + 1:]
    else:
        head = IndexAccess("text", indices.db_name, literal)
        new_steps = (Step(Axis.PARENT, NameTest(name)),
                     Step(Axis.PARENT, step.test, (guard,) + other_preds)) + steps[k + 1:]
    out = Path(absolute=True, steps=new_steps, index=head)
    note = (f"{kind} index: {literal!r} has {hits} hits; inverted predicate "
            f"{pi + 1}.{ci + 1} of step {k + 1}")
    return out, (note,)


def optimize(ast, summary, indices):
    """Apply both rule families to fixpoint; total (never fails).

    Only absolute queries are rewritten: index optimizations start from the
    document root, and relative suffix queries pass through unchanged.
    """
    applied = []
    notes = []
    out = ast
    while True:
        out2, n = rule_descendant_to_child_chain(out, summary)
        if n:
            applied.extend([DESCENDANT_TO_CHILD_CHAIN] * len(n))
            notes.extend(n)
        out3, n = rule_value_index_inversion(out2, indices, summary)
        if n:
            applied.extend([VALUE_INDEX_INVERSION] * len(n))
            notes.extend(n)
        if out3 == out:
            break
        out = out3
    return RewriteReport(ast, out, tuple(applied), tuple(notes))


def optimized_text(report):
    return unparse(report.output)
