"""Query splitting and block partitioning.

A split plan is an absolute (or index-headed) prefix query, a relative
suffix query and a merge rule.  Three split families are enumerated:

* step_boundary: prefix = first k steps, suffix = the rest;
* predicate_peel: a step's predicates move into a leading self step of the
  suffix (skipped for positional predicates, which are not peelable);
* descendant_pushdown: ``//t`` becomes a prefix ending in ``child::*`` and
  a suffix starting ``descendant-or-self::t``.

The merge rule is conservative: results may be concatenated in partition
order only when the prefix provably yields pairwise subtree-disjoint nodes
and the suffix only moves downward; otherwise streams are re-merged by PRE
with duplicates dropped, which is always byte-correct.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import engine
from .xpath_ast import (AndExpr, Axis, Compare, DOWNWARD_AXES, FnCount,
                        FnLast, FnPosition, Kind, KindTest, NameTest,
                        NumberLit, OrExpr, Path, Step, Wildcard, unparse)

CONCAT_IN_ORDER = "concat_in_order"
DEDUP_SORT = "dedup_sort"

STEP_BOUNDARY = "step_boundary"
PREDICATE_PEEL = "predicate_peel"
DESCENDANT_PUSHDOWN = "descendant_pushdown"


@dataclass(frozen=True)
class SplitPlan:
    prefix: Path
    suffix: Path
    merge: str
    kind: str

    def describe(self):
        return f"prefix = {unparse(self.prefix)}, suffix = {unparse(self.suffix)}"


@dataclass(frozen=True)
class PartitionSet:
    partitions: tuple
    db_name: str = ""

    @property
    def p(self):
        return len(self.partitions)


def block_partition(seq, p, db_name=""):
    """Split a sequence into ``p`` contiguous blocks with sizes within 1.

    The first ``len(seq) mod p`` blocks get the larger size; empty blocks
    appear when the sequence is shorter than ``p``.
    """
    if p < 1:
        raise ValueError(f"partition count must be >= 1, got {p}")
    seq = [int(x) for x in seq]
    n = len(seq)
    q, r = divmod(n, p)
    parts = []
    pos = 0
    for i in range(p):
        size = q + (1 if i < r else 0)
        parts.append(tuple(seq[pos:pos + size]))
        pos += size
    return PartitionSet(tuple(parts), db_name)


def is_positional(expr):
    """True when the predicate's truth depends on context position."""
    if isinstance(expr, (NumberLit, FnPosition, FnLast)):
        return True
    if isinstance(expr, FnCount):
        return True  # a bare count() converts by position at the top level
    if isinstance(expr, (OrExpr, AndExpr)):
        return any(_contains_positional(t) for t in expr.terms)
    if isinstance(expr, Compare):
        return _contains_positional(expr.lhs) or _contains_positional(expr.rhs)
    return False


def _contains_positional(expr):
    # position()/last() nested below a Path or count() apply to that inner
    # context, not to the peeled step, so recursion stops there
    if isinstance(expr, (FnPosition, FnLast)):
        return True
    if isinstance(expr, (OrExpr, AndExpr)):
        return any(_contains_positional(t) for t in expr.terms)
    if isinstance(expr, Compare):
        return _contains_positional(expr.lhs) or _contains_positional(expr.rhs)
    return False


def _downward_only(suffix):
    return all(s.axis in DOWNWARD_AXES for s in suffix.steps)


def _statically_disjoint(prefix):
    """True when prefix results cannot be nested within each other.

    Child/attribute/self chains select nodes at one fixed depth; a bare
    index head selects attribute or text nodes, which are leaves.
    """
    if prefix.index is not None:
        return not prefix.steps
    return all(s.axis in (Axis.CHILD, Axis.ATTRIBUTE, Axis.SELF) for s in prefix.steps)


def _static_merge(prefix, suffix):
    if _statically_disjoint(prefix) and _downward_only(suffix):
        return CONCAT_IN_ORDER
    return DEDUP_SORT


def _make_plan(prefix, suffix, kind):
    return SplitPlan(prefix, suffix, _static_merge(prefix, suffix), kind)


def _peel_head_step(step):
    """`self::*[preds]` when the step yields elements, `self::node()` otherwise."""
    if isinstance(step.test, (NameTest, Wildcard)) and step.axis is not Axis.ATTRIBUTE:
        head_test = Wildcard()
    elif isinstance(step.test, KindTest) and step.test.kind is Kind.ELEMENT:
        head_test = Wildcard()
    else:
        head_test = KindTest(Kind.NODE)
    return Step(Axis.SELF, head_test, step.predicates)


def enumerate_splits(ast):
    """All legal split plans of a rooted query, in a deterministic order.

    Queries with fewer than two steps and nothing to peel yield no plans.
    """
    if not ast.is_rooted():
        raise ValueError("only rooted queries can be split")
    steps = ast.steps
    plans = []

    first_boundary = 0 if ast.index is not None else 1
    for k in range(first_boundary, len(steps)):
        prefix = replace(ast, steps=steps[:k])
        suffix = Path(absolute=False, steps=steps[k:])
        plans.append(_make_plan(prefix, suffix, STEP_BOUNDARY))

    for k in range(len(steps)):
        step = steps[k]
        if not step.predicates:
            continue
        if any(is_positional(p) for p in step.predicates):
            continue
        prefix = replace(ast, steps=steps[:k] + (Step(step.axis, step.test),))
        suffix = Path(absolute=False, steps=(_peel_head_step(step),) + steps[k + 1:])
        plans.append(_make_plan(prefix, suffix, PREDICATE_PEEL))

    for k in range(len(steps)):
        step = steps[k]
        if step.axis is not Axis.DESCENDANT:
            continue
        if not isinstance(step.test, (NameTest, Wildcard)):
            continue  # depth-1 text()/node() descendants would be lost
        prefix = replace(ast, steps=steps[:k] + (Step(Axis.CHILD, Wildcard()),))
        suffix = Path(absolute=False,
                      steps=(Step(Axis.DESCENDANT_OR_SELF, step.test, step.predicates),)
                      + steps[k + 1:])
        plans.append(_make_plan(prefix, suffix, DESCENDANT_PUSHDOWN))

    return plans


def prefix_results_disjoint(table, pres):
    """No result's subtree contains another result."""
    pres = np.asarray(pres, dtype=np.int64)
    if len(pres) < 2:
        return True
    ends = pres + table.size[pres]
    return bool(np.all(pres[1:] >= ends[:-1]))


def choose_merge(plan, table):
    """Runtime refinement of the merge rule against actual prefix results.

    Concatenation in partition order is only safe when the evaluated prefix
    results are pairwise subtree-disjoint and the suffix never leaves those
    subtrees (downward axes only); any other combination can emit
    duplicates or out-of-order nodes, so it falls back to the PRE merge.
    """
    if not _downward_only(plan.suffix):
        return DEDUP_SORT
    pres = engine.evaluate(table, plan.prefix)
    if prefix_results_disjoint(table, pres):
        return CONCAT_IN_ORDER
    return DEDUP_SORT


def default_split(ast, table, p):
    """Pick a split when no variant is named.

    Candidate prefixes are evaluated cheapest-first (shortest text first);
    among plans whose prefix yields at least ``4 * p`` nodes the deepest
    split wins, ties toward the shorter prefix.  Falls back to the largest
    prefix when nothing reaches the threshold.
    """
    plans = enumerate_splits(ast)
    if not plans:
        return None
    counts = {}
    for plan in sorted(plans, key=lambda pl: len(unparse(pl.prefix))):
        key = plan.prefix
        if key not in counts:
            counts[key] = len(engine.evaluate(table, plan.prefix))
    qualified = [pl for pl in plans if counts[pl.prefix] >= 4 * p]
    pool = qualified or plans
    if not qualified:
        return max(pool, key=lambda pl: (counts[pl.prefix], -len(unparse(pl.prefix))))
    return sorted(pool, key=lambda pl: (-len(pl.prefix.steps), len(unparse(pl.prefix))))[0]
