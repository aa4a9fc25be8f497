"""Random documents and queries for the equivalence property tests.

Documents use a small label/value alphabet so that name tests and value
predicates hit often enough to be informative.  Queries are drawn from the
full supported grammar and rendered through unparse, so every generated
query also exercises the parser round trip.
"""

from __future__ import annotations

from xpar.xpath_ast import (AndExpr, Axis, Compare, FnCount, FnLast, FnName,
                            FnPosition, Kind, KindTest, NameTest, NumberLit,
                            OrExpr, Path, StringLit, Step, Wildcard)

LABELS = ["a", "b", "c", "d"]
ATTR_NAMES = ["k", "m"]
VALUES = ["x", "y", "5", "7"]


def random_doc(rng, max_nodes=200):
    """Well-formed XML bytes with roughly ``max_nodes`` nodes."""
    budget = [rng.randint(max(3, max_nodes // 4), max_nodes)]
    parts = []

    def emit_element(depth):
        label = rng.choice(LABELS)
        budget[0] -= 1
        attrs = []
        for name in ATTR_NAMES:
            if budget[0] > 1 and rng.random() < 0.25:
                attrs.append(f' {name}="{rng.choice(VALUES)}"')
                budget[0] -= 1
        attr_text = "".join(attrs)
        parts.append(f"<{label}{attr_text}>")
        while budget[0] > 1 and depth < 6 and rng.random() < 0.75:
            if rng.random() < 0.35:
                parts.append(rng.choice(VALUES))
                budget[0] -= 1
                # a text node cannot be adjacent to another text node
                if budget[0] > 1 and depth < 6 and rng.random() < 0.7:
                    emit_element(depth + 1)
                else:
                    break
            else:
                emit_element(depth + 1)
        parts.append(f"</{label}>")

    emit_element(0)
    return "".join(parts).encode()


def _random_test(rng, attr_axis):
    r = rng.random()
    if attr_axis:
        return NameTest(rng.choice(ATTR_NAMES)) if r < 0.8 else Wildcard()
    if r < 0.45:
        return NameTest(rng.choice(LABELS))
    if r < 0.75:
        return Wildcard()
    return KindTest(rng.choice([Kind.NODE, Kind.TEXT, Kind.ELEMENT, Kind.DOCUMENT]))


_AXES = [
    (Axis.CHILD, 0.34), (Axis.DESCENDANT, 0.16), (Axis.DESCENDANT_OR_SELF, 0.08),
    (Axis.SELF, 0.06), (Axis.PARENT, 0.10), (Axis.ANCESTOR, 0.06),
    (Axis.FOLLOWING_SIBLING, 0.10), (Axis.ATTRIBUTE, 0.10),
]


def _random_axis(rng):
    r = rng.random()
    acc = 0.0
    for axis, w in _AXES:
        acc += w
        if r < acc:
            return axis
    return Axis.CHILD


def _random_rel_path(rng, max_steps):
    steps = tuple(_random_step(rng, 0) for _ in range(rng.randint(1, max_steps)))
    return Path(absolute=False, steps=steps)


def _random_pred_path(rng):
    """Short relative paths biased toward forms that actually hit."""
    r = rng.random()
    if r < 0.3:
        return Path(absolute=False, steps=(Step(Axis.ATTRIBUTE, NameTest(rng.choice(ATTR_NAMES))),))
    if r < 0.5:
        return Path(absolute=False, steps=(Step(Axis.CHILD, NameTest(rng.choice(LABELS))),))
    if r < 0.65:
        return Path(absolute=False, steps=(
            Step(Axis.SELF, KindTest(Kind.NODE)),
            Step(Axis.CHILD, rng.choice([NameTest(rng.choice(LABELS)), Wildcard(),
                                         KindTest(Kind.TEXT)]))))
    return _random_rel_path(rng, 2)


def _random_predicate(rng, depth):
    r = rng.random()
    if r < 0.22:
        return _random_pred_path(rng)
    if r < 0.4:
        return Compare("=", _random_pred_path(rng), StringLit(rng.choice(VALUES)))
    if r < 0.5:
        return Compare(rng.choice(["<", "<=", ">", ">="]),
                       _random_pred_path(rng), NumberLit(float(rng.choice([0, 2, 5, 7]))))
    if r < 0.58:
        return NumberLit(float(rng.randint(1, 3)))
    if r < 0.66:
        return Compare(rng.choice(["<=", "=", ">"]), FnPosition(),
                       NumberLit(float(rng.randint(1, 3))))
    if r < 0.72:
        return FnLast() if rng.random() < 0.5 else Compare("=", FnPosition(), FnLast())
    if r < 0.82:
        return Compare(rng.choice(["<", "=", ">", ">="]),
                       FnCount(_random_pred_path(rng)),
                       FnCount(_random_pred_path(rng)) if rng.random() < 0.5
                       else NumberLit(float(rng.randint(0, 2))))
    if r < 0.9:
        return Compare("=", FnName(), StringLit(rng.choice(LABELS + ["zz"])))
    if depth >= 1:
        return _random_pred_path(rng)
    mk = AndExpr if rng.random() < 0.5 else OrExpr
    return mk((_random_predicate(rng, depth + 1), _random_predicate(rng, depth + 1)))


def _random_step(rng, pred_budget, axis=None):
    if axis is None:
        axis = _random_axis(rng)
    test = _random_test(rng, axis is Axis.ATTRIBUTE)
    preds = tuple(_random_predicate(rng, 0)
                  for _ in range(rng.randint(0, pred_budget))
                  if rng.random() < 0.45)
    return Step(axis, test, preds)


def random_query(rng, max_steps=4):
    n = rng.choices(range(1, max_steps + 1), weights=[4, 4, 2, 1])[0]
    steps = []
    for i in range(n):
        # leading descendant steps gather enough context for the rest
        axis = Axis.DESCENDANT if i == 0 and rng.random() < 0.5 else None
        steps.append(_random_step(rng, 2, axis))
    return Path(absolute=rng.random() < 0.5, steps=tuple(steps))


def random_guided_query(rng, table):
    """Query built from a real root-to-node path in ``table``.

    Child chains with occasional descendant collapses and random predicates;
    most of these hit by construction, so positive results are exercised.
    """
    elems = [p for p in range(table.n) if table.kind[p] == 1]
    target = rng.choice(elems)
    labels = []
    p = target
    while p > 0:
        labels.append(table.names[table.name_id[p]])
        p = int(table.parent[p])
    labels.reverse()
    steps = []
    i = 0
    while i < len(labels):
        if rng.random() < 0.25 and i + 1 < len(labels):
            # collapse this and the next label into one descendant step
            steps.append(Step(Axis.DESCENDANT, NameTest(labels[i + 1])))
            i += 2
        else:
            axis = Axis.DESCENDANT if rng.random() < 0.15 else Axis.CHILD
            test = Wildcard() if rng.random() < 0.15 else NameTest(labels[i])
            steps.append(Step(axis, test))
            i += 1
    steps = [Step(s.axis, s.test,
                  (_random_predicate(rng, 0),) if rng.random() < 0.3 else ())
             for s in steps]
    if rng.random() < 0.3:
        steps.append(_random_step(rng, 1))
    return Path(absolute=True, steps=tuple(steps))


def random_context(rng, n_nodes, max_size=8, table=None):
    """Sorted duplicate-free PRE sample, biased toward element nodes."""
    k = rng.randint(1, min(max_size, n_nodes))
    if table is not None and rng.random() < 0.7:
        elems = [p for p in range(n_nodes) if table.kind[p] == 1]
        if elems:
            return sorted(set(rng.choice(elems) for _ in range(k)))
    return sorted(rng.sample(range(n_nodes), k))
