"""Indexed evaluator versus the naive recursive oracle on random inputs."""

import random

from xpar import evaluate, parse_document
from xpar.engine import evaluate_per_node

from oracle_eval import build_dom, oracle_orders
from randgen import (random_context, random_doc, random_guided_query,
                     random_query)


def run_equivalence_trials(n_pairs, seed, backend=None, docs_cache=None):
    """Compare evaluate() against the oracle; returns the number of checks."""
    rng = random.Random(seed)
    checked = 0
    queries_per_doc = 4
    while checked < n_pairs:
        xml = random_doc(rng)
        table = parse_document(xml, "rnd")
        dom = build_dom(xml)
        if docs_cache is not None:
            docs_cache.append((xml, table, dom))
        for _ in range(queries_per_doc):
            if rng.random() < 0.4:
                ast = random_guided_query(rng, table)
            else:
                ast = random_query(rng)
            if ast.absolute:
                ctx = None
            else:
                ctx = random_context(rng, table.n, table=table)
            got = list(evaluate(table, ast, ctx, backend=backend))
            ctx_nodes = None
            if ctx is not None:
                by_order = {}

                def collect(node):
                    by_order[node.order] = node
                    for a in node.attrs:
                        by_order[a.order] = a
                    for c in node.children:
                        collect(c)

                collect(dom)
                ctx_nodes = [by_order[i] for i in ctx]
            want = oracle_orders(dom, ast, ctx_nodes)
            assert got == want, (xml, ast, ctx, got, want)
            checked += 1
    return checked


def test_oracle_equivalence_1000_pairs():
    assert run_equivalence_trials(1000, seed=424242) >= 1000


def test_context_decomposition():
    # evaluating over a context equals merging evaluations over any split of it
    rng = random.Random(99)
    for _ in range(60):
        xml = random_doc(rng)
        table = parse_document(xml, "rnd")
        ast = random_query(rng)
        if ast.absolute:
            ast = type(ast)(absolute=False, steps=ast.steps)
        ctx = random_context(rng, table.n, max_size=10)
        cut = rng.randint(0, len(ctx))
        a, b = ctx[:cut], ctx[cut:]
        whole = set(evaluate(table, ast, ctx)) if ctx else set()
        parts = set()
        if a:
            parts |= set(evaluate(table, ast, a))
        if b:
            parts |= set(evaluate(table, ast, b))
        assert whole == parts


def test_positional_isolation():
    # positions are per context node: joint and one-at-a-time runs agree
    rng = random.Random(7)
    kept = 0
    while kept < 40:
        xml = random_doc(rng)
        table = parse_document(xml, "rnd")
        ast = random_query(rng)
        if ast.absolute or not any(s.predicates for s in ast.steps):
            continue
        kept += 1
        ctx = random_context(rng, table.n, max_size=6)
        joint = list(evaluate(table, ast, ctx))
        single = sorted({p for c in ctx for p in evaluate(table, ast, [c])})
        assert joint == single


def test_per_node_concat_matches_singleton_runs():
    rng = random.Random(5150)
    for _ in range(60):
        xml = random_doc(rng)
        table = parse_document(xml, "rnd")
        ast = random_query(rng)
        if ast.absolute:
            ast = type(ast)(absolute=False, steps=ast.steps)
        ctx = random_context(rng, table.n, max_size=6)
        concat = list(evaluate_per_node(table, ast, ctx))
        expect = [p for c in ctx for p in evaluate(table, ast, [c])]
        assert concat == expect


def test_results_always_strictly_ascending():
    rng = random.Random(31337)
    for _ in range(150):
        xml = random_doc(rng)
        table = parse_document(xml, "rnd")
        ast = random_query(rng)
        ctx = None if ast.absolute else random_context(rng, table.n)
        res = list(evaluate(table, ast, ctx))
        assert all(x < y for x, y in zip(res, res[1:]))
