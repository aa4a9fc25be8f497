"""Pure-Python evaluation kernels.

Fallback implementation of the same contract as the compiled extension
module: step-chain evaluation over the node table arrays, predicate
bytecode interpretation and response serialization.  Semantics must match
the compiled kernels exactly; parity is enforced by tests.
"""

from __future__ import annotations

import math

import numpy as np

from .nodestore import ATTRIBUTE, DOCUMENT, ELEMENT, TEXT
from .program import (AX_ANCESTOR, AX_ATTR, AX_CHILD, AX_DESCENDANT, AX_DOS,
                      AX_FSIB, AX_PARENT, AX_SELF, CMP_EQ, CMP_GE, CMP_GT,
                      CMP_LE, CMP_LT, OP_AND, OP_EXISTS, OP_NAME_EQ,
                      OP_NUM_CMP, OP_OR, OP_PATH_CMP_NUM, OP_PATH_EQ_VAL,
                      OP_POS_EQ, OP_PUSH_CONST, OP_PUSH_COUNT, OP_PUSH_LAST,
                      OP_PUSH_POS, OP_TRUTHY, T_ATTR, T_DOC, T_ELEM, T_NAME,
                      T_NODE, T_TEXT, T_WILD)

NAME = "python"


class _PyTable:
    """Node table arrays as plain Python lists for interpreter speed."""

    __slots__ = ("n", "size", "parent", "kind", "name_id", "svid", "vnum",
                 "ser", "ser_start", "ser_end")

    def __init__(self, table):
        self.n = table.n
        self.size = table.size.tolist()
        self.parent = table.parent.tolist()
        self.kind = table.kind.tolist()
        self.name_id = table.name_id.tolist()
        self.svid = table.svid.tolist()
        self.vnum = table.vnum.tolist()
        self.ser = table.ser
        self.ser_start = table.ser_start.tolist()
        self.ser_end = table.ser_end.tolist()


class _PyProgram:
    __slots__ = ("st_axis", "st_test", "st_tid", "st_poff", "st_pcnt", "st_early",
                 "pr_off", "pr_len", "code", "ch_off", "ch_cnt",
                 "head_pred_off", "head_pred_cnt")

    def __init__(self, prog):
        self.st_axis = prog.st_axis.tolist()
        self.st_test = prog.st_test.tolist()
        self.st_tid = prog.st_tid.tolist()
        self.st_poff = prog.st_poff.tolist()
        self.st_pcnt = prog.st_pcnt.tolist()
        self.st_early = prog.st_early.tolist()
        self.pr_off = prog.pr_off.tolist()
        self.pr_len = prog.pr_len.tolist()
        self.code = list(zip(prog.code_op.tolist(), prog.code_a.tolist(),
                             prog.code_b.tolist(), prog.code_f.tolist()))
        self.ch_off = prog.ch_off.tolist()
        self.ch_cnt = prog.ch_cnt.tolist()
        self.head_pred_off = prog.head_pred_off
        self.head_pred_cnt = prog.head_pred_cnt


def prepare_table(table):
    return _PyTable(table)


def prepare_program(prog):
    return _PyProgram(prog)


def _test_ok(t, q, tk, tid, principal):
    k = t.kind[q]
    if tk == T_NAME:
        return k == principal and t.name_id[q] == tid
    if tk == T_WILD:
        return k == principal
    if tk == T_ELEM:
        return k == ELEMENT
    if tk == T_TEXT:
        return k == TEXT
    if tk == T_ATTR:
        return k == ATTRIBUTE
    if tk == T_DOC:
        return k == DOCUMENT
    return True  # T_NODE: anything the axis yields


def _axis_nodes(t, c, axis):
    """Nodes on ``axis`` from ``c`` in axis order (reverse axes nearest-first)."""
    if axis == AX_SELF:
        yield c
    elif axis == AX_CHILD:
        if t.kind[c] in (ELEMENT, DOCUMENT):
            end = c + t.size[c]
            q = c + 1
            while q < end and t.kind[q] == ATTRIBUTE:
                q += 1
            while q < end:
                yield q
                q += t.size[q]
    elif axis == AX_DESCENDANT or axis == AX_DOS:
        if axis == AX_DOS:
            yield c
        for q in range(c + 1, c + t.size[c]):
            if t.kind[q] != ATTRIBUTE:
                yield q
    elif axis == AX_PARENT:
        if t.parent[c] >= 0:
            yield t.parent[c]
    elif axis == AX_ANCESTOR:
        q = t.parent[c]
        while q >= 0:
            yield q
            q = t.parent[q]
    elif axis == AX_FSIB:
        if t.kind[c] != ATTRIBUTE:
            par = t.parent[c]
            if par >= 0:
                end = par + t.size[par]
                q = c + t.size[c]
                while q < end:
                    yield q
                    q += t.size[q]
    elif axis == AX_ATTR:
        if t.kind[c] == ELEMENT:
            end = c + t.size[c]
            q = c + 1
            while q < end and t.kind[q] == ATTRIBUTE:
                yield q
                q += 1


def _eval_step(t, p, si, c):
    axis = p.st_axis[si]
    tk, tid = p.st_test[si], p.st_tid[si]
    principal = ATTRIBUTE if axis == AX_ATTR else ELEMENT
    early = p.st_early[si]
    out = []
    for q in _axis_nodes(t, c, axis):
        if _test_ok(t, q, tk, tid, principal):
            out.append(q)
            if early and len(out) == early:
                break
    for pi in range(p.st_poff[si], p.st_poff[si] + p.st_pcnt[si]):
        last = len(out)
        out = [q for pos, q in enumerate(out, 1) if _eval_pred(t, p, pi, q, pos, last)]
    return out


def _eval_pred(t, p, pi, node, pos, last):
    off = p.pr_off[pi]
    stack = []
    for op, a, b, f in p.code[off:off + p.pr_len[pi]]:
        if op == OP_PUSH_CONST:
            stack.append(f)
        elif op == OP_PUSH_POS:
            stack.append(float(pos))
        elif op == OP_PUSH_LAST:
            stack.append(float(last))
        elif op == OP_PUSH_COUNT:
            stack.append(float(len(_eval_chain_set(t, p, a, [node]))))
        elif op == OP_EXISTS:
            stack.append(1.0 if _eval_chain_set(t, p, a, [node]) else 0.0)
        elif op == OP_PATH_EQ_VAL:
            res = _eval_chain_set(t, p, a, [node])
            stack.append(1.0 if any(t.svid[q] == b for q in res) else 0.0)
        elif op == OP_PATH_CMP_NUM:
            res = _eval_chain_set(t, p, a, [node])
            stack.append(1.0 if any(_num_cmp(b, t.vnum[t.svid[q]], f) for q in res) else 0.0)
        elif op == OP_NAME_EQ:
            stack.append(1.0 if t.name_id[node] == a else 0.0)
        elif op == OP_NUM_CMP:
            y = stack.pop()
            x = stack.pop()
            stack.append(1.0 if _num_cmp(a, x, y) else 0.0)
        elif op == OP_AND:
            y = stack.pop()
            x = stack.pop()
            stack.append(1.0 if (x != 0.0 and y != 0.0) else 0.0)
        elif op == OP_OR:
            y = stack.pop()
            x = stack.pop()
            stack.append(1.0 if (x != 0.0 or y != 0.0) else 0.0)
        elif op == OP_POS_EQ:
            v = stack.pop()
            stack.append(1.0 if v == pos else 0.0)
        elif op == OP_TRUTHY:
            v = stack.pop()
            stack.append(1.0 if (v != 0.0 and not math.isnan(v)) else 0.0)
        else:
            raise AssertionError(f"bad opcode {op}")
    return stack[-1] != 0.0


def _num_cmp(op, x, y):
    if math.isnan(x) or math.isnan(y):
        return False
    if op == CMP_EQ:
        return x == y
    if op == CMP_LT:
        return x < y
    if op == CMP_LE:
        return x <= y
    if op == CMP_GT:
        return x > y
    if op == CMP_GE:
        return x >= y
    raise AssertionError(f"bad comparison code {op}")


def _eval_chain_set(t, p, chain, nodes):
    """Set-semantics chain evaluation: sorted, duplicate-free output."""
    cur = sorted(set(nodes))
    off, cnt = p.ch_off[chain], p.ch_cnt[chain]
    for si in range(off, off + cnt):
        nxt = []
        for c in cur:
            nxt.extend(_eval_step(t, p, si, c))
        cur = sorted(set(nxt))
    return cur


def eval_chain(t, p, chain, context, merge):
    """Evaluate a chain over ``context`` PRE values.

    ``merge=True`` treats the context as one node set and returns the
    ascending duplicate-free result.  ``merge=False`` evaluates the whole
    chain per context node, in the given order, and concatenates the
    per-node results (each individually ascending).
    """
    ctx = [int(x) for x in context]
    if merge:
        res = _eval_chain_set(t, p, chain, ctx)
    else:
        res = []
        for c in ctx:
            res.extend(_eval_chain_set(t, p, chain, [c]))
    return np.array(res, dtype=np.int32)


def eval_filter(t, p, candidates):
    """Apply the program's head predicates over a candidate list in order."""
    out = [int(x) for x in candidates]
    for pi in range(p.head_pred_off, p.head_pred_off + p.head_pred_cnt):
        last = len(out)
        out = [q for pos, q in enumerate(out, 1) if _eval_pred(t, p, pi, q, pos, last)]
    return np.array(out, dtype=np.int32)


def items_response(t, pres):
    """Result lines: PRE value, a tab, the node's canonical serialization."""
    parts = []
    for pre in pres:
        pre = int(pre)
        parts.append(b"%d\t" % pre)
        parts.append(t.ser[t.ser_start[pre]:t.ser_end[pre]])
        parts.append(b"\n")
    return b"".join(parts)


def int_lines(pres):
    return b"".join(b"%d\n" % int(p) for p in pres)
