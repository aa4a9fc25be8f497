"""Compilation of query ASTs into flat arrays for the evaluation kernels.

A compiled program is a pool of *chains* (step ranges), *steps* (axis, node
test, predicate range) and *predicate bytecode* (a postfix stack machine
over doubles, with booleans as 0/1).  Names and string literals are
resolved against one table's intern pools at compile time, so the kernels
only ever compare integers and doubles.  Chain 0 is the query's main step
chain; nested relative paths inside predicates become further chains.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EvalError, UnsupportedFeatureError
from .nodestore import parse_xpath_number
from .xpath_ast import (AndExpr, Axis, Compare, FnCount, FnLast, FnName,
                        FnPosition, Kind, NameTest, NumberLit, OrExpr, Path,
                        StringLit, Wildcard)

AX_CHILD, AX_DESCENDANT, AX_DOS, AX_SELF, AX_PARENT, AX_ANCESTOR, AX_FSIB, AX_ATTR = range(8)

_AXIS_CODE = {
    Axis.CHILD: AX_CHILD, Axis.DESCENDANT: AX_DESCENDANT,
    Axis.DESCENDANT_OR_SELF: AX_DOS, Axis.SELF: AX_SELF,
    Axis.PARENT: AX_PARENT, Axis.ANCESTOR: AX_ANCESTOR,
    Axis.FOLLOWING_SIBLING: AX_FSIB, Axis.ATTRIBUTE: AX_ATTR,
}

T_NAME, T_WILD, T_ELEM, T_TEXT, T_ATTR, T_NODE, T_DOC = range(7)

_KIND_CODE = {Kind.ELEMENT: T_ELEM, Kind.TEXT: T_TEXT, Kind.ATTRIBUTE: T_ATTR,
              Kind.NODE: T_NODE, Kind.DOCUMENT: T_DOC}

(OP_PUSH_CONST, OP_PUSH_POS, OP_PUSH_LAST, OP_PUSH_COUNT, OP_EXISTS,
 OP_PATH_EQ_VAL, OP_PATH_CMP_NUM, OP_NAME_EQ, OP_NUM_CMP, OP_AND, OP_OR,
 OP_POS_EQ, OP_TRUTHY) = range(13)

CMP_EQ, CMP_LT, CMP_LE, CMP_GT, CMP_GE = range(5)
_CMP_CODE = {"=": CMP_EQ, "<": CMP_LT, "<=": CMP_LE, ">": CMP_GT, ">=": CMP_GE}
_CMP_MIRROR = {CMP_EQ: CMP_EQ, CMP_LT: CMP_GT, CMP_LE: CMP_GE,
               CMP_GT: CMP_LT, CMP_GE: CMP_LE}

_NUM, _STR, _BOOL, _SEQ = range(4)

MAX_STACK = 32


class Program:
    """Flat, immutable compilation of one query against one table."""

    __slots__ = ("st_axis", "st_test", "st_tid", "st_poff", "st_pcnt", "st_early",
                 "pr_off", "pr_len", "code_op", "code_a", "code_b", "code_f",
                 "ch_off", "ch_cnt", "head_pred_off", "head_pred_cnt", "handles")

    def __init__(self, steps, preds, code, chains, head_pred_off, head_pred_cnt):
        def i32(xs):
            a = np.array(xs, dtype=np.int32)
            a.setflags(write=False)
            return a

        self.st_axis = i32([s[0] for s in steps])
        self.st_test = i32([s[1] for s in steps])
        self.st_tid = i32([s[2] for s in steps])
        self.st_poff = i32([s[3] for s in steps])
        self.st_pcnt = i32([s[4] for s in steps])
        self.st_early = i32([s[5] for s in steps])
        self.pr_off = i32([p[0] for p in preds])
        self.pr_len = i32([p[1] for p in preds])
        self.code_op = i32([c[0] for c in code])
        self.code_a = i32([c[1] for c in code])
        self.code_b = i32([c[2] for c in code])
        self.code_f = np.array([c[3] for c in code], dtype=np.float64)
        self.code_f.setflags(write=False)
        self.ch_off = i32([c[0] for c in chains])
        self.ch_cnt = i32([c[1] for c in chains])
        self.head_pred_off = head_pred_off
        self.head_pred_cnt = head_pred_cnt
        self.handles = {}


class _Compiler:
    def __init__(self, table):
        self.table = table
        self.steps = []     # (axis, test_kind, test_id, pred_off, pred_cnt, early)
        self.preds = []     # (code_off, code_len)
        self.code = []      # (op, a, b, f)
        self.chains = []    # (step_off, step_cnt)
        self._bodies = []   # open predicate bodies; nested chains compile
                            # their own predicates without interleaving

    def name_id(self, name):
        if name == "":
            return -1  # matches the unnamed kinds (document, text)
        return self.table.name_ids.get(name, -2)

    def value_id(self, value):
        return self.table.value_ids.get(value, -1)

    # -- chains and steps --------------------------------------------------

    def compile_chain(self, steps):
        """Reserve a chain id, then fill it (sub-chains interleave freely)."""
        cid = len(self.chains)
        self.chains.append(None)
        recs = [self.compile_step(s) for s in steps]
        off = len(self.steps)
        self.steps.extend(recs)
        self.chains[cid] = (off, len(recs))
        return cid

    def compile_step(self, step):
        axis = _AXIS_CODE[step.axis]
        test = step.test
        if isinstance(test, NameTest):
            tk, tid = T_NAME, self.name_id(test.name)
        elif isinstance(test, Wildcard):
            tk, tid = T_WILD, 0
        else:
            tk, tid = _KIND_CODE[test.kind], 0
        poff, pcnt = self.compile_predicates(step.predicates)
        early = 0
        if step.predicates and isinstance(step.predicates[0], NumberLit):
            v = step.predicates[0].value
            if v == int(v) and v >= 1:
                early = int(v)
        return (axis, tk, tid, poff, pcnt, early)

    def compile_predicates(self, predicates):
        if not predicates:
            return 0, 0
        recs = []
        for p in predicates:
            self._bodies.append([])
            self.emit_predicate(p)
            body = self._bodies.pop()
            self._check_stack_depth(body)
            off = len(self.code)
            self.code.extend(body)
            recs.append((off, len(body)))
        poff = len(self.preds)
        self.preds.extend(recs)
        return poff, len(recs)

    @staticmethod
    def _check_stack_depth(body):
        depth = peak = 0
        for op, _a, _b, _f in body:
            if op in (OP_PUSH_CONST, OP_PUSH_POS, OP_PUSH_LAST, OP_PUSH_COUNT,
                      OP_EXISTS, OP_PATH_EQ_VAL, OP_PATH_CMP_NUM, OP_NAME_EQ):
                depth += 1
                peak = max(peak, depth)
            elif op in (OP_NUM_CMP, OP_AND, OP_OR):
                depth -= 1
        if peak > MAX_STACK:
            raise UnsupportedFeatureError(
                f"predicate expression nests too deeply ({peak} > {MAX_STACK})")

    # -- expressions --------------------------------------------------------

    def emit(self, op, a=0, b=0, f=0.0):
        target = self._bodies[-1] if self._bodies else self.code
        target.append((op, a, b, f))

    def emit_predicate(self, e):
        t = self.static_type(e)
        if t == _NUM:
            # number-valued predicate selects by context position
            self.emit_num(e)
            self.emit(OP_POS_EQ)
        elif t == _SEQ:
            self.emit(OP_EXISTS, self.compile_chain(e.steps))
        elif t == _STR:
            self.emit_const_bool(self.const_str(e) != "")
        else:
            self.emit_bool(e)

    def static_type(self, e):
        if isinstance(e, (OrExpr, AndExpr, Compare)):
            return _BOOL
        if isinstance(e, (NumberLit, FnLast, FnPosition, FnCount)):
            return _NUM
        if isinstance(e, (StringLit, FnName)):
            return _STR
        if isinstance(e, Path):
            return _SEQ
        raise EvalError(f"cannot type expression {e!r}")

    def emit_const_bool(self, v):
        self.emit(OP_PUSH_CONST, f=1.0 if v else 0.0)

    def const_str(self, e):
        if isinstance(e, StringLit):
            return e.value
        raise UnsupportedFeatureError("name(.) is only supported in comparisons")

    def emit_bool(self, e):
        t = self.static_type(e)
        if t == _BOOL:
            if isinstance(e, OrExpr):
                self.emit_bool(e.terms[0])
                for term in e.terms[1:]:
                    self.emit_bool(term)
                    self.emit(OP_OR)
            elif isinstance(e, AndExpr):
                self.emit_bool(e.terms[0])
                for term in e.terms[1:]:
                    self.emit_bool(term)
                    self.emit(OP_AND)
            else:
                self.emit_compare(e)
        elif t == _SEQ:
            self.emit(OP_EXISTS, self.compile_chain(e.steps))
        elif t == _NUM:
            # inside and/or a number converts by truth value, not position
            self.emit_num(e)
            self.emit(OP_TRUTHY)
        else:
            self.emit_const_bool(self.const_str(e) != "")

    def emit_num(self, e):
        if isinstance(e, NumberLit):
            self.emit(OP_PUSH_CONST, f=e.value)
        elif isinstance(e, FnPosition):
            self.emit(OP_PUSH_POS)
        elif isinstance(e, FnLast):
            self.emit(OP_PUSH_LAST)
        elif isinstance(e, FnCount):
            self.emit(OP_PUSH_COUNT, self.compile_chain(e.path.steps))
        else:
            raise UnsupportedFeatureError(f"expected a numeric expression, got {e!r}")

    def emit_compare(self, e):
        lt, rt = self.static_type(e.lhs), self.static_type(e.rhs)
        op = _CMP_CODE[e.op]
        if lt == _SEQ and rt == _SEQ:
            raise UnsupportedFeatureError("node-set to node-set comparison is not supported")
        if lt == _SEQ or rt == _SEQ:
            path, other, op = ((e.lhs, e.rhs, op) if lt == _SEQ
                               else (e.rhs, e.lhs, _CMP_MIRROR[op]))
            chain = self.compile_chain(path.steps)
            if isinstance(other, StringLit):
                if op == CMP_EQ:
                    self.emit(OP_PATH_EQ_VAL, chain, self.value_id(other.value))
                else:
                    self.emit(OP_PATH_CMP_NUM, chain, op, parse_xpath_number(other.value))
            elif isinstance(other, NumberLit):
                self.emit(OP_PATH_CMP_NUM, chain, op, other.value)
            else:
                raise UnsupportedFeatureError(
                    "node-set comparisons are supported against literals only")
            return
        if lt == _NUM and rt == _NUM:
            self.emit_num(e.lhs)
            self.emit_num(e.rhs)
            self.emit(OP_NUM_CMP, op)
            return
        if isinstance(e.lhs, FnName) or isinstance(e.rhs, FnName):
            name_e, other, op = ((e.lhs, e.rhs, op) if isinstance(e.lhs, FnName)
                                 else (e.rhs, e.lhs, _CMP_MIRROR[op]))
            if isinstance(other, StringLit) and op == CMP_EQ:
                self.emit(OP_NAME_EQ, self.name_id(other.value))
                return
            if isinstance(other, (StringLit, NumberLit)):
                # number(name) is always NaN, so any numeric comparison is false
                self.emit_const_bool(False)
                return
            raise UnsupportedFeatureError("unsupported name(.) comparison")
        if lt == _STR and rt == _STR:
            a, b = self.const_str(e.lhs), self.const_str(e.rhs)
            self.emit_const_bool(_cmp_fold(op, a, b))
            return
        if {lt, rt} == {_STR, _NUM}:
            s = self.const_str(e.lhs if lt == _STR else e.rhs)
            n = (e.lhs if lt == _NUM else e.rhs)
            if isinstance(n, NumberLit):
                sv = parse_xpath_number(s)
                folded = (_num_cmp(op, sv, n.value) if lt == _STR
                          else _num_cmp(op, n.value, sv))
                self.emit_const_bool(folded)
                return
            self.emit(OP_PUSH_CONST, f=parse_xpath_number(s))
            if lt == _STR:
                self.emit_num(e.rhs)
                self.emit(OP_NUM_CMP, op)
            else:
                # string on the right: mirror so the number stays first
                self.emit_num(e.lhs)
                self.emit(OP_NUM_CMP, _CMP_MIRROR[op])
            return
        raise UnsupportedFeatureError(f"unsupported comparison {e!r}")


def _num_cmp(op, a, b):
    if math.isnan(a) or math.isnan(b):
        return False
    return {CMP_EQ: a == b, CMP_LT: a < b, CMP_LE: a <= b,
            CMP_GT: a > b, CMP_GE: a >= b}[op]


def _cmp_fold(op, a, b):
    if op == CMP_EQ:
        return a == b
    return _num_cmp(op, parse_xpath_number(a), parse_xpath_number(b))


def compile_program(table, path):
    """Compile ``path`` against ``table``'s intern pools, with caching."""
    prog = table._program_cache.get(path)
    if prog is None:
        c = _Compiler(table)
        c.compile_chain(path.steps)
        hoff = hcnt = 0
        if path.index is not None and path.index.predicates:
            hoff, hcnt = c.compile_predicates(path.index.predicates)
        prog = Program(c.steps, c.preds, c.code, c.chains, hoff, hcnt)
        table._program_cache[path] = prog
    return prog
