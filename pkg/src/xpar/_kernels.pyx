# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled evaluation kernels.

Same contract as ``xpar._kernels_py``; the chain/predicate interpreter and
the response builders run without the GIL so concurrent server sessions
evaluate in parallel.  Opcode and axis encodings are asserted against
``xpar.program`` at import time to prevent drift.
"""

from cpython.bytes cimport PyBytes_AS_STRING, PyBytes_FromStringAndSize
from libc.stdlib cimport free, malloc, qsort, realloc
from libc.string cimport memcpy

import numpy as np

cimport numpy as cnp

cnp.import_array()

from . import program as _prog

NAME = "c"

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64

cdef enum:
    K_DOCUMENT = 0
    K_ELEMENT = 1
    K_ATTRIBUTE = 2
    K_TEXT = 3

cdef enum:
    AX_CHILD = 0
    AX_DESCENDANT = 1
    AX_DOS = 2
    AX_SELF = 3
    AX_PARENT = 4
    AX_ANCESTOR = 5
    AX_FSIB = 6
    AX_ATTR = 7

cdef enum:
    T_NAME = 0
    T_WILD = 1
    T_ELEM = 2
    T_TEXT = 3
    T_ATTR = 4
    T_NODE = 5
    T_DOC = 6

cdef enum:
    OP_PUSH_CONST = 0
    OP_PUSH_POS = 1
    OP_PUSH_LAST = 2
    OP_PUSH_COUNT = 3
    OP_EXISTS = 4
    OP_PATH_EQ_VAL = 5
    OP_PATH_CMP_NUM = 6
    OP_NAME_EQ = 7
    OP_NUM_CMP = 8
    OP_AND = 9
    OP_OR = 10
    OP_POS_EQ = 11
    OP_TRUTHY = 12

cdef enum:
    CMP_EQ = 0
    CMP_LT = 1
    CMP_LE = 2
    CMP_GT = 3
    CMP_GE = 4

assert (AX_CHILD, AX_DESCENDANT, AX_DOS, AX_SELF, AX_PARENT, AX_ANCESTOR,
        AX_FSIB, AX_ATTR) == (_prog.AX_CHILD, _prog.AX_DESCENDANT, _prog.AX_DOS,
                              _prog.AX_SELF, _prog.AX_PARENT, _prog.AX_ANCESTOR,
                              _prog.AX_FSIB, _prog.AX_ATTR)
assert (T_NAME, T_WILD, T_ELEM, T_TEXT, T_ATTR, T_NODE, T_DOC) == (
    _prog.T_NAME, _prog.T_WILD, _prog.T_ELEM, _prog.T_TEXT, _prog.T_ATTR,
    _prog.T_NODE, _prog.T_DOC)
assert (OP_PUSH_CONST, OP_PUSH_POS, OP_PUSH_LAST, OP_PUSH_COUNT, OP_EXISTS,
        OP_PATH_EQ_VAL, OP_PATH_CMP_NUM, OP_NAME_EQ, OP_NUM_CMP, OP_AND,
        OP_OR, OP_POS_EQ, OP_TRUTHY) == (
    _prog.OP_PUSH_CONST, _prog.OP_PUSH_POS, _prog.OP_PUSH_LAST,
    _prog.OP_PUSH_COUNT, _prog.OP_EXISTS, _prog.OP_PATH_EQ_VAL,
    _prog.OP_PATH_CMP_NUM, _prog.OP_NAME_EQ, _prog.OP_NUM_CMP, _prog.OP_AND,
    _prog.OP_OR, _prog.OP_POS_EQ, _prog.OP_TRUTHY)
assert (CMP_EQ, CMP_LT, CMP_LE, CMP_GT, CMP_GE) == (
    _prog.CMP_EQ, _prog.CMP_LT, _prog.CMP_LE, _prog.CMP_GT, _prog.CMP_GE)


cdef struct IntBuf:
    i32* d
    Py_ssize_t n
    Py_ssize_t cap


cdef inline bint ib_reserve(IntBuf* b, Py_ssize_t need) noexcept nogil:
    cdef Py_ssize_t cap
    cdef void* nd
    if b.cap >= need:
        return True
    cap = b.cap if b.cap > 0 else 32
    while cap < need:
        cap *= 2
    nd = realloc(b.d, cap * sizeof(i32))
    if nd == NULL:
        return False
    b.d = <i32*> nd
    b.cap = cap
    return True


cdef inline bint ib_push(IntBuf* b, i32 v) noexcept nogil:
    if b.n == b.cap and not ib_reserve(b, b.n + 1):
        return False
    b.d[b.n] = v
    b.n += 1
    return True


cdef int cmp_i32(const void* a, const void* b) noexcept nogil:
    cdef i32 x = (<const i32*> a)[0]
    cdef i32 y = (<const i32*> b)[0]
    return (x > y) - (x < y)


cdef void sort_unique(IntBuf* b) noexcept nogil:
    cdef Py_ssize_t i, w
    if b.n <= 1:
        return
    qsort(b.d, b.n, sizeof(i32), cmp_i32)
    w = 1
    for i in range(1, b.n):
        if b.d[i] != b.d[w - 1]:
            b.d[w] = b.d[i]
            w += 1
    b.n = w


cdef class KTable:
    cdef const i32[::1] size
    cdef const i32[::1] parent
    cdef const i32[::1] kind
    cdef const i32[::1] name_id
    cdef const i32[::1] svid
    cdef const f64[::1] vnum
    cdef const i64[::1] ser_s
    cdef const i64[::1] ser_e
    cdef const unsigned char[::1] ser
    cdef Py_ssize_t n


def prepare_table(table):
    cdef KTable t = KTable()
    t.size = table.size
    t.parent = table.parent
    t.kind = table.kind
    t.name_id = table.name_id
    t.svid = table.svid
    t.vnum = table.vnum
    t.ser_s = table.ser_start
    t.ser_e = table.ser_end
    t.ser = table.ser
    t.n = table.n
    return t


cdef class KProgram:
    cdef const i32[::1] st_axis
    cdef const i32[::1] st_test
    cdef const i32[::1] st_tid
    cdef const i32[::1] st_poff
    cdef const i32[::1] st_pcnt
    cdef const i32[::1] st_early
    cdef const i32[::1] pr_off
    cdef const i32[::1] pr_len
    cdef const i32[::1] c_op
    cdef const i32[::1] c_a
    cdef const i32[::1] c_b
    cdef const f64[::1] c_f
    cdef const i32[::1] ch_off
    cdef const i32[::1] ch_cnt
    cdef int head_poff
    cdef int head_pcnt


def prepare_program(prog):
    cdef KProgram p = KProgram()
    p.st_axis = prog.st_axis
    p.st_test = prog.st_test
    p.st_tid = prog.st_tid
    p.st_poff = prog.st_poff
    p.st_pcnt = prog.st_pcnt
    p.st_early = prog.st_early
    p.pr_off = prog.pr_off
    p.pr_len = prog.pr_len
    p.c_op = prog.code_op
    p.c_a = prog.code_a
    p.c_b = prog.code_b
    p.c_f = prog.code_f
    p.ch_off = prog.ch_off
    p.ch_cnt = prog.ch_cnt
    p.head_poff = prog.head_pred_off
    p.head_pcnt = prog.head_pred_cnt
    return p


cdef inline bint test_ok(KTable t, i32 q, int tk, int tid, int principal) noexcept nogil:
    cdef int k = t.kind[q]
    if tk == T_NAME:
        return k == principal and t.name_id[q] == tid
    if tk == T_WILD:
        return k == principal
    if tk == T_ELEM:
        return k == K_ELEMENT
    if tk == T_TEXT:
        return k == K_TEXT
    if tk == T_ATTR:
        return k == K_ATTRIBUTE
    if tk == T_DOC:
        return k == K_DOCUMENT
    return True


cdef inline bint num_cmp(int op, double x, double y) noexcept nogil:
    # NaN on either side makes every comparison false
    if op == CMP_EQ:
        return x == y
    if op == CMP_LT:
        return x < y
    if op == CMP_LE:
        return x <= y
    if op == CMP_GT:
        return x > y
    return x >= y


cdef int pred_eval(KTable t, KProgram p, Py_ssize_t pi, i32 node,
                   double pos, double last, bint* ok) noexcept nogil:
    cdef double stack[32]
    cdef int sp = 0
    cdef Py_ssize_t base = p.pr_off[pi]
    cdef Py_ssize_t stop = base + p.pr_len[pi]
    cdef Py_ssize_t ci, j
    cdef int op, a, b
    cdef double f, x, y
    cdef IntBuf tmp
    cdef bint hit
    for ci in range(base, stop):
        op = p.c_op[ci]
        a = p.c_a[ci]
        b = p.c_b[ci]
        f = p.c_f[ci]
        if op == OP_PUSH_CONST:
            stack[sp] = f
            sp += 1
        elif op == OP_PUSH_POS:
            stack[sp] = pos
            sp += 1
        elif op == OP_PUSH_LAST:
            stack[sp] = last
            sp += 1
        elif op == OP_PUSH_COUNT or op == OP_EXISTS or op == OP_PATH_EQ_VAL \
                or op == OP_PATH_CMP_NUM:
            tmp.d = NULL
            tmp.n = 0
            tmp.cap = 0
            if chain_set(t, p, a, &node, 1, &tmp) < 0:
                free(tmp.d)
                return -1
            if op == OP_PUSH_COUNT:
                stack[sp] = <double> tmp.n
            elif op == OP_EXISTS:
                stack[sp] = 1.0 if tmp.n > 0 else 0.0
            else:
                hit = False
                for j in range(tmp.n):
                    if op == OP_PATH_EQ_VAL:
                        if t.svid[tmp.d[j]] == b:
                            hit = True
                            break
                    else:
                        if num_cmp(b, t.vnum[t.svid[tmp.d[j]]], f):
                            hit = True
                            break
                stack[sp] = 1.0 if hit else 0.0
            free(tmp.d)
            sp += 1
        elif op == OP_NAME_EQ:
            stack[sp] = 1.0 if t.name_id[node] == a else 0.0
            sp += 1
        elif op == OP_NUM_CMP:
            y = stack[sp - 1]
            x = stack[sp - 2]
            sp -= 1
            stack[sp - 1] = 1.0 if num_cmp(a, x, y) else 0.0
        elif op == OP_AND:
            y = stack[sp - 1]
            x = stack[sp - 2]
            sp -= 1
            stack[sp - 1] = 1.0 if (x != 0.0 and y != 0.0) else 0.0
        elif op == OP_OR:
            y = stack[sp - 1]
            x = stack[sp - 2]
            sp -= 1
            stack[sp - 1] = 1.0 if (x != 0.0 or y != 0.0) else 0.0
        elif op == OP_POS_EQ:
            x = stack[sp - 1]
            stack[sp - 1] = 1.0 if x == pos else 0.0
        else:  # OP_TRUTHY
            x = stack[sp - 1]
            stack[sp - 1] = 1.0 if (x == x and x != 0.0) else 0.0
    ok[0] = stack[sp - 1] != 0.0
    return 0


cdef int step_eval(KTable t, KProgram p, Py_ssize_t si, i32 c, IntBuf* out) noexcept nogil:
    cdef int axis = p.st_axis[si]
    cdef int tk = p.st_test[si]
    cdef int tid = p.st_tid[si]
    cdef int principal = K_ATTRIBUTE if axis == AX_ATTR else K_ELEMENT
    cdef int early = p.st_early[si]
    cdef IntBuf cand
    cdef Py_ssize_t end, q, k, w, pi, pstop
    cdef Py_ssize_t last
    cdef int k0
    cdef bint ok
    cand.d = NULL
    cand.n = 0
    cand.cap = 0

    if axis == AX_SELF:
        if test_ok(t, c, tk, tid, principal):
            if not ib_push(&cand, c):
                free(cand.d)
                return -1
    elif axis == AX_CHILD:
        k0 = t.kind[c]
        if k0 == K_ELEMENT or k0 == K_DOCUMENT:
            end = c + t.size[c]
            q = c + 1
            while q < end and t.kind[q] == K_ATTRIBUTE:
                q += 1
            while q < end:
                if test_ok(t, <i32> q, tk, tid, principal):
                    if not ib_push(&cand, <i32> q):
                        free(cand.d)
                        return -1
                    if early > 0 and cand.n == early:
                        break
                q += t.size[q]
    elif axis == AX_DESCENDANT or axis == AX_DOS:
        if axis == AX_DOS and test_ok(t, c, tk, tid, principal):
            if not ib_push(&cand, c):
                free(cand.d)
                return -1
        if not (early > 0 and cand.n == early):
            end = c + t.size[c]
            for q in range(c + 1, end):
                if t.kind[q] != K_ATTRIBUTE and test_ok(t, <i32> q, tk, tid, principal):
                    if not ib_push(&cand, <i32> q):
                        free(cand.d)
                        return -1
                    if early > 0 and cand.n == early:
                        break
    elif axis == AX_PARENT:
        if t.parent[c] >= 0 and test_ok(t, t.parent[c], tk, tid, principal):
            if not ib_push(&cand, t.parent[c]):
                free(cand.d)
                return -1
    elif axis == AX_ANCESTOR:
        q = t.parent[c]
        while q >= 0:
            if test_ok(t, <i32> q, tk, tid, principal):
                if not ib_push(&cand, <i32> q):
                    free(cand.d)
                    return -1
                if early > 0 and cand.n == early:
                    break
            q = t.parent[q]
    elif axis == AX_FSIB:
        if t.kind[c] != K_ATTRIBUTE and t.parent[c] >= 0:
            end = t.parent[c] + t.size[t.parent[c]]
            q = c + t.size[c]
            while q < end:
                if test_ok(t, <i32> q, tk, tid, principal):
                    if not ib_push(&cand, <i32> q):
                        free(cand.d)
                        return -1
                    if early > 0 and cand.n == early:
                        break
                q += t.size[q]
    else:  # AX_ATTR
        if t.kind[c] == K_ELEMENT:
            end = c + t.size[c]
            q = c + 1
            while q < end and t.kind[q] == K_ATTRIBUTE:
                if test_ok(t, <i32> q, tk, tid, principal):
                    if not ib_push(&cand, <i32> q):
                        free(cand.d)
                        return -1
                    if early > 0 and cand.n == early:
                        break
                q += 1

    pstop = p.st_poff[si] + p.st_pcnt[si]
    for pi in range(p.st_poff[si], pstop):
        last = cand.n
        w = 0
        for k in range(cand.n):
            if pred_eval(t, p, pi, cand.d[k], <double> (k + 1), <double> last, &ok) < 0:
                free(cand.d)
                return -1
            if ok:
                cand.d[w] = cand.d[k]
                w += 1
        cand.n = w

    for k in range(cand.n):
        if not ib_push(out, cand.d[k]):
            free(cand.d)
            return -1
    free(cand.d)
    return 0


cdef int chain_set(KTable t, KProgram p, int chain, const i32* ctx,
                   Py_ssize_t nctx, IntBuf* out) noexcept nogil:
    """Set-semantics chain evaluation; appends the sorted-unique result."""
    cdef IntBuf cur, nxt, swp
    cdef Py_ssize_t i, si
    cdef Py_ssize_t off = p.ch_off[chain]
    cdef Py_ssize_t cnt = p.ch_cnt[chain]
    cur.d = NULL
    cur.n = 0
    cur.cap = 0
    nxt.d = NULL
    nxt.n = 0
    nxt.cap = 0
    if not ib_reserve(&cur, nctx if nctx > 0 else 1):
        return -1
    for i in range(nctx):
        cur.d[i] = ctx[i]
    cur.n = nctx
    sort_unique(&cur)
    for si in range(off, off + cnt):
        nxt.n = 0
        for i in range(cur.n):
            if step_eval(t, p, si, cur.d[i], &nxt) < 0:
                free(cur.d)
                free(nxt.d)
                return -1
        sort_unique(&nxt)
        swp = cur
        cur = nxt
        nxt = swp
    for i in range(cur.n):
        if not ib_push(out, cur.d[i]):
            free(cur.d)
            free(nxt.d)
            return -1
    free(cur.d)
    free(nxt.d)
    return 0


def eval_chain(KTable t, KProgram p, int chain, context, bint merge):
    cdef cnp.ndarray[i32, ndim=1] ctx = np.ascontiguousarray(context, dtype=np.int32)
    cdef const i32[::1] cv = ctx
    cdef Py_ssize_t n = cv.shape[0]
    cdef IntBuf out
    cdef int rc = 0
    cdef Py_ssize_t i
    out.d = NULL
    out.n = 0
    out.cap = 0
    if n > 0:
        with nogil:
            if merge:
                rc = chain_set(t, p, chain, &cv[0], n, &out)
            else:
                for i in range(n):
                    rc = chain_set(t, p, chain, &cv[i], 1, &out)
                    if rc < 0:
                        break
    if rc < 0:
        free(out.d)
        raise MemoryError("kernel buffer allocation failed")
    res = np.empty(out.n, dtype=np.int32)
    cdef i32[::1] rv = res
    if out.n:
        memcpy(&rv[0], out.d, out.n * sizeof(i32))
    free(out.d)
    return res


def eval_filter(KTable t, KProgram p, candidates):
    """Head predicates applied over the candidate list (positions as given)."""
    cdef cnp.ndarray[i32, ndim=1] cand = np.array(candidates, dtype=np.int32)
    cdef i32[::1] cv = cand
    cdef Py_ssize_t n = cv.shape[0]
    cdef Py_ssize_t pi, k, w, last
    cdef bint ok
    cdef int rc = 0
    with nogil:
        for pi in range(p.head_poff, p.head_poff + p.head_pcnt):
            last = n
            w = 0
            for k in range(n):
                rc = pred_eval(t, p, pi, cv[k], <double> (k + 1), <double> last, &ok)
                if rc < 0:
                    break
                if ok:
                    cv[w] = cv[k]
                    w += 1
            if rc < 0:
                break
            n = w
    if rc < 0:
        raise MemoryError("kernel buffer allocation failed")
    return cand[:n].copy()


cdef inline int digits10(long v) noexcept nogil:
    cdef int d = 1
    while v >= 10:
        v //= 10
        d += 1
    return d


def items_response(KTable t, pres):
    """Result lines ``pre<TAB>serialized-item<LF>`` as one bytes object."""
    cdef cnp.ndarray[i32, ndim=1] arr = np.ascontiguousarray(pres, dtype=np.int32)
    cdef const i32[::1] pv = arr
    cdef Py_ssize_t n = pv.shape[0]
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t i, ln
    cdef long pre
    with nogil:
        for i in range(n):
            pre = pv[i]
            total += digits10(pre) + 2 + (t.ser_e[pre] - t.ser_s[pre])
    out = PyBytes_FromStringAndSize(NULL, total)
    cdef char* buf = PyBytes_AS_STRING(out)
    cdef Py_ssize_t w = 0
    cdef int nd, j
    with nogil:
        for i in range(n):
            pre = pv[i]
            nd = digits10(pre)
            for j in range(nd - 1, -1, -1):
                buf[w + j] = <char> (48 + pre % 10)
                pre //= 10
            w += nd
            buf[w] = 9  # tab
            w += 1
            ln = t.ser_e[pv[i]] - t.ser_s[pv[i]]
            if ln > 0:
                memcpy(buf + w, &t.ser[t.ser_s[pv[i]]], ln)
            w += ln
            buf[w] = 10  # newline
            w += 1
    return out


def int_lines(pres):
    cdef cnp.ndarray[i32, ndim=1] arr = np.ascontiguousarray(pres, dtype=np.int32)
    cdef const i32[::1] pv = arr
    cdef Py_ssize_t n = pv.shape[0]
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t i
    cdef long pre
    cdef int nd, j
    with nogil:
        for i in range(n):
            total += digits10(pv[i]) + 1
    out = PyBytes_FromStringAndSize(NULL, total)
    cdef char* buf = PyBytes_AS_STRING(out)
    cdef Py_ssize_t w = 0
    with nogil:
        for i in range(n):
            pre = pv[i]
            nd = digits10(pre)
            for j in range(nd - 1, -1, -1):
                buf[w + j] = <char> (48 + pre % 10)
                pre //= 10
            w += nd
            buf[w] = 10
            w += 1
    return out
