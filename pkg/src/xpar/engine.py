"""Query evaluation over a node table.

Standard XPath 1.0 semantics for the supported subset: results are
ascending, duplicate-free PRE sequences; positional predicates count per
context node over that node's axis result, with reverse axes numbered in
proximity order.  Evaluation is pure with respect to the table; any number
of evaluations may run concurrently.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import EvalError
from .program import compile_program
from .xpath_ast import Path
from .xpath_parser import parse_xpath

_EMPTY = np.empty(0, dtype=np.int32)
_EMPTY.setflags(write=False)


def _backend(backend):
    return kernels.active if backend is None else backend


def _table_handle(table, backend):
    if table._ktable is None:
        table._ktable = {}
    h = table._ktable.get(backend.NAME)
    if h is None:
        h = backend.prepare_table(table)
        table._ktable[backend.NAME] = h
    return h


def _program_handle(prog, backend):
    h = prog.handles.get(backend.NAME)
    if h is None:
        h = backend.prepare_program(prog)
        prog.handles[backend.NAME] = h
    return h


def _as_pre_array(table, context):
    arr = np.asarray(context, dtype=np.int32) if not isinstance(context, np.ndarray) \
        else context.astype(np.int32, copy=False)
    if arr.size and (arr.min() < 0 or arr.max() >= table.n):
        bad = arr[(arr < 0) | (arr >= table.n)][0]
        raise EvalError(f"PRE value {int(bad)} out of range [0, {table.n})")
    return arr


def _head_context(table, ast, backend):
    """Starting node set for an index-headed query."""
    head = ast.index
    if head.db and head.db != table.db_name:
        raise EvalError(f"index access names database {head.db!r}, "
                        f"but {table.db_name!r} is open")
    pres = table.value_index().lookup(head.kind, head.value)
    if head.predicates and len(pres):
        prog = compile_program(table, ast)
        pres = backend.eval_filter(_table_handle(table, backend),
                                   _program_handle(prog, backend), pres)
    return pres


def evaluate(table, ast, context=None, backend=None):
    """Evaluate ``ast`` and return the ascending duplicate-free PRE array.

    ``ast`` may be a query string or a parsed :class:`Path`.  Rooted
    queries (absolute or index-headed) ignore ``context``; relative
    queries require a non-empty context of valid PRE values.
    """
    if isinstance(ast, str):
        ast = parse_xpath(ast)
    backend = _backend(backend)
    if ast.index is not None:
        ctx = _head_context(table, ast, backend)
        if not len(ctx):
            return _EMPTY
    elif ast.absolute:
        ctx = np.zeros(1, dtype=np.int32)
    else:
        if context is None or not len(context):
            raise EvalError("relative query requires a non-empty context")
        ctx = _as_pre_array(table, context)
    if not ast.steps:
        out = np.unique(ctx)
        out.setflags(write=False)
        return out
    prog = compile_program(table, ast)
    return backend.eval_chain(_table_handle(table, backend),
                              _program_handle(prog, backend), 0, ctx, True)


def evaluate_per_node(table, ast, pres, backend=None):
    """Concatenate per-node evaluations of a relative query.

    For each context PRE, in the order given, the full chain result for
    that single node is appended (each per-node result ascending).  The
    concatenation is not globally deduplicated or sorted; that is the
    merge rule's job.
    """
    if isinstance(ast, str):
        ast = parse_xpath(ast)
    if ast.is_rooted():
        raise EvalError("per-node evaluation requires a relative query")
    backend = _backend(backend)
    ctx = _as_pre_array(table, pres)
    if not len(ctx):
        return _EMPTY
    if not ast.steps:
        return ctx
    prog = compile_program(table, ast)
    return backend.eval_chain(_table_handle(table, backend),
                              _program_handle(prog, backend), 0, ctx, False)


def items_response(table, pres, backend=None):
    """Serialized result lines (``pre\\tserialized-item\\n``) for a PRE list."""
    backend = _backend(backend)
    return backend.items_response(_table_handle(table, backend),
                                  np.asarray(pres, dtype=np.int32))


def int_lines(pres, backend=None):
    backend = _backend(backend)
    return backend.int_lines(np.asarray(pres, dtype=np.int32))


def string_value(table, pre):
    """XPath string value: own text for text/attribute nodes, concatenated
    descendant text for elements and the document."""
    return table.string_value(pre)


def number_value(table, pre):
    """number(string-value): decimal parse of the trimmed value, else NaN."""
    return table.number_value(pre)

