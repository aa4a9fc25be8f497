"""PRE-ordered node table built from XML, plus the derived indices.

A document is stored as one flat array of records numbered by PRE value,
i.e. position in document order, with a node's attributes placed directly
after it and before its children.  Record 0 is always the document node.
Together with the per-node subtree size this gives constant-time node
access and interval-based ancestry tests: ``q`` is a descendant-or-self of
``p`` iff ``p.pre <= q.pre < p.pre + p.size``.

Three derived structures are built on demand:

* a canonical byte serialization with per-node offsets, so any subtree can
  be re-serialized as a byte slice;
* a :class:`PathSummary` of the distinct rooted element label paths;
* a :class:`ValueIndex` from exact attribute/text values to PRE lists.

Tables are immutable once constructed and safe for concurrent readers.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_left
from dataclasses import dataclass
from xml.parsers import expat

import numpy as np

from .errors import ParseError, UnsupportedFeatureError

DOCUMENT, ELEMENT, ATTRIBUTE, TEXT = 0, 1, 2, 3

KIND_NAMES = {DOCUMENT: "document", ELEMENT: "element",
              ATTRIBUTE: "attribute", TEXT: "text"}

_XML_WS = " \t\r\n"

# XPath-style number() conversion: optional sign, plain decimal, no exponent.
_NUMBER_RE = re.compile(r"^\s*(-?(?:\d+(?:\.\d*)?|\.\d+))\s*$")


def parse_xpath_number(s):
    """Decimal parse of a string value; NaN when it is not a number."""
    m = _NUMBER_RE.match(s)
    return float(m.group(1)) if m else math.nan


@dataclass(frozen=True)
class NodeRecord:
    """One row of the table, materialized on demand via :func:`open_pre`."""

    pre: int
    size: int
    parent_pre: int | None
    kind: int
    name: str | None
    value: str


class NodeTable:
    """Immutable PRE-ordered encoding of one document.

    The heavy state lives in numpy arrays indexed by PRE value:
    ``size``, ``parent`` (-1 for the document node), ``kind``, ``name_id``
    (-1 when the node has no name) and ``svid``.  ``svid`` interns every
    node's *string value* (for elements, the concatenation of descendant
    text) into ``values``; ``vnum`` holds the numeric interpretation of
    each interned value.
    """

    __slots__ = ("db_name", "n", "size", "parent", "kind", "name_id", "svid",
                 "names", "name_ids", "values", "value_ids", "vnum",
                 "ser", "ser_start", "ser_end",
                 "_summary", "_value_index", "_program_cache", "_ktable")

    def __init__(self, db_name, size, parent, kind, name_id, svid,
                 names, name_ids, values, value_ids, ser, ser_start, ser_end):
        self.db_name = db_name
        self.n = len(size)
        self.size = size
        self.parent = parent
        self.kind = kind
        self.name_id = name_id
        self.svid = svid
        self.names = names
        self.name_ids = name_ids
        self.values = values
        self.value_ids = value_ids
        self.vnum = np.array([parse_xpath_number(v) for v in values], dtype=np.float64)
        self.ser = ser
        self.ser_start = ser_start
        self.ser_end = ser_end
        for arr in (self.size, self.parent, self.kind, self.name_id,
                    self.svid, self.vnum, self.ser_start, self.ser_end):
            arr.setflags(write=False)
        self._summary = None
        self._value_index = None
        self._program_cache = {}
        self._ktable = None

    # -- node access -----------------------------------------------------

    def record(self, pre):
        if not 0 <= pre < self.n:
            raise IndexError(f"PRE value {pre} out of range [0, {self.n})")
        k = int(self.kind[pre])
        nid = int(self.name_id[pre])
        par = int(self.parent[pre])
        return NodeRecord(
            pre=pre,
            size=int(self.size[pre]),
            parent_pre=None if par < 0 else par,
            kind=k,
            name=self.names[nid] if nid >= 0 else None,
            value=self.values[self.svid[pre]] if k in (ATTRIBUTE, TEXT) else "",
        )

    def string_value(self, pre):
        if not 0 <= pre < self.n:
            raise IndexError(f"PRE value {pre} out of range [0, {self.n})")
        return self.values[self.svid[pre]]

    def number_value(self, pre):
        if not 0 <= pre < self.n:
            raise IndexError(f"PRE value {pre} out of range [0, {self.n})")
        return float(self.vnum[self.svid[pre]])

    def serialize_node(self, pre):
        """Canonical serialization of the subtree (or attribute) at ``pre``."""
        if not 0 <= pre < self.n:
            raise IndexError(f"PRE value {pre} out of range [0, {self.n})")
        return self.ser[self.ser_start[pre]:self.ser_end[pre]]

    def serialize(self):
        return self.ser

    # -- derived structures (memoized; construction is idempotent) --------

    def path_summary(self):
        if self._summary is None:
            self._summary = build_path_summary(self)
        return self._summary

    def value_index(self):
        if self._value_index is None:
            self._value_index = build_value_index(self)
        return self._value_index


def node_pre(table, node):
    """PRE value of a :class:`NodeRecord`; inverse of :func:`open_pre`."""
    return node.pre


def open_pre(table, pre):
    """Node record for a PRE value; inverse of :func:`node_pre`."""
    return table.record(pre)


# -- XML parsing ---------------------------------------------------------


def _escape_text(s):
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
             .replace("\r", "&#13;").replace("\n", "&#10;"))


def _escape_attr(s):
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
             .replace('"', "&quot;")
             .replace("\r", "&#13;").replace("\n", "&#10;").replace("\t", "&#9;"))


class _Builder:
    """Collects expat events into flat per-node lists."""

    def __init__(self, db_name):
        self.db_name = db_name
        self.kind = []
        self.parent = []
        self.name = []          # name id per node, -1 when unnamed
        self.node_value = []    # raw string for attribute/text nodes, else None
        self.names = []
        self.name_ids = {}
        self.stack = [0]        # open element pres; document node is pre 0
        self.open_sizes = {}    # pre -> size, filled when the node closes
        self.text_buf = []
        self._append(DOCUMENT, -1, -1, None)

    def _append(self, kind, parent, name_id, value):
        self.kind.append(kind)
        self.parent.append(parent)
        self.name.append(name_id)
        self.node_value.append(value)
        return len(self.kind) - 1

    def _intern_name(self, s):
        nid = self.name_ids.get(s)
        if nid is None:
            nid = len(self.names)
            self.names.append(s)
            self.name_ids[s] = nid
        return nid

    def _check_name(self, s, parser):
        if ":" in s or s.startswith("xmlns"):
            raise UnsupportedFeatureError(
                f"namespaces are not supported (name {s!r}, "
                f"byte {parser.CurrentByteIndex})")

    def flush_text(self):
        if not self.text_buf:
            return
        data = "".join(self.text_buf)
        self.text_buf.clear()
        if data.strip(_XML_WS) == "":
            return
        self._append(TEXT, self.stack[-1], -1, data)

    def start_element(self, parser, name, attrs):
        self.flush_text()
        self._check_name(name, parser)
        pre = self._append(ELEMENT, self.stack[-1], self._intern_name(name), None)
        for i in range(0, len(attrs), 2):
            self._check_name(attrs[i], parser)
            self._append(ATTRIBUTE, pre, self._intern_name(attrs[i]), attrs[i + 1])
        self.stack.append(pre)

    def end_element(self, name):
        self.flush_text()
        pre = self.stack.pop()
        self.open_sizes[pre] = len(self.kind) - pre


def parse_document(data, db_name="doc"):
    """Parse an XML byte stream (or already-decoded string) into a table.

    Supports elements, attributes and character data only.  Comments,
    processing instructions, CDATA sections, DOCTYPE declarations and
    namespaces raise :class:`UnsupportedFeatureError`; malformed input
    raises :class:`ParseError` with the failing byte offset.  Adjacent
    character data is merged into a single text node and whitespace-only
    text is dropped.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    parser = expat.ParserCreate()
    parser.ordered_attributes = True
    parser.buffer_text = False
    b = _Builder(db_name)

    def unsupported(what):
        def handler(*_args):
            raise UnsupportedFeatureError(
                f"{what} is not supported (byte {parser.CurrentByteIndex})")
        return handler

    parser.StartElementHandler = lambda name, attrs: b.start_element(parser, name, attrs)
    parser.EndElementHandler = b.end_element
    parser.CharacterDataHandler = b.text_buf.append
    parser.CommentHandler = unsupported("comment")
    parser.ProcessingInstructionHandler = unsupported("processing instruction")
    parser.StartCdataSectionHandler = unsupported("CDATA section")
    parser.StartDoctypeDeclHandler = unsupported("DOCTYPE declaration")

    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise ParseError(expat.errors.messages[exc.code], parser.ErrorByteIndex) from exc

    b.open_sizes[0] = len(b.kind)
    return _finish_table(b)


def _finish_table(b):
    n = len(b.kind)
    kind = np.array(b.kind, dtype=np.int32)
    parent = np.array(b.parent, dtype=np.int32)
    name_id = np.array(b.name, dtype=np.int32)
    size = np.ones(n, dtype=np.int32)
    for pre, sz in b.open_sizes.items():
        size[pre] = sz

    values = []
    value_ids = {}

    def intern_value(s):
        vid = value_ids.get(s)
        if vid is None:
            vid = len(values)
            values.append(s)
            value_ids[s] = vid
        return vid

    # String values: text/attribute nodes carry their own value; elements and
    # the document node concatenate the text nodes inside their PRE interval.
    texts_pre = [i for i in range(n) if b.kind[i] == TEXT]
    texts_val = [b.node_value[i] for i in texts_pre]
    svid = np.empty(n, dtype=np.int32)
    for i in range(n):
        k = b.kind[i]
        if k in (ATTRIBUTE, TEXT):
            svid[i] = intern_value(b.node_value[i])
        else:
            lo = bisect_left(texts_pre, i)
            hi = bisect_left(texts_pre, i + int(size[i]))
            if hi - lo == 1:
                svid[i] = intern_value(texts_val[lo])
            elif hi == lo:
                svid[i] = intern_value("")
            else:
                svid[i] = intern_value("".join(texts_val[lo:hi]))

    ser, ser_start, ser_end = _serialize_all(n, kind, size, name_id, b.names, b.node_value)
    return NodeTable(b.db_name, size, parent, kind, name_id, svid,
                     b.names, b.name_ids, values, value_ids,
                     ser, ser_start, ser_end)


def _serialize_all(n, kind, size, name_id, names, node_value):
    """Canonical document bytes plus per-node byte ranges.

    Every node's serialized form is a contiguous slice: elements span their
    tags, attributes span the `name="value"` fragment inside the start tag,
    text nodes span their escaped data, the document spans everything.
    Newlines are escaped as character references so serialized items never
    span protocol lines.
    """
    chunks = []
    pos = 0
    start = np.zeros(n, dtype=np.int64)
    end = np.zeros(n, dtype=np.int64)

    def emit(s):
        nonlocal pos
        bs = s.encode("utf-8")
        chunks.append(bs)
        pos += len(bs)

    closes = []  # (end_pre, element_pre, tag) pending close tags
    pre = 1 if n > 1 else n
    while pre < n:
        while closes and pre >= closes[-1][0]:
            _, epre, tag = closes.pop()
            emit(f"</{tag}>")
            end[epre] = pos
        k = kind[pre]
        if k == ELEMENT:
            tag = names[name_id[pre]]
            start[pre] = pos
            emit(f"<{tag}")
            q = pre + 1
            while q < pre + size[pre] and kind[q] == ATTRIBUTE:
                emit(" ")
                start[q] = pos
                emit(f'{names[name_id[q]]}="{_escape_attr(node_value[q])}"')
                end[q] = pos
                q += 1
            if q == pre + size[pre]:
                emit("/>")
                end[pre] = pos
            else:
                emit(">")
                closes.append((pre + size[pre], pre, tag))
            pre = q
        else:
            start[pre] = pos
            emit(_escape_text(node_value[pre]))
            end[pre] = pos
            pre += 1
    while closes:
        _, epre, tag = closes.pop()
        emit(f"</{tag}>")
        end[epre] = pos
    end[0] = pos
    return b"".join(chunks), start, end


def make_partition_table(partitions, db_name="tmp"):
    """Build the temporary partition document for server-side splitting.

    Layout is fixed: document at PRE 0, a single root element at PRE 1 and,
    for the 1-based partition index i, a `part` element at PRE 2i with its
    text node at PRE 2i+1.  Empty partitions keep an empty text node so the
    layout is independent of the data; the text round-trips to the original
    partition through whitespace tokenization.
    """
    p = len(partitions)
    n = 2 + 2 * p
    kind = np.zeros(n, dtype=np.int32)
    size = np.ones(n, dtype=np.int32)
    parent = np.full(n, 1, dtype=np.int32)
    name_id = np.full(n, -1, dtype=np.int32)
    names = ["root", "part"]
    name_ids = {"root": 0, "part": 1}
    node_value = [None] * n

    kind[0], size[0], parent[0] = DOCUMENT, n, -1
    kind[1], size[1], name_id[1], parent[1] = ELEMENT, n - 1, 0, 0
    for i, part in enumerate(partitions, start=1):
        e, t = 2 * i, 2 * i + 1
        kind[e], size[e], name_id[e] = ELEMENT, 2, 1
        kind[t], parent[t] = TEXT, e
        node_value[t] = " ".join(str(int(x)) for x in part)

    values = []
    value_ids = {}

    def intern_value(s):
        vid = value_ids.get(s)
        if vid is None:
            vid = len(values)
            values.append(s)
            value_ids[s] = vid
        return vid

    svid = np.empty(n, dtype=np.int32)
    svid[0] = svid[1] = intern_value("".join(node_value[3::2]) if p else "")
    for i in range(1, p + 1):
        svid[2 * i] = svid[2 * i + 1] = intern_value(node_value[2 * i + 1])

    ser, ser_start, ser_end = _serialize_all(n, kind, size, name_id, names, node_value)
    return NodeTable(db_name, size, parent, kind, name_id, svid,
                     names, name_ids, values, value_ids, ser, ser_start, ser_end)


# -- path summary ----------------------------------------------------------


class PathSummary:
    """Distinct rooted element label paths with occurrence counts.

    ``paths`` maps a label path tuple (root element downward) to the number
    of elements at that path.  ``parents`` maps a label to the set of labels
    it occurs directly under (None for the root element position).
    """

    def __init__(self, paths, parents):
        self.paths = paths
        self.parents = parents

    def __contains__(self, path):
        return tuple(path) in self.paths

    def count(self, path):
        return self.paths.get(tuple(path), 0)

    def extensions(self, path):
        """Label paths exactly one step below ``path``."""
        path = tuple(path)
        k = len(path)
        return {p for p in self.paths if len(p) == k + 1 and p[:k] == path}

    def is_leaf(self, path):
        """True when no element path extends ``path``."""
        path = tuple(path)
        k = len(path)
        return not any(len(p) > k and p[:k] == path for p in self.paths)

    def descendant_chains(self, context_path, label):
        """Distinct label chains leading from ``context_path`` down to ``label``."""
        cp = tuple(context_path)
        k = len(cp)
        return {p[k:] for p in self.paths
                if len(p) > k and p[:k] == cp and p[-1] == label}


def build_path_summary(table):
    paths = {}
    parents = {}
    stack = []  # (end_pre, label)
    labels = []
    for pre in range(1, table.n):
        if table.kind[pre] != ELEMENT:
            continue
        while stack and pre >= stack[-1][0]:
            stack.pop()
            labels.pop()
        label = table.names[table.name_id[pre]]
        parents.setdefault(label, set()).add(labels[-1] if labels else None)
        stack.append((pre + int(table.size[pre]), label))
        labels.append(label)
        tp = tuple(labels)
        paths[tp] = paths.get(tp, 0) + 1
    return PathSummary(paths, parents)


# -- value index -----------------------------------------------------------

ATTRIBUTE_VALUES = "attribute"
TEXT_VALUES = "text"

_EMPTY_PRES = np.empty(0, dtype=np.int32)


class ValueIndex:
    """Exact-match value lookup: (kind, string) to ascending PRE values."""

    def __init__(self, db_name, attr, text):
        self.db_name = db_name
        self._maps = {ATTRIBUTE_VALUES: attr, TEXT_VALUES: text}

    def lookup(self, kind, value):
        m = self._maps.get(kind)
        if m is None:
            raise ValueError(f"unknown value index kind {kind!r}")
        return m.get(value, _EMPTY_PRES)

    def hit_count(self, kind, value):
        return len(self.lookup(kind, value))


def build_value_index(table):
    attr = {}
    text = {}
    kinds = table.kind
    for pre in range(table.n):
        k = kinds[pre]
        if k == ATTRIBUTE:
            attr.setdefault(table.values[table.svid[pre]], []).append(pre)
        elif k == TEXT:
            v = table.values[table.svid[pre]]
            if v:
                text.setdefault(v, []).append(pre)
    attr = {v: np.array(p, dtype=np.int32) for v, p in attr.items()}
    text = {v: np.array(p, dtype=np.int32) for v, p in text.items()}
    for m in (attr, text):
        for a in m.values():
            a.setflags(write=False)
    return ValueIndex(table.db_name, attr, text)


def value_index_lookup(index, kind, value):
    """Ascending PRE values of attribute/text nodes whose value equals ``value``."""
    return index.lookup(kind, value)
