"""Master/worker query client.

``run`` executes one plan against a server: the master issues the prefix
(or the whole query for the sequential strategy), partitions work across P
worker connections opened before timing starts, collects the per-partition
suffix streams, and merges them by the plan's rule.  Timing stops when all
suffix result bytes have been received; the merge is not timed.  The first
worker failure cancels the remaining workers and the whole job fails with
that error; partial results are never returned.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from .errors import JobError, WireError
from .protocol import Connection, payload_bytes
from .splitter import CONCAT_IN_ORDER, DEDUP_SORT, SplitPlan, block_partition

SEQUENTIAL_ORIGINAL = "sequential_original"
CLIENT_SIDE = "client_side"
SERVER_SIDE = "server_side"


@dataclass(frozen=True)
class ExecutionPlan:
    strategy: str
    db_name: str
    p: int = 1
    split: SplitPlan | None = None
    query_text: str | None = None  # sequential_original only
    optimize: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("thread count must be >= 1")
        if self.strategy == SEQUENTIAL_ORIGINAL:
            if self.query_text is None:
                raise ValueError("sequential plans carry the original query text")
        elif self.split is None:
            raise ValueError(f"{self.strategy} plans carry a split")


@dataclass
class RunMetrics:
    strategy: str
    p: int
    address: str
    t_prefix_ms: float = 0.0
    t_suffix_ms: tuple = ()
    t_suffix_wall_ms: float = 0.0
    t_total_ms: float = 0.0
    prefix_count: int | None = None
    result_bytes: int = 0
    prefix_request_bytes: int = 0
    prefix_response_bytes: int = 0
    suffix_request_bytes: int = 0
    suffix_response_bytes: int = 0
    t_o_ms: float | None = None  # filled in by the bench driver
    t_s_ms: float | None = None
    t_p_ms: float | None = None


def merge_results(streams, rule):
    """Combine per-partition result byte streams into the final output.

    ``concat_in_order`` appends streams by partition index.  ``dedup_sort``
    re-parses the PRE key of every line, merges ascending and drops
    duplicate PRE values, which reproduces document-order set semantics.
    """
    if rule == CONCAT_IN_ORDER:
        return b"".join(streams)
    if rule != DEDUP_SORT:
        raise ValueError(f"unknown merge rule {rule!r}")
    keyed = []
    for stream in streams:
        for line in stream.splitlines(keepends=True):
            head = line.split(b"\t", 1)[0]
            try:
                keyed.append((int(head), line))
            except ValueError:
                raise JobError(f"malformed result line {line!r}") from None
    keyed.sort(key=lambda kv: kv[0])
    out = []
    prev = None
    for pre, line in keyed:
        if pre != prev:
            out.append(line)
            prev = pre
    return b"".join(out)


def _ms(dt):
    return dt * 1000.0


class _Job:
    def __init__(self, plan, address, timeout):
        self.plan = plan
        self.address = address
        self.conns = [Connection(address[0], address[1], timeout) for _ in range(plan.p)]
        self.cancelled = threading.Event()
        self.fail_lock = threading.Lock()
        self.failure = None

    def close(self):
        for c in self.conns:
            c.close()

    def cancel_from(self, exc, index):
        with self.fail_lock:
            if self.failure is None:
                self.failure = (index, exc)
                self.cancelled.set()
                for c in self.conns:
                    c.abort()

    def setup(self):
        for c in self.conns:
            c.command(f"OPEN {self.plan.db_name}")
            c.command(f"OPTIMIZE {'on' if self.plan.optimize else 'off'}")


def run(plan, address, timeout=None, _assignment=None):
    """Execute ``plan`` against ``(host, port)``; returns (bytes, RunMetrics).

    ``_assignment`` permutes partition-to-worker assignment (used by tests
    to show worker independence); results are keyed by partition index, so
    the merged output does not depend on it.
    """
    job = _Job(plan, address, timeout)
    m = RunMetrics(strategy=plan.strategy, p=plan.p, address=f"{address[0]}:{address[1]}")
    try:
        job.setup()
        if plan.strategy == SEQUENTIAL_ORIGINAL:
            return _run_sequential(job, m)
        if plan.strategy == CLIENT_SIDE:
            return _run_split(job, m, client_side=True, assignment=_assignment)
        if plan.strategy == SERVER_SIDE:
            return _run_split(job, m, client_side=False, assignment=_assignment)
        raise ValueError(f"unknown strategy {plan.strategy!r}")
    except WireError as e:
        raise JobError(f"{plan.strategy} job failed: {e}") from e
    finally:
        job.close()


def _run_sequential(job, m):
    master = job.conns[0]
    sent0, recv0 = master.bytes_sent, master.bytes_received
    t0 = time.perf_counter()
    lines = master.command(f"XPATH {job.plan.query_text}")
    m.t_total_ms = _ms(time.perf_counter() - t0)
    out = payload_bytes(lines)
    m.result_bytes = len(out)
    m.prefix_request_bytes = master.bytes_sent - sent0
    m.prefix_response_bytes = master.bytes_received - recv0
    return out, m


def _run_split(job, m, client_side, assignment):
    plan = job.plan
    split = plan.split
    master = job.conns[0]
    prefix_text = _text(split.prefix)
    suffix_text = _text(split.suffix)

    sent0, recv0 = master.bytes_sent, master.bytes_received
    t0 = time.perf_counter()
    if client_side:
        pres = [int(line) for line in master.command(f"PREFIX {prefix_text}")]
        partitions = block_partition(pres, plan.p).partitions
        m.prefix_count = len(pres)
    else:
        alias = master.command(f"STOREPARTS {plan.p} {prefix_text}")[0].decode()
        partitions = None
    m.t_prefix_ms = _ms(time.perf_counter() - t0)
    m.prefix_request_bytes = master.bytes_sent - sent0
    m.prefix_response_bytes = master.bytes_received - recv0
    if not client_side:
        # workers attach to the stored partition snapshot (connection setup,
        # untimed like the initial OPEN)
        for conn in job.conns[1:]:
            conn.command(f"OPEN {alias}")

    order = list(assignment) if assignment is not None else list(range(plan.p))
    streams = [None] * plan.p
    times = [0.0] * plan.p
    sent_before = [c.bytes_sent for c in job.conns]
    recv_before = [c.bytes_received for c in job.conns]

    def worker(w, part_index):
        conn = job.conns[w]
        try:
            t1 = time.perf_counter()
            if client_side:
                pre_list = " ".join(map(str, partitions[part_index]))
                lines = conn.command(f"SUFFIXPRE {pre_list} ; {suffix_text}")
            else:
                lines = conn.command(f"SUFFIXPART {part_index + 1} {suffix_text}")
            times[part_index] = _ms(time.perf_counter() - t1)
            streams[part_index] = payload_bytes(lines)
        except Exception as e:
            job.cancel_from(e, part_index)

    t2 = time.perf_counter()
    threads = [threading.Thread(target=worker, args=(w, order[w])) for w in range(plan.p)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    m.t_suffix_wall_ms = _ms(time.perf_counter() - t2)

    if job.failure is not None:
        index, exc = job.failure
        raise JobError(f"worker for partition {index + 1} failed: {exc}") from exc
    m.t_suffix_ms = tuple(times)
    m.t_total_ms = m.t_prefix_ms + m.t_suffix_wall_ms
    m.suffix_request_bytes = sum(c.bytes_sent - b for c, b in zip(job.conns, sent_before))
    m.suffix_response_bytes = sum(c.bytes_received - b for c, b in zip(job.conns, recv_before))
    out = merge_results(streams, split.merge)
    m.result_bytes = len(out)
    return out, m


def _text(query):
    from .xpath_ast import unparse
    return unparse(query) if not isinstance(query, str) else query
