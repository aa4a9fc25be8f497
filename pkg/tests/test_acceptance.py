"""Acceptance criteria, one test per criterion.

Each test prints one `ACCEPTANCE <n> <name>: PASS|FAIL|SKIP` line (visible
with `pytest -s` or in captured output).  Tolerances are pinned here:
criteria 1-6 and 8 are exact or formula checks; criterion 7 is the
machine-dependent speedup check and self-skips below 4 cores.
"""

import math
import os
import random
import threading
import time

import pytest

from xpar import evaluate, parse_document, parse_xpath, unparse
from xpar.client import (CLIENT_SIDE, SEQUENTIAL_ORIGINAL, SERVER_SIDE,
                         ExecutionPlan, run)
from xpar.datasets import GenSpec, generate
from xpar.errors import WireError
from xpar.metrics import metric_increase_of_work, metric_load_balance
from xpar.optimizer import optimize
from xpar.protocol import Connection
from xpar.server import QueryServer, Registry
from xpar.splitter import block_partition
from xpar.suite import QUERIES, QUERIES_BY_KEY, variants

XMARK_DB = "axmark"
DBLP_DB = "adblp"
DBS = {"xmark_like": XMARK_DB, "dblp_like": DBLP_DB}
P_LIST = (1, 2, 3, 4, 8)


def _report(num, name, status, detail=""):
    print(f"\nACCEPTANCE {num} {name}: {status}{(' ' + detail) if detail else ''}")


@pytest.fixture(scope="module")
def acceptance_env():
    reg = Registry()
    reg.add(parse_document(generate(GenSpec("xmark_like", 10.0, 7)), XMARK_DB))
    reg.add(parse_document(generate(GenSpec("dblp_like", 10.0, 11)), DBLP_DB))
    with QueryServer(reg) as srv:
        yield reg, ("127.0.0.1", srv.port)


def test_criterion_1_split_correctness(acceptance_env):
    """Merged output bytes equal sequential-original bytes, exactly."""
    reg, addr = acceptance_env
    t0 = time.monotonic()
    baselines = {}
    failures = []
    cells = 0
    for q in QUERIES:
        out, _ = run(ExecutionPlan(SEQUENTIAL_ORIGINAL, DBS[q.dataset],
                                   query_text=q.text), addr)
        baselines[q.key] = out
    for v in variants(DBS):
        db = DBS[QUERIES_BY_KEY[v.query_key].dataset]
        plan = v.plan()
        for strategy in (CLIENT_SIDE, SERVER_SIDE):
            for p in P_LIST:
                cells += 1
                out, _ = run(ExecutionPlan(strategy, db, p=p, split=plan), addr)
                if out != baselines[v.query_key]:
                    failures.append((v.key, strategy, p))
    elapsed = time.monotonic() - t0
    ok = not failures and elapsed <= 120.0
    _report(1, "split-correctness", "PASS" if ok else "FAIL",
            f"({cells} cells, {elapsed:.1f}s, failures={failures})")
    assert not failures, failures
    assert elapsed <= 120.0, f"took {elapsed:.1f}s, budget is 120s"


def test_criterion_2_oracle_equivalence():
    """Indexed evaluator equals the naive recursive oracle on 1000 pairs."""
    from test_engine_oracle import run_equivalence_trials

    t0 = time.monotonic()
    checked = run_equivalence_trials(1000, seed=20260809)
    elapsed = time.monotonic() - t0
    ok = checked >= 1000 and elapsed <= 60.0
    _report(2, "oracle-equivalence", "PASS" if ok else "FAIL",
            f"({checked} pairs, {elapsed:.1f}s)")
    assert checked >= 1000
    assert elapsed <= 60.0


def test_criterion_3_optimizer_goldens(acceptance_env):
    reg, addr = acceptance_env
    table = reg.get(XMARK_DB).table
    summary, index = reg.get(XMARK_DB).summary, reg.get(XMARK_DB).index
    problems = []

    r3 = optimize(parse_xpath(QUERIES_BY_KEY["xm3"].text), summary, index)
    if unparse(r3.output) != "/site/open_auctions/open_auction/bidder[last()]":
        problems.append(f"xm3 rewrote to {unparse(r3.output)}")

    xm2 = parse_xpath(QUERIES_BY_KEY["xm2"].text)
    r2 = optimize(xm2, summary, index)
    if r2.output.index is None or r2.output.index.kind != "attribute":
        problems.append("xm2 did not invert onto the attribute index")
    a = list(evaluate(table, xm2))
    b = list(evaluate(table, r2.output))
    if a != b or not a:
        problems.append(f"xm2 inverted result differs ({len(a)} vs {len(b)} items)")

    for q in QUERIES:
        loaded = reg.get(DBS[q.dataset])
        r = optimize(parse_xpath(q.text), loaded.summary, loaded.index)
        again = optimize(r.output, loaded.summary, loaded.index)
        if again.output != r.output or again.applied:
            problems.append(f"{q.key} not idempotent")

    _report(3, "optimizer-goldens", "PASS" if not problems else "FAIL",
            str(problems) if problems else "")
    assert not problems, problems


def test_criterion_4_partition_algebra():
    import random as _r
    rng = _r.Random(14)
    ps = block_partition([2, 5, 42, 81, 109, 203], 3)
    ok = ps.partitions == ((2, 5), (42, 81), (109, 203))
    for _ in range(300):
        seq = [rng.randrange(10 ** 6) for _ in range(rng.randrange(0, 60))]
        p = rng.randint(1, 12)
        parts = block_partition(seq, p).partitions
        if [x for part in parts for x in part] != seq:
            ok = False
        sizes = [len(part) for part in parts]
        if max(sizes) - min(sizes) > 1 or len(parts) != p:
            ok = False
    try:
        block_partition([1], 0)
        ok = False
    except ValueError:
        pass
    _report(4, "partition-algebra", "PASS" if ok else "FAIL")
    assert ok


def test_criterion_5_payload_bounds():
    """Server-side request bytes are O(1) in prefix size; client-side grow."""
    small_n, big_n = 12, 1300  # prefix sizes differing by more than 100x
    doc = ["<root>"]
    doc.extend("<a><x/></a>" for _ in range(small_n))
    doc.extend("<b><x/></b>" for _ in range(big_n))
    doc.append("</root>")
    reg = Registry()
    reg.add(parse_document("".join(doc).encode(), "pay"))
    from xpar.splitter import SplitPlan, DEDUP_SORT

    def plan(prefix):
        return SplitPlan(parse_xpath(prefix), parse_xpath("x"), DEDUP_SORT, "t")

    with QueryServer(reg) as srv:
        addr = ("127.0.0.1", srv.port)
        p = 4
        sizes = {}
        for key, prefix in (("small", "/root/a"), ("big", "/root/b")):
            _, mc = run(ExecutionPlan(CLIENT_SIDE, "pay", p=p, split=plan(prefix)), addr)
            _, ms = run(ExecutionPlan(SERVER_SIDE, "pay", p=p, split=plan(prefix)), addr)
            sizes[key] = (mc.prefix_count,
                          mc.suffix_request_bytes,
                          ms.prefix_request_bytes + ms.suffix_request_bytes)
    ratio_n = sizes["big"][0] / sizes["small"][0]
    ratio_client = sizes["big"][1] / sizes["small"][1]
    server_delta = abs(sizes["big"][2] - sizes["small"][2])
    ok = ratio_n >= 100 and ratio_client >= 50 and server_delta <= 64
    _report(5, "payload-bounds", "PASS" if ok else "FAIL",
            f"(prefix ratio {ratio_n:.0f}x, client request ratio {ratio_client:.0f}x, "
            f"server request delta {server_delta} B)")
    assert ok


def test_criterion_6_metric_formulas():
    rng = random.Random(66)
    ok = metric_load_balance([3, 3, 3, 3, 3]) == 5.0
    ok = ok and metric_increase_of_work([12.5], 12.5) == 1.0
    for _ in range(20):
        p = rng.randint(1, 12)
        times = [rng.uniform(0.01, 90.0) for _ in range(p)]
        t1 = rng.uniform(0.01, 90.0)
        ok = ok and math.isclose(metric_load_balance(times), sum(times) / max(times))
        ok = ok and math.isclose(metric_increase_of_work(times, t1), sum(times) / t1)
    equal = [7.0] * 8
    ok = ok and metric_load_balance(equal) == 8.0
    _report(6, "metric-formulas", "PASS" if ok else "FAIL")
    assert ok


def test_criterion_7_desk_scale_speedup():
    """Suffix-phase speedup at P=4 on a million-node document.

    Machine-conditional: requires at least 4 cores; median suffix-phase
    speedup of the two scan-heavy variants must reach 1.5x over P=1.
    The client-vs-server total-time comparison is directional (WARN only).
    """
    cores = os.cpu_count() or 1
    if cores < 4:
        _report(7, "desk-scale-speedup", "SKIP",
                f"(machine has {cores} core(s); criterion applies to"
                " >= 4-core machines)")
        pytest.skip(f"needs >= 4 cores, have {cores}")

    t_start = time.monotonic()
    reg = Registry()
    reg.add(parse_document(generate(GenSpec("xmark_like", 100.0, 7)), XMARK_DB))
    reg.add(parse_document(generate(GenSpec("dblp_like", 100.0, 11)), DBLP_DB))
    repeats = 25
    speedups = {}
    with QueryServer(reg) as srv:
        addr = ("127.0.0.1", srv.port)
        for key in ("xm5b", "xm6b"):
            v = next(v for v in variants(DBS) if v.key == key)
            plan = v.plan()
            med = {}
            for p in (1, 4):
                ep = ExecutionPlan(SERVER_SIDE, XMARK_DB, p=p, split=plan)
                run(ep, addr)  # warm-up
                walls = sorted(run(ep, addr)[1].t_suffix_wall_ms
                               for _ in range(repeats))
                med[p] = walls[repeats // 2]
            speedups[key] = med[1] / med[4] if med[4] > 0 else float("inf")

        v = next(v for v in variants(DBS) if v.key == "db1a")
        def median_total(strategy):
            ep = ExecutionPlan(strategy, DBLP_DB, p=4, split=v.plan())
            run(ep, addr)
            ts = sorted(run(ep, addr)[1].t_total_ms for _ in range(repeats))
            return ts[repeats // 2]
        t_server = median_total(SERVER_SIDE)
        t_client = median_total(CLIENT_SIDE)

    elapsed = time.monotonic() - t_start
    ok = all(s >= 1.5 for s in speedups.values()) and elapsed <= 300.0
    directional = "ok" if t_server <= t_client else "WARN (machine-sensitive)"
    _report(7, "desk-scale-speedup", "PASS" if ok else "FAIL",
            f"(speedups {speedups}, db1a server {t_server:.0f} ms vs client "
            f"{t_client:.0f} ms: {directional}, {elapsed:.0f}s)")
    assert all(s >= 1.5 for s in speedups.values()), speedups
    assert elapsed <= 300.0


def _session_script(rng, db):
    script = [f"OPEN {db}", f"OPTIMIZE {rng.choice(('on', 'off'))}"]
    prefixes = ["/site//open_auction", "/site/open_auctions/open_auction",
                "/site/regions/*/item", "/site/people/person"]
    suffixes = ["bidder[last()]", "bidder/increase", "@id", "name"]
    for _ in range(rng.randint(4, 10)):
        r = rng.random()
        pfx = rng.choice(prefixes)
        sfx = rng.choice(suffixes)
        if r < 0.25:
            script.append(f"XPATH {pfx}")
        elif r < 0.45:
            script.append(f"PREFIX {pfx}")
        elif r < 0.65:
            p = rng.randint(1, 6)
            script.append(f"STOREPARTS {p} {pfx}")
            for i in range(1, p + 1):
                script.append(f"SUFFIXPART {i} {sfx}")
        elif r < 0.8:
            script.append(f"SUFFIXPRE 1 2 3 ; {sfx}")
        elif r < 0.9:
            script.append(f"XPATH {pfx}[")  # parse error on purpose
        else:
            script.append("NOSUCHCMD x")
    return script


def _replay(addr, script):
    out = []
    conn = Connection(*addr)
    try:
        for cmd in script:
            try:
                lines = conn.command(cmd)
                if cmd.startswith("STOREPARTS"):
                    lines = [b"<partition-alias>"] * len(lines)
                out.append(("OK", lines))
            except WireError as e:
                out.append(("ERR", e.code))
    finally:
        conn.close()
    return out


def test_criterion_8_concurrent_sessions(acceptance_env):
    """24 concurrent sessions match serial replays within a 60 s watchdog."""
    reg, addr = acceptance_env
    rng = random.Random(2024)
    scripts = [_session_script(rng, XMARK_DB) for _ in range(24)]
    serial = [_replay(addr, s) for s in scripts]

    results = [None] * 24
    errors = []

    def runner(i):
        try:
            results[i] = _replay(addr, scripts[i])
        except Exception as e:  # pragma: no cover
            errors.append((i, e))

    threads = [threading.Thread(target=runner, args=(i,), daemon=True)
               for i in range(24)]
    t0 = time.monotonic()
    for t in threads:
        t.start()
    deadline = t0 + 60.0
    for t in threads:
        t.join(timeout=max(0.0, deadline - time.monotonic()))
    hung = [t for t in threads if t.is_alive()]
    elapsed = time.monotonic() - t0
    ok = not hung and not errors and results == serial
    _report(8, "concurrent-sessions", "PASS" if ok else "FAIL",
            f"(24 sessions, {elapsed:.1f}s{', HUNG' if hung else ''})")
    assert not hung, "watchdog expired with sessions still running"
    assert not errors
    assert results == serial
