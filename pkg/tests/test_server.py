import random
import socket
import threading

import pytest

from xpar import evaluate, parse_document
from xpar.engine import evaluate_per_node, items_response
from xpar.errors import WireError
from xpar.protocol import Connection, payload_bytes
from xpar.server import QueryServer, Registry


@pytest.fixture(scope="module")
def server(running_example_table):
    from xpar.datasets import GenSpec, generate

    reg = Registry()
    reg.add(running_example_table)
    reg.add(parse_document(generate(GenSpec("xmark_like", 1.0, 7)), "gen"))
    with QueryServer(reg) as srv:
        yield srv


def _conn(server, db="xmark"):
    c = Connection("127.0.0.1", server.port)
    if db:
        c.command(f"OPEN {db}")
    return c


def test_prefix_returns_worked_example_pre_list(server):
    c = _conn(server)
    lines = c.command("PREFIX /site//open_auction")
    assert b" ".join(lines) == b"2 5 42 81 109 203"
    assert c.command("PREFIX /site/nothing_here") == []
    c.close()


def test_prefix_equals_xpath_pre_column(server):
    c = _conn(server)
    pres = [int(x) for x in c.command("PREFIX /site//open_auction")]
    items = c.command("XPATH /site//open_auction")
    assert pres == [int(line.split(b"\t", 1)[0]) for line in items]
    c.close()


def test_store_parts_and_suffix_part_worked_example(server, running_example_table):
    c = _conn(server)
    alias = c.command("STOREPARTS 3 /site//open_auction")
    assert len(alias) == 1
    part2 = c.command("SUFFIXPART 2 bidder[last()]")
    want = items_response(running_example_table,
                          evaluate_per_node(running_example_table, "bidder[last()]",
                                            [42, 81]))
    assert payload_bytes(part2) == want
    c.close()


def test_suffix_part_union_equals_suffix_pre(server):
    c = _conn(server)
    pres = [int(x) for x in c.command("PREFIX /site//open_auction")]
    c.command(f"STOREPARTS 4 /site//open_auction")
    whole = c.command(f"SUFFIXPRE {' '.join(map(str, pres))} ; bidder[last()]")
    parts = []
    for i in range(1, 5):
        parts.extend(c.command(f"SUFFIXPART {i} bidder[last()]"))
    assert parts == whole
    c.close()


def test_empty_prefix_gives_empty_parts(server):
    c = _conn(server)
    c.command("STOREPARTS 3 /site/zzz")
    for i in (1, 2, 3):
        assert c.command(f"SUFFIXPART {i} bidder") == []
    assert c.command("SUFFIXPRE  ; bidder") == []
    c.close()


def test_errors_keep_session_alive(server):
    c = _conn(server)
    cases = [
        ("XPATH /site[", "PARSE"),
        ("XPATH /site/preceding::x", "UNSUPPORTED"),
        ("XPATH bidder", "EVAL"),
        ("PREFIX bidder", "EVAL"),
        ("SUFFIXPRE 999999 ; bidder", "BADPRE"),
        ("SUFFIXPRE 1 2 ; /site", "EVAL"),
        ("SUFFIXPART 1 bidder", "BADPART"),
        ("STOREPARTS 0 /site", "BADARG"),
        ("STOREPARTS x /site", "BADARG"),
        ("OPTIMIZE maybe", "BADARG"),
        ("OPEN nosuchdb", "NODB"),
        ("FROBNICATE 1", "BADCMD"),
    ]
    for cmd, code in cases:
        with pytest.raises(WireError) as ei:
            c.command(cmd)
        assert ei.value.code == code, cmd
    assert ei.value.code == "BADCMD"
    # the offending PRE value is named
    with pytest.raises(WireError) as ei:
        c.command("SUFFIXPRE 31337 ; bidder")
    assert "31337" in ei.value.message
    # session still works
    assert len(c.command("PREFIX /site//open_auction")) == 6
    c.close()


def test_arbitrary_bytes_never_crash_the_server(server):
    rng = random.Random(5)
    for i in range(40):
        raw = socket.create_connection(("127.0.0.1", server.port))
        try:
            if i % 4 == 0:
                junk = bytes(rng.randrange(256) for _ in range(rng.randrange(1, 200)))
                raw.sendall(junk + b"\n")
            elif i % 4 == 1:
                # several lines, some almost-valid
                raw.sendall(b"OPEN xmark\nXPATH\nSUFFIXPART one two\n\x00\xff\n")
            elif i % 4 == 2:
                raw.sendall(b"XPATH " + b"A" * 100_000 + b"\n")  # oversized line
            else:
                raw.sendall(b"OPEN")  # half a command, then hang up
                continue
            raw.settimeout(0.5)
            try:
                raw.recv(4096)
            except socket.timeout:
                pass
        finally:
            raw.close()
    c = _conn(server)
    assert len(c.command("PREFIX /site//open_auction")) == 6
    c.close()


def test_deep_predicate_nesting_over_the_wire(server):
    c = _conn(server)
    deep = "/site" + "[open_auction" * 50 + "]" * 50
    assert c.command(f"XPATH {deep}") == []  # no such nesting, but no crash
    with pytest.raises(WireError) as ei:
        c.command("XPATH /site[" + "(bidder and " * 40 + "bidder" + ")" * 40 + "]")
    assert ei.value.code == "UNSUPPORTED"
    assert len(c.command("PREFIX /site//open_auction")) == 6
    c.close()


def test_quit_closes_only_that_session(server):
    c1 = _conn(server)
    c2 = _conn(server)
    assert c1.command("QUIT") == []
    assert len(c2.command("PREFIX /site//open_auction")) == 6
    c1.close()
    c2.close()


def test_optimize_flag_rewrites_prefix_queries(server):
    c = _conn(server, db="gen")
    plain = c.command("PREFIX /site//open_auction/bidder[last()]")
    c.command("OPTIMIZE on")
    optimized = c.command("PREFIX /site//open_auction/bidder[last()]")
    assert plain == optimized
    c.command("OPTIMIZE off")
    c.close()


def test_concurrent_sessions_match_serial_results(server):
    # 12 sessions running SUFFIXPART concurrently over one table
    c = _conn(server)
    pres = [int(x) for x in c.command("PREFIX /site//open_auction")]
    alias = c.command("STOREPARTS 12 /site//open_auction")[0].decode()

    serial = []
    for i in range(1, 13):
        serial.append(c.command(f"SUFFIXPART {i} bidder[last()]"))

    results = [None] * 12
    def worker(i):
        w = _conn(server, db=None)
        try:
            w.command(f"OPEN {alias}")
            results[i] = w.command(f"SUFFIXPART {i + 1} bidder[last()]")
        finally:
            w.close()

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30)
    assert results == serial
    c.close()


def test_partition_jobs_are_isolated_between_sessions(server):
    a = _conn(server)
    b = _conn(server)
    alias_a = a.command("STOREPARTS 2 /site//open_auction")[0].decode()
    alias_b = b.command("STOREPARTS 3 /site//open_auction")[0].decode()
    assert alias_a != alias_b
    # each session sees its own partition count
    assert a.command("SUFFIXPART 2 bidder[last()]")
    with pytest.raises(WireError):
        a.command("SUFFIXPART 3 bidder[last()]")
    assert b.command("SUFFIXPART 3 bidder[last()]")
    a.close()
    b.close()
