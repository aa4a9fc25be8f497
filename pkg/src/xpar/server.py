"""Threaded TCP query server.

One session per connection; the node-table registry is immutable and
read-shared, so any number of sessions evaluate in parallel (the kernel
hot loops do not hold the GIL).  Per-session state is the opened database,
the optimize flag and the session's temporary partition document, which is
rebuilt by each STOREPARTS and never shared between sessions.  Protocol
errors produce an ERR response and leave the session alive.
"""

from __future__ import annotations

import itertools
import re
import socketserver
import threading

import numpy as np

from . import engine, protocol
from .errors import EvalError, UnsupportedFeatureError, XPathSyntaxError
from .nodestore import build_path_summary, build_value_index, make_partition_table
from .optimizer import optimize
from .splitter import block_partition
from .xpath_parser import parse_xpath

_TOKEN_RE = re.compile(r"\S+")
_TOKEN_CHUNK = 4096


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message


class LoadedDb:
    """A node table plus the derived structures the optimizer needs."""

    def __init__(self, table):
        self.table = table
        self.name = table.db_name
        self.summary = build_path_summary(table)
        self.index = build_value_index(table)


class Registry:
    def __init__(self):
        self._dbs = {}

    def add(self, table):
        self._dbs[table.db_name] = LoadedDb(table)

    def get(self, name):
        return self._dbs.get(name)

    def __len__(self):
        return len(self._dbs)


class _PartitionJob:
    """Immutable partition snapshot created by one STOREPARTS.

    The storing session owns the job and replaces it on the next
    STOREPARTS; worker sessions attach read-only by opening the job-scoped
    alias that the STOREPARTS response returned.  Jobs vanish when the
    owning session ends, so concurrent jobs never interfere.
    """

    __slots__ = ("alias", "db", "parts", "part_table")

    def __init__(self, alias, db, parts, part_table):
        self.alias = alias
        self.db = db
        self.parts = parts
        self.part_table = part_table


class _JobStore:
    def __init__(self):
        self._jobs = {}
        self._lock = threading.Lock()
        self._counter = 0

    def create(self, db, parts, part_table):
        with self._lock:
            self._counter += 1
            alias = f"{db.name}/job{self._counter}"
            job = _PartitionJob(alias, db, parts, part_table)
            self._jobs[alias] = job
        return job

    def get(self, alias):
        with self._lock:
            return self._jobs.get(alias)

    def drop(self, job):
        if job is None:
            return
        with self._lock:
            self._jobs.pop(job.alias, None)


class _Session:
    __slots__ = ("db", "optimize_enabled", "job", "owned_job")

    def __init__(self):
        self.db = None
        self.optimize_enabled = False
        self.job = None        # partition snapshot visible to SUFFIXPART
        self.owned_job = None  # the one this session created


class _Handler(socketserver.StreamRequestHandler):
    disable_nagle_algorithm = True  # TCP_NODELAY on every session socket

    def handle(self):
        session = _Session()
        registry = self.server.registry
        try:
            while True:
                raw = self.rfile.readline()
                if not raw:
                    return
                try:
                    line = raw.decode("utf-8").strip()
                except UnicodeDecodeError:
                    self._err(protocol.E_BADCMD, "request is not valid UTF-8")
                    continue
                if not line:
                    continue
                cmd, _, rest = line.partition(" ")
                try:
                    if cmd == "QUIT":
                        self._ok([])
                        return
                    handler = _COMMANDS.get(cmd)
                    if handler is None:
                        raise CommandError(protocol.E_BADCMD, f"unknown command {cmd!r}")
                    self._ok(handler(self.server, session, rest.strip()))
                except CommandError as e:
                    self._err(e.code, e.message)
                except Exception as e:  # protocol safety: sessions never crash the server
                    self._err(protocol.E_INTERNAL, f"{type(e).__name__}: {e}")
        finally:
            self.server.jobs.drop(session.owned_job)

    def _ok(self, payload):
        if isinstance(payload, tuple):
            n, body = payload
        else:
            n, body = len(payload), b"".join(line + b"\n" for line in payload)
        self.wfile.write(b"OK %d\n" % n + body)
        self.wfile.flush()

    def _err(self, code, message):
        message = str(message).replace("\n", " ").replace("\r", " ")
        try:
            self.wfile.write(f"ERR {code} {message}\n".encode("utf-8"))
            self.wfile.flush()
        except OSError:
            pass


def _need_db(session):
    if session.db is None:
        raise CommandError(protocol.E_NODB, "no database opened; use OPEN <db>")
    return session.db


def _parse_query(text):
    if not text:
        raise CommandError(protocol.E_BADARG, "missing query text")
    try:
        return parse_xpath(text)
    except UnsupportedFeatureError as e:
        raise CommandError(protocol.E_UNSUPPORTED, str(e)) from e
    except XPathSyntaxError as e:
        raise CommandError(protocol.E_PARSE, str(e)) from e


def _prepare(session, text, require_rooted):
    db = _need_db(session)
    ast = _parse_query(text)
    if require_rooted and not ast.is_rooted():
        raise CommandError(protocol.E_EVAL, "an absolute query is required here")
    if session.optimize_enabled:
        ast = optimize(ast, db.summary, db.index).output
    return db, ast


def _evaluate(db, ast, context=None):
    try:
        return engine.evaluate(db.table, ast, context)
    except UnsupportedFeatureError as e:  # compile-time limits
        raise CommandError(protocol.E_UNSUPPORTED, str(e)) from e
    except EvalError as e:
        raise CommandError(protocol.E_EVAL, str(e)) from e


def _evaluate_per_node(db, ast, pres):
    try:
        return engine.evaluate_per_node(db.table, ast, pres)
    except UnsupportedFeatureError as e:
        raise CommandError(protocol.E_UNSUPPORTED, str(e)) from e
    except EvalError as e:
        raise CommandError(protocol.E_EVAL, str(e)) from e


def cmd_open(server, session, rest):
    db = server.registry.get(rest)
    if db is not None:
        session.db = db
        session.job = session.owned_job
        return []
    job = server.jobs.get(rest)
    if job is not None:
        # worker session attaching to a stored partition snapshot
        session.db = job.db
        session.job = job
        return []
    raise CommandError(protocol.E_NODB, f"unknown database {rest!r}")


def cmd_optimize(server, session, rest):
    if rest not in ("on", "off"):
        raise CommandError(protocol.E_BADARG, "OPTIMIZE takes on|off")
    session.optimize_enabled = rest == "on"
    return []


def cmd_xpath(server, session, rest):
    db, ast = _prepare(session, rest, require_rooted=True)
    pres = _evaluate(db, ast)
    return len(pres), engine.items_response(db.table, pres)


def cmd_prefix(server, session, rest):
    db, ast = _prepare(session, rest, require_rooted=True)
    pres = _evaluate(db, ast)
    return len(pres), engine.int_lines(pres)


def cmd_store_parts(server, session, rest):
    arg, _, text = rest.partition(" ")
    try:
        p = int(arg)
    except ValueError:
        raise CommandError(protocol.E_BADARG, f"bad partition count {arg!r}") from None
    if p < 1:
        raise CommandError(protocol.E_BADARG, "partition count must be >= 1")
    db, ast = _prepare(session, text.strip(), require_rooted=True)
    pres = _evaluate(db, ast)
    parts = block_partition(pres, p, db.name)
    job = server.jobs.create(db, parts, make_partition_table(parts.partitions))
    server.jobs.drop(session.owned_job)  # replaced on each STOREPARTS
    session.owned_job = job
    session.job = job
    # the response carries the job-scoped alias worker sessions OPEN
    return [job.alias.encode("utf-8")]


def cmd_suffix_part(server, session, rest):
    arg, _, text = rest.partition(" ")
    db = _need_db(session)
    job = session.job
    if job is None:
        raise CommandError(protocol.E_BADPART, "no partitions stored; run STOREPARTS first")
    try:
        i = int(arg)
    except ValueError:
        raise CommandError(protocol.E_BADARG, f"bad partition index {arg!r}") from None
    if not 1 <= i <= job.parts.p:
        raise CommandError(protocol.E_BADPART,
                           f"partition index {i} out of range 1..{job.parts.p}")
    ast = _parse_query(text.strip())
    if ast.is_rooted():
        raise CommandError(protocol.E_EVAL, "suffix queries are relative")
    # the partition travels as the text node of part i; tokenization is
    # streamed in chunks so evaluation starts before the whole integer
    # list is deserialized, and each chunk converts at C speed (cheaper
    # than the per-token query parsing SUFFIXPRE pays on purpose)
    part_text = job.part_table.string_value(2 * i + 1)
    n_total = 0
    chunks = []
    it = _TOKEN_RE.finditer(part_text)
    while True:
        batch = [m.group() for m in itertools.islice(it, _TOKEN_CHUNK)]
        if not batch:
            break
        pres = _deserialize_pres(batch, db)
        result = _evaluate_per_node(db, ast, pres)
        n_total += len(result)
        chunks.append(engine.items_response(db.table, result))
    return n_total, b"".join(chunks)


def _deserialize_pres(tokens, db):
    try:
        pres = np.array(tokens, dtype=np.int32)
    except (ValueError, OverflowError):
        for tok in tokens:
            _parse_pre(tok, db)
        raise CommandError(protocol.E_BADPRE, "bad PRE token") from None
    if len(pres) and (int(pres.min()) < 0 or int(pres.max()) >= db.table.n):
        bad = pres[(pres < 0) | (pres >= db.table.n)][0]
        raise CommandError(protocol.E_BADPRE, f"PRE value {int(bad)} out of range")
    return pres


def _parse_pre(token, db):
    try:
        pre = int(token)
    except ValueError:
        raise CommandError(protocol.E_BADPRE, f"bad PRE value {token!r}") from None
    if not 0 <= pre < db.table.n:
        raise CommandError(protocol.E_BADPRE, f"PRE value {pre} out of range")
    return pre


def cmd_suffix_client(server, session, rest):
    db = _need_db(session)
    # the PRE list is part of the query text: the whole line is parsed
    # before any evaluation starts (the client-side strategy's cost)
    pres_text, sep, text = rest.partition(";")
    if not sep:
        raise CommandError(protocol.E_BADARG, "SUFFIXPRE takes `<pre ...> ; <query>`")
    pres = [_parse_pre(tok, db) for tok in pres_text.split()]
    ast = _parse_query(text.strip())
    if ast.is_rooted():
        raise CommandError(protocol.E_EVAL, "suffix queries are relative")
    result = _evaluate_per_node(db, ast, np.array(pres, dtype=np.int32))
    return len(result), engine.items_response(db.table, result)


_COMMANDS = {
    "OPEN": cmd_open,
    "OPTIMIZE": cmd_optimize,
    "XPATH": cmd_xpath,
    "PREFIX": cmd_prefix,
    "STOREPARTS": cmd_store_parts,
    "SUFFIXPART": cmd_suffix_part,
    "SUFFIXPRE": cmd_suffix_client,
}


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class QueryServer:
    """Embeddable server; ``serve`` is the blocking CLI entry point."""

    def __init__(self, registry, host="127.0.0.1", port=0):
        if not len(registry):
            raise ValueError("at least one database must be loaded")
        self._tcp = _TCPServer((host, port), _Handler)
        self._tcp.registry = registry
        self._tcp.jobs = _JobStore()
        self._thread = None

    @property
    def address(self):
        return self._tcp.server_address

    @property
    def port(self):
        return self._tcp.server_address[1]

    def start(self):
        self._thread = threading.Thread(target=self._tcp.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=10)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(registry, host="127.0.0.1", port=6270):
    """Run until interrupted; one worker thread per connection."""
    srv = QueryServer(registry, host, port)
    try:
        srv._tcp.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        srv._tcp.server_close()
