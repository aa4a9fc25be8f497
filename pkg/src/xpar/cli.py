"""Command line interface.

Subcommands: ``gen`` writes a dataset, ``serve`` loads databases and runs
the query server, ``query`` executes one plan against a running server,
``bench`` sweeps the suite with correctness gates, and ``kernels``
benchmarks the compiled kernels against the pure-Python fallback.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__


def _addr(text):
    host, _, port = text.rpartition(":")
    return (host or "127.0.0.1", int(port))


def cmd_gen(args):
    from .datasets import GenSpec, generate

    spec = GenSpec(dataset=args.dataset, scale=args.scale, seed=args.seed)
    data = generate(spec)
    with open(args.out, "wb") as f:
        f.write(data)
    print(f"wrote {args.out}: {len(data)} bytes")
    if args.stats:
        from .nodestore import parse_document
        t = parse_document(data, "stats")
        kinds = {"document": 0, "element": 0, "attribute": 0, "text": 0}
        import numpy as np
        names = ["document", "element", "attribute", "text"]
        for code, count in zip(*np.unique(t.kind, return_counts=True)):
            kinds[names[int(code)]] = int(count)
        total = sum(kinds.values())
        print(f"nodes: {total} total, " +
              ", ".join(f"{k}={v}" for k, v in kinds.items()))
    return 0


def _load_registry(db_args):
    from .nodestore import parse_document
    from .server import Registry

    registry = Registry()
    for spec in db_args:
        name, _, path = spec.partition("=")
        if not path:
            raise SystemExit(f"--db takes name=path, got {spec!r}")
        t0 = time.perf_counter()
        if path == "-":
            data = sys.stdin.buffer.read()
        else:
            with open(path, "rb") as f:
                data = f.read()
        table = parse_document(data, name)
        registry.add(table)
        print(f"loaded {name} from {path}: {table.n} nodes "
              f"({time.perf_counter() - t0:.1f}s)")
    return registry


def cmd_serve(args):
    from .server import serve

    registry = _load_registry(args.db)
    print(f"serving on {args.host}:{args.port}")
    serve(registry, args.host, args.port)
    return 0


def cmd_query(args):
    from .client import (CLIENT_SIDE, SEQUENTIAL_ORIGINAL, SERVER_SIDE,
                         ExecutionPlan, run)
    from .suite import variants_by_key

    address = _addr(args.server)
    optimize = args.optimize == "on"
    if args.plan:
        if args.plan == "auto":
            args.split = "auto"
        elif args.variant is None:
            args.variant = args.plan

    if args.dump_optimized or args.split == "auto":
        if not args.xml:
            raise SystemExit("--dump-optimized/--split auto need --xml to plan locally")
        from .nodestore import (build_path_summary, build_value_index,
                                parse_document)
        from .optimizer import optimize as run_optimizer
        from .xpath_ast import unparse
        from .xpath_parser import parse_xpath
        with open(args.xml, "rb") as f:
            table = parse_document(f.read(), args.db)
        ast = parse_xpath(args.query)
        report = run_optimizer(ast, build_path_summary(table), build_value_index(table))
        if args.dump_optimized:
            print(unparse(report.output))
            for rule, note in zip(report.applied, report.notes):
                print(f"  [{rule}] {note}")
            if not args.strategy:
                return 0
        planned = report.output if optimize else ast
    else:
        planned = None

    if args.variant:
        v = variants_by_key({args.dataset: args.db}).get(args.variant)
        if v is None:
            raise SystemExit(f"unknown variant {args.variant!r}")
        split = v.plan()
        query_text = None
    elif args.split == "auto":
        from .splitter import default_split
        split = default_split(planned, table, args.threads)
        if split is None:
            raise SystemExit("query has no legal split points")
        print(f"chosen split: {split.describe()}  (merge {split.merge})")
        query_text = None
    else:
        split = None
        query_text = args.query

    strategy = {"sequential": SEQUENTIAL_ORIGINAL, "client": CLIENT_SIDE,
                "server": SERVER_SIDE}[args.strategy or "sequential"]
    if strategy == SEQUENTIAL_ORIGINAL and split is not None:
        raise SystemExit("sequential strategy runs the original query, not a split")
    if strategy != SEQUENTIAL_ORIGINAL and split is None:
        raise SystemExit("client/server strategies need --variant or --split auto")

    plan = ExecutionPlan(strategy, args.db, p=args.threads, split=split,
                         query_text=query_text, optimize=optimize)
    out, m = run(plan, address)
    n_items = out.count(b"\n")
    print(f"{n_items} items, {len(out)} bytes in {m.t_total_ms:.1f} ms "
          f"(prefix {m.t_prefix_ms:.1f} ms, suffix wall {m.t_suffix_wall_ms:.1f} ms)")
    if m.t_suffix_ms:
        print("per-worker suffix ms: " +
              " ".join(f"{t:.1f}" for t in m.t_suffix_ms))
    if args.out:
        with open(args.out, "wb") as f:
            f.write(out)
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args):
    from .bench import run_suite
    from .client import CLIENT_SIDE, SERVER_SIDE

    db_names = {}
    if args.xmark_db:
        db_names["xmark_like"] = args.xmark_db
    if args.dblp_db:
        db_names["dblp_like"] = args.dblp_db
    if not db_names:
        raise SystemExit("name at least one of --xmark-db/--dblp-db")
    variant_keys = args.suite.split(",") if args.suite and args.suite != "all" else None
    if variant_keys is not None:
        from .suite import VARIANT_KEYS
        unknown = set(variant_keys) - set(VARIANT_KEYS)
        if unknown:
            raise SystemExit(f"unknown variants: {sorted(unknown)}")
        datasets_needed = {"xm": "xmark_like", "db": "dblp_like"}
        for k in variant_keys:
            ds = datasets_needed[k[:2]]
            if ds not in db_names:
                raise SystemExit(f"variant {k} needs --{ds.split('_')[0]}-db")
    else:
        from .suite import variants as all_variants
        variant_keys = [v.key for v in all_variants(db_names)
                        if ("xmark_like" in db_names or not v.key.startswith("xm"))
                        and ("dblp_like" in db_names or not v.key.startswith("db"))]

    strategies = []
    for s in args.strategies.split(","):
        strategies.append({"client": CLIENT_SIDE, "server": SERVER_SIDE}[s])
    p_list = [int(x) for x in args.threads_list.split(",")]

    report = run_suite(_addr(args.server), db_names, variant_keys=variant_keys,
                       strategies=tuple(strategies), p_list=tuple(p_list),
                       repeats=args.repeats, optimize=args.optimize == "on",
                       printer=print if args.verbose else None)
    print(report.render())
    if args.report:
        report.dump_jsonl(args.report)
        print(f"wrote {args.report}")
    if not report.ok:
        print("CORRECTNESS GATE FAILED for at least one cell", file=sys.stderr)
        return 1
    return 0


def cmd_kernels(args):
    from .bench import compare_kernels

    compare_kernels(scale=args.scale, seed=args.seed, repeats=args.repeats)
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="xpar",
                                 description="parallel XPath query engine")
    ap.add_argument("--version", action="version", version=f"xpar {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset")
    g.add_argument("--dataset", choices=["xmark_like", "dblp_like"], required=True)
    g.add_argument("--scale", type=float, default=1.0,
                   help="population multiplier; 1.0 is roughly 10^4 nodes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--stats", action="store_true", help="print node counts by kind")
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("serve", help="run the query server")
    s.add_argument("--db", action="append", required=True, metavar="NAME=PATH",
                   help="load an XML file as a named database (repeatable)")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=6270)
    s.set_defaults(fn=cmd_serve)

    q = sub.add_parser("query", help="run one query plan against a server")
    q.add_argument("--server", default="127.0.0.1:6270")
    q.add_argument("--db", required=True, help="database name on the server")
    q.add_argument("--dataset", default="xmark_like",
                   choices=["xmark_like", "dblp_like"],
                   help="dataset kind of --db (for --variant templates)")
    q.add_argument("--plan", help="a named variant key (e.g. xm3a) or `auto`")
    q.add_argument("--query", help="query text (sequential or --split auto)")
    q.add_argument("--variant", help="named suite variant, e.g. xm3a")
    q.add_argument("--strategy", choices=["sequential", "client", "server"])
    q.add_argument("--threads", type=int, default=1)
    q.add_argument("--optimize", choices=["on", "off"], default="off")
    q.add_argument("--dump-optimized", action="store_true",
                   help="print the rewritten query (needs --xml)")
    q.add_argument("--split", choices=["auto"],
                   help="choose a split point automatically (needs --xml)")
    q.add_argument("--xml", help="local copy of the document for planning")
    q.add_argument("--out", help="write result bytes to a file")
    q.set_defaults(fn=cmd_query)

    b = sub.add_parser("bench", help="run the benchmark suite")
    b.add_argument("--server", default="127.0.0.1:6270")
    b.add_argument("--xmark-db", help="server db name holding the auction dataset")
    b.add_argument("--dblp-db", help="server db name holding the bibliography dataset")
    b.add_argument("--suite", default="all",
                   help="comma-separated variant keys (default: all)")
    b.add_argument("--strategies", default="client,server")
    b.add_argument("--threads-list", default="1,2,3,6,12")
    b.add_argument("--repeats", type=int, default=25)
    b.add_argument("--optimize", choices=["on", "off"], default="off")
    b.add_argument("--report", help="write line-delimited JSON records here")
    b.add_argument("--verbose", action="store_true")
    b.set_defaults(fn=cmd_bench)

    k = sub.add_parser("kernels", help="compare compiled and pure kernels")
    k.add_argument("--scale", type=float, default=2.0)
    k.add_argument("--seed", type=int, default=7)
    k.add_argument("--repeats", type=int, default=3)
    k.set_defaults(fn=cmd_kernels)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
