"""Experiment driver: correctness-gated timing sweeps and reports.

Every cell (query variant, strategy, thread count) performs one warm-up
run and ``repeats`` timed runs; a run's output bytes must equal the
sequential-original baseline or the cell is marked FAILED and the suite
exit status becomes non-zero.  Medians are reported per cell together with
speedup (t_o/t_p), degree of load balance and degree of increase of work.
No timing is ever reported for a wrong answer.
"""

from __future__ import annotations

import hashlib
import json
import statistics
import time
from dataclasses import dataclass, field

from . import suite as suite_mod
from .client import (CLIENT_SIDE, SEQUENTIAL_ORIGINAL, SERVER_SIDE,
                     ExecutionPlan, run)
from .errors import JobError
from .metrics import metric_increase_of_work, metric_load_balance
from .protocol import Connection


@dataclass
class BenchRow:
    query: str
    variant: str
    strategy: str
    p: int
    correct: bool
    t_o_ms: float
    t_s_ms: float | None
    t_p_ms: float
    t_prefix_ms: float
    t_suffix_wall_ms: float
    t_suffix_ms: tuple
    speedup: float | None
    load_balance: float | None
    increase_of_work: float | None
    prefix_count: int | None
    result_bytes: int
    result_sha: str = ""
    error: str | None = None

    def as_dict(self):
        d = dict(self.__dict__)
        d["t_suffix_ms"] = list(self.t_suffix_ms)
        return d


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self):
        return all(r.correct for r in self.rows)

    def dump_jsonl(self, path):
        with open(path, "w") as f:
            for r in self.rows:
                f.write(json.dumps(r.as_dict()) + "\n")

    def render(self):
        head = (f"{'variant':8} {'strategy':12} {'P':>3} {'ok':>3} "
                f"{'t_o':>9} {'t_s':>9} {'t_p':>9} {'t_o/t_p':>8} "
                f"{'balance':>8} {'work':>6} {'prefix#':>8} {'bytes':>10}")
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.variant:8} {r.strategy:12} {r.p:>3} "
                f"{'ok' if r.correct else 'FAIL':>4} "
                f"{r.t_o_ms:>9.1f} "
                f"{(f'{r.t_s_ms:.1f}' if r.t_s_ms is not None else '-'):>9} "
                f"{r.t_p_ms:>9.1f} "
                f"{(f'{r.speedup:.2f}' if r.speedup else '-'):>8} "
                f"{(f'{r.load_balance:.2f}' if r.load_balance else '-'):>8} "
                f"{(f'{r.increase_of_work:.2f}' if r.increase_of_work else '-'):>6} "
                f"{(r.prefix_count if r.prefix_count is not None else '-'):>8} "
                f"{r.result_bytes:>10}")
        return "\n".join(lines)


def _median_run(runs):
    runs = sorted(runs, key=lambda bm: bm[1].t_total_ms)
    return runs[len(runs) // 2]


def _timed_runs(plan, address, repeats, baseline):
    """One warm-up plus ``repeats`` timed runs, each gated on byte equality."""
    out, _ = run(plan, address)  # warm-up
    if out != baseline:
        raise _GateFailure(len(out), len(baseline))
    runs = []
    for _ in range(repeats):
        out, m = run(plan, address)
        if out != baseline:
            raise _GateFailure(len(out), len(baseline))
        runs.append((out, m))
    return runs


class _GateFailure(Exception):
    def __init__(self, got, want):
        super().__init__(f"output bytes differ from sequential baseline "
                         f"({got} vs {want} bytes)")


def prefix_result_count(address, db_name, prefix_text, optimize):
    conn = Connection(*address)
    try:
        conn.command(f"OPEN {db_name}")
        conn.command(f"OPTIMIZE {'on' if optimize else 'off'}")
        return len(conn.command(f"PREFIX {prefix_text}"))
    finally:
        conn.close()


def run_suite(address, db_names, variant_keys=None,
              strategies=(CLIENT_SIDE, SERVER_SIDE),
              p_list=(1, 2, 3, 6, 12), repeats=25, optimize=False,
              printer=None):
    """Sweep the named variants; returns a :class:`BenchReport`.

    ``db_names`` maps dataset kind to the loaded database name on the
    server.  The sequential-original baseline per query is measured once
    (median of the same repeat count) and gates every parallel run.
    """
    say = printer or (lambda *_: None)
    all_variants = [v for v in suite_mod.variants(db_names)
                    if variant_keys is None or v.key in variant_keys]
    report = BenchReport()
    baselines = {}

    for variant in all_variants:
        query = suite_mod.QUERIES_BY_KEY[variant.query_key]
        db_name = db_names[query.dataset]
        if query.key not in baselines:
            seq_plan = ExecutionPlan(SEQUENTIAL_ORIGINAL, db_name,
                                     query_text=query.text, optimize=optimize)
            runs = []
            base_out, _ = run(seq_plan, address)
            for _ in range(repeats):
                out, m = run(seq_plan, address)
                if out != base_out:
                    raise JobError(f"sequential run of {query.key} is not deterministic")
                runs.append(m.t_total_ms)
            baselines[query.key] = (base_out, statistics.median(runs))
            say(f"baseline {query.key}: {statistics.median(runs):.1f} ms, "
                f"{len(base_out)} bytes")
        baseline, t_o = baselines[query.key]

        plan_proto = variant.plan()
        n_prefix = prefix_result_count(address, db_name, variant.prefix_text, optimize)
        for strategy in strategies:
            t_single = None
            for p in p_list:
                plan = ExecutionPlan(strategy, db_name, p=p, split=plan_proto,
                                     optimize=optimize)
                try:
                    runs = _timed_runs(plan, address, repeats, baseline)
                except (_GateFailure, JobError) as e:
                    report.rows.append(BenchRow(
                        query=query.key, variant=variant.key, strategy=strategy,
                        p=p, correct=False, t_o_ms=t_o, t_s_ms=None, t_p_ms=0.0,
                        t_prefix_ms=0.0, t_suffix_wall_ms=0.0, t_suffix_ms=(),
                        speedup=None, load_balance=None, increase_of_work=None,
                        prefix_count=n_prefix, result_bytes=0, error=str(e)))
                    say(f"{variant.key} {strategy} P={p}: FAILED ({e})")
                    continue
                t_p = statistics.median(m.t_total_ms for _, m in runs)
                _, mrun = _median_run(runs)
                suffix_sum = sum(mrun.t_suffix_ms)
                if p == 1:
                    t_single = suffix_sum
                balance = None
                work = None
                if mrun.t_suffix_ms and max(mrun.t_suffix_ms) > 0:
                    balance = metric_load_balance(mrun.t_suffix_ms)
                    if t_single and t_single > 0:
                        work = metric_increase_of_work(mrun.t_suffix_ms, t_single)
                row = BenchRow(
                    query=query.key, variant=variant.key, strategy=strategy, p=p,
                    correct=True, t_o_ms=t_o,
                    t_s_ms=(t_p if p == 1 else None), t_p_ms=t_p,
                    t_prefix_ms=mrun.t_prefix_ms,
                    t_suffix_wall_ms=mrun.t_suffix_wall_ms,
                    t_suffix_ms=mrun.t_suffix_ms,
                    speedup=(t_o / t_p) if t_p > 0 else None,
                    load_balance=balance, increase_of_work=work,
                    prefix_count=n_prefix, result_bytes=mrun.result_bytes,
                    result_sha=hashlib.sha256(baseline).hexdigest()[:16])
                report.rows.append(row)
                say(f"{variant.key} {strategy} P={p}: t_p={t_p:.1f} ms "
                    f"(t_o={t_o:.1f}, speedup={t_o / t_p if t_p else 0:.2f})")
    return report


def compare_kernels(scale=2.0, seed=7, repeats=3, printer=print):
    """Benchmark the compiled kernels against the pure-Python fallback."""
    from . import engine, kernels
    from .datasets import GenSpec, generate
    from .nodestore import parse_document

    rows = []
    datasets = {
        "xmark_like": parse_document(generate(GenSpec("xmark_like", scale, seed)), "xmark"),
        "dblp_like": parse_document(generate(GenSpec("dblp_like", scale, seed)), "dblp"),
    }
    printer(f"node counts: " + ", ".join(f"{k}={t.n}" for k, t in datasets.items()))
    backs = kernels.backends()
    if "c" not in backs:
        printer("compiled kernels unavailable; nothing to compare")
        return rows
    for q in suite_mod.QUERIES:
        table = datasets[q.dataset]
        times = {}
        for name, backend in backs.items():
            best = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                res = engine.evaluate(table, q.text, backend=backend)
                dt = (time.perf_counter() - t0) * 1000
                best = dt if best is None else min(best, dt)
            times[name] = (best, len(res))
        ratio = times["python"][0] / times["c"][0] if times["c"][0] > 0 else float("inf")
        rows.append({"query": q.key, "hits": times["c"][1],
                     "c_ms": times["c"][0], "python_ms": times["python"][0],
                     "speedup": ratio})
        printer(f"{q.key:5} hits={times['c'][1]:>7} c={times['c'][0]:>9.2f} ms  "
                f"python={times['python'][0]:>9.2f} ms  speedup={ratio:>6.1f}x")
    return rows
