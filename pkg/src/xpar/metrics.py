"""Load-balance and work-increase figures for suffix-phase timings.

degree of load balance = sum(t_i) / max(t_i), in [1, p]; p means perfectly
even work.  degree of increase of work = sum(t_i^p) / t_1^1; values above 1
quantify parallel overhead relative to the single-thread suffix run.
"""

from __future__ import annotations


def metric_load_balance(times):
    times = [float(t) for t in times]
    if not times:
        raise ValueError("load balance needs at least one timing")
    if any(t < 0 for t in times):
        raise ValueError("timings must be non-negative")
    peak = max(times)
    if peak <= 0:
        raise ValueError("load balance is undefined for all-zero timings")
    return sum(times) / peak


def metric_increase_of_work(times, t_single):
    times = [float(t) for t in times]
    if not times:
        raise ValueError("increase of work needs at least one timing")
    if any(t < 0 for t in times):
        raise ValueError("timings must be non-negative")
    if t_single is None or t_single <= 0:
        raise ValueError("a positive single-thread baseline is required")
    return sum(times) / float(t_single)
