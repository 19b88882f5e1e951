"""CSV writers for simulation reports.

Floats are written with ``repr`` so equal reports give byte-identical files.
Column meanings are documented in the README.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import MetricsReport
from .lifecycle import LifecycleState

BURST_FLOOR = 1e-3  # bursts shorter than 1 ms are not reported
QUANTILES = (0.5, 0.9, 0.95, 0.99)
EXCEEDANCE = (1.0, 5.0, 10.0)


def _num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v for v in row])


def quantile(values: Sequence[float], q: float) -> float:
    return float(np.quantile(values, q)) if len(values) else math.nan


def write_report(report: MetricsReport, out: str | Path) -> None:
    """Write one seed's packets, bursts, metrics and lifecycle files into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "packets.csv", ["user", "time", "outcome", "delay"],
           ((r.user, r.time, r.outcome.value, r.measured_delay) for r in report.records))
    _write(out / "bursts.csv", ["user", "start", "length"],
           ((u, start, length) for u in report.users for start, length in report.bursts[u]
            if length >= BURST_FLOOR))
    ratio = report.unsuccessful_ratio
    rows = []
    for u in report.users:
        lengths = [length for _, length in report.bursts[u] if length >= BURST_FLOOR]
        rows.append((u, report.packets[u], report.unsuccessful[u], report.late_delay[u], report.not_running[u],
                     ratio[u], len(lengths), max(lengths, default=0.0)))
    _write(out / "metrics.csv",
           ["user", "packets", "unsuccessful", "late_delay", "not_running", "unsuccessful_ratio", "bursts",
            "max_burst"], rows)
    _write(out / "vnf_transitions.csv", ["from_state", "to_state", "count"],
           ((a.label, b.label, n) for (a, b), n in sorted(report.vnf_prep_counts.items())))
    _write(out / "vnf_states.csv", ["state", "mean_instances"],
           ((s.label, report.state_occupancy.get(s, 0.0)) for s in LifecycleState if s is not LifecycleState.DESCRIPTOR))


def summary_row(seed: object, report: MetricsReport) -> list[object]:
    bursts = report.burst_lengths(BURST_FLOOR)
    return [seed, len(report.users), sum(report.packets.values()), sum(report.unsuccessful.values()),
            report.mean_unsuccessful_ratio, report.objective, len(bursts),
            *(quantile(bursts, q) for q in QUANTILES), report.handovers]


SUMMARY_HEADER = ["seed", "users", "packets", "unsuccessful", "mean_unsuccessful_ratio", "objective", "bursts",
                  *(f"burst_q{int(q * 100)}" for q in QUANTILES), "handovers"]


def write_summary(reports: Sequence[tuple[int, MetricsReport]], out: str | Path) -> None:
    """Per-seed rows plus a ``mean`` row; bursts are pooled for the mean row's quantiles."""
    out = Path(out)
    rows = [summary_row(seed, rep) for seed, rep in reports]
    pooled = [b for _, rep in reports for b in rep.burst_lengths(BURST_FLOOR)]
    n = len(reports)
    mean = ["mean", *(math.fsum(r[i] for r in rows) / n for i in range(1, 7)),
            *(quantile(pooled, q) for q in QUANTILES), math.fsum(r[-1] for r in rows) / n]
    _write(out / "summary.csv", SUMMARY_HEADER, rows + [mean])
    _write(out / "burst_ccdf.csv", ["length", "ccdf"], ccdf(pooled))
    ratios = sorted(r for _, rep in reports for r in rep.unsuccessful_ratio.values())
    _write(out / "unsuccessful_cdf.csv", ["ratio", "cdf"],
           ((x, (i + 1) / len(ratios)) for i, x in enumerate(ratios)))


def ccdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """(x, P(X > x)) at every distinct sample value."""
    xs = sorted(values)
    n = len(xs)
    out = []
    for i, x in enumerate(xs):
        if i + 1 < n and xs[i + 1] == x:
            continue
        out.append((x, (n - i - 1) / n))
    return out


SWEEP_HEADER = ["axis", "value", "mean_unsuccessful_ratio", "bursts",
                *(f"burst_q{int(q * 100)}" for q in QUANTILES),
                *(f"ccdf_{x:g}s" for x in EXCEEDANCE)]


def sweep_row(axis: str, value: float, reports: Sequence[MetricsReport]) -> list[object]:
    pooled = [b for rep in reports for b in rep.burst_lengths(BURST_FLOOR)]
    mean_ratio = math.fsum(rep.mean_unsuccessful_ratio for rep in reports) / len(reports)
    exceed = [sum(b > x for b in pooled) / len(pooled) if pooled else 0.0 for x in EXCEEDANCE]
    return [axis, value, mean_ratio, len(pooled), *(quantile(pooled, q) for q in QUANTILES), *exceed]


def write_sweep_summary(rows: Sequence[Sequence[object]], out: str | Path) -> None:
    _write(Path(out) / "sweep_summary.csv", SWEEP_HEADER, rows)
