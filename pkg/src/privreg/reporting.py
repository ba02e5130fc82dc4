"""Ratio-CDF aggregation and report persistence.

Reports are written to be byte-identical across reruns of the same config:
rows are sorted by key, floats rendered with repr, and wall times zeroed
unless the config opts into timing capture.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .experiments import ExperimentConfig, RunResult

__all__ = [
    "RatioCdfCurve",
    "ratio_cdf",
    "emit_report",
    "curve_to_csv",
    "results_from_jsonl",
    "SCORE_METRICS",
]

# Metrics where larger is better; their ratios are inverted so that a
# ratio below 1 always reads "candidate better".
SCORE_METRICS = frozenset({"f1", "auroc", "auprc"})

RESULTS_CSV_COLUMNS = (
    "dataset", "algorithm", "epsilon", "delta", "tau", "rounds", "seed",
    "metric_name", "metric_value", "wall_ms",
)

CURVE_CSV_COLUMNS = ("candidate", "baseline", "metric", "ratio", "cumulative_count")


@dataclass(frozen=True)
class RatioCdfCurve:
    """Empirical CDF of candidate/baseline metric ratios across tasks.

    points holds (ratio, cumulative_count) pairs with ratios ascending and
    counts ending at the number of compared tasks. A +inf ratio marks a
    task whose baseline metric was zero (and candidate nonzero); it is kept
    rather than dropped.
    """

    candidate: str
    baseline: str
    metric: str
    points: tuple[tuple[float, int], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(r), int(c)) for r, c in self.points)
        ratios = [r for r, _ in pts]
        counts = [c for _, c in pts]
        if any(math.isnan(r) for r in ratios):
            raise ValueError("ratios must not be NaN")
        if ratios != sorted(ratios):
            raise ValueError("ratios must be sorted ascending")
        if counts != sorted(counts) or (counts and counts[-1] != len(pts)):
            raise ValueError("cumulative counts must be nondecreasing and end at the task count")
        object.__setattr__(self, "points", pts)

    def fraction_below(self, threshold: float) -> float:
        """CDF value at threshold: fraction of tasks with ratio <= threshold."""
        if not self.points:
            return 0.0
        count = 0
        for r, c in self.points:
            if r <= threshold:
                count = c
        return count / self.points[-1][1]


def _group_key(result: RunResult, optimize_over: frozenset) -> tuple:
    key = {
        "dataset": result.dataset,
        "epsilon": result.epsilon,
        "tau": result.tau,
        "rounds": result.rounds,
    }
    for name in optimize_over:
        key.pop(name)
    return tuple(sorted(key.items()))


def _median_by_group(
    results: Sequence[RunResult], metric: str, optimize_over: frozenset, side: str
) -> dict[tuple, float]:
    by_group: dict[tuple, dict[tuple, list[float]]] = {}
    for r in results:
        if r.error is not None:
            continue
        if metric not in r.metrics:
            raise ValueError(f"{side} result {r.key} has no metric {metric!r}")
        group = _group_key(r, optimize_over)
        inner = (r.tau, r.rounds)
        by_group.setdefault(group, {}).setdefault(inner, []).append(float(r.metrics[metric]))
    out: dict[tuple, float] = {}
    for group, inner_map in by_group.items():
        medians = [statistics.median(vals) for vals in inner_map.values()]
        # With optimize_over set, several (tau, rounds) settings collapse
        # into one group; the best median is kept, i.e. the non-private
        # oracle choice of threshold/round count.
        if metric in SCORE_METRICS:
            out[group] = max(medians)
        else:
            out[group] = min(medians)
    return out


def ratio_cdf(
    candidate: Sequence[RunResult],
    baseline: Sequence[RunResult],
    metric: str,
    *,
    candidate_name: str | None = None,
    baseline_name: str | None = None,
    optimize_over: Sequence[str] = (),
) -> RatioCdfCurve:
    """Build the ratio-CDF curve of candidate against baseline for one metric.

    Per comparison group (dataset, epsilon, tau, rounds), seeds collapse to
    the median metric; the ratio is candidate/baseline for error metrics
    and baseline/candidate for score metrics, so below 1 uniformly means
    the candidate wins. optimize_over may list "tau" and/or "rounds" to
    collapse those grid axes to the best median first (a non-private
    selection, mirroring the optimal-threshold analysis mode). A zero in
    the ratio denominator with a nonzero numerator records +inf; 0/0
    records 1 (the two sides are indistinguishable there).

    Raises when a group is present on one side only.
    """
    if not candidate or not baseline:
        raise ValueError("candidate and baseline result lists must be nonempty")
    over = frozenset(optimize_over)
    if not over <= {"tau", "rounds"}:
        raise ValueError(f"optimize_over may only contain 'tau' and 'rounds', got {sorted(over)}")
    cand_names = {r.algorithm for r in candidate}
    base_names = {r.algorithm for r in baseline}
    cand_label = candidate_name or "/".join(sorted(cand_names))
    base_label = baseline_name or "/".join(sorted(base_names))

    cand = _median_by_group(candidate, metric, over, "candidate")
    base = _median_by_group(baseline, metric, over, "baseline")
    if set(cand) != set(base):
        missing = set(cand) ^ set(base)
        raise ValueError(f"candidate and baseline groups do not match; unpaired: {sorted(missing)}")

    ratios = []
    for group in cand:
        c, b = cand[group], base[group]
        num, den = (b, c) if metric in SCORE_METRICS else (c, b)
        if den == 0.0:
            ratios.append(1.0 if num == 0.0 else math.inf)
        else:
            ratios.append(num / den)
    ratios.sort()
    points = tuple((r, i + 1) for i, r in enumerate(ratios))
    return RatioCdfCurve(candidate=cand_label, baseline=base_label, metric=metric, points=points)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def curve_to_csv(curve: RatioCdfCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_CSV_COLUMNS)
    for ratio, count in curve.points:
        writer.writerow([curve.candidate, curve.baseline, curve.metric, _fmt(ratio), count])
    return buf.getvalue()


def _results_csv_text(results: Sequence[RunResult], record_timing: bool) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_CSV_COLUMNS)
    for r in sorted(results, key=lambda r: r.key):
        if r.error is not None:
            continue
        wall = r.wall_ms if record_timing else 0.0
        for name in sorted(r.metrics):
            writer.writerow([
                r.dataset, r.algorithm, _fmt(r.epsilon), _fmt(r.delta), _fmt(r.tau),
                r.rounds, r.seed, name, _fmt(float(r.metrics[name])), _fmt(wall),
            ])
    return buf.getvalue()


def _failures_csv_text(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["dataset", "algorithm", "epsilon", "delta", "tau", "rounds", "seed", "error"])
    for r in sorted(results, key=lambda r: r.key):
        if r.error is None:
            continue
        writer.writerow([
            r.dataset, r.algorithm, _fmt(r.epsilon), _fmt(r.delta), _fmt(r.tau),
            r.rounds, r.seed, r.error,
        ])
    return buf.getvalue()


def _jsonl_text(results: Sequence[RunResult], record_timing: bool) -> str:
    lines = []
    for r in sorted(results, key=lambda r: r.key):
        doc = r.to_dict()
        if not record_timing:
            doc["wall_ms"] = 0.0
        lines.append(json.dumps(doc, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def emit_report(
    results: Sequence[RunResult],
    curves: Sequence[RatioCdfCurve],
    path,
    config: ExperimentConfig | None = None,
) -> list[str]:
    """Write the report files under path and return their names.

    Files: results.csv (one row per successful result per metric, columns
    fixed), results.jsonl (every result including failures), failures.csv,
    one curve_<candidate>_vs_<baseline>_<metric>.csv per curve, and
    report_meta.json with the config echo and code version. Byte-identical
    across reruns of the same config unless record_timing is set.
    """
    from . import __version__

    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    record_timing = bool(config.record_timing) if config is not None else False

    written: list[str] = []

    def write(name: str, text: str) -> None:
        (out / name).write_text(text, encoding="utf-8", newline="")
        written.append(name)

    write("results.csv", _results_csv_text(results, record_timing))
    write("results.jsonl", _jsonl_text(results, record_timing))
    write("failures.csv", _failures_csv_text(results))
    for curve in curves:
        name = f"curve_{curve.candidate}_vs_{curve.baseline}_{curve.metric}.csv"
        name = name.replace("/", "+")
        write(name, curve_to_csv(curve))
    meta = {
        "version": __version__,
        "config": config.to_dict() if config is not None else None,
        "result_count": len(results),
        "failure_count": sum(1 for r in results if r.error is not None),
    }
    write("report_meta.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return written


def results_from_jsonl(path) -> list[RunResult]:
    """Load results previously written by emit_report (results.jsonl)."""
    results = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {line_no} is not valid JSON: {exc}") from None
            results.append(
                RunResult(
                    dataset=doc["dataset"],
                    algorithm=doc["algorithm"],
                    epsilon=float(doc["epsilon"]),
                    delta=float(doc["delta"]),
                    tau=float(doc["tau"]),
                    rounds=int(doc["rounds"]),
                    seed=int(doc["seed"]),
                    metrics={k: float(v) for k, v in doc.get("metrics", {}).items()},
                    wall_ms=float(doc.get("wall_ms", 0.0)),
                    error=doc.get("error"),
                )
            )
    return results
