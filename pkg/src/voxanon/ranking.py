"""Privacy-category ranking, Pareto analysis and fairness reporting.

Input is a results table (CSV) with one row per system and split:

    system_id,split,eer_female,eer_male,eer_avg,uar,wer

'orig' rows are the unprotected reference; B* ids are baselines, T* ids are
submitted systems.  All analysis runs on the test split, the official
ranking split; dev rows are validated and otherwise ignored.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .metrics import mfdr

RESULTS_HEADER = ["system_id", "split", "eer_female", "eer_male", "eer_avg", "uar", "wer"]
CATEGORY_THRESHOLDS = (10.0, 20.0, 30.0, 40.0)
ORIG_ID = "orig"
EXCELLENT_MFDR = 5.0


class ResultsFormatError(ValueError):
    """Schema violation in a results CSV; message carries the row number."""


@dataclass
class SystemResult:
    system_id: str
    split: str
    eer_female: float
    eer_male: float
    eer_avg: float
    uar: float
    wer: float


@dataclass
class DeltaPoint:
    """Relative degradation versus the orig reference, in percent.

    d_eer and d_wer grow when the metric grows (privacy gain, ASR loss);
    d_uar grows when UAR drops (emotion loss).  All three are positive for
    a system that trades utility for privacy.
    """

    system_id: str
    d_eer: float
    d_wer: float
    d_uar: float


def is_baseline(system_id: str) -> bool:
    return system_id.startswith("B")


def is_submitted(system_id: str) -> bool:
    return system_id.startswith("T")


def load_results_csv(path: str | Path) -> list[SystemResult]:
    """Parse and validate a results table.

    eer_avg is re-derived as (eer_female + eer_male) / 2; the stored column
    must agree within 0.01 (rounding slack) and is otherwise not trusted.
    """
    path = Path(path)
    rows: list[SystemResult] = []
    seen: set[tuple[str, str]] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ResultsFormatError(f"{path.name}: empty file") from None
        if header != RESULTS_HEADER:
            raise ResultsFormatError(f"{path.name}: row 1: header must be {','.join(RESULTS_HEADER)}")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RESULTS_HEADER):
                raise ResultsFormatError(f"{path.name}: row {rowno}: expected {len(RESULTS_HEADER)} fields")
            system_id, split = row[0], row[1]
            if not system_id:
                raise ResultsFormatError(f"{path.name}: row {rowno}: empty system_id")
            if split not in ("dev", "test"):
                raise ResultsFormatError(f"{path.name}: row {rowno}: split must be dev or test")
            if (system_id, split) in seen:
                raise ResultsFormatError(f"{path.name}: row {rowno}: duplicate {system_id}/{split}")
            seen.add((system_id, split))
            try:
                f, m, avg, u, w = (float(v) for v in row[2:])
            except ValueError as exc:
                raise ResultsFormatError(f"{path.name}: row {rowno}: bad number ({exc})") from exc
            for name, value in (("eer_female", f), ("eer_male", m), ("uar", u)):
                if not 0.0 <= value <= 100.0:
                    raise ResultsFormatError(f"{path.name}: row {rowno}: {name} outside [0, 100]")
            if w < 0.0:
                raise ResultsFormatError(f"{path.name}: row {rowno}: wer must be non-negative")
            derived = (f + m) / 2.0
            if abs(derived - avg) > 0.01:
                raise ResultsFormatError(
                    f"{path.name}: row {rowno}: eer_avg {avg} disagrees with (f+m)/2 = {derived:.3f}"
                )
            rows.append(SystemResult(system_id, split, f, m, derived, u, w))
    return rows


def test_split(results: list[SystemResult]) -> list[SystemResult]:
    return [r for r in results if r.split == "test"]


def assign_categories(results: list[SystemResult]) -> dict[str, int]:
    """Privacy category per system: highest k with test EER >= thresholds[k-1].

    Thresholds are inclusive (an EER exactly at a boundary clears it).  The
    orig reference gets no category.
    """
    out: dict[str, int] = {}
    for r in test_split(results):
        if r.system_id == ORIG_ID:
            continue
        out[r.system_id] = sum(1 for t in CATEGORY_THRESHOLDS if r.eer_avg >= t)
    return out


def category_counts(categories: dict[str, int]) -> list[dict]:
    """Cumulative membership per threshold, split into submitted/baseline."""
    out = []
    for k, threshold in enumerate(CATEGORY_THRESHOLDS, start=1):
        members = [s for s, c in categories.items() if c >= k]
        out.append(
            {
                "category": k,
                "threshold": threshold,
                "n_submitted": sum(1 for s in members if is_submitted(s)),
                "n_baseline": sum(1 for s in members if is_baseline(s)),
            }
        )
    return out


def rank_within_category(
    categories: dict[str, int],
    results: list[SystemResult],
    metric: str,
) -> dict[int, list[tuple[str, float]]]:
    """Utility ranking inside each privacy category, best first.

    Category k ranks every system of category >= k (nested memberships).
    wer ranks ascending, uar descending; ties break on system_id.
    """
    if metric not in ("wer", "uar"):
        raise ValueError("metric must be wer or uar")
    values = {r.system_id: getattr(r, metric) for r in test_split(results)}
    rankings: dict[int, list[tuple[str, float]]] = {}
    for k in range(1, len(CATEGORY_THRESHOLDS) + 1):
        members = [s for s, c in categories.items() if c >= k]
        sign = 1.0 if metric == "wer" else -1.0
        members.sort(key=lambda s: (sign * values[s], s))
        rankings[k] = [(s, values[s]) for s in members]
    return rankings


def delta_points(results: list[SystemResult]) -> list[DeltaPoint]:
    """Relative degradation of every non-orig system against the orig row."""
    test = test_split(results)
    orig = next((r for r in test if r.system_id == ORIG_ID), None)
    if orig is None:
        raise ResultsFormatError("results lack the orig test row needed as reference")
    if orig.eer_avg <= 0.0 or orig.wer <= 0.0 or orig.uar <= 0.0:
        raise ResultsFormatError("orig reference metrics must be positive")
    out = []
    for r in test:
        if r.system_id == ORIG_ID:
            continue
        out.append(
            DeltaPoint(
                system_id=r.system_id,
                d_eer=100.0 * (r.eer_avg - orig.eer_avg) / orig.eer_avg,
                d_wer=100.0 * (r.wer - orig.wer) / orig.wer,
                d_uar=100.0 * (orig.uar - r.uar) / orig.uar,
            )
        )
    return out


def pareto_frontier(
    points: list[DeltaPoint],
    x_attr: str,
    y_attr: str,
    maximize_x: bool,
    maximize_y: bool,
) -> list[DeltaPoint]:
    """Non-dominated subset: nothing is at least as good on both axes and
    strictly better on one.  Input order is preserved."""

    def key(p: DeltaPoint) -> tuple[float, float]:
        x = getattr(p, x_attr) * (1.0 if maximize_x else -1.0)
        y = getattr(p, y_attr) * (1.0 if maximize_y else -1.0)
        return x, y

    frontier = []
    for p in points:
        px, py = key(p)
        dominated = False
        for q in points:
            if q is p:
                continue
            qx, qy = key(q)
            if qx >= px and qy >= py and (qx > px or qy > py):
                dominated = True
                break
        if not dominated:
            frontier.append(p)
    return frontier


def normalized_matrix(points: list[DeltaPoint]) -> list[dict]:
    """Min-max normalized utility matrix over (d_eer, d_uar, d_wer).

    Columns are oriented so 1.0 is always best: highest privacy gain,
    smallest emotion loss, smallest ASR loss.  A constant column carries no
    information and maps to 0.5.  Rows come back sorted by the combined
    (mean) score, best first, ties on system_id.
    """

    def normalize(values: list[float], invert: bool) -> list[float]:
        lo, hi = min(values), max(values)
        if hi == lo:
            return [0.5] * len(values)
        scaled = [(v - lo) / (hi - lo) for v in values]
        return [1.0 - s for s in scaled] if invert else scaled

    if not points:
        return []
    n_eer = normalize([p.d_eer for p in points], invert=False)
    n_uar = normalize([p.d_uar for p in points], invert=True)
    n_wer = normalize([p.d_wer for p in points], invert=True)
    rows = []
    for p, a, b, c in zip(points, n_eer, n_uar, n_wer):
        rows.append(
            {
                "system_id": p.system_id,
                "norm_d_eer": a,
                "norm_d_uar": b,
                "norm_d_wer": c,
                "combined": (a + b + c) / 3.0,
            }
        )
    rows.sort(key=lambda r: (-r["combined"], r["system_id"]))
    return rows


def gender_gap_report(results: list[SystemResult]) -> list[dict]:
    """Per-system gender gap and fairness discrepancy, widest gap first.

    Includes the orig reference.  A system with mFDR below 5% is tiered
    'excellent'; everything else is reported raw with an empty tier.
    """
    rows = []
    for r in test_split(results):
        value = mfdr(r.eer_female, r.eer_male)
        rows.append(
            {
                "system_id": r.system_id,
                "eer_female": r.eer_female,
                "eer_male": r.eer_male,
                "gap": r.eer_male - r.eer_female,
                "mfdr": value,
                "tier": "excellent" if value < EXCELLENT_MFDR else "",
            }
        )
    rows.sort(key=lambda row: (-row["gap"], row["system_id"]))
    return rows
