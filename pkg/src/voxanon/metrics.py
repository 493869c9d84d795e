"""Privacy and utility metrics: EER, WER, UAR, mFDR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EMOTION_CLASSES = ("neutral", "sadness", "anger", "happiness")
# transcript normalization: uppercase, strip these, split on whitespace
_PUNCTUATION = '.,?!;:"()'


@dataclass
class ScoreSet:
    same: np.ndarray
    different: np.ndarray

    def __post_init__(self):
        self.same = np.asarray(self.same, dtype=np.float64)
        self.different = np.asarray(self.different, dtype=np.float64)
        if self.same.size == 0 or self.different.size == 0:
            raise ValueError("EER needs at least one same and one different trial")
        if not (np.all(np.isfinite(self.same)) and np.all(np.isfinite(self.different))):
            raise ValueError("scores must be finite")


@dataclass
class EerResult:
    eer_percent: float
    threshold: float
    n_same: int
    n_diff: int


@dataclass
class WerCounts:
    n_sub: int
    n_del: int
    n_ins: int
    n_ref: int

    @property
    def percent(self) -> float:
        if self.n_ref == 0:
            raise ValueError("WER undefined for an empty reference")
        return 100.0 * (self.n_sub + self.n_del + self.n_ins) / self.n_ref


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    class_names: tuple[str, ...] = EMOTION_CLASSES

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.class_names)
        if self.counts.shape != (n, n):
            raise ValueError(f"confusion matrix must be {n}x{n} to match class names")
        if np.any(self.counts < 0):
            raise ValueError("confusion matrix counts must be non-negative")


def eer(scores: ScoreSet) -> EerResult:
    """Equal error rate, in percent, of a same/different score split.

    Threshold sweep over the sorted unique scores: P_fa(t) is the fraction
    of different-trials scoring >= t, P_miss(t) the fraction of same-trials
    scoring < t.  P_fa - P_miss is non-increasing, so the sweep finds where
    it crosses zero and reports (P_fa + P_miss) / 2 there, linearly
    interpolated between the two adjacent grid points when the crossing
    falls between them; exact zeros resolve at the lowest such threshold.
    One virtual grid point above the maximum score (P_fa 0, P_miss 1) keeps
    the degenerate all-overlap case well defined.
    """
    same = np.sort(scores.same)
    diff = np.sort(scores.different)
    n_same, n_diff = same.size, diff.size

    grid = np.unique(np.concatenate([same, diff]))
    grid = np.append(grid, grid[-1] + 1.0)
    p_fa = (n_diff - np.searchsorted(diff, grid, side="left")) / n_diff
    p_miss = np.searchsorted(same, grid, side="left") / n_same
    d = p_fa - p_miss
    mid = 0.5 * (p_fa + p_miss)

    idx = int(np.argmax(d <= 0.0))  # first non-positive; d[0] is always +1
    if d[idx] == 0.0:
        return EerResult(100.0 * mid[idx], float(grid[idx]), n_same, n_diff)
    t = d[idx - 1] / (d[idx - 1] - d[idx])
    value = mid[idx - 1] + t * (mid[idx] - mid[idx - 1])
    threshold = grid[idx - 1] + t * (grid[idx] - grid[idx - 1])
    return EerResult(100.0 * value, float(threshold), n_same, n_diff)


def normalize_transcript(text: str) -> list[str]:
    """Uppercase, strip punctuation, split on whitespace."""
    return text.upper().translate(str.maketrans("", "", _PUNCTUATION)).split()


def wer(ref: list[str], hyp: list[str]) -> WerCounts:
    """Word error rate alignment counts via uniform-cost edit distance.

    Among all minimum-cost alignments the counts are taken from the one
    with the fewest substitutions, then fewest deletions (the objective is
    minimized lexicographically, which a DP over count tuples preserves).
    Insertions can push the rate above 100%.
    """
    if len(ref) == 0:
        raise ValueError("WER undefined for an empty reference")
    # dp[j] holds (total, n_sub, n_del, n_ins) for ref[:i] vs hyp[:j]
    prev = [(j, 0, 0, j) for j in range(len(hyp) + 1)]
    for i in range(1, len(ref) + 1):
        cur = [(i, 0, i, 0)]
        for j in range(1, len(hyp) + 1):
            if ref[i - 1] == hyp[j - 1]:
                best = prev[j - 1]
            else:
                t, s, d, n = prev[j - 1]
                best = (t + 1, s + 1, d, n)
            t, s, d, n = prev[j]
            best = min(best, (t + 1, s, d + 1, n))
            t, s, d, n = cur[j - 1]
            best = min(best, (t + 1, s, d, n + 1))
            cur.append(best)
        prev = cur
    _, n_sub, n_del, n_ins = prev[len(hyp)]
    return WerCounts(n_sub=n_sub, n_del=n_del, n_ins=n_ins, n_ref=len(ref))


def uar(cm: ConfusionMatrix) -> float:
    """Unweighted average recall in percent: mean of per-class recalls."""
    row_sums = cm.counts.sum(axis=1)
    zero = np.nonzero(row_sums == 0)[0]
    if zero.size:
        names = ", ".join(cm.class_names[i] for i in zero)
        raise ValueError(f"class with zero support: {names}")
    recalls = np.diag(cm.counts) / row_sums
    return 100.0 * float(np.mean(recalls))


def mfdr(eer_female: float, eer_male: float) -> float:
    """Fairness discrepancy 2|f - m| / (f + m) * 100; 0 means parity, 200 the
    most extreme split (one gender at zero)."""
    if eer_female < 0.0 or eer_male < 0.0:
        raise ValueError("EER values must be non-negative")
    total = eer_female + eer_male
    if total == 0.0:
        raise ValueError("mFDR undefined when both EERs are zero")
    return 200.0 * abs(eer_female - eer_male) / total
