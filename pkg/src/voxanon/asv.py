"""Toy speaker-verification harness.

The toy embedding summarizes a waveform by per-band log mel energy means
and deviations; enrollment averages utterance embeddings per speaker and
trials are scored by cosine similarity.  Semi-informed attack protocols are
represented purely by what the caller feeds in: scoring anonymized
enrollment against anonymized trial data needs no special code path.

Trial list format:   enroll_speaker<TAB>trial_utterance<TAB>{same|different}
Score file format:   the same columns plus <TAB>score, 6 decimal places.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import Waveform, default_frame_plan, frame
from .embed import cosine

N_MELS = 24
LOG_FLOOR = 1e-10
TRIAL_LABELS = ("same", "different")


class TrialFormatError(ValueError):
    """Malformed trial or score file; message names the offending line."""


@dataclass(frozen=True)
class Trial:
    enroll_speaker: str
    trial_utterance: str
    label: str


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate_hz: int, f_max: float) -> np.ndarray:
    """Triangular mel filters, shape (n_mels, n_fft // 2 + 1), 0..f_max."""
    edges_mel = np.linspace(_hz_to_mel(0.0), _hz_to_mel(f_max), n_mels + 2)
    edges_hz = _mel_to_hz(edges_mel)
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate_hz)
    bank = np.zeros((n_mels, bin_freqs.size))
    for i in range(n_mels):
        lo, center, hi = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def toy_embed(w: Waveform, n_mels: int = N_MELS) -> np.ndarray:
    """Log mel band energy means and standard deviations, length 2 * n_mels.

    Trailing exactly-zero samples are stripped before framing so that padding
    an utterance with digital silence cannot change its embedding; an
    all-zero waveform keeps a single zero frame (means log(floor), stds 0).
    """
    samples = w.samples
    nonzero = np.nonzero(samples)[0]
    samples = samples[: nonzero[-1] + 1] if nonzero.size else samples[:1]
    trimmed = Waveform(samples, w.sample_rate_hz, w.utterance_id)

    plan = default_frame_plan(w.sample_rate_hz)
    frames = frame(trimmed, plan)
    n_fft = 1 << (plan.frame_len - 1).bit_length()
    bank = mel_filterbank(n_mels, n_fft, w.sample_rate_hz, w.sample_rate_hz / 2.0)
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    band_energy = power @ bank.T
    log_energy = np.log(np.maximum(band_energy, LOG_FLOOR))
    return np.concatenate([log_energy.mean(axis=0), log_energy.std(axis=0)])


def enroll(embeddings: list[np.ndarray]) -> np.ndarray:
    """Average utterance embeddings into one enrollment vector."""
    if not embeddings:
        raise ValueError("enrollment needs at least one embedding")
    stacked = np.stack([np.asarray(e, dtype=np.float64) for e in embeddings])
    return stacked.mean(axis=0)


def score_trials(
    trials: list[Trial],
    enroll_vectors: dict[str, np.ndarray],
    trial_vectors: dict[str, np.ndarray],
) -> list[float]:
    """Cosine score per trial, in trial order."""
    scores = []
    for t in trials:
        if t.enroll_speaker not in enroll_vectors:
            raise KeyError(f"trial references unknown enrollment speaker {t.enroll_speaker!r}")
        if t.trial_utterance not in trial_vectors:
            raise KeyError(f"trial references unknown trial utterance {t.trial_utterance!r}")
        scores.append(cosine(enroll_vectors[t.enroll_speaker], trial_vectors[t.trial_utterance]))
    return scores


def read_trials(path: str | Path) -> list[Trial]:
    return [t for t, _ in _read_trial_lines(path, with_score=False)]


def read_scores(path: str | Path) -> list[tuple[Trial, float]]:
    return _read_trial_lines(path, with_score=True)


def _read_trial_lines(path: str | Path, with_score: bool) -> list[tuple[Trial, float]]:
    path = Path(path)
    expected = 4 if with_score else 3
    out: list[tuple[Trial, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != expected:
                raise TrialFormatError(f"{path.name}:{lineno}: expected {expected} tab-separated fields")
            if parts[2] not in TRIAL_LABELS:
                raise TrialFormatError(f"{path.name}:{lineno}: bad label {parts[2]!r}")
            score = 0.0
            if with_score:
                try:
                    score = float(parts[3])
                except ValueError as exc:
                    raise TrialFormatError(f"{path.name}:{lineno}: bad score ({exc})") from exc
            out.append((Trial(parts[0], parts[1], parts[2]), score))
    return out


def write_scores(path: str | Path, trials: list[Trial], scores: list[float]) -> None:
    if len(trials) != len(scores):
        raise ValueError("one score per trial required")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t, s in zip(trials, scores):
            fh.write(f"{t.enroll_speaker}\t{t.trial_utterance}\t{t.label}\t{s:.6f}\n")
