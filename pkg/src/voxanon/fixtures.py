"""Deterministic fixtures: bundled results table, score files, toy voices.

Everything here is generated from fixed seeds so tests and demos are
byte-reproducible without shipping large binary assets.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .audio_io import Waveform

RESULTS_CSV_NAME = "benchmark_results.csv"
SAMPLE_RATE = 16000

# Six toy voices: three formant resonators plus a pitch-pulse excitation.
# Formant sets are well separated so log-mel statistics identify the
# speaker cleanly before anonymization.
TOY_SPEAKERS = {
    "spk0": {"formants": (400.0, 1100.0, 2400.0), "f0": 95.0},
    "spk1": {"formants": (500.0, 1400.0, 2600.0), "f0": 120.0},
    "spk2": {"formants": (620.0, 1700.0, 2900.0), "f0": 150.0},
    "spk3": {"formants": (350.0, 900.0, 2200.0), "f0": 105.0},
    "spk4": {"formants": (550.0, 1250.0, 2750.0), "f0": 180.0},
    "spk5": {"formants": (700.0, 1900.0, 3100.0), "f0": 210.0},
}


def bundled_results_csv() -> Path:
    """Filesystem path of the packaged results-table fixture."""
    return Path(str(resources.files("voxanon").joinpath("data", RESULTS_CSV_NAME)))


def synthetic_voiced(
    utterance_id: str,
    formants: tuple[float, ...] = (500.0, 1500.0, 2500.0),
    bandwidths: tuple[float, ...] | None = None,
    f0: float = 110.0,
    duration_s: float = 0.6,
    sample_rate_hz: int = SAMPLE_RATE,
    noise_db: float = -50.0,
    seed: int = 7,
) -> Waveform:
    """Voiced test signal: pitch-pulse train through resonators plus a weak
    noise floor.  The noise keeps LPC poles off the unit circle so analysis
    stays well conditioned."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    excitation = np.zeros(n)
    period = max(2, int(round(sample_rate_hz / f0)))
    excitation[::period] = 1.0
    if bandwidths is None:
        bandwidths = tuple(80.0 + 20.0 * i for i in range(len(formants)))
    y = excitation
    for f, bw in zip(formants, bandwidths):
        r = np.exp(-np.pi * bw / sample_rate_hz)
        a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * f / sample_rate_hz), r * r]
        y = lfilter([1.0], a, y)
    y = y + 10.0 ** (noise_db / 20.0) * rng.standard_normal(n)
    y = 0.3 * y / np.max(np.abs(y))
    return Waveform(y, sample_rate_hz, utterance_id)


def sum_of_sinusoids(
    utterance_id: str,
    freqs: tuple[float, ...] = (500.0, 1500.0, 2500.0),
    duration_s: float = 0.5,
    sample_rate_hz: int = SAMPLE_RATE,
    noise_db: float = -50.0,
    seed: int = 11,
) -> Waveform:
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration_s * sample_rate_hz))) / sample_rate_hz
    y = np.zeros_like(t)
    for i, f in enumerate(freqs):
        y += np.sin(2.0 * np.pi * f * t + 0.7 * i)
    y = y / len(freqs) + 10.0 ** (noise_db / 20.0) * rng.standard_normal(t.size)
    y = 0.3 * y / np.max(np.abs(y))
    return Waveform(y, sample_rate_hz, utterance_id)


def make_toy_corpus(
    out_dir: str | Path,
    n_enroll: int = 3,
    n_trial: int = 5,
    duration_s: float = 0.7,
    seed: int = 303,
) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    """Write WAV files for the six toy speakers.

    Per-utterance pitch and formant jitter keeps same-speaker utterances
    distinct without blurring speaker identity.  Returns (enroll, trial)
    maps speaker_id -> list of utterance ids; files land in out_dir as
    <utterance_id>.wav.
    """
    from .audio_io import write_wav

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    enroll_map: dict[str, list[str]] = {}
    trial_map: dict[str, list[str]] = {}
    for s_idx, (speaker, voice) in enumerate(sorted(TOY_SPEAKERS.items())):
        enroll_map[speaker] = []
        trial_map[speaker] = []
        for u in range(n_enroll + n_trial):
            rng = np.random.default_rng(seed + 1000 * s_idx + u)
            jitter = 1.0 + 0.02 * rng.uniform(-1.0, 1.0, size=len(voice["formants"]))
            formants = tuple(f * j for f, j in zip(voice["formants"], jitter))
            f0 = voice["f0"] * (1.0 + 0.1 * rng.uniform(-1.0, 1.0))
            utt_id = f"{speaker}_u{u:02d}"
            w = synthetic_voiced(
                utt_id,
                formants=formants,
                f0=f0,
                duration_s=duration_s,
                seed=int(rng.integers(1 << 31)),
            )
            write_wav(out_dir / f"{utt_id}.wav", w)
            (enroll_map if u < n_enroll else trial_map)[speaker].append(utt_id)
    return enroll_map, trial_map


def _score_cluster(rng, n_low: int, n_high: int) -> np.ndarray:
    """n_low scores in [0.05, 0.40] then n_high in [0.60, 0.95]."""
    low = rng.uniform(0.05, 0.40, size=n_low)
    high = rng.uniform(0.60, 0.95, size=n_high)
    return np.concatenate([low, high])


def write_gender_score_fixture(out_dir: str | Path) -> dict[str, Path]:
    """Score and gender-map files whose per-gender EERs are exactly the
    unprotected reference rates: 8.76% female, 0.42% male.

    Construction: scores form two disjoint clusters and exactly k same
    trials sit in the low cluster while the same k different trials sit in
    the high cluster, so at the lowest high-cluster score P_fa = P_miss =
    k/n holds exactly on the sweep grid (k/n = 219/2500 and 21/5000).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = {"female": (2500, 219, "uf"), "male": (5000, 21, "um")}
    lines = []
    gender_lines = []
    for gender, (n, k, prefix) in specs.items():
        rng = np.random.default_rng(20240000 + n + k)
        same_scores = _score_cluster(rng, n_low=k, n_high=n - k)
        diff_scores = _score_cluster(rng, n_low=n - k, n_high=k)
        for i, s in enumerate(same_scores):
            utt = f"{prefix}{i:05d}s"
            lines.append(f"{gender[0]}spk{i % 40:03d}\t{utt}\tsame\t{s:.6f}\n")
            gender_lines.append(f"{utt}\t{gender}\n")
        for i, s in enumerate(diff_scores):
            utt = f"{prefix}{i:05d}d"
            lines.append(f"{gender[0]}spk{i % 40:03d}\t{utt}\tdifferent\t{s:.6f}\n")
            gender_lines.append(f"{utt}\t{gender}\n")
    scores_path = out_dir / "scores_orig_test.tsv"
    gender_path = out_dir / "gender_map.tsv"
    with open(scores_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
    with open(gender_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(gender_lines)
    return {"scores": scores_path, "gender_map": gender_path}
