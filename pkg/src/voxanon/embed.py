"""Embedding-space anonymization strategies and the TSV embedding format.

File format, one utterance per line, '#' starts a comment line:

    utterance_id<TAB>speaker_id<TAB>gender<TAB>v1,v2,...,vd

gender is one of female/male/unknown.  Anonymized outputs keep the
utterance id and gender but carry the pseudo speaker id 'anon'.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeding import utterance_rng

GENDERS = ("female", "male", "unknown")
PSEUDO_SPEAKER = "anon"
DEFAULT_FAR = 200
DEFAULT_PICK = 100


class EmbeddingFormatError(ValueError):
    """Malformed embedding file; message names the offending line."""


@dataclass
class SpeakerEmbedding:
    utterance_id: str
    speaker_id: str
    gender: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1 or self.vector.size == 0:
            raise ValueError("embedding vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("embedding vector must be finite")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}, got {self.gender!r}")


class EmbeddingPool:
    """Utterance embeddings grouped into per-speaker mean vectors.

    Selection strategies operate on the speaker-level means; speaker order
    is sorted by id so selections are reproducible.
    """

    def __init__(self, entries: list[SpeakerEmbedding]):
        if not entries:
            raise ValueError("pool must not be empty")
        dim = entries[0].vector.size
        for e in entries:
            if e.vector.size != dim:
                raise ValueError("pool embeddings disagree on dimension")
        self.entries = list(entries)
        self.dim = dim
        by_speaker: dict[str, list[np.ndarray]] = {}
        gender_of: dict[str, str] = {}
        for e in entries:
            by_speaker.setdefault(e.speaker_id, []).append(e.vector)
            gender_of.setdefault(e.speaker_id, e.gender)
        self.speaker_ids = sorted(by_speaker)
        self.speaker_means = {s: np.mean(by_speaker[s], axis=0) for s in self.speaker_ids}
        self.speaker_genders = gender_of

    def __len__(self) -> int:
        return len(self.speaker_ids)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(u @ v / (nu * nv))


def _farthest_speakers(x: np.ndarray, pool: EmbeddingPool, far: int) -> list[str]:
    """The `far` pool speakers least cosine-similar to x, most distant first.

    Ties break on speaker id so the selection is order-independent.
    """
    sims = [(cosine(x, pool.speaker_means[s]), s) for s in pool.speaker_ids]
    sims.sort(key=lambda t: (t[0], t[1]))
    return [s for _, s in sims[:far]]


def anonymize_pool_average(
    x: SpeakerEmbedding,
    pool: EmbeddingPool,
    rng: np.random.Generator,
    far: int = DEFAULT_FAR,
    pick: int = DEFAULT_PICK,
) -> np.ndarray:
    """Mean of `pick` speakers sampled without replacement from the `far`
    least-similar pool speakers (the pool-averaging baseline recipe)."""
    if not 1 <= pick <= far:
        raise ValueError("need 1 <= pick <= far")
    if len(pool) < far:
        raise ValueError(f"pool has {len(pool)} speakers, need at least {far}")
    candidates = _farthest_speakers(x.vector, pool, far)
    chosen = rng.choice(len(candidates), size=pick, replace=False)
    return np.mean([pool.speaker_means[candidates[i]] for i in chosen], axis=0)


def anonymize_weighted_mix(
    x: SpeakerEmbedding,
    pool: EmbeddingPool,
    rng: np.random.Generator,
    alpha: float = 0.5,
    far: int = DEFAULT_FAR,
) -> np.ndarray:
    """alpha * mean(far set) + (1 - alpha) * gaussian noise.

    The noise scale is the RMS of the pool's speaker-mean components, so the
    random part lives at the same magnitude as real embeddings.  alpha == 1
    is deterministic given (x, pool).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    candidates = _farthest_speakers(x.vector, pool, min(far, len(pool)))
    s_bar = np.mean([pool.speaker_means[s] for s in candidates], axis=0)
    stacked = np.stack([pool.speaker_means[s] for s in pool.speaker_ids])
    sigma = float(np.sqrt(np.mean(stacked**2)))
    noise = rng.normal(0.0, sigma, size=pool.dim)
    return alpha * s_bar + (1.0 - alpha) * noise


def anonymize_awgn(
    x: SpeakerEmbedding,
    rng: np.random.Generator,
    snr_db: float = 10.0,
) -> np.ndarray:
    """Add white gaussian noise at the requested SNR; snr_db=inf is identity."""
    if np.isinf(snr_db) and snr_db > 0:
        return x.vector.copy()
    signal_power = float(np.mean(x.vector**2))
    if signal_power == 0.0:
        raise ValueError("cannot define SNR for an all-zero embedding")
    noise_power = signal_power * 10.0 ** (-snr_db / 10.0)
    return x.vector + rng.normal(0.0, np.sqrt(noise_power), size=x.vector.size)


def anonymize_cross_gender_select(
    x: SpeakerEmbedding,
    pool: EmbeddingPool,
    rng: np.random.Generator,
) -> np.ndarray:
    """Uniformly pick an opposite-gender pool speaker and return its mean."""
    if x.gender not in ("female", "male"):
        raise ValueError("cross-gender selection needs a female or male input")
    target = "male" if x.gender == "female" else "female"
    candidates = [s for s in pool.speaker_ids if pool.speaker_genders[s] == target]
    if not candidates:
        raise ValueError(f"pool has no {target} speakers")
    return pool.speaker_means[candidates[int(rng.integers(len(candidates)))]].copy()


def read_embeddings(path: str | Path) -> list[SpeakerEmbedding]:
    path = Path(path)
    out: list[SpeakerEmbedding] = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise EmbeddingFormatError(f"{path.name}:{lineno}: expected 4 tab-separated fields")
            utt, spk, gender, vec_text = parts
            if gender not in GENDERS:
                raise EmbeddingFormatError(f"{path.name}:{lineno}: bad gender {gender!r}")
            try:
                vector = np.array([float(v) for v in vec_text.split(",")])
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path.name}:{lineno}: bad vector component ({exc})") from exc
            if dim is None:
                dim = vector.size
            elif vector.size != dim:
                raise EmbeddingFormatError(
                    f"{path.name}:{lineno}: dimension {vector.size} disagrees with {dim}"
                )
            try:
                out.append(SpeakerEmbedding(utt, spk, gender, vector))
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path.name}:{lineno}: {exc}") from exc
    return out


def write_embeddings(path: str | Path, entries: list[SpeakerEmbedding]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            vec = ",".join(f"{v:.8f}" for v in e.vector)
            fh.write(f"{e.utterance_id}\t{e.speaker_id}\t{e.gender}\t{vec}\n")


STRATEGIES = ("pool-average", "weighted-mix", "awgn", "cross-gender")


def anonymize_one(
    entry: SpeakerEmbedding,
    pool: EmbeddingPool,
    strategy: str,
    seed: int | None,
    **params,
) -> SpeakerEmbedding:
    """Anonymize a single utterance embedding.

    The input speaker identity is never consulted; the strategy sees the
    vector (and the gender where the strategy demands it), so relabeling
    speakers cannot change the output.  Randomness comes from a stream
    keyed by (seed, utterance_id), independent of processing order.
    """
    if len(pool) < 2:
        raise ValueError("pool must contain at least 2 speakers")
    rng = utterance_rng(seed, entry.utterance_id)
    anon_input = SpeakerEmbedding(entry.utterance_id, PSEUDO_SPEAKER, entry.gender, entry.vector)
    if strategy == "pool-average":
        vec = anonymize_pool_average(anon_input, pool, rng, **params)
    elif strategy == "weighted-mix":
        vec = anonymize_weighted_mix(anon_input, pool, rng, **params)
    elif strategy == "awgn":
        vec = anonymize_awgn(anon_input, rng, **params)
    elif strategy == "cross-gender":
        vec = anonymize_cross_gender_select(anon_input, pool, rng, **params)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return SpeakerEmbedding(entry.utterance_id, PSEUDO_SPEAKER, entry.gender, vec)


def anonymize_corpus(
    entries: list[SpeakerEmbedding],
    pool: EmbeddingPool,
    strategy: str,
    seed: int | None,
    **params,
) -> list[SpeakerEmbedding]:
    """Apply one strategy to every utterance; see anonymize_one."""
    return [anonymize_one(e, pool, strategy, seed, **params) for e in entries]
