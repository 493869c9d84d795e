"""16-bit PCM WAV I/O and constant-overlap-add framing."""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INT16_FULL_SCALE = 32768.0
# largest value representable after quantization, 1 - 2**-15
INT16_MAX_FLOAT = 32767.0 / 32768.0


class WavFormatError(ValueError):
    """Malformed or empty WAV payload."""


class UnsupportedFormatError(WavFormatError):
    """Valid RIFF/WAVE but not 16-bit mono PCM."""


@dataclass
class Waveform:
    samples: np.ndarray
    sample_rate_hz: int
    utterance_id: str

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if self.samples.size == 0:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")

    def __len__(self) -> int:
        return self.samples.size


def read_wav(path: str | Path) -> Waveform:
    """Read a mono 16-bit PCM WAV file into float64 samples in [-1, 1).

    Integer samples are divided by 32768.  Anything that is not mono 16-bit
    PCM is rejected rather than silently converted.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            comptype = wf.getcomptype()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            payload = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path.name}: not a readable WAV file ({exc})") from exc
    if comptype != "NONE":
        raise UnsupportedFormatError(f"{path.name}: compressed WAV not supported")
    if n_channels != 1:
        raise UnsupportedFormatError(f"{path.name}: expected mono, got {n_channels} channels")
    if sampwidth != 2:
        raise UnsupportedFormatError(f"{path.name}: expected 16-bit samples, got {8 * sampwidth}-bit")
    if len(payload) == 0:
        raise WavFormatError(f"{path.name}: empty data chunk")
    ints = np.frombuffer(payload, dtype="<i2")
    return Waveform(ints.astype(np.float64) / INT16_FULL_SCALE, rate, path.stem)


def write_wav(path: str | Path, w: Waveform) -> None:
    """Write 16-bit mono PCM.  Samples are clamped to [-1, 1 - 2**-15] first."""
    clamped = np.clip(w.samples, -1.0, INT16_MAX_FLOAT)
    ints = np.round(clamped * INT16_FULL_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(w.sample_rate_hz)
        wf.writeframes(ints.tobytes())


def periodic_hann(n: int) -> np.ndarray:
    """Periodic Hann window; sums exactly to 1 across 50% overlapped shifts."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass
class FramePlan:
    frame_len: int
    hop: int
    window: np.ndarray = field(repr=False)
    cola_gain: float = field(init=False)

    def __post_init__(self):
        self.window = np.asarray(self.window, dtype=np.float64)
        if self.frame_len <= 0 or self.hop <= 0:
            raise ValueError("frame_len and hop must be positive")
        if self.hop > self.frame_len:
            raise ValueError("hop must not exceed frame_len")
        if self.window.shape != (self.frame_len,):
            raise ValueError("window length must equal frame_len")
        self.cola_gain = _check_cola(self.window, self.hop)


def _check_cola(window: np.ndarray, hop: int) -> float:
    # Sum the shifted window over enough periods that one interior hop
    # span sees every contributing shift, then require flatness to 1e-6.
    n = window.size
    reps = 2 * (n // hop) + 4
    acc = np.zeros((reps - 1) * hop + n)
    for k in range(reps):
        acc[k * hop : k * hop + n] += window
    interior = acc[n : n + hop]
    gain = float(np.mean(interior))
    if gain <= 0.0:
        raise ValueError("window/hop pair has non-positive overlap-add gain")
    if np.max(np.abs(interior - gain)) / gain > 1e-6:
        raise ValueError("window/hop pair does not satisfy constant overlap-add to 1e-6")
    return gain


def default_frame_plan(sample_rate_hz: int) -> FramePlan:
    """20 ms frames with 10 ms hop under a periodic Hann window."""
    frame_len = sample_rate_hz // 50
    hop = sample_rate_hz // 100
    return FramePlan(frame_len=frame_len, hop=hop, window=periodic_hann(frame_len))


def num_frames(n_samples: int, plan: FramePlan) -> int:
    if n_samples <= plan.frame_len:
        return 1
    return int(np.ceil((n_samples - plan.frame_len) / plan.hop)) + 1


def frame(w: "Waveform | np.ndarray", plan: FramePlan) -> np.ndarray:
    """Slice into overlapping windowed frames, shape (n_frames, frame_len).

    Frame k covers [k*hop, k*hop + frame_len); the final partial frame is
    zero padded.  Inputs shorter than one frame produce a single padded frame.
    Accepts a Waveform or a bare 1-D sample array.
    """
    samples = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)
    n = num_frames(samples.size, plan)
    padded = np.zeros((n - 1) * plan.hop + plan.frame_len)
    padded[: samples.size] = samples
    idx = plan.hop * np.arange(n)[:, None] + np.arange(plan.frame_len)[None, :]
    return padded[idx] * plan.window[None, :]


def overlap_add(frames: np.ndarray, plan: FramePlan) -> np.ndarray:
    """Overlap-add frames back into a signal, divided by the COLA gain.

    Output length is (n_frames - 1) * hop + frame_len.  Samples within one
    frame_len of either end do not see the full window sum and are
    attenuated; reconstruction guarantees apply to interior samples only.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != plan.frame_len:
        raise ValueError("frames must have shape (n_frames, frame_len)")
    n = frames.shape[0]
    out = np.zeros((n - 1) * plan.hop + plan.frame_len)
    for k in range(n):
        out[k * plan.hop : k * plan.hop + plan.frame_len] += frames[k]
    return out / plan.cola_gain
