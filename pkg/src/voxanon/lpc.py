"""Linear-prediction analysis and synthesis.

Conventions: prediction coefficients a[1..p] satisfy
x_hat[n] = sum_k a[k] * x[n-k], so the analysis polynomial is
A(z) = 1 - sum_k a[k] z^-k and the synthesis filter is 1/A(z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter


class LpcBreakdownError(ArithmeticError):
    """Levinson recursion left (-1, 1) reflection range; frame is degenerate.

    Callers treat this as the signal to bypass LPC for the frame.
    """


class StabilityError(ValueError):
    """Synthesis filter has a pole on or outside the unit circle."""


@dataclass
class LpcFrame:
    order: int
    coeffs: np.ndarray
    gain: float
    residual: np.ndarray


def autocorrelate(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r[0..max_lag] of a frame."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("frame must be one-dimensional")
    if x.size < max_lag + 1:
        raise ValueError(f"frame of {x.size} samples too short for lag {max_lag}")
    return np.array([x[: x.size - k] @ x[k:] for k in range(max_lag + 1)])


def levinson(r: np.ndarray, order: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Levinson-Durbin recursion on autocorrelation r.

    Returns (coeffs a[1..p], prediction error energy, reflection coeffs).
    Any reflection coefficient outside (-1, 1), or a vanishing error energy,
    raises LpcBreakdownError: the autocorrelation method guarantees both for
    well-conditioned frames, so a violation means the frame is numerically
    degenerate (near-singular normal equations) and must be bypassed.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.size < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("autocorrelation contains non-finite values")
    if r[0] <= 0.0:
        raise ValueError("r[0] must be positive (silent frames are bypassed by callers)")

    a = np.zeros(order)
    reflections = np.zeros(order)
    err = float(r[0])
    for m in range(1, order + 1):
        if not np.isfinite(err) or err <= 0.0:
            raise LpcBreakdownError(f"prediction error energy vanished at order {m}")
        acc = r[m] - a[: m - 1] @ r[1:m][::-1]
        k = acc / err
        if not np.isfinite(k) or abs(k) >= 1.0:
            raise LpcBreakdownError(f"reflection coefficient {k!r} at order {m} outside (-1, 1)")
        if m > 1:
            a[: m - 1] = a[: m - 1] - k * a[m - 2 :: -1]
        a[m - 1] = k
        reflections[m - 1] = k
        err *= 1.0 - k * k
    return a, err, reflections


def reflection_from_coeffs(a: np.ndarray) -> np.ndarray:
    """Step-down (inverse Levinson) from prediction coeffs to reflections.

    Raises StabilityError if any |k| >= 1, which is exactly the Schur-Cohn
    condition for a pole on or outside the unit circle.
    """
    alpha = np.asarray(a, dtype=np.float64).copy()
    ks = np.zeros(alpha.size)
    for m in range(alpha.size, 0, -1):
        k = alpha[m - 1]
        if not np.isfinite(k) or abs(k) >= 1.0:
            raise StabilityError("coefficients describe an unstable synthesis filter")
        ks[m - 1] = k
        if m > 1:
            alpha = (alpha[: m - 1] + k * alpha[m - 2 :: -1]) / (1.0 - k * k)
    return ks


def prediction_polynomial(a: np.ndarray) -> np.ndarray:
    """Descending-power coefficients [1, -a1, ..., -ap] of A(z)."""
    return np.concatenate(([1.0], -np.asarray(a, dtype=np.float64)))


def residual(frame: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Inverse filter e[n] = frame[n] - sum_k a[k] frame[n-k], zero prehistory."""
    return lfilter(prediction_polynomial(a), [1.0], np.asarray(frame, dtype=np.float64))


def synthesize(
    excitation: np.ndarray,
    a: np.ndarray,
    state: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All-pole filter y[n] = e[n] + sum_k a[k] y[n-k].

    state is the length-p internal filter memory (transposed direct form II);
    pass None or zeros to start from rest.  Returns (samples, final state) so
    a caller may continue across chunks.  Unstable coefficient sets are
    rejected; stabilize the poles first.
    """
    a = np.asarray(a, dtype=np.float64)
    reflection_from_coeffs(a)  # raises StabilityError when unstable
    if state is None:
        state = np.zeros(a.size)
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (a.size,):
        raise ValueError("state length must equal the filter order")
    y, zf = lfilter([1.0], prediction_polynomial(a), np.asarray(excitation, dtype=np.float64), zi=state)
    return y, zf


def analyze_frame(frame: np.ndarray, order: int) -> LpcFrame:
    """LPC-analyze one non-silent frame: coefficients, gain, residual."""
    r = autocorrelate(frame, order)
    a, gain, _ = levinson(r, order)
    return LpcFrame(order=order, coeffs=a, gain=gain, residual=residual(frame, a))
