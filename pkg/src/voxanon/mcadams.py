"""McAdams-coefficient voice anonymization.

Per frame: estimate an all-pole vocal tract model, move every complex pole's
phase phi (radians, measured in the upper half plane) to phi**alpha while
keeping its magnitude, then refilter the prediction residual through the
modified envelope.  alpha is drawn once per utterance.  Phases below 1 rad
(about 2.5 kHz at 16 kHz) grow toward 1, phases above shrink toward 1, so
formants contract around that fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Waveform, default_frame_plan, frame, overlap_add
from .lpc import LpcBreakdownError, autocorrelate, levinson, prediction_polynomial, residual, synthesize
from .seeding import utterance_rng

STABLE_RADIUS = 0.995
ABERTH_MAX_ITER = 100
ABERTH_RTOL = 1e-10


class RootFindingError(ArithmeticError):
    """Aberth iteration failed to converge for one analysis frame."""


class PairingError(ValueError):
    """Complex poles do not close under conjugation within tolerance."""


@dataclass
class McAdamsConfig:
    alpha_low: float = 0.5
    alpha_high: float = 0.9
    lpc_order: int = 20
    imag_threshold: float = 1e-8
    rng_seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha_low <= self.alpha_high:
            raise ValueError("alpha range must satisfy 0 < alpha_low <= alpha_high")
        if self.lpc_order < 1:
            raise ValueError("lpc_order must be >= 1")
        if self.imag_threshold < 0.0:
            raise ValueError("imag_threshold must be non-negative")


def aberth_roots(
    coeffs: np.ndarray,
    max_iter: int = ABERTH_MAX_ITER,
    rtol: float = ABERTH_RTOL,
) -> np.ndarray:
    """All roots of a monic real polynomial, descending powers coeffs[0] == 1.

    Simultaneous Aberth-Ehrlich iteration: every estimate takes a Newton step
    damped by the repulsion of the other estimates, so the set converges to
    all roots at once without deflation.  Estimates start on a circle whose
    radius is the geometric mean of the root magnitudes, |a_p|**(1/p), with a
    fixed angular offset to break conjugate symmetry.  A root counts as
    converged when its backward error |p(z)| / sum_k |c_k||z|^(n-k) is at
    most rtol.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 1 or c.size < 1 or c[0] != 1.0:
        raise ValueError("expected monic coefficients in descending powers")
    # exact zero roots come from trailing zero coefficients; deflate them
    n_zero = 0
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
        n_zero += 1
    n = c.size - 1
    if n == 0:
        return np.zeros(n_zero, dtype=np.complex128)
    if n == 1:
        return np.concatenate(([-c[1]], np.zeros(n_zero))).astype(np.complex128)

    radius = float(np.abs(c[-1]) ** (1.0 / n))
    radius = min(max(radius, 1e-3), 1e3)
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)

    deriv = c[:-1] * np.arange(n, 0, -1)
    abs_c = np.abs(c)
    for _ in range(max_iter):
        p_z = np.polyval(c, z)
        scale = np.polyval(abs_c, np.abs(z))
        converged = np.abs(p_z) <= rtol * scale
        if np.all(converged):
            break
        dp_z = np.polyval(deriv, z)
        # Newton ratio; a vanishing derivative (multiple-root midpoint) gets
        # nudged instead of dividing by zero
        bad = np.abs(dp_z) == 0.0
        if np.any(bad):
            z = z + np.where(bad, 1e-8 * (1.0 + 1j), 0.0)
            continue
        w = p_z / dp_z
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - w * repulsion
        denom = np.where(np.abs(denom) == 0.0, 1e-30, denom)
        step = np.where(converged, 0.0, w / denom)
        z = z - step
        if not np.all(np.isfinite(z)):
            raise RootFindingError("Aberth iteration diverged to non-finite estimates")
    else:
        raise RootFindingError(f"no convergence after {max_iter} Aberth iterations")
    return np.concatenate((z, np.zeros(n_zero, dtype=np.complex128)))


def _pair_conjugates(roots: np.ndarray, tol: float) -> np.ndarray:
    """Snap near-conjugate root pairs to exact conjugates by averaging.

    Real coefficients make the true root set closed under conjugation; the
    iteration only matches it to rounding error, so each upper-half root is
    averaged with the mirror of its nearest lower-half partner.  A true real
    root can come back with a stray imaginary part above tol and then lacks a
    partner; when the half planes are uneven, the smallest-|imag| roots of the
    larger side are real roots in disguise and are flattened onto the axis.
    """
    roots = np.asarray(roots, dtype=np.complex128)
    reals = [r for r in roots if abs(r.imag) <= tol]
    upper = [r for r in roots if r.imag > tol]
    lower = [r for r in roots if r.imag < -tol]
    while len(upper) != len(lower):
        side = upper if len(upper) > len(lower) else lower
        j = int(np.argmin([abs(r.imag) for r in side]))
        reals.append(side.pop(j))
    out = [complex(r.real, 0.0) for r in reals]
    for u in sorted(upper, key=lambda r: (r.real, r.imag)):
        dists = [abs(u - np.conj(l)) for l in lower]
        j = int(np.argmin(dists))
        mate = lower.pop(j)
        avg = 0.5 * (u + np.conj(mate))
        out.append(avg)
        out.append(np.conj(avg))
    return np.array(out, dtype=np.complex128)


def poles_from_coeffs(a: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Poles of the synthesis filter 1/A(z) for prediction coefficients a.

    The poles are the roots of z^p - a1 z^(p-1) - ... - ap, found by the
    Aberth iteration and then snapped into exact conjugate pairs.
    """
    return _pair_conjugates(aberth_roots(prediction_polynomial(a)), tol)


def coeffs_from_poles(poles: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Prediction coefficients whose synthesis filter has the given poles.

    Requires the pole set to be closed under conjugation within tol; the
    rebuilt polynomial then has a real part only, and any imaginary residue
    above tol is treated as a pairing failure rather than discarded.
    """
    poles = np.asarray(poles, dtype=np.complex128)
    _require_conjugate_closure(poles, tol)
    poly = np.ones(1, dtype=np.complex128)
    for p in poles:
        poly = np.convolve(poly, np.array([1.0, -p], dtype=np.complex128))
    scale = max(1.0, float(np.max(np.abs(poly.real))))
    if poles.size and float(np.max(np.abs(poly.imag))) > tol * scale:
        raise PairingError("imaginary residue in rebuilt coefficients exceeds tolerance")
    return -poly.real[1:]


def _require_conjugate_closure(poles: np.ndarray, tol: float) -> None:
    complex_poles = [p for p in poles if abs(p.imag) > tol]
    unmatched = list(complex_poles)
    while unmatched:
        p = unmatched.pop()
        dists = [abs(np.conj(p) - q) for q in unmatched]
        if not dists or min(dists) > tol:
            raise PairingError(f"pole {p!r} has no conjugate partner within {tol}")
        unmatched.pop(int(np.argmin(dists)))


def mcadams_transform(poles: np.ndarray, alpha: float, imag_threshold: float = 1e-8) -> np.ndarray:
    """Raise each complex pole's phase to alpha, preserving magnitudes.

    Real poles (|imag| <= imag_threshold) pass through untouched.  Both
    members of a conjugate pair see the same |imag|, hence the same cos/sin
    values, so conjugate closure is preserved exactly.  alpha == 1 returns
    the input unchanged (phi**1 == phi and no trig round trip).
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    poles = np.asarray(poles, dtype=np.complex128)
    if alpha == 1.0:
        return poles.copy()
    out = poles.copy()
    moving = np.abs(poles.imag) > imag_threshold
    if not np.any(moving):
        return out
    p = poles[moving]
    mag = np.abs(p)
    phase = np.arctan2(np.abs(p.imag), p.real)  # in (0, pi)
    new_phase = np.minimum(phase**alpha, np.pi)
    sign = np.sign(p.imag)
    out[moving] = mag * (np.cos(new_phase) + 1j * sign * np.sin(new_phase))
    return out


def stabilize(poles: np.ndarray, radius: float = STABLE_RADIUS) -> np.ndarray:
    """Pull any pole with |pole| >= 1 back to the given radius, same phase."""
    poles = np.asarray(poles, dtype=np.complex128)
    mags = np.abs(poles)
    out = poles.copy()
    offending = mags >= 1.0
    if np.any(offending):
        out[offending] = poles[offending] * (radius / mags[offending])
    return out


def anonymize_mcadams(w: Waveform, cfg: McAdamsConfig | None = None) -> tuple[Waveform, float]:
    """Anonymize one waveform; returns (output, alpha actually drawn).

    alpha ~ U(alpha_low, alpha_high) from a stream keyed by (rng_seed,
    utterance_id), so the result is reproducible and independent of
    processing order.  Silent frames and frames where the prediction
    recursion breaks down pass through unmodified.  Output length equals
    input length.
    """
    cfg = cfg or McAdamsConfig()
    rng = utterance_rng(cfg.rng_seed, w.utterance_id)
    alpha = float(rng.uniform(cfg.alpha_low, cfg.alpha_high))

    plan = default_frame_plan(w.sample_rate_hz)
    frames = frame(w, plan)
    out_frames = np.empty_like(frames)
    zero_state = np.zeros(cfg.lpc_order)
    for i, f in enumerate(frames):
        r = autocorrelate(f, cfg.lpc_order)
        if r[0] <= 0.0:
            out_frames[i] = f  # silent frame: identity
            continue
        try:
            a, _, _ = levinson(r, cfg.lpc_order)
        except LpcBreakdownError:
            out_frames[i] = f  # degenerate frame: identity
            continue
        exc = residual(f, a)
        try:
            poles = poles_from_coeffs(a, cfg.imag_threshold)
        except (RootFindingError, PairingError) as err:
            raise type(err)(f"{w.utterance_id}: frame {i}: {err}") from err
        poles = stabilize(mcadams_transform(poles, alpha, cfg.imag_threshold))
        a_new = coeffs_from_poles(poles, cfg.imag_threshold)
        out_frames[i], _ = synthesize(exc, a_new, zero_state)
    merged = overlap_add(out_frames, plan)
    # ceil framing guarantees merged covers the input; trim the padded tail
    return Waveform(merged[: len(w)], w.sample_rate_hz, w.utterance_id), alpha
