"""Root finding, pole phase warping, and the anonymization pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxanon.audio_io import Waveform
from voxanon.fixtures import sum_of_sinusoids, synthetic_voiced
from voxanon.lpc import autocorrelate, levinson
from voxanon.mcadams import (
    STABLE_RADIUS,
    McAdamsConfig,
    PairingError,
    aberth_roots,
    anonymize_mcadams,
    coeffs_from_poles,
    mcadams_transform,
    poles_from_coeffs,
    stabilize,
)


def random_conjugate_poles(rng, n_pairs, n_real, max_mag=0.98):
    """Stable pole set closed under conjugation."""
    mags = rng.uniform(0.2, max_mag, size=n_pairs)
    phases = rng.uniform(0.05, np.pi - 0.05, size=n_pairs)
    upper = mags * np.exp(1j * phases)
    reals = rng.uniform(-max_mag, max_mag, size=n_real).astype(np.complex128)
    return np.concatenate([upper, np.conj(upper), reals])


def match_distance(found, expected):
    """Greedy nearest-neighbor pairing distance between two root multisets."""
    found = list(found)
    worst = 0.0
    for e in expected:
        j = int(np.argmin([abs(e - f) for f in found]))
        worst = max(worst, abs(e - found.pop(j)))
    return worst


class TestAberthRoots:
    def test_known_real_roots(self):
        coeffs = np.poly([0.5, -0.5, 0.9])
        roots = aberth_roots(coeffs)
        assert match_distance(roots, [0.5, -0.5, 0.9]) < 1e-10

    def test_matches_numpy_roots_on_random_stable_sets(self):
        rng = np.random.default_rng(13)
        for trial in range(40):
            n_pairs = int(rng.integers(1, 9))
            n_real = int(rng.integers(0, 3))
            poles = random_conjugate_poles(rng, n_pairs, n_real)
            coeffs = np.poly(poles).real
            found = aberth_roots(coeffs)
            expected = np.roots(coeffs)
            # clustered roots square the attainable forward error, so the
            # bound is looser than the solver's backward-error target
            assert match_distance(found, expected) < 1e-5

    def test_deflates_exact_zero_roots(self):
        coeffs = np.poly([0.0, 0.0, 0.6, -0.3])
        roots = sorted(aberth_roots(coeffs), key=lambda z: z.real)
        assert match_distance(roots, [0.0, 0.0, 0.6, -0.3]) < 1e-10

    def test_degree_one_closed_form(self):
        np.testing.assert_allclose(aberth_roots(np.array([1.0, -0.7])), [0.7])

    def test_degree_zero_returns_empty(self):
        assert aberth_roots(np.array([1.0])).size == 0

    def test_rejects_non_monic(self):
        with pytest.raises(ValueError):
            aberth_roots(np.array([2.0, 1.0]))

    def test_close_root_pair(self):
        coeffs = np.poly([0.7, 0.7001, -0.2])
        assert match_distance(aberth_roots(coeffs), [0.7, 0.7001, -0.2]) < 1e-5


class TestPoleCoeffRoundTrip:
    def test_poles_of_known_filter(self):
        # a for conjugate pair at 0.9 exp(+/- i pi/4): a1 = 2r cos, a2 = -r^2
        r, th = 0.9, np.pi / 4
        a = np.array([2 * r * np.cos(th), -(r**2)])
        poles = poles_from_coeffs(a)
        expected = [r * np.exp(1j * th), r * np.exp(-1j * th)]
        assert match_distance(poles, expected) < 1e-10

    def test_round_trip_on_speech_like_frames(self):
        rng = np.random.default_rng(17)
        for trial in range(15):
            w = synthetic_voiced(f"rt{trial}", duration_s=0.1, seed=trial)
            seg = w.samples[800:1120]
            a, _, _ = levinson(autocorrelate(seg, 16), 16)
            a_back = coeffs_from_poles(poles_from_coeffs(a))
            np.testing.assert_allclose(a_back, a, atol=1e-8)

    def test_conjugate_closure_enforced(self):
        with pytest.raises(PairingError):
            coeffs_from_poles(np.array([0.5 + 0.5j]))

    def test_real_poles_allowed_alone(self):
        np.testing.assert_allclose(coeffs_from_poles(np.array([0.5 + 0j])), [0.5])


class TestMcAdamsTransform:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.3, 0.99))
    def test_magnitude_preserved_and_closed(self, seed, alpha):
        rng = np.random.default_rng(seed)
        poles = random_conjugate_poles(rng, int(rng.integers(1, 10)), int(rng.integers(0, 4)))
        out = mcadams_transform(poles, alpha)
        np.testing.assert_allclose(np.abs(out), np.abs(poles), atol=1e-12)
        # closure: sorting by (real, imag) pairs each upper root with its mirror
        c = np.sort_complex(out)
        np.testing.assert_allclose(np.sort_complex(np.conj(out)), c, atol=1e-12)

    def test_alpha_one_is_exact_identity(self):
        rng = np.random.default_rng(29)
        poles = random_conjugate_poles(rng, 8, 2)
        out = mcadams_transform(poles, 1.0)
        assert np.array_equal(out, poles)

    def test_real_poles_pass_through_exactly(self):
        poles = np.array([0.8 + 0j, -0.3 + 0j, 0.5 + 0.5j, 0.5 - 0.5j])
        out = mcadams_transform(poles, 0.7)
        assert out[0] == poles[0]
        assert out[1] == poles[1]
        assert out[2] != poles[2]

    def test_phase_mapping_value(self):
        phi = 0.5
        pole = 0.9 * np.exp(1j * phi)
        out = mcadams_transform(np.array([pole, np.conj(pole)]), 0.8)
        got_phase = np.arctan2(out[0].imag, out[0].real)
        assert got_phase == pytest.approx(phi**0.8, abs=1e-12)

    def test_phase_clamped_at_pi(self):
        # alpha > 1 can push a phase near pi beyond it; it must clamp
        phi = 3.0
        pole = 0.9 * np.exp(1j * phi)
        out = mcadams_transform(np.array([pole, np.conj(pole)]), 1.5)
        got_phase = np.arctan2(np.abs(out[0].imag), out[0].real)
        assert got_phase == pytest.approx(np.pi, abs=1e-9)

    def test_contraction_toward_one_radian(self):
        # phases below 1 rad grow, phases above shrink, 1 rad is fixed
        mags = np.full(3, 0.9)
        phases = np.array([0.3, 1.0, 2.5])
        upper = mags * np.exp(1j * phases)
        poles = np.concatenate([upper, np.conj(upper)])
        out = mcadams_transform(poles, 0.6)
        new_phases = np.arctan2(out[:3].imag, out[:3].real)
        assert new_phases[0] > 0.3
        assert new_phases[1] == pytest.approx(1.0, abs=1e-12)
        assert new_phases[2] < 2.5

    def test_rejects_non_positive_alpha(self):
        with pytest.raises(ValueError):
            mcadams_transform(np.array([0.5 + 0.5j, 0.5 - 0.5j]), 0.0)


class TestStabilize:
    def test_pulls_outside_poles_to_radius(self):
        pole = 1.05 * np.exp(1j * 0.9)
        out = stabilize(np.array([pole]))
        assert np.abs(out[0]) == pytest.approx(STABLE_RADIUS, abs=1e-12)
        assert np.angle(out[0]) == pytest.approx(0.9, abs=1e-12)

    def test_on_circle_pole_pulled_in(self):
        out = stabilize(np.array([np.exp(1j * 2.0)]))
        assert np.abs(out[0]) == pytest.approx(STABLE_RADIUS, abs=1e-12)

    def test_interior_untouched_and_idempotent(self):
        rng = np.random.default_rng(31)
        poles = random_conjugate_poles(rng, 6, 2)
        once = stabilize(poles)
        assert np.array_equal(once, poles)
        mixed = np.concatenate([poles, [1.2 + 0.1j]])
        np.testing.assert_array_equal(stabilize(stabilize(mixed)), stabilize(mixed))


def band_peak_hz(x, sr, lo_hz, hi_hz):
    """Frequency of maximum smoothed energy within a band."""
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size))) ** 2
    kernel = np.ones(9) / 9.0
    spec = np.convolve(spec, kernel, mode="same")
    freqs = np.fft.rfftfreq(x.size, d=1.0 / sr)
    band = (freqs >= lo_hz) & (freqs <= hi_hz)
    return float(freqs[band][np.argmax(spec[band])])


class TestAnonymizePipeline:
    def test_alpha_one_near_identity_interior(self):
        w = synthetic_voiced("ident", duration_s=0.5, seed=2)
        out, alpha = anonymize_mcadams(w, McAdamsConfig(alpha_low=1.0, alpha_high=1.0, rng_seed=0))
        assert alpha == 1.0
        interior = slice(320, len(w) - 320)
        assert np.max(np.abs(out.samples[interior] - w.samples[interior])) <= 1e-3

    def test_deterministic_per_utterance(self):
        w = synthetic_voiced("det", duration_s=0.3, seed=3)
        cfg = McAdamsConfig(rng_seed=123)
        out1, a1 = anonymize_mcadams(w, cfg)
        out2, a2 = anonymize_mcadams(w, cfg)
        assert a1 == a2
        np.testing.assert_array_equal(out1.samples, out2.samples)

    def test_alpha_depends_on_utterance_id(self):
        cfg = McAdamsConfig(rng_seed=123)
        w1 = synthetic_voiced("utt_a", duration_s=0.1, seed=4)
        w2 = Waveform(w1.samples.copy(), w1.sample_rate_hz, "utt_b")
        _, a1 = anonymize_mcadams(w1, cfg)
        _, a2 = anonymize_mcadams(w2, cfg)
        assert a1 != a2

    def test_alpha_within_configured_range(self):
        cfg = McAdamsConfig(alpha_low=0.6, alpha_high=0.7, rng_seed=9)
        for i in range(5):
            w = synthetic_voiced(f"rng{i}", duration_s=0.1, seed=i)
            _, alpha = anonymize_mcadams(w, cfg)
            assert 0.6 <= alpha <= 0.7

    def test_output_length_and_metadata(self):
        w = synthetic_voiced("meta", duration_s=0.237, seed=5)
        out, _ = anonymize_mcadams(w, McAdamsConfig(rng_seed=1))
        assert len(out) == len(w)
        assert out.sample_rate_hz == w.sample_rate_hz
        assert out.utterance_id == w.utterance_id

    def test_silence_passes_through(self):
        w = Waveform(np.zeros(1600), 16000, "silence")
        out, _ = anonymize_mcadams(w, McAdamsConfig(rng_seed=1))
        np.testing.assert_array_equal(out.samples, np.zeros(1600))

    def test_spectral_peaks_contract_toward_fixed_point(self):
        # the phase fixed point sits near 2.5 kHz at 16 kHz sampling: lower
        # peaks must move up, higher peaks must move down
        w = sum_of_sinusoids("spectral", freqs=(500.0, 1500.0, 3500.0), duration_s=1.0, seed=6)
        cfg = McAdamsConfig(alpha_low=0.6, alpha_high=0.6, rng_seed=0)
        out, _ = anonymize_mcadams(w, cfg)
        sr = w.sample_rate_hz
        low_before = band_peak_hz(w.samples, sr, 300, 1400)
        low_after = band_peak_hz(out.samples, sr, 300, 1400)
        high_before = band_peak_hz(w.samples, sr, 2600, 4500)
        high_after = band_peak_hz(out.samples, sr, 2600, 4500)
        assert low_before == pytest.approx(500, abs=30)
        assert high_before == pytest.approx(3500, abs=30)
        assert low_after > low_before + 100
        assert high_after < high_before - 100

    def test_config_validation(self):
        with pytest.raises(ValueError):
            McAdamsConfig(alpha_low=0.9, alpha_high=0.5)
        with pytest.raises(ValueError):
            McAdamsConfig(alpha_low=0.0, alpha_high=0.5)
        with pytest.raises(ValueError):
            McAdamsConfig(lpc_order=0)
