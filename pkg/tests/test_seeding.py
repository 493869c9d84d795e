"""Per-utterance random stream derivation."""

import numpy as np

from voxanon.seeding import DEFAULT_SEED, utterance_rng


class TestUtteranceRng:
    def test_reproducible(self):
        a = utterance_rng(1, "utt").uniform()
        b = utterance_rng(1, "utt").uniform()
        assert a == b

    def test_seed_sensitivity(self):
        assert utterance_rng(1, "utt").uniform() != utterance_rng(2, "utt").uniform()

    def test_utterance_sensitivity(self):
        assert utterance_rng(1, "utt_a").uniform() != utterance_rng(1, "utt_b").uniform()

    def test_no_separator_collision(self):
        # ids that would collide under naive concatenation must not
        assert utterance_rng(12, "3x").uniform() != utterance_rng(1, "23x").uniform()

    def test_none_seed_is_fresh_entropy(self):
        draws = {utterance_rng(None, "utt").uniform() for _ in range(3)}
        assert len(draws) == 3

    def test_default_seed_value(self):
        assert DEFAULT_SEED == 2024

    def test_streams_are_independent_generators(self):
        rng = utterance_rng(0, "u")
        assert isinstance(rng, np.random.Generator)
        first = rng.uniform()
        again = utterance_rng(0, "u")
        assert again.uniform() == first
