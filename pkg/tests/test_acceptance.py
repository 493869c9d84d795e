"""Acceptance suite: one test per shipped guarantee, pinned tolerances.

Each test prints a single PASS/FAIL line (bypassing capture) so a plain
`pytest -v` run shows every guarantee's verdict at a glance.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import eer_oracle, mfdr_oracle, random_eer_instance, uar_oracle, wer_oracle
from voxanon import asv, metrics, ranking
from voxanon.audio_io import read_wav
from voxanon.cli import main
from voxanon.embed import SpeakerEmbedding, cosine, write_embeddings
from voxanon.fixtures import TOY_SPEAKERS, bundled_results_csv, make_toy_corpus, synthetic_voiced
from voxanon.mcadams import McAdamsConfig, anonymize_mcadams, mcadams_transform


def verdict(capsys, number, description, check):
    ok = False
    try:
        check()
        ok = True
    finally:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {description}")


@pytest.fixture(scope="module")
def results():
    return ranking.load_results_csv(bundled_results_csv())


def test_criterion_1_category_counts_and_runtime(results, tmp_path, capsys):
    def check():
        t0 = time.perf_counter()
        assert main(["rank", str(bundled_results_csv()), "--report-dir", str(tmp_path / "r")]) == 0
        elapsed = time.perf_counter() - t0
        counts = ranking.category_counts(ranking.assign_categories(results))
        by_cat = {c["category"]: c for c in counts}
        assert (by_cat[1]["n_submitted"], by_cat[1]["n_baseline"]) == (28, 4)
        assert (by_cat[2]["n_submitted"], by_cat[2]["n_baseline"]) == (21, 4)
        assert (by_cat[3]["n_submitted"], by_cat[3]["n_baseline"]) == (15, 2)
        assert by_cat[4]["n_submitted"] == 6
        assert by_cat[4]["n_baseline"] == 0
        assert elapsed < 1.0, f"ranking took {elapsed:.3f}s"

    verdict(capsys, 1, "EER category populations 28+4 / 21+4 / 15+2 / 6, under 1 s", check)


def test_criterion_2_fairness_reproduction(results, capsys):
    def check():
        report = ranking.gender_gap_report(results)
        by_id = {r["system_id"]: r for r in report}
        assert by_id["orig"]["mfdr"] == pytest.approx(181.7, abs=0.5)
        excellent = {r["system_id"] for r in report if r["tier"] == "excellent"}
        assert {"B6", "T8-4", "T25-1", "T10-1", "B5", "T8-1", "T38-5"} <= excellent

    verdict(capsys, 2, "orig mFDR 181.7 +/- 0.5; seven reference systems tier excellent", check)


def test_criterion_3_pareto_frontier(results, capsys):
    def check():
        points = ranking.delta_points(results)
        frontier = ranking.pareto_frontier(points, "d_eer", "d_uar", maximize_x=True, maximize_y=False)
        by_id = {p.system_id: p for p in frontier}
        expected = {
            "T10-1": (704.0, 9.0),
            "T10-2": (779.0, 14.0),
            "T25-1": (818.0, 31.0),
            "T8-1": (979.0, 57.0),
        }
        for system_id, (d_eer, d_uar) in expected.items():
            assert system_id in by_id, f"{system_id} missing from frontier"
            assert by_id[system_id].d_eer == pytest.approx(d_eer, abs=5.0)
            assert by_id[system_id].d_uar == pytest.approx(d_uar, abs=1.0)

    verdict(capsys, 3, "privacy/emotion frontier holds T10-1, T10-2, T25-1, T8-1 at quoted deltas", check)


def test_criterion_4_per_category_leaders(results, capsys):
    def check():
        categories = ranking.assign_categories(results)
        wer_ranks = ranking.rank_within_category(categories, results, "wer")
        uar_ranks = ranking.rank_within_category(categories, results, "uar")
        wer_leader, wer_value = wer_ranks[3][0]
        uar_leader, uar_value = uar_ranks[4][0]
        assert wer_leader == "T9"
        assert round(wer_value, 2) == 2.37
        assert uar_leader == "T10-2"
        assert round(uar_value, 2) == 60.80

    verdict(capsys, 4, "category-3 WER leader T9 at 2.37; category-4 UAR leader T10-2 at 60.80", check)


def test_criterion_5_metric_oracle_equivalence(capsys):
    def check():
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            same, diff = random_eer_instance(rng)
            got = metrics.eer(metrics.ScoreSet(same, diff)).eer_percent
            assert got == pytest.approx(eer_oracle(same, diff), abs=1e-9)
        vocab = list("abc")
        for _ in range(1000):
            ref = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(1, 6))]
            hyp = [vocab[i] for i in rng.integers(0, 3, size=rng.integers(0, 6))]
            c = metrics.wer(ref, hyp)
            assert (c.n_sub, c.n_del, c.n_ins) == wer_oracle(ref, hyp)
        for _ in range(1000):
            counts = rng.integers(0, 40, size=(4, 4)) + np.eye(4, dtype=np.int64)
            got = metrics.uar(metrics.ConfusionMatrix(counts))
            assert got == uar_oracle(counts.tolist(), metrics.EMOTION_CLASSES)
        for _ in range(1000):
            f, m = rng.uniform(0.001, 60.0, size=2)
            assert metrics.mfdr(f, m) == pytest.approx(mfdr_oracle(f, m), abs=1e-12)

    verdict(capsys, 5, "eer/wer/uar/mfdr match brute-force references on 1000 instances each", check)


def test_criterion_6_pole_invariants_and_identity(capsys):
    def check():
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        for _ in range(10000):
            n_pairs = int(rng.integers(1, 11))
            n_real = int(rng.integers(0, 5))
            mags = rng.uniform(0.1, 0.99, size=n_pairs)
            phases = rng.uniform(0.02, np.pi - 0.02, size=n_pairs)
            upper = mags * np.exp(1j * phases)
            reals = rng.uniform(-0.99, 0.99, size=n_real).astype(np.complex128)
            poles = np.concatenate([upper, np.conj(upper), reals])
            alpha = float(rng.uniform(0.3, 1.0))
            out = mcadams_transform(poles, alpha)
            assert np.max(np.abs(np.abs(out) - np.abs(poles))) <= 1e-12
            closure = np.abs(np.sort_complex(out) - np.sort_complex(np.conj(out)))
            assert np.max(closure) <= 1e-12
            assert np.array_equal(mcadams_transform(poles, 1.0), poles)
        for i in range(10):
            speaker = list(TOY_SPEAKERS.values())[i % len(TOY_SPEAKERS)]
            w = synthetic_voiced(
                f"ident{i}", formants=speaker["formants"], f0=speaker["f0"],
                duration_s=0.6, seed=100 + i,
            )
            out, alpha = anonymize_mcadams(
                w, McAdamsConfig(alpha_low=1.0, alpha_high=1.0, rng_seed=i)
            )
            assert alpha == 1.0
            interior = slice(320, len(w) - 320)
            err = np.max(np.abs(out.samples[interior] - w.samples[interior]))
            assert err <= 1e-3, f"signal {i}: interior error {err:.2e}"
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"invariant sweep took {elapsed:.1f}s"

    verdict(
        capsys, 6,
        "10000 pole sets: magnitudes kept, conjugate closure, alpha=1 identity; "
        "pipeline alpha=1 within 1e-3; under 30 s",
        check,
    )


def test_criterion_7_end_to_end_smoke(tmp_path, capsys):
    def check():
        corpus = tmp_path / "corpus"
        enroll_map, trial_map = make_toy_corpus(corpus)
        enroll_vectors = {
            spk: asv.enroll([asv.toy_embed(read_wav(corpus / f"{u}.wav")) for u in utts])
            for spk, utts in enroll_map.items()
        }
        cfg = McAdamsConfig(alpha_low=0.5, alpha_high=0.9, rng_seed=2024)
        originals, anonymized = {}, {}
        for spk, utts in trial_map.items():
            for u in utts:
                w = read_wav(corpus / f"{u}.wav")
                originals[(spk, u)] = asv.toy_embed(w)
                aw, alpha = anonymize_mcadams(w, cfg)
                assert 0.5 <= alpha <= 0.9
                anonymized[(spk, u)] = asv.toy_embed(aw)

        def eer_of(vectors):
            same, diff = [], []
            for (spk, _), v in vectors.items():
                for enroll_spk, ev in enroll_vectors.items():
                    (same if enroll_spk == spk else diff).append(cosine(ev, v))
            return metrics.eer(metrics.ScoreSet(np.array(same), np.array(diff))).eer_percent

        eer_orig = eer_of(originals)
        eer_anon = eer_of(anonymized)
        assert eer_orig <= 5.0, f"original EER {eer_orig:.2f}%"
        assert eer_anon > eer_orig, f"anonymized {eer_anon:.2f}% vs original {eer_orig:.2f}%"

    verdict(capsys, 7, "toy ASV: original EER <= 5%, strictly higher after anonymization", check)


def test_criterion_8_byte_determinism(tmp_path, capsys):
    def check():
        wav_in = tmp_path / "wav_in"
        wav_in.mkdir()
        from voxanon.audio_io import write_wav

        for i in range(4):
            write_wav(wav_in / f"u{i}.wav", synthetic_voiced(f"u{i}", duration_s=0.25, seed=i))

        def tree(p: Path):
            return {f.name: f.read_bytes() for f in sorted(p.iterdir())}

        audio_trees = []
        for tag, jobs in (("a1", "1"), ("a2", "8"), ("a3", "1")):
            out = tmp_path / tag
            assert main(["anonymize-audio", str(wav_in), str(out),
                         "--seed", "2024", "--jobs", jobs]) == 0
            audio_trees.append(tree(out))
        assert audio_trees[0] == audio_trees[1] == audio_trees[2]

        rng = np.random.default_rng(1)
        pool = [
            SpeakerEmbedding(f"p{i:03d}_u0", f"p{i:03d}", "female" if i % 2 else "male",
                             rng.normal(size=8))
            for i in range(16)
        ]
        entries = [SpeakerEmbedding(f"x{i}", f"s{i}", "male", rng.normal(size=8)) for i in range(6)]
        write_embeddings(tmp_path / "pool.tsv", pool)
        write_embeddings(tmp_path / "in.tsv", entries)
        blobs = []
        for tag, jobs in (("e1", "1"), ("e2", "8"), ("e3", "1")):
            out = tmp_path / f"{tag}.tsv"
            assert main(["anonymize-embeddings", str(tmp_path / "in.tsv"),
                         str(tmp_path / "pool.tsv"), str(out),
                         "--strategy", "weighted-mix", "--seed", "2024", "--jobs", jobs]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]

        report_trees = []
        for tag in ("r1", "r2"):
            out = tmp_path / tag
            assert main(["rank", str(bundled_results_csv()), "--report-dir", str(out)]) == 0
            report_trees.append(tree(out))
        assert report_trees[0] == report_trees[1]

    verdict(capsys, 8, "seeded commands byte-identical across reruns and jobs=1 vs jobs=8", check)
