"""Command line interface.

Subcommands: anonymize-audio, anonymize-embeddings, eval, rank.  All
randomized commands take --seed (default 2024, overridable through the
VOXANON_SEED environment variable) and derive one stream per utterance, so
outputs are byte-identical across runs and worker counts.  Exit codes:
0 success, 1 runtime failure, 2 usage or input-schema error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import asv, embed, ranking
from .audio_io import WavFormatError, read_wav, write_wav
from .mcadams import McAdamsConfig, anonymize_mcadams
from .metrics import EMOTION_CLASSES, ConfusionMatrix, ScoreSet, eer, mfdr, normalize_transcript, uar, wer
from .seeding import DEFAULT_SEED

log = logging.getLogger("voxanon")

USAGE_EXIT = 2
FAILURE_EXIT = 1


class InputDataError(ValueError):
    """Inconsistent or malformed input data (exit code 2)."""


def default_seed() -> int:
    env = os.environ.get("VOXANON_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputDataError(f"VOXANON_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _round6(value: float) -> float:
    return round(float(value), 6)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- anonymize-audio


def cmd_anonymize_audio(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    if not in_dir.is_dir():
        raise InputDataError(f"input directory {in_dir} does not exist")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = McAdamsConfig(
        alpha_low=args.alpha_low,
        alpha_high=args.alpha_high,
        lpc_order=args.lpc_order,
        rng_seed=args.seed,
    )
    wav_paths = sorted(in_dir.glob("*.wav"))

    def process(path: Path) -> tuple[str, float]:
        w = read_wav(path)
        out, alpha = anonymize_mcadams(w, cfg)
        write_wav(out_dir / path.name, out)
        return w.utterance_id, alpha

    alphas: dict[str, float] = {}
    failures = 0
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for path, outcome in zip(wav_paths, pool.map(_trap(process), wav_paths)):
            if isinstance(outcome, Exception):
                failures += 1
                log.error("%s: %s", path.name, outcome)
            else:
                utt, alpha = outcome
                alphas[utt] = _round6(alpha)

    manifest = {
        "seed": args.seed,
        "alpha_low": _round6(cfg.alpha_low),
        "alpha_high": _round6(cfg.alpha_high),
        "lpc_order": cfg.lpc_order,
        "utterances": alphas,
    }
    _write_json(out_dir / "manifest.json", manifest)
    log.info("anonymized %d utterances, %d failures", len(alphas), failures)
    return FAILURE_EXIT if failures else 0


def _trap(fn):
    """Wrap a worker so exceptions come back as values, keeping input order."""

    def inner(item):
        try:
            return fn(item)
        except Exception as exc:  # logged by the caller, command exits 1
            return exc

    return inner


# ---------------------------------------------------------- anonymize-embeddings


def cmd_anonymize_embeddings(args: argparse.Namespace) -> int:
    entries = embed.read_embeddings(args.in_file)
    pool_entries = embed.read_embeddings(args.pool_file)
    pool = embed.EmbeddingPool(pool_entries)
    params: dict = {}
    if args.strategy == "pool-average":
        params = {"far": args.far, "pick": args.pick}
    elif args.strategy == "weighted-mix":
        params = {"alpha": args.alpha, "far": args.far}
    elif args.strategy == "awgn":
        params = {"snr_db": args.snr_db}

    def process(entry: embed.SpeakerEmbedding) -> embed.SpeakerEmbedding:
        try:
            return embed.anonymize_one(entry, pool, args.strategy, args.seed, **params)
        except ValueError as exc:
            raise ValueError(f"{entry.utterance_id}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=args.jobs) as tpool:
        out = list(tpool.map(process, entries))
    embed.write_embeddings(args.out_file, out)
    log.info("anonymized %d embeddings with %s", len(out), args.strategy)
    return 0


# ------------------------------------------------------------------------- eval


def _read_keyed_file(path: str | Path, what: str) -> dict[str, str]:
    """utterance_id<TAB>payload lines; '#' comments; duplicate ids rejected."""
    path = Path(path)
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise InputDataError(f"{path.name}:{lineno}: expected utterance_id<TAB>{what}")
            if parts[0] in out:
                raise InputDataError(f"{path.name}:{lineno}: duplicate utterance {parts[0]!r}")
            out[parts[0]] = parts[1]
    return out


def _require_same_ids(ref: dict, hyp: dict, what: str) -> None:
    mismatches = sorted(set(ref) ^ set(hyp))
    if mismatches:
        shown = ", ".join(mismatches[:10])
        raise InputDataError(f"{what}: reference and hypothesis ids disagree; first mismatches: {shown}")


def _eer_from_pairs(pairs: list[tuple[asv.Trial, float]]) -> float:
    same = [s for t, s in pairs if t.label == "same"]
    diff = [s for t, s in pairs if t.label == "different"]
    if not same or not diff:
        raise InputDataError("need both same and different trials to compute EER")
    return eer(ScoreSet(np.array(same), np.array(diff))).eer_percent


def cmd_eval(args: argparse.Namespace) -> int:
    results: dict[str, float] = {}

    pairs: list[tuple[asv.Trial, float]] | None = None
    if args.scores:
        pairs = asv.read_scores(args.scores)
    elif args.trials:
        trials = asv.read_trials(args.trials)
        enroll_entries = embed.read_embeddings(args.enroll_embeddings)
        trial_entries = embed.read_embeddings(args.trial_embeddings)
        by_speaker: dict[str, list[np.ndarray]] = {}
        for e in enroll_entries:
            by_speaker.setdefault(e.speaker_id, []).append(e.vector)
        enroll_vectors = {s: asv.enroll(v) for s, v in by_speaker.items()}
        trial_vectors = {e.utterance_id: e.vector for e in trial_entries}
        try:
            scores = asv.score_trials(trials, enroll_vectors, trial_vectors)
        except KeyError as exc:
            raise InputDataError(str(exc.args[0])) from exc
        pairs = list(zip(trials, scores))

    if pairs is not None:
        results["eer"] = _eer_from_pairs(pairs)
        if args.gender_map:
            gender_of = _read_keyed_file(args.gender_map, "gender")
            bad = sorted({g for g in gender_of.values()} - {"female", "male"})
            if bad:
                raise InputDataError(f"gender map contains invalid labels: {', '.join(bad)}")
            missing = sorted({t.trial_utterance for t, _ in pairs} - set(gender_of))
            if missing:
                shown = ", ".join(missing[:10])
                raise InputDataError(f"gender map misses trial utterances: {shown}")
            for gender in ("female", "male"):
                subset = [(t, s) for t, s in pairs if gender_of[t.trial_utterance] == gender]
                if subset:
                    results[f"eer_{gender}"] = _eer_from_pairs(subset)
            if "eer_female" in results and "eer_male" in results:
                results["eer_avg"] = (results["eer_female"] + results["eer_male"]) / 2.0
                if results["eer_avg"] > 0.0:  # mFDR undefined at two exact zeros
                    results["mfdr"] = mfdr(results["eer_female"], results["eer_male"])

    if args.transcripts:
        ref = _read_keyed_file(args.transcripts[0], "text")
        hyp = _read_keyed_file(args.transcripts[1], "text")
        _require_same_ids(ref, hyp, "transcripts")
        n_err = 0
        n_ref = 0
        for utt in ref:
            counts = wer(normalize_transcript(ref[utt]), normalize_transcript(hyp[utt]))
            n_err += counts.n_sub + counts.n_del + counts.n_ins
            n_ref += counts.n_ref
        if n_ref == 0:
            raise InputDataError("transcripts: reference side has no words")
        results["wer"] = 100.0 * n_err / n_ref

    if args.emotions:
        ref = _read_keyed_file(args.emotions[0], "label")
        hyp = _read_keyed_file(args.emotions[1], "label")
        _require_same_ids(ref, hyp, "emotions")
        index = {c: i for i, c in enumerate(EMOTION_CLASSES)}
        counts = np.zeros((len(EMOTION_CLASSES), len(EMOTION_CLASSES)), dtype=np.int64)
        for utt in ref:
            if ref[utt] not in index or hyp[utt] not in index:
                raise InputDataError(
                    f"emotions: utterance {utt!r} has label outside {', '.join(EMOTION_CLASSES)}"
                )
            counts[index[ref[utt]], index[hyp[utt]]] += 1
        results["uar"] = uar(ConfusionMatrix(counts))

    payload = {k: _round6(v) for k, v in sorted(results.items())}
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    return 0


# ------------------------------------------------------------------------- rank


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _scatter_svg(
    path: Path,
    points: list[ranking.DeltaPoint],
    frontier_ids: set[str],
    x_attr: str,
    y_attr: str,
    title: str,
) -> None:
    """Minimal self-contained scatter plot; the CSV next to it is the contract."""
    width, height, margin = 640, 480, 60
    xs = [getattr(p, x_attr) for p in points] or [0.0]
    ys = [getattr(p, y_attr) for p in points] or [0.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v: float) -> float:
        return margin + (v - x_lo) / x_span * (width - 2 * margin)

    def sy(v: float) -> float:
        return height - margin - (v - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 16}" text-anchor="middle" font-size="12">{x_attr}</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {height / 2:.1f})">{y_attr}</text>',
    ]
    frontier_pts = sorted((p for p in points if p.system_id in frontier_ids), key=lambda p: getattr(p, x_attr))
    if len(frontier_pts) > 1:
        coords = " ".join(f"{sx(getattr(p, x_attr)):.2f},{sy(getattr(p, y_attr)):.2f}" for p in frontier_pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    for p in points:
        cx, cy = sx(getattr(p, x_attr)), sy(getattr(p, y_attr))
        on_front = p.system_id in frontier_ids
        color = "#c0392b" if on_front else "#2c3e50"
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="{color}"/>')
        if on_front:
            parts.append(f'<text x="{cx + 6:.2f}" y="{cy - 6:.2f}" font-size="11">{p.system_id}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


PARETO_PAIRS = (
    ("eer-uar", "d_eer", "d_uar", True, False),
    ("eer-wer", "d_eer", "d_wer", True, False),
    ("uar-wer", "d_uar", "d_wer", False, False),
)


def cmd_rank(args: argparse.Namespace) -> int:
    results = ranking.load_results_csv(args.results_csv)
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)

    categories = ranking.assign_categories(results)
    test_rows = {r.system_id: r for r in ranking.test_split(results)}
    # delta reports need the un-anonymized baseline row; degrade to empty
    # tables when a partial CSV lacks it
    points = ranking.delta_points(results) if ranking.ORIG_ID in test_rows else []

    cat_rows = [
        [s, f"{test_rows[s].eer_avg:.2f}", c]
        for s, c in sorted(categories.items(), key=lambda kv: (-kv[1], -test_rows[kv[0]].eer_avg, kv[0]))
    ]
    _write_csv(report_dir / "categories.csv", ["system_id", "eer_avg", "category"], cat_rows)

    for metric in ("wer", "uar"):
        rankings = ranking.rank_within_category(categories, results, metric)
        rows = []
        for k in sorted(rankings):
            for rank_pos, (s, value) in enumerate(rankings[k], start=1):
                rows.append([k, rank_pos, s, f"{value:.2f}"])
        _write_csv(report_dir / f"ranking_{metric}.csv", ["category", "rank", "system_id", metric], rows)

    for name, x_attr, y_attr, max_x, max_y in PARETO_PAIRS:
        frontier = ranking.pareto_frontier(points, x_attr, y_attr, max_x, max_y)
        frontier_ids = {p.system_id for p in frontier}
        rows = [
            [p.system_id, f"{getattr(p, x_attr):.2f}", f"{getattr(p, y_attr):.2f}", int(p.system_id in frontier_ids)]
            for p in sorted(points, key=lambda p: p.system_id)
        ]
        _write_csv(report_dir / f"pareto_{name}.csv", ["system_id", x_attr, y_attr, "frontier"], rows)
        _scatter_svg(report_dir / f"pareto_{name}.svg", points, frontier_ids, x_attr, y_attr, f"pareto {name}")

    fairness = ranking.gender_gap_report(results)
    rows = [
        [r["system_id"], f"{r['eer_female']:.2f}", f"{r['eer_male']:.2f}", f"{r['gap']:.2f}", f"{r['mfdr']:.3f}", r["tier"]]
        for r in fairness
    ]
    _write_csv(
        report_dir / "fairness.csv",
        ["system_id", "eer_female", "eer_male", "gap", "mfdr", "tier"],
        rows,
    )

    matrix = ranking.normalized_matrix(points)
    rows = [
        [r["system_id"], f"{r['norm_d_eer']:.4f}", f"{r['norm_d_uar']:.4f}", f"{r['norm_d_wer']:.4f}", f"{r['combined']:.4f}"]
        for r in matrix
    ]
    _write_csv(
        report_dir / "normalized_matrix.csv",
        ["system_id", "norm_d_eer", "norm_d_uar", "norm_d_wer", "combined"],
        rows,
    )
    log.info("wrote reports for %d systems to %s", len(categories), report_dir)
    return 0


# ------------------------------------------------------------------- arg parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxanon",
        description="Voice anonymization and privacy evaluation toolkit",
    )
    parser.add_argument("--log-level", default="warning", choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize-audio", help="McAdams-coefficient anonymization of a WAV directory")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--alpha-low", type=float, default=0.5)
    p.add_argument("--alpha-high", type=float, default=0.9)
    p.add_argument("--lpc-order", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_anonymize_audio, seeded=True)

    p = sub.add_parser("anonymize-embeddings", help="embedding-space anonymization strategies")
    p.add_argument("in_file")
    p.add_argument("pool_file")
    p.add_argument("out_file")
    p.add_argument("--strategy", required=True, choices=embed.STRATEGIES)
    p.add_argument("--far", type=int, default=embed.DEFAULT_FAR, help="candidate set: least-similar pool speakers")
    p.add_argument("--pick", type=int, default=embed.DEFAULT_PICK, help="speakers sampled from the candidate set")
    p.add_argument("--alpha", type=float, default=0.5, help="weighted-mix attenuation")
    p.add_argument("--snr-db", type=float, default=10.0, help="awgn signal-to-noise ratio")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_anonymize_embeddings, seeded=True)

    p = sub.add_parser("eval", help="compute EER / WER / UAR from evaluation artifacts")
    p.add_argument("--scores", help="pre-computed score file")
    p.add_argument("--trials", help="trial list, scored against the embedding files")
    p.add_argument("--enroll-embeddings")
    p.add_argument("--trial-embeddings")
    p.add_argument("--gender-map", help="utterance_id<TAB>gender for per-gender EER")
    p.add_argument("--transcripts", nargs=2, metavar=("REF", "HYP"))
    p.add_argument("--emotions", nargs=2, metavar=("REF", "HYP"))
    p.add_argument("--output", help="also write the metrics JSON here")
    p.set_defaults(func=cmd_eval, seeded=False)

    p = sub.add_parser("rank", help="privacy-category ranking and tradeoff reports")
    p.add_argument("results_csv")
    p.add_argument("--report-dir", required=True)
    p.set_defaults(func=cmd_rank, seeded=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")

    if args.command == "eval":
        if not (args.scores or args.trials or args.transcripts or args.emotions):
            parser.error("eval needs at least one input (--scores/--trials/--transcripts/--emotions)")
        if args.scores and args.trials:
            parser.error("--scores and --trials are mutually exclusive")
        if args.trials and not (args.enroll_embeddings and args.trial_embeddings):
            parser.error("--trials requires --enroll-embeddings and --trial-embeddings")
    if getattr(args, "seeded", False) and args.seed is None:
        try:
            args.seed = default_seed()
        except InputDataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return USAGE_EXIT

    try:
        return args.func(args)
    except (
        InputDataError,
        ranking.ResultsFormatError,
        embed.EmbeddingFormatError,
        asv.TrialFormatError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (WavFormatError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILURE_EXIT


if __name__ == "__main__":
    sys.exit(main())
