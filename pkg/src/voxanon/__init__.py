"""Voice anonymization and privacy evaluation toolkit."""

from .audio_io import FramePlan, Waveform, default_frame_plan, read_wav, write_wav
from .embed import EmbeddingPool, SpeakerEmbedding, anonymize_one, read_embeddings, write_embeddings
from .mcadams import McAdamsConfig, anonymize_mcadams
from .metrics import ConfusionMatrix, ScoreSet, WerCounts, eer, mfdr, uar, wer
from .ranking import assign_categories, delta_points, load_results_csv, pareto_frontier
from .seeding import DEFAULT_SEED, utterance_rng

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "DEFAULT_SEED",
    "EmbeddingPool",
    "FramePlan",
    "McAdamsConfig",
    "ScoreSet",
    "SpeakerEmbedding",
    "Waveform",
    "WerCounts",
    "anonymize_mcadams",
    "anonymize_one",
    "assign_categories",
    "default_frame_plan",
    "delta_points",
    "eer",
    "load_results_csv",
    "mfdr",
    "pareto_frontier",
    "read_embeddings",
    "read_wav",
    "uar",
    "utterance_rng",
    "wer",
    "write_embeddings",
    "write_wav",
]
