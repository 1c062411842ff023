"""Topic-switching index pipeline for earnings-call Q&A sessions."""

from .encoder import EmbeddingVector, EncoderConfig, encode
from .market import LabelKind, LabelSpec, label, load_prices
from .models import Dataset, TrainConfig, evaluate_accuracy, predict, sgd_train
from .regression import ols_fit
from .transcript import EarningsCall, QAPair, Sector, SpeakerTurn, parse_transcript, segment_and_pair
from .tsi import CallIndexRecord, PairScore, cosine_similarity, score_call, score_pair

__all__ = [
    "CallIndexRecord",
    "Dataset",
    "EarningsCall",
    "EmbeddingVector",
    "EncoderConfig",
    "LabelKind",
    "LabelSpec",
    "PairScore",
    "QAPair",
    "Sector",
    "SpeakerTurn",
    "TrainConfig",
    "cosine_similarity",
    "encode",
    "evaluate_accuracy",
    "label",
    "load_prices",
    "ols_fit",
    "parse_transcript",
    "predict",
    "score_call",
    "score_pair",
    "segment_and_pair",
    "sgd_train",
]

__version__ = "0.1.0"
