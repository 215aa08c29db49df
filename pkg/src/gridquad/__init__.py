"""Grid-tagging extraction of (target, aspect, opinion, sentiment) quadruples."""

from .config import TrainConfig
from .corpus import (AnalysisReport, CorpusStats, Document, Quadruple, Span, corpus_stats,
                     distribution_analysis, read_corpus, validate_document, write_corpus)
from .grid import check_representable, decode_quadruples, encode_grids
from .metrics import error_analysis, evaluate
from .model import ModelParams, load_params, save_params
from .synth import GenSpec, synthesize, synthesize_corpus
from .train import predict, throughput, train

__all__ = [
    "AnalysisReport", "CorpusStats", "Document", "GenSpec", "ModelParams", "Quadruple", "Span",
    "TrainConfig", "check_representable", "corpus_stats", "decode_quadruples", "distribution_analysis",
    "encode_grids", "error_analysis", "evaluate", "load_params", "predict", "read_corpus",
    "save_params", "synthesize", "synthesize_corpus", "throughput", "train", "validate_document",
    "write_corpus",
]
__version__ = "0.1.0"
