"""Corrosion-inspired cellular automaton texture descriptor (CITA) and benchmark harness."""
from .ca import CitaParams, MassSeries, run, step
from .classify import EvalReport, evaluate, lda_fit, lda_predict, stratified_kfold
from .descriptor import FeatureVector, default_params, extract, extract_many, sweep
from .errors import DatasetIOError, ImageFormatError, InvalidInputError
from .features import compute_features
from .synthetic import generate_corpus

__version__ = "0.1.0"

__all__ = [
    "CitaParams",
    "MassSeries",
    "run",
    "step",
    "EvalReport",
    "evaluate",
    "lda_fit",
    "lda_predict",
    "stratified_kfold",
    "FeatureVector",
    "default_params",
    "extract",
    "extract_many",
    "sweep",
    "compute_features",
    "generate_corpus",
    "DatasetIOError",
    "ImageFormatError",
    "InvalidInputError",
]
