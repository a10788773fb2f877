"""Desk-scale synthetic-to-real benchmark.

Procedurally generated Markov-chain "languages" emit label strings; glyph
templates plus a domain-dependent feature shift turn them into frame
sequences; a tiny two-layer recognizer classifies frames. The protocol
trains an ancestor on pooled clean synthetic data, branches per-language
synthetic children and real fine-tunes, transfers synthetic-to-real
displacements across languages under every merge configuration, and scores
everything with corpus CER/WER.
"""

from .languages import (
    DomainSpec,
    ToyDataset,
    ToyLanguageSpec,
    gen_language,
    make_domains,
    sample_dataset,
)
from .recognizer import (
    DivergedLoss,
    evaluate_rates,
    init_recognizer,
    linear_probe,
    loss_and_gradients,
    predict_labels,
    train,
)
from .protocol import ConfigInvalid, ExperimentConfig, aggregate_reports, run_protocol

__all__ = [
    "ConfigInvalid",
    "DivergedLoss",
    "DomainSpec",
    "ExperimentConfig",
    "ToyDataset",
    "ToyLanguageSpec",
    "aggregate_reports",
    "evaluate_rates",
    "gen_language",
    "init_recognizer",
    "linear_probe",
    "loss_and_gradients",
    "make_domains",
    "predict_labels",
    "run_protocol",
    "sample_dataset",
    "train",
]
